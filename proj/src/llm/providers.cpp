#include "lessonweave/llm/providers.hpp"

#include "lessonweave/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace lessonweave::llm {

Embedding normalized(Embedding v) {
    double sq = 0.0;
    for (float x : v) sq += static_cast<double>(x) * x;
    if (sq == 0.0 || !std::isfinite(sq)) {
        throw Error(ErrorCode::ZeroVector, "cannot normalize a zero vector");
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (float& x : v) x = static_cast<float>(x * inv);
    return v;
}

HashEmbedder::HashEmbedder(std::size_t dimension) : dimension_(dimension) {
    if (dimension_ == 0) throw Error(ErrorCode::InvalidConfig, "embedding dimension must be positive");
}

Embedding HashEmbedder::embed(std::string_view text) {
    std::mt19937_64 stream(fnv1a64(text));
    std::vector<double> raw(dimension_);
    double sq = 0.0;
    for (auto& x : raw) {
        x = static_cast<double>(stream() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
        sq += x * x;
    }
    const double inv = 1.0 / std::sqrt(sq);
    Embedding out(dimension_);
    for (std::size_t i = 0; i < dimension_; ++i) out[i] = static_cast<float>(raw[i] * inv);
    return out;
}

std::string HashEmbedder::tag() const {
    return "hash-mt19937_64:" + std::to_string(dimension_);
}

std::map<std::string, std::string> load_fixtures(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open fixture file: " + path);
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            auto j = json::parse(line);
            out[j.at("key").get<std::string>()] = j.at("response").get<std::string>();
        } catch (const json::exception& ex) {
            throw Error(ErrorCode::InvalidConfig,
                        path + ":" + std::to_string(lineno) + ": bad fixture record: " + ex.what());
        }
    }
    return out;
}

ReplayChatProvider::ReplayChatProvider(std::map<std::string, std::string> fixtures)
    : fixtures_(std::move(fixtures)) {}

std::shared_ptr<ReplayChatProvider> ReplayChatProvider::from_file(const std::string& path) {
    return std::make_shared<ReplayChatProvider>(load_fixtures(path));
}

ChatReply ReplayChatProvider::complete(std::span<const ChatMessage> messages) {
    const auto key = fixture_key(messages);
    auto it = fixtures_.find(key);
    if (it == fixtures_.end()) {
        throw Error(ErrorCode::FixtureMiss, "no replay fixture for request key " + key,
                    json{{"key", key}});
    }
    return {it->second, 0};
}

RecordingChatProvider::RecordingChatProvider(std::shared_ptr<ChatProvider> inner)
    : inner_(std::move(inner)) {}

ChatReply RecordingChatProvider::complete(std::span<const ChatMessage> messages) {
    auto reply = inner_->complete(messages);
    const auto key = fixture_key(messages);
    std::lock_guard lock(mutex_);
    if (!index_.contains(key)) {
        index_[key] = records_.size();
        records_.push_back({key, reply.text});
    }
    return reply;
}

std::vector<FixtureRecord> RecordingChatProvider::records() const {
    std::lock_guard lock(mutex_);
    return records_;
}

void RecordingChatProvider::write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::InvalidConfig, "cannot write fixture file: " + path);
    auto sorted = records();
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.key < b.key; });
    for (const auto& r : sorted) {
        out << json{{"key", r.key}, {"response", r.response}}.dump(
                   -1, ' ', false, json::error_handler_t::replace)
            << '\n';
    }
}

std::shared_ptr<ChatProvider> make_chat_provider(const ProviderConfig& config) {
    config.validate();
    switch (config.kind) {
        case ProviderKind::LiveHttp: return std::make_shared<HttpChatProvider>(config);
        case ProviderKind::Replay: return ReplayChatProvider::from_file(config.fixture_path);
        case ProviderKind::HashStub: return std::make_shared<SyntheticChatProvider>();
    }
    throw Error(ErrorCode::InvalidConfig, "unknown provider kind");
}

std::shared_ptr<Embedder> make_embedder(const ProviderConfig& config) {
    config.validate();
    if (config.embedding.kind == EmbeddingKind::LiveHttp) {
        return std::make_shared<HttpEmbedder>(config);
    }
    return std::make_shared<HashEmbedder>(config.embedding.dimension);
}

}  // namespace lessonweave::llm
