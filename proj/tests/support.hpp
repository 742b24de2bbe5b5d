#pragma once

#include "lessonweave/api/router.hpp"
#include "lessonweave/cli/script.hpp"

#include <atomic>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <string>

namespace lwtest {

using namespace lessonweave;
namespace fs = std::filesystem;

inline fs::path source_path(const std::string& rel) { return fs::path(LESSONWEAVE_SOURCE_DIR) / rel; }

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "lw") {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path_ = fs::temp_directory_path() /
                (tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

// Answers with a function of the conversation; counts calls.
class FnChat final : public llm::ChatProvider {
public:
    using Fn = std::function<std::string(std::span<const llm::ChatMessage>)>;
    explicit FnChat(Fn fn) : fn_(std::move(fn)) {}
    llm::ChatReply complete(std::span<const llm::ChatMessage> messages) override {
        ++calls;
        return {fn_(messages), 0};
    }
    std::string tag() const override { return "test"; }
    bool simulated() const override { return true; }
    std::atomic<int> calls{0};

private:
    Fn fn_;
};

// Synthetic answers, with a hook that may replace the reply for chosen prompts.
class PatchedChat final : public llm::ChatProvider {
public:
    using Patch = std::function<std::optional<std::string>(std::span<const llm::ChatMessage>, int call)>;
    explicit PatchedChat(Patch patch) : patch_(std::move(patch)) {}
    llm::ChatReply complete(std::span<const llm::ChatMessage> messages) override {
        const int n = calls++;
        if (auto r = patch_(messages, n)) return {*r, 0};
        return inner_.complete(messages);
    }
    std::string tag() const override { return "patched"; }
    bool simulated() const override { return true; }
    std::atomic<int> calls{0};

private:
    llm::SyntheticChatProvider inner_;
    Patch patch_;
};

inline std::shared_ptr<llm::Gateway> gateway_with(std::shared_ptr<llm::ChatProvider> chat, std::size_t dim = 64) {
    return std::make_shared<llm::Gateway>(std::move(chat), std::make_shared<llm::HashEmbedder>(dim));
}

inline std::shared_ptr<llm::Gateway> synthetic_gateway() {
    return gateway_with(std::make_shared<llm::SyntheticChatProvider>());
}

// Corpus loaded with the bundled sample materials and pools.
inline std::shared_ptr<corpus::Corpus> sample_corpus(std::shared_ptr<const llm::Gateway> gw) {
    auto c = std::make_shared<corpus::Corpus>(std::move(gw));
    c->import_materials(corpus::read_materials_file(source_path("data/materials/sample_materials.jsonl")));
    c->import_contexts(corpus::read_pool_file(source_path("data/pools/informal_sample.jsonl")));
    c->import_contexts(corpus::read_pool_file(source_path("data/pools/subject_sample.jsonl")));
    return c;
}

inline std::vector<MaterialId> all_material_ids(const corpus::Corpus& c) {
    std::vector<MaterialId> ids;
    for (const auto& m : c.snapshot()->materials) ids.push_back(m.id);
    return ids;
}

inline const std::string& user_prompt(std::span<const llm::ChatMessage> messages) {
    for (const auto& m : messages) {
        if (m.role == llm::ChatRole::User) return m.content;
    }
    static const std::string empty;
    return empty;
}

inline bool is_task(std::span<const llm::ChatMessage> messages, std::string_view label) {
    const auto& p = user_prompt(messages);
    return p.find("```" + std::string(label) + "\n") != std::string::npos;
}

}  // namespace lwtest
