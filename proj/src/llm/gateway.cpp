#include "lessonweave/llm/gateway.hpp"

#include "lessonweave/error.hpp"

#include <spdlog/spdlog.h>

#include <sstream>

namespace lessonweave::llm {

void Transcript::append(ChatExchange exchange) {
    std::lock_guard lock(mutex_);
    entries_.push_back(std::move(exchange));
}

void Transcript::append_all(const Transcript& other) {
    auto items = other.entries();
    std::lock_guard lock(mutex_);
    for (auto& e : items) entries_.push_back(std::move(e));
}

std::vector<ChatExchange> Transcript::entries() const {
    std::lock_guard lock(mutex_);
    return entries_;
}

std::size_t Transcript::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

std::string Transcript::to_jsonl() const {
    std::ostringstream out;
    for (const auto& e : entries()) {
        out << exchange_to_json(e).dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
    }
    return out.str();
}

Transcript Transcript::from_jsonl(std::string_view text) {
    Transcript t;
    for (const auto& line : split_lines(text)) {
        if (trim(line).empty()) continue;
        t.entries_.push_back(exchange_from_json(json::parse(line)));
    }
    return t;
}

Gateway::Gateway(std::shared_ptr<ChatProvider> chat, std::shared_ptr<Embedder> embedder,
                 std::size_t char_budget)
    : chat_(std::move(chat)), embedder_(std::move(embedder)), char_budget_(char_budget) {
    if (!chat_ || !embedder_) throw Error(ErrorCode::InvalidConfig, "gateway needs both providers");
}

Gateway Gateway::from_config(const ProviderConfig& config) {
    return Gateway(make_chat_provider(config), make_embedder(config), config.char_budget);
}

ChatExchange Gateway::chat(std::span<const ChatMessage> messages, const CallLabel& label,
                           Transcript* sink) const {
    if (messages.empty()) throw Error(ErrorCode::InvalidMessages, "chat needs at least one message");
    if (messages.front().role != ChatRole::System) {
        throw Error(ErrorCode::InvalidMessages, "first chat message must have role system");
    }
    std::size_t total = 0;
    for (const auto& m : messages) {
        if (m.content.empty()) throw Error(ErrorCode::InvalidMessages, "chat message content is empty");
        total += utf8_length(m.content);
    }
    if (total > char_budget_) {
        throw Error(ErrorCode::BudgetExceeded,
                    "request content is " + std::to_string(total) + " characters, budget is " +
                        std::to_string(char_budget_),
                    json{{"length", total}, {"budget", char_budget_}});
    }

    const auto start = std::chrono::steady_clock::now();
    auto reply = chat_->complete(messages);
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start);
    if (trim(reply.text).empty()) {
        throw Error(ErrorCode::ProviderHttpError, "provider returned an empty completion");
    }

    ChatExchange exchange;
    exchange.request.assign(messages.begin(), messages.end());
    exchange.response = std::move(reply.text);
    exchange.provider_tag = chat_->tag();
    exchange.latency = chat_->simulated() ? std::chrono::milliseconds(0) : elapsed;
    exchange.retries = reply.retries;
    exchange.label = label;
    spdlog::debug("chat {}:{} via {} ({} chars, {} retries)", label.role, label.task,
                  exchange.provider_tag, total, exchange.retries);
    if (sink != nullptr) sink->append(exchange);
    return exchange;
}

Embedding Gateway::embed(std::string_view text) const {
    if (text.empty()) throw Error(ErrorCode::InvalidMessages, "cannot embed empty text");
    return embedder_->embed(text);
}

}  // namespace lessonweave::llm
