#pragma once

#include "lessonweave/llm/providers.hpp"

#include <memory>
#include <mutex>
#include <vector>

namespace lessonweave::llm {

// Append-only log of chat exchanges. Writes are serialized.
class Transcript {
public:
    Transcript() = default;
    Transcript(const Transcript& other) : entries_(other.entries()) {}
    Transcript& operator=(const Transcript& other) {
        if (this != &other) {
            auto copy = other.entries();
            std::lock_guard lock(mutex_);
            entries_ = std::move(copy);
        }
        return *this;
    }

    void append(ChatExchange exchange);
    void append_all(const Transcript& other);

    std::vector<ChatExchange> entries() const;
    std::size_t size() const;

    // One compact JSON object per line, LF-terminated.
    std::string to_jsonl() const;
    static Transcript from_jsonl(std::string_view text);

private:
    mutable std::mutex mutex_;
    std::vector<ChatExchange> entries_;
};

class Gateway {
public:
    Gateway(std::shared_ptr<ChatProvider> chat, std::shared_ptr<Embedder> embedder,
            std::size_t char_budget = 24000);

    static Gateway from_config(const ProviderConfig& config);

    // Preconditions: messages non-empty, the first has role system, no
    // content is empty, total content length (code points) within budget.
    // The exchange is appended to `sink` when one is given.
    ChatExchange chat(std::span<const ChatMessage> messages, const CallLabel& label = {},
                      Transcript* sink = nullptr) const;

    Embedding embed(std::string_view text) const;

    std::string chat_tag() const { return chat_->tag(); }
    std::string embedding_tag() const { return embedder_->tag(); }
    std::size_t char_budget() const noexcept { return char_budget_; }

private:
    std::shared_ptr<ChatProvider> chat_;
    std::shared_ptr<Embedder> embedder_;
    std::size_t char_budget_;
};

}  // namespace lessonweave::llm
