#pragma once

#include "lessonweave/llm/types.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <string>

namespace lessonweave::llm {

struct ChatReply {
    std::string text;
    int retries = 0;
};

class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    virtual ChatReply complete(std::span<const ChatMessage> messages) = 0;
    virtual std::string tag() const = 0;
    // Simulated providers report zero latency.
    virtual bool simulated() const { return false; }
};

class Embedder {
public:
    virtual ~Embedder() = default;
    // Returns a unit-norm vector.
    virtual Embedding embed(std::string_view text) = 0;
    virtual std::string tag() const = 0;
};

// Deterministic pseudo-random embedding:
//   seed   = FNV-1a 64 of the UTF-8 bytes
//   stream = std::mt19937_64(seed)
//   x_i    = (next() >> 11) * 2^-53 * 2 - 1       for i in [0, dimension)
//   result = x / ||x||
class HashEmbedder final : public Embedder {
public:
    explicit HashEmbedder(std::size_t dimension = 64);
    Embedding embed(std::string_view text) override;
    std::string tag() const override;
    std::size_t dimension() const noexcept { return dimension_; }

private:
    std::size_t dimension_;
};

// Fixture record: {"key": fixture_key(messages), "response": text}.
struct FixtureRecord {
    std::string key;
    std::string response;
};

std::map<std::string, std::string> load_fixtures(const std::string& path);

class ReplayChatProvider final : public ChatProvider {
public:
    explicit ReplayChatProvider(std::map<std::string, std::string> fixtures);
    static std::shared_ptr<ReplayChatProvider> from_file(const std::string& path);

    ChatReply complete(std::span<const ChatMessage> messages) override;
    std::string tag() const override { return "replay"; }
    bool simulated() const override { return true; }

    std::size_t size() const noexcept { return fixtures_.size(); }

private:
    std::map<std::string, std::string> fixtures_;
};

// Offline stand-in that answers each task in its required output format,
// deriving content from the prompt itself. Used for demos and to produce
// fixtures without a live model.
class SyntheticChatProvider final : public ChatProvider {
public:
    ChatReply complete(std::span<const ChatMessage> messages) override;
    std::string tag() const override { return "hash_stub"; }
    bool simulated() const override { return true; }
};

// Wraps another provider and records every {key, response} pair it returns.
class RecordingChatProvider final : public ChatProvider {
public:
    explicit RecordingChatProvider(std::shared_ptr<ChatProvider> inner);

    ChatReply complete(std::span<const ChatMessage> messages) override;
    std::string tag() const override { return inner_->tag(); }
    bool simulated() const override { return inner_->simulated(); }

    std::vector<FixtureRecord> records() const;
    // Writes JSON lines sorted by key, so parallel batches record stably.
    void write(const std::string& path) const;

private:
    std::shared_ptr<ChatProvider> inner_;
    mutable std::mutex mutex_;
    std::vector<FixtureRecord> records_;
    std::map<std::string, std::size_t> index_;
};

// Generic JSON chat-completion endpoint:
//   POST {base_url}{chat_path}
//   {"model": ..., "temperature": ..., "messages": [{"role","content"}...]}
//   -> {"choices": [{"message": {"content": ...}}]}
// Bearer credential read from the environment variable named by credential_ref.
class HttpChatProvider final : public ChatProvider {
public:
    explicit HttpChatProvider(ProviderConfig config);
    ChatReply complete(std::span<const ChatMessage> messages) override;
    std::string tag() const override;

private:
    ProviderConfig config_;
};

//   POST {base_url}{embedding_path} {"model": ..., "input": text}
//   -> {"data": [{"embedding": [...]}]}
class HttpEmbedder final : public Embedder {
public:
    explicit HttpEmbedder(ProviderConfig config);
    Embedding embed(std::string_view text) override;
    std::string tag() const override;

private:
    ProviderConfig config_;
};

// Scales a vector to unit L2 norm. Throws Error(ZeroVector) on a zero vector.
Embedding normalized(Embedding v);

std::shared_ptr<ChatProvider> make_chat_provider(const ProviderConfig& config);
std::shared_ptr<Embedder> make_embedder(const ProviderConfig& config);

}  // namespace lessonweave::llm
