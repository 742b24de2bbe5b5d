#pragma once

#include "lessonweave/common.hpp"

#include <chrono>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lessonweave::llm {

enum class ChatRole { System, User, Assistant };

std::string_view to_string(ChatRole role);
ChatRole chat_role_from_string(std::string_view s);

struct ChatMessage {
    ChatRole role = ChatRole::User;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

void to_json(json& j, const ChatMessage& m);
void from_json(const json& j, ChatMessage& m);

enum class ProviderKind { LiveHttp, Replay, HashStub };
enum class EmbeddingKind { Hash, LiveHttp };

std::string_view to_string(ProviderKind kind);

struct EmbeddingConfig {
    EmbeddingKind kind = EmbeddingKind::Hash;
    std::size_t dimension = 64;   // hash embedder only
    std::string model_name;       // live only; falls back to the chat base_url
};

struct ProviderConfig {
    ProviderKind kind = ProviderKind::HashStub;
    std::string base_url;
    std::string chat_path = "/v1/chat/completions";
    std::string embedding_path = "/v1/embeddings";
    std::string model_name;
    std::string credential_ref;  // name of the environment variable holding the key
    std::chrono::milliseconds timeout{30000};
    int max_retries = 2;
    std::chrono::milliseconds retry_backoff{250};
    double temperature = 0.7;
    std::string fixture_path;
    std::size_t char_budget = 24000;
    EmbeddingConfig embedding;

    // Throws Error(InvalidConfig) when a kind's required fields are absent.
    void validate() const;
};

ProviderConfig provider_config_from_json(const json& j);
json to_json(const ProviderConfig& config);

// Attribution carried alongside a call: which agent role issued it and for
// which task. Purely descriptive; providers never see it.
struct CallLabel {
    std::string role;
    std::string task;
};

struct ChatExchange {
    std::vector<ChatMessage> request;
    std::string response;
    std::string provider_tag;
    std::chrono::milliseconds latency{0};
    int retries = 0;
    CallLabel label;
};

// Canonical serialization used for transcripts. Latency is included only
// when nonzero so simulated providers produce byte-stable logs.
json exchange_to_json(const ChatExchange& exchange);
ChatExchange exchange_from_json(const json& j);

// Replay fixture key: FNV-1a 64 over the compact JSON array of
// {"content","role"} objects, as sixteen hex digits.
std::string fixture_key(std::span<const ChatMessage> messages);

}  // namespace lessonweave::llm
