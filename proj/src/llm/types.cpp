#include "lessonweave/llm/types.hpp"

#include "lessonweave/error.hpp"

namespace lessonweave::llm {

std::string_view to_string(ChatRole role) {
    switch (role) {
        case ChatRole::System: return "system";
        case ChatRole::User: return "user";
        case ChatRole::Assistant: return "assistant";
    }
    return "user";
}

ChatRole chat_role_from_string(std::string_view s) {
    if (s == "system") return ChatRole::System;
    if (s == "user") return ChatRole::User;
    if (s == "assistant") return ChatRole::Assistant;
    throw Error(ErrorCode::InvalidMessages, "unknown chat role: " + std::string(s));
}

void to_json(json& j, const ChatMessage& m) {
    j = json{{"role", to_string(m.role)}, {"content", m.content}};
}

void from_json(const json& j, ChatMessage& m) {
    m.role = chat_role_from_string(j.at("role").get<std::string>());
    m.content = j.at("content").get<std::string>();
}

std::string_view to_string(ProviderKind kind) {
    switch (kind) {
        case ProviderKind::LiveHttp: return "live_http";
        case ProviderKind::Replay: return "replay";
        case ProviderKind::HashStub: return "hash_stub";
    }
    return "hash_stub";
}

void ProviderConfig::validate() const {
    if (kind == ProviderKind::LiveHttp) {
        if (base_url.empty()) throw Error(ErrorCode::InvalidConfig, "live_http requires base_url");
        if (model_name.empty()) throw Error(ErrorCode::InvalidConfig, "live_http requires model_name");
        if (credential_ref.empty()) {
            throw Error(ErrorCode::InvalidConfig, "live_http requires credential_ref");
        }
    }
    if (kind == ProviderKind::Replay && fixture_path.empty()) {
        throw Error(ErrorCode::InvalidConfig, "replay requires fixture_path");
    }
    if (embedding.kind == EmbeddingKind::Hash && embedding.dimension == 0) {
        throw Error(ErrorCode::InvalidConfig, "embedding dimension must be positive");
    }
    if (embedding.kind == EmbeddingKind::LiveHttp && (base_url.empty() || credential_ref.empty())) {
        throw Error(ErrorCode::InvalidConfig, "live embeddings require base_url and credential_ref");
    }
    if (max_retries < 0) throw Error(ErrorCode::InvalidConfig, "max_retries must be >= 0");
    if (char_budget == 0) throw Error(ErrorCode::InvalidConfig, "char_budget must be positive");
}

ProviderConfig provider_config_from_json(const json& j) {
    ProviderConfig c;
    try {
        const auto kind = j.value("kind", std::string("hash_stub"));
        if (kind == "live_http") {
            c.kind = ProviderKind::LiveHttp;
            c.embedding.kind = EmbeddingKind::LiveHttp;
        } else if (kind == "replay") {
            c.kind = ProviderKind::Replay;
        } else if (kind == "hash_stub") {
            c.kind = ProviderKind::HashStub;
        } else {
            throw Error(ErrorCode::InvalidConfig, "unknown provider kind: " + kind);
        }
        c.base_url = j.value("base_url", c.base_url);
        c.chat_path = j.value("chat_path", c.chat_path);
        c.embedding_path = j.value("embedding_path", c.embedding_path);
        c.model_name = j.value("model_name", c.model_name);
        c.credential_ref = j.value("credential_ref", c.credential_ref);
        c.timeout = std::chrono::milliseconds(j.value("timeout_ms", c.timeout.count()));
        c.max_retries = j.value("max_retries", c.max_retries);
        c.retry_backoff =
            std::chrono::milliseconds(j.value("retry_backoff_ms", c.retry_backoff.count()));
        c.temperature = j.value("temperature", c.temperature);
        c.fixture_path = j.value("fixture_path", c.fixture_path);
        c.char_budget = j.value("char_budget", c.char_budget);
        if (j.contains("embedding")) {
            const auto& e = j.at("embedding");
            const auto ekind = e.value("kind", std::string("hash"));
            if (ekind == "hash") {
                c.embedding.kind = EmbeddingKind::Hash;
            } else if (ekind == "live_http") {
                c.embedding.kind = EmbeddingKind::LiveHttp;
            } else {
                throw Error(ErrorCode::InvalidConfig, "unknown embedding kind: " + ekind);
            }
            c.embedding.dimension = e.value("dimension", c.embedding.dimension);
            c.embedding.model_name = e.value("model_name", c.embedding.model_name);
        }
    } catch (const json::exception& ex) {
        throw Error(ErrorCode::InvalidConfig, std::string("provider config: ") + ex.what());
    }
    c.validate();
    return c;
}

json to_json(const ProviderConfig& c) {
    return json{
        {"kind", to_string(c.kind)},
        {"base_url", c.base_url},
        {"chat_path", c.chat_path},
        {"embedding_path", c.embedding_path},
        {"model_name", c.model_name},
        {"credential_ref", c.credential_ref},
        {"timeout_ms", c.timeout.count()},
        {"max_retries", c.max_retries},
        {"retry_backoff_ms", c.retry_backoff.count()},
        {"temperature", c.temperature},
        {"fixture_path", c.fixture_path},
        {"char_budget", c.char_budget},
        {"embedding",
         {{"kind", c.embedding.kind == EmbeddingKind::Hash ? "hash" : "live_http"},
          {"dimension", c.embedding.dimension},
          {"model_name", c.embedding.model_name}}},
    };
}

json exchange_to_json(const ChatExchange& e) {
    json j{
        {"request", e.request},
        {"response", e.response},
        {"provider", e.provider_tag},
        {"role", e.label.role},
        {"task", e.label.task},
    };
    if (e.latency.count() != 0) j["latency_ms"] = e.latency.count();
    if (e.retries != 0) j["retries"] = e.retries;
    return j;
}

ChatExchange exchange_from_json(const json& j) {
    ChatExchange e;
    e.request = j.at("request").get<std::vector<ChatMessage>>();
    e.response = j.at("response").get<std::string>();
    e.provider_tag = j.value("provider", std::string());
    e.label.role = j.value("role", std::string());
    e.label.task = j.value("task", std::string());
    e.latency = std::chrono::milliseconds(j.value("latency_ms", 0));
    e.retries = j.value("retries", 0);
    return e;
}

std::string fixture_key(std::span<const ChatMessage> messages) {
    json arr = json::array();
    for (const auto& m : messages) arr.push_back(m);
    return hex64(fnv1a64(arr.dump(-1, ' ', false, json::error_handler_t::replace)));
}

}  // namespace lessonweave::llm
