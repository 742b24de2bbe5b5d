#include "lessonweave/error.hpp"
#include "lessonweave/llm/providers.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <thread>

namespace lessonweave::llm {

namespace {

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string prefix;  // path below the origin, no trailing slash
};

Endpoint split_base_url(const std::string& base_url) {
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(ErrorCode::InvalidConfig, "base_url must include a scheme: " + base_url);
    }
    const auto path_start = base_url.find('/', scheme_end + 3);
    Endpoint ep;
    if (path_start == std::string::npos) {
        ep.origin = base_url;
    } else {
        ep.origin = base_url.substr(0, path_start);
        ep.prefix = base_url.substr(path_start);
        while (!ep.prefix.empty() && ep.prefix.back() == '/') ep.prefix.pop_back();
    }
    return ep;
}

std::string read_credential(const std::string& env_name) {
    const char* value = std::getenv(env_name.c_str());
    if (value == nullptr || *value == '\0') {
        throw Error(ErrorCode::InvalidConfig,
                    "credential environment variable is not set: " + env_name);
    }
    return value;
}

bool is_timeout(httplib::Error err) {
    return err == httplib::Error::Read || err == httplib::Error::Write ||
           err == httplib::Error::ConnectionTimeout;
}

// POSTs a JSON document with bounded retries on transport errors, 429 and
// 5xx. Returns the parsed response body and the number of retries used.
std::pair<json, int> post_json(const ProviderConfig& config, const std::string& path,
                               const json& body, std::string_view what) {
    const auto ep = split_base_url(config.base_url);
    const auto credential = read_credential(config.credential_ref);

    httplib::Client client(ep.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    const httplib::Headers headers{{"Authorization", "Bearer " + credential}};
    const auto payload = body.dump(-1, ' ', false, json::error_handler_t::replace);
    const auto full_path = ep.prefix + path;

    bool last_was_timeout = false;
    int last_status = 0;
    std::string last_reason;
    for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
        auto res = client.Post(full_path, headers, payload, "application/json");
        if (!res) {
            last_was_timeout = is_timeout(res.error());
            last_status = 0;
            last_reason = httplib::to_string(res.error());
        } else if (res->status >= 200 && res->status < 300) {
            if (attempt > 0) {
                spdlog::info("{} request succeeded after {} retries", what, attempt);
            }
            try {
                return {json::parse(res->body), attempt};
            } catch (const json::exception& ex) {
                throw Error(ErrorCode::ProviderHttpError,
                            std::string(what) + " response is not JSON: " + ex.what(),
                            json{{"status", res->status}});
            }
        } else if (res->status == 429 || res->status >= 500) {
            last_was_timeout = false;
            last_status = res->status;
            last_reason = "HTTP " + std::to_string(res->status);
        } else {
            throw Error(ErrorCode::ProviderHttpError,
                        std::string(what) + " request failed with HTTP " + std::to_string(res->status),
                        json{{"status", res->status}});
        }
        if (attempt < config.max_retries) {
            spdlog::warn("{} retry {}/{} after {}", what, attempt + 1, config.max_retries, last_reason);
            std::this_thread::sleep_for(config.retry_backoff * (1 << attempt));
        }
    }
    if (last_was_timeout) {
        throw Error(ErrorCode::ProviderTimeout, std::string(what) + " request timed out");
    }
    throw Error(ErrorCode::ProviderHttpError,
                std::string(what) + " request failed: " + last_reason, json{{"status", last_status}});
}

}  // namespace

HttpChatProvider::HttpChatProvider(ProviderConfig config) : config_(std::move(config)) {
    split_base_url(config_.base_url);
}

ChatReply HttpChatProvider::complete(std::span<const ChatMessage> messages) {
    json body{{"model", config_.model_name}, {"temperature", config_.temperature}};
    body["messages"] = json::array();
    for (const auto& m : messages) body["messages"].push_back(m);
    auto [doc, retries] = post_json(config_, config_.chat_path, body, "chat");
    try {
        auto text = doc.at("choices").at(0).at("message").at("content").get<std::string>();
        return {std::move(text), retries};
    } catch (const json::exception& ex) {
        throw Error(ErrorCode::ProviderHttpError,
                    std::string("chat response lacks choices[0].message.content: ") + ex.what());
    }
}

std::string HttpChatProvider::tag() const { return "live_http:" + config_.model_name; }

HttpEmbedder::HttpEmbedder(ProviderConfig config) : config_(std::move(config)) {
    split_base_url(config_.base_url);
}

Embedding HttpEmbedder::embed(std::string_view text) {
    const auto model =
        config_.embedding.model_name.empty() ? config_.model_name : config_.embedding.model_name;
    json body{{"model", model}, {"input", std::string(text)}};
    auto [doc, retries] = post_json(config_, config_.embedding_path, body, "embedding");
    try {
        return normalized(doc.at("data").at(0).at("embedding").get<Embedding>());
    } catch (const json::exception& ex) {
        throw Error(ErrorCode::ProviderHttpError,
                    std::string("embedding response lacks data[0].embedding: ") + ex.what());
    }
}

std::string HttpEmbedder::tag() const {
    const auto model =
        config_.embedding.model_name.empty() ? config_.model_name : config_.embedding.model_name;
    return "live_http:" + model;
}

}  // namespace lessonweave::llm
