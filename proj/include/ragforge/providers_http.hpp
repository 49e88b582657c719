#pragma once

#include <atomic>
#include <cstdlib>
#include <memory>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "ragforge/errors.hpp"
#include "ragforge/providers.hpp"

namespace ragforge {

enum class ProviderMode { mock, http };

struct ProviderConfig {
    ProviderMode mode = ProviderMode::mock;
    std::uint64_t seed = 1;
    std::int64_t token_ceiling = 0;
    std::string chat_url;  // falls back to RAGFORGE_CHAT_URL
    std::string embed_url; // falls back to RAGFORGE_EMBED_URL
    std::string api_key;   // falls back to RAGFORGE_API_KEY
    std::string chat_model = "default";
    std::string embed_model = "default";
    std::size_t embed_dim = 0; // 0 = take it from the first response
    int timeout_ms = 30000;
    int retries = 2;
};

namespace detail {

struct ParsedUrl {
    std::string base; // scheme://host[:port]
    std::string path; // starts with '/', defaults to '/'
};

inline ParsedUrl parse_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw UsageError("provider url must include a scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

inline std::string env_or(const std::string& value, const char* env) {
    if (!value.empty()) return value;
    const char* v = std::getenv(env);
    return v ? v : std::string();
}

// POSTs JSON with bounded retries; every failure mode ends in
// ProviderUnavailable.
inline nlohmann::json post_json(const ParsedUrl& url, const std::string& api_key, int timeout_ms,
                                int retries, const nlohmann::json& body) {
    std::string payload = body.dump();
    std::string last_error = "no attempt made";
    for (int attempt = 0; attempt <= retries; ++attempt) {
        httplib::Client client(url.base);
        client.set_connection_timeout(0, timeout_ms * 1000);
        client.set_read_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
        httplib::Headers headers;
        if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
        auto res = client.Post(url.path, headers, payload, "application/json");
        if (!res) {
            last_error = "connection failed (" + httplib::to_string(res.error()) + ")";
            continue;
        }
        if (res->status != 200) {
            last_error = "http status " + std::to_string(res->status);
            continue;
        }
        try {
            return nlohmann::json::parse(res->body);
        } catch (const std::exception& e) {
            last_error = std::string("bad json body: ") + e.what();
        }
    }
    throw ProviderUnavailable(url.base + url.path + ": " + last_error);
}

inline TokenUsage usage_from_json(const nlohmann::json& j, std::size_t prompt_bytes,
                                  std::string_view completion) {
    if (j.contains("usage") && j.at("usage").is_object()) {
        const auto& u = j.at("usage");
        if (u.contains("prompt_tokens") && u.contains("completion_tokens"))
            return {u.at("prompt_tokens").get<std::int64_t>(),
                    u.at("completion_tokens").get<std::int64_t>()};
    }
    return {static_cast<std::int64_t>((prompt_bytes + 3) / 4), estimate_tokens(completion)};
}

} // namespace detail

/// Chat-completion wire protocol: POST {model, messages:[{role,content}]},
/// read choices[0].message.content. Usage is taken from the response when
/// present, estimated at ceil(bytes/4) otherwise.
class HttpChatClient final : public ChatClient {
  public:
    explicit HttpChatClient(const ProviderConfig& cfg)
        : url_(detail::parse_url(detail::env_or(cfg.chat_url, "RAGFORGE_CHAT_URL"))),
          api_key_(detail::env_or(cfg.api_key, "RAGFORGE_API_KEY")), model_(cfg.chat_model),
          timeout_ms_(cfg.timeout_ms), retries_(cfg.retries) {}

    ChatResponse chat(const ChatRequest& req) const override {
        if (req.messages.empty()) throw EmptyInput("chat requires at least one message");
        nlohmann::json body;
        body["model"] = model_;
        auto& messages = body["messages"] = nlohmann::json::array();
        std::size_t prompt_bytes = 0;
        for (const auto& m : req.messages) {
            messages.push_back({{"role", m.role == Role::system ? "system" : "user"},
                                {"content", m.content}});
            prompt_bytes += m.content.size();
        }
        auto j = detail::post_json(url_, api_key_, timeout_ms_, retries_, body);
        std::string text;
        try {
            text = j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const std::exception& e) {
            throw ProviderUnavailable(std::string("chat response missing content: ") + e.what());
        }
        return {text, detail::usage_from_json(j, prompt_bytes, text)};
    }

  private:
    detail::ParsedUrl url_;
    std::string api_key_;
    std::string model_;
    int timeout_ms_;
    int retries_;
};

/// Embeddings endpoint: POST {model, input}, read data[0].embedding. Vectors
/// are unit-normalized on the way in.
class HttpEmbedder final : public Embedder {
  public:
    explicit HttpEmbedder(const ProviderConfig& cfg)
        : url_(detail::parse_url(detail::env_or(cfg.embed_url, "RAGFORGE_EMBED_URL"))),
          api_key_(detail::env_or(cfg.api_key, "RAGFORGE_API_KEY")), model_(cfg.embed_model),
          timeout_ms_(cfg.timeout_ms), retries_(cfg.retries), dim_(cfg.embed_dim) {}

    std::size_t dim() const override { return dim_.load(); }

    EmbedResult embed(std::string_view text) const override {
        if (trim(text).empty()) throw EmptyInput("embed requires non-empty text");
        nlohmann::json body;
        body["model"] = model_;
        body["input"] = std::string(text);
        auto j = detail::post_json(url_, api_key_, timeout_ms_, retries_, body);
        Embedding e;
        try {
            for (const auto& v : j.at("data").at(0).at("embedding"))
                e.values.push_back(v.get<float>());
        } catch (const std::exception& ex) {
            throw ProviderUnavailable(std::string("embed response missing vector: ") + ex.what());
        }
        if (e.values.empty()) throw ProviderUnavailable("embed response had an empty vector");
        double norm = 0;
        for (float v : e.values) norm += static_cast<double>(v) * v;
        norm = std::sqrt(norm);
        if (norm > 0)
            for (auto& v : e.values) v = static_cast<float>(v / norm);
        std::size_t expected = dim_.load();
        if (expected == 0)
            dim_.store(e.values.size());
        else if (e.values.size() != expected)
            throw DimensionMismatch("embedding dim " + std::to_string(e.values.size()) +
                                    " != configured " + std::to_string(expected));
        TokenUsage usage = detail::usage_from_json(j, text.size(), "");
        usage.completion_tokens = 0;
        return {std::move(e), usage};
    }

  private:
    detail::ParsedUrl url_;
    std::string api_key_;
    std::string model_;
    int timeout_ms_;
    int retries_;
    mutable std::atomic<std::size_t> dim_;
};

/// Mock mode is fully offline; http mode speaks the wire protocol above. The
/// reranker is the deterministic offline scorer in both modes.
inline Providers make_providers(const ProviderConfig& cfg) {
    if (cfg.mode == ProviderMode::mock) return make_mock_providers(cfg.seed);
    return {std::make_shared<HttpEmbedder>(cfg), std::make_shared<HttpChatClient>(cfg),
            std::make_shared<OverlapReranker>()};
}

} // namespace ragforge
