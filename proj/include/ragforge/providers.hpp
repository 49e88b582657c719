#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "ragforge/errors.hpp"
#include "ragforge/text.hpp"
#include "ragforge/util.hpp"

namespace ragforge {

struct TokenUsage {
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;

    std::int64_t total() const { return prompt_tokens + completion_tokens; }

    TokenUsage& operator+=(const TokenUsage& o) {
        prompt_tokens += o.prompt_tokens;
        completion_tokens += o.completion_tokens;
        return *this;
    }
    friend TokenUsage operator+(TokenUsage a, const TokenUsage& b) { return a += b; }
    friend bool operator==(const TokenUsage&, const TokenUsage&) = default;
};

// Fixed estimator used by the mocks and as fallback when a live endpoint
// omits usage: ceil(bytes / 4).
inline std::int64_t estimate_tokens(std::string_view text) {
    return static_cast<std::int64_t>((text.size() + 3) / 4);
}

enum class Role { system, user };

struct ChatMessage {
    Role role = Role::user;
    std::string content;
};

struct ChatRequest {
    std::vector<ChatMessage> messages;

    static ChatRequest make(std::string system, std::string user) {
        ChatRequest r;
        r.messages.push_back({Role::system, std::move(system)});
        r.messages.push_back({Role::user, std::move(user)});
        return r;
    }
};

struct ChatResponse {
    std::string text;
    TokenUsage usage;
};

struct Embedding {
    std::vector<float> values;

    std::size_t dim() const { return values.size(); }
};

inline double cosine(const Embedding& a, const Embedding& b) {
    if (a.dim() != b.dim())
        throw DimensionMismatch("cosine over dims " + std::to_string(a.dim()) + " vs " +
                                std::to_string(b.dim()));
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        dot += static_cast<double>(a.values[i]) * b.values[i];
        na += static_cast<double>(a.values[i]) * a.values[i];
        nb += static_cast<double>(b.values[i]) * b.values[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

struct EmbedResult {
    Embedding embedding;
    TokenUsage usage;
};

struct RerankResult {
    double score = 0.0;
    TokenUsage usage;
};

class Embedder {
  public:
    virtual ~Embedder() = default;
    virtual std::size_t dim() const = 0;
    virtual EmbedResult embed(std::string_view text) const = 0;
};

class ChatClient {
  public:
    virtual ~ChatClient() = default;
    virtual ChatResponse chat(const ChatRequest& req) const = 0;
};

class Reranker {
  public:
    virtual ~Reranker() = default;
    virtual RerankResult score(std::string_view query, std::string_view passage) const = 0;
};

struct Providers {
    std::shared_ptr<const Embedder> embedder;
    std::shared_ptr<const ChatClient> chat;
    std::shared_ptr<const Reranker> reranker;
};

/// Deterministic offline embedder: character 3-grams hashed into a 64-dim
/// signed-count vector, then unit-normalized. Identical text gives identical
/// vectors; texts sharing 3-grams land near each other in cosine.
class MockEmbedder final : public Embedder {
  public:
    explicit MockEmbedder(std::uint64_t seed = 1, std::size_t dim = 64) : seed_(seed), dim_(dim) {}

    std::size_t dim() const override { return dim_; }

    EmbedResult embed(std::string_view text) const override {
        if (trim(text).empty()) throw EmptyInput("embed requires non-empty text");
        std::vector<double> acc(dim_, 0.0);
        auto scatter = [&](std::string_view gram) {
            std::uint64_t h = fnv1a(gram, 14695981039346656037ull ^ seed_);
            double sign = ((h >> 32) & 1) ? 1.0 : -1.0;
            acc[h % dim_] += sign;
        };
        if (text.size() < 3) {
            scatter(text);
        } else {
            for (std::size_t i = 0; i + 3 <= text.size(); ++i) scatter(text.substr(i, 3));
        }
        bool all_zero = true;
        for (double v : acc)
            if (v != 0.0) { all_zero = false; break; }
        if (all_zero) acc[fnv1a(text, seed_ + 0x9e3779b97f4a7c15ull) % dim_] = 1.0;

        Embedding e;
        e.values.resize(dim_);
        double norm = 0;
        for (double v : acc) norm += v * v;
        norm = std::sqrt(norm);
        for (std::size_t i = 0; i < dim_; ++i)
            e.values[i] = static_cast<float>(acc[i] / norm);
        // renormalize in float to keep |v| within 1e-6 of one
        double fnorm = 0;
        for (float v : e.values) fnorm += static_cast<double>(v) * v;
        fnorm = std::sqrt(fnorm);
        for (auto& v : e.values) v = static_cast<float>(v / fnorm);

        return {std::move(e), {estimate_tokens(text), 0}};
    }

  private:
    std::uint64_t seed_;
    std::size_t dim_;
};

/// Deterministic offline chat model. Dispatches on a machine-readable tag in
/// the system message (first token) and applies a fixed template over the
/// user content:
///
///   HYDE      -> "HYDE-DOC: {user}"
///   MULTIQ    -> three rewrites of {user}, one per line
///   DECOMP    -> two sub-questions of {user}, one per line
///   STEPBACK  -> one more general question
///   CLARIFY   -> single rewritten query
///   SUMMARIZE -> "SUMMARY: " + first sentence, capped at 200 characters
///   JUDGE     -> token-overlap F1 between CANDIDATE and REFERENCE sections
///   REFLECT   -> CRITIQUE mode replies "OK" or "MISSING: <terms>";
///                REVISE mode appends the missing terms to the answer
///   ANSWER    -> the sentence of the first numbered evidence block with the
///                highest token overlap against the trailing "Question:" line
///
/// Anything else echoes the user content. Usage: prompt = ceil(bytes/4) over
/// all message contents, completion = ceil(bytes/4) of the reply.
class MockChat final : public ChatClient {
  public:
    explicit MockChat(std::uint64_t seed = 1) : seed_(seed) {}

    ChatResponse chat(const ChatRequest& req) const override {
        if (req.messages.empty()) throw EmptyInput("chat requires at least one message");
        std::size_t prompt_bytes = 0;
        std::string system, user;
        for (const auto& m : req.messages) {
            prompt_bytes += m.content.size();
            if (m.role == Role::system && system.empty()) {
                system = m.content;
            } else if (m.role == Role::user) {
                if (!user.empty()) user += '\n';
                user += m.content;
            }
        }
        std::string tag;
        {
            auto toks = split_lines(system);
            std::string_view head = toks.empty() ? std::string_view{} : trim(toks.front());
            auto sp = head.find(' ');
            tag = std::string(head.substr(0, sp));
        }
        std::string text = dispatch(tag, user);
        return {std::move(text), {static_cast<std::int64_t>((prompt_bytes + 3) / 4),
                                  estimate_tokens(text)}};
    }

  private:
    std::string dispatch(const std::string& tag, const std::string& user) const {
        std::string q = std::string(trim(user));
        if (tag == "HYDE") return "HYDE-DOC: " + q;
        if (tag == "MULTIQ")
            return q + " rewrite one\n" + q + " rewrite two\n" + q + " rewrite three";
        if (tag == "DECOMP") return q + " sub-question one\n" + q + " sub-question two";
        if (tag == "STEPBACK") return q + " background overview";
        if (tag == "CLARIFY") return q + " (clarified)";
        if (tag == "SUMMARIZE") return summarize(q);
        if (tag == "JUDGE") return judge(user);
        if (tag == "REFLECT") return reflect(user);
        if (tag == "ANSWER") return answer(user);
        return q;
    }

    static std::string summarize(std::string_view content) {
        auto sentences = split_sentences(content);
        std::string_view head = sentences.empty() ? content : std::string_view(sentences.front());
        return "SUMMARY: " + std::string(utf8_prefix(head, 200));
    }

    static std::string_view section(std::string_view text, std::string_view marker,
                                    std::string_view end_marker) {
        auto pos = text.find(marker);
        if (pos == std::string_view::npos) return {};
        pos += marker.size();
        auto end = end_marker.empty() ? std::string_view::npos : text.find(end_marker, pos);
        return trim(text.substr(pos, end == std::string_view::npos ? text.size() - pos : end - pos));
    }

    static std::string judge(std::string_view user) {
        auto reference = section(user, "REFERENCE:", "CANDIDATE:");
        auto candidate = section(user, "CANDIDATE:", "");
        double f1 = token_f1(candidate, reference);
        if (f1 < 0.0) f1 = 0.0;
        if (f1 > 1.0) f1 = 1.0;
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", f1);
        return buf;
    }

    static std::string reflect(std::string_view user) {
        auto lines = split_lines(user);
        std::string_view mode = lines.empty() ? std::string_view{} : trim(lines.front());
        if (mode == "REVISE") {
            auto ans = section(user, "ANSWER:", "MISSING:");
            auto missing = section(user, "MISSING:", "");
            return std::string(ans) + " " + std::string(missing);
        }
        // CRITIQUE: report answer tokens (4+ chars) absent from the evidence
        auto ans = section(user, "ANSWER:", "EVIDENCE:");
        auto evidence = section(user, "EVIDENCE:", "");
        auto ev_tokens = word_tokens(evidence);
        std::sort(ev_tokens.begin(), ev_tokens.end());
        std::string missing;
        for (const auto& t : word_tokens(ans)) {
            if (utf8_len(t) < 4) continue;
            if (!std::binary_search(ev_tokens.begin(), ev_tokens.end(), t)) {
                if (!missing.empty()) missing += ' ';
                missing += t;
            }
        }
        return missing.empty() ? "OK" : "MISSING: " + missing;
    }

    static std::string answer(std::string_view user) {
        auto qpos = user.rfind("Question:");
        auto bpos = user.find("[1] ");
        if (qpos == std::string_view::npos || bpos == std::string_view::npos || bpos > qpos)
            return std::string(utf8_prefix(trim(user), 200));
        std::string_view question = trim(user.substr(qpos + 9));
        std::string_view block = user.substr(bpos + 4, qpos - bpos - 4);
        auto next = block.find("\n[2] ");
        if (next != std::string_view::npos) block = block.substr(0, next);
        auto sentences = split_sentences(block);
        if (sentences.empty()) return std::string(utf8_prefix(trim(user), 200));
        std::size_t best = 0, best_score = 0;
        for (std::size_t i = 0; i < sentences.size(); ++i) {
            std::size_t s = distinct_token_overlap(question, sentences[i]);
            if (s > best_score) {
                best_score = s;
                best = i;
            }
        }
        return sentences[best];
    }

    std::uint64_t seed_;
};

/// Offline stand-in for a cross-encoder: normalized distinct query-token
/// overlap with add-one smoothing, (overlap + 1) / (|query tokens| + 2).
/// Always in (0,1), monotone in overlap, deterministic.
class OverlapReranker final : public Reranker {
  public:
    RerankResult score(std::string_view query, std::string_view passage) const override {
        if (trim(query).empty() || trim(passage).empty())
            throw EmptyInput("rerank_score requires non-empty query and passage");
        auto qt = word_tokens(query);
        std::sort(qt.begin(), qt.end());
        qt.erase(std::unique(qt.begin(), qt.end()), qt.end());
        auto pt = word_tokens(passage);
        std::sort(pt.begin(), pt.end());
        std::size_t overlap = 0;
        for (const auto& t : qt)
            if (std::binary_search(pt.begin(), pt.end(), t)) ++overlap;
        double s = (static_cast<double>(overlap) + 1.0) / (static_cast<double>(qt.size()) + 2.0);
        TokenUsage u{static_cast<std::int64_t>((query.size() + passage.size() + 3) / 4), 0};
        return {s, u};
    }
};

inline Providers make_mock_providers(std::uint64_t seed = 1) {
    return {std::make_shared<MockEmbedder>(seed), std::make_shared<MockChat>(seed),
            std::make_shared<OverlapReranker>()};
}

// Accrues usage for one pipeline run and raises the budget-exceeded signal
// when a configured per-run token ceiling is crossed (0 disables the check).
class CallMeter {
  public:
    explicit CallMeter(std::int64_t ceiling = 0) : ceiling_(ceiling) {}

    void add(const TokenUsage& u) {
        total_ += u;
        if (ceiling_ > 0 && total_.total() > ceiling_)
            throw TokenCeilingExceeded("run exceeded token ceiling of " +
                                       std::to_string(ceiling_) + " (used " +
                                       std::to_string(total_.total()) + ")");
    }

    const TokenUsage& total() const { return total_; }

  private:
    TokenUsage total_;
    std::int64_t ceiling_;
};

} // namespace ragforge
