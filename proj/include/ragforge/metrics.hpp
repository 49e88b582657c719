#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "ragforge/errors.hpp"
#include "ragforge/genome.hpp"
#include "ragforge/index.hpp"
#include "ragforge/pipeline.hpp"
#include "ragforge/prompts.hpp"
#include "ragforge/providers.hpp"

namespace ragforge {

using GoldSet = std::unordered_set<std::string>;

inline void require_gold(const GoldSet& gold) {
    if (gold.empty()) throw EmptyGold("retrieval metrics need a non-empty gold set");
}

inline double recall_at_k(const RankedList& ranked, const GoldSet& gold, std::size_t k = 5) {
    require_gold(gold);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ranked.items.size() && i < k; ++i)
        if (gold.contains(ranked.items[i].chunk_id)) ++hits;
    return static_cast<double>(hits) / static_cast<double>(gold.size());
}

/// Full-list average precision by default; pass cutoff > 0 for AP@k. Gold
/// items never retrieved contribute zero.
inline double average_precision(const RankedList& ranked, const GoldSet& gold,
                                std::size_t cutoff = 0) {
    require_gold(gold);
    double sum = 0.0;
    std::size_t hits = 0;
    std::size_t limit = cutoff == 0 ? ranked.items.size() : std::min(cutoff, ranked.items.size());
    for (std::size_t i = 0; i < limit; ++i) {
        if (gold.contains(ranked.items[i].chunk_id)) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(gold.size());
}

/// Binary-relevance nDCG: gain 1/log2(rank+1) on gold hits, normalized by the
/// ideal DCG for |gold| items.
inline double ndcg_at_k(const RankedList& ranked, const GoldSet& gold, std::size_t k = 5) {
    require_gold(gold);
    double dcg = 0.0;
    for (std::size_t i = 0; i < ranked.items.size() && i < k; ++i)
        if (gold.contains(ranked.items[i].chunk_id))
            dcg += 1.0 / std::log2(static_cast<double>(i + 2));
    double ideal = 0.0;
    for (std::size_t i = 0; i < gold.size() && i < k; ++i)
        ideal += 1.0 / std::log2(static_cast<double>(i + 2));
    return dcg / ideal;
}

inline double mrr(const RankedList& ranked, const GoldSet& gold) {
    require_gold(gold);
    for (std::size_t i = 0; i < ranked.items.size(); ++i)
        if (gold.contains(ranked.items[i].chunk_id))
            return 1.0 / static_cast<double>(i + 1);
    return 0.0;
}

struct RetrievalEval {
    double recall_at_5 = 0.0;
    double average_precision = 0.0;
    double ndcg_at_5 = 0.0;
    double mrr = 0.0;
    double aggregate = 0.0; // equal-weight mean of the four components

    static RetrievalEval compute(const RankedList& ranked, const GoldSet& gold,
                                 std::size_t ap_cutoff = 0) {
        RetrievalEval e;
        e.recall_at_5 = ragforge::recall_at_k(ranked, gold, 5);
        e.average_precision = ragforge::average_precision(ranked, gold, ap_cutoff);
        e.ndcg_at_5 = ragforge::ndcg_at_k(ranked, gold, 5);
        e.mrr = ragforge::mrr(ranked, gold);
        e.aggregate = retrieval_score(e);
        return e;
    }

    static double retrieval_score(const RetrievalEval& e) {
        return 0.25 * (e.recall_at_5 + e.average_precision + e.ndcg_at_5 + e.mrr);
    }
};

inline double retrieval_score(double recall5, double ap, double ndcg5, double mrr_value) {
    return 0.25 * (recall5 + ap + ndcg5 + mrr_value);
}

/// Embedding similarity mapped from cosine in [-1,1] to [0,1].
inline double semantic_similarity(const std::string& answer, const std::string& reference,
                                  const Embedder& embedder) {
    if (trim(answer).empty() || trim(reference).empty())
        throw EmptyInput("semantic_similarity needs non-empty answer and reference");
    auto a = embedder.embed(answer).embedding;
    auto b = embedder.embed(reference).embedding;
    return (1.0 + cosine(a, b)) / 2.0;
}

/// LLM-judged answer quality; the provider reply is parsed for a number and
/// clamped to [0,1]. The mock judge returns token-overlap F1.
inline double judge_score(const std::string& question, const std::string& answer,
                          const std::string& reference, const ChatClient& chat,
                          const PromptLibrary& prompts) {
    if (trim(question).empty() || trim(answer).empty() || trim(reference).empty())
        throw EmptyInput("judge_score needs non-empty question, answer and reference");
    auto reply = chat.chat(prompts.get("judge").render(
        {{"query", question}, {"reference", reference}, {"answer", answer}}));
    auto parsed = detail::parse_leading_number(reply.text);
    if (!parsed) throw JudgeParseError("judge reply had no score: " + reply.text);
    return std::clamp(*parsed, 0.0, 1.0);
}

inline double generation_score(double sim, double judge) { return 0.5 * sim + 0.5 * judge; }

inline double overall_score(double retrieval_mean, double generation_mean) {
    return 0.5 * retrieval_mean + 0.5 * generation_mean;
}

struct GenerationEval {
    double sim = 0.0;
    double judge = 0.0;
    double aggregate = 0.0;
};

struct EvalRecord {
    std::string qa_id;
    Genome genome;
    RetrievalEval retrieval;
    GenerationEval generation;
    TokenUsage usage;
};

inline nlohmann::ordered_json to_json(const EvalRecord& r) {
    nlohmann::ordered_json j;
    j["qa_id"] = r.qa_id;
    j["genome"] = r.genome.to_string();
    j["recall5"] = r.retrieval.recall_at_5;
    j["ap"] = r.retrieval.average_precision;
    j["ndcg5"] = r.retrieval.ndcg_at_5;
    j["mrr"] = r.retrieval.mrr;
    j["retrieval"] = r.retrieval.aggregate;
    j["sim"] = r.generation.sim;
    j["judge"] = r.generation.judge;
    j["generation"] = r.generation.aggregate;
    j["tokens"] = r.usage.total();
    return j;
}

inline std::string eval_records_to_jsonl(std::span<const EvalRecord> records) {
    std::string out;
    for (const auto& r : records) {
        out += to_json(r).dump();
        out += '\n';
    }
    return out;
}

} // namespace ragforge
