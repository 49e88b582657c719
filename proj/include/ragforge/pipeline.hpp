#pragma once

#include <algorithm>
#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ragforge/corpus.hpp"
#include "ragforge/genome.hpp"
#include "ragforge/index.hpp"
#include "ragforge/prompts.hpp"
#include "ragforge/providers.hpp"

namespace ragforge {

struct PipelineConfig {
    std::size_t k0 = 20;                  // retrieval depth before rerank
    std::size_t top_k = 5;                // kept after top_k filtering
    double threshold = 0.3;               // similarity_threshold cutoff
    std::size_t adjacency_window = 1;     // neighbors each side for augment
    std::size_t condense_budget_chars = 4000;
    double rrf_k = 60.0;                  // reciprocal-rank fusion constant
    std::size_t multi_query_count = 3;    // rewrites kept from multi_query
    std::int64_t token_ceiling = 0;       // per-run budget signal, 0 = off

    void validate() const {
        if (k0 < 1) throw InvalidParam("k0 must be >= 1");
        if (top_k < 1) throw InvalidParam("top_k must be >= 1");
        if (threshold < 0.0 || threshold > 1.0) throw InvalidParam("threshold must be in [0,1]");
        if (rrf_k <= 0.0) throw InvalidParam("rrf_k must be > 0");
        if (multi_query_count < 1) throw InvalidParam("multi_query_count must be >= 1");
    }
};

struct StageRecord {
    std::string stage;
    std::size_t items_in = 0;
    std::size_t items_out = 0;
    TokenUsage usage;
    double elapsed_ms = 0.0;
    std::vector<std::string> warnings;
};

struct StageTrace {
    std::vector<StageRecord> stages;

    TokenUsage total_usage() const {
        TokenUsage t;
        for (const auto& s : stages) t += s.usage;
        return t;
    }
};

struct PipelineOutput {
    std::string answer;
    RankedList retrieved; // post-filter list, the input to retrieval metrics
    StageTrace trace;
    TokenUsage usage;
};

struct PipelineContext {
    const VectorIndex* index = nullptr;
    const std::unordered_map<std::string, Chunk>* chunks = nullptr;
    Providers providers;
    PipelineConfig config;
    const PromptLibrary* prompts = nullptr;
};

inline std::unordered_map<std::string, Chunk> make_chunk_map(std::span<const Chunk> chunks) {
    std::unordered_map<std::string, Chunk> m;
    m.reserve(chunks.size());
    for (const auto& c : chunks) m.emplace(c.id, c);
    return m;
}

struct StageEnv {
    const PipelineContext& ctx;
    CallMeter& meter;

    ChatResponse chat(const ChatRequest& req) const {
        auto r = ctx.providers.chat->chat(req);
        meter.add(r.usage);
        return r;
    }
    Embedding embed(std::string_view text) const {
        auto r = ctx.providers.embedder->embed(text);
        meter.add(r.usage);
        return std::move(r.embedding);
    }
    double rerank_score(std::string_view q, std::string_view p) const {
        auto r = ctx.providers.reranker->score(q, p);
        meter.add(r.usage);
        return r.score;
    }
    const std::string& chunk_text(const std::string& id) const {
        auto it = ctx.chunks->find(id);
        if (it == ctx.chunks->end())
            throw ParseError("chunk '" + id + "' is not in the loaded corpus");
        return it->second.text;
    }
    const PromptTemplate& prompt(std::string_view name) const { return ctx.prompts->get(name); }
};

namespace detail {

inline std::vector<std::string> nonempty_lines(std::string_view text) {
    std::vector<std::string> out;
    for (auto line : split_lines(text)) {
        auto t = trim(line);
        if (!t.empty()) out.emplace_back(t);
    }
    return out;
}

inline std::optional<double> parse_leading_number(std::string_view text) {
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            ((c == '-' || c == '.') && i + 1 < text.size() &&
             std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
            try {
                return std::stod(std::string(text.substr(i)));
            } catch (...) {
                return std::nullopt;
            }
        }
    }
    return std::nullopt;
}

} // namespace detail

/// Turns the user query into one or more retrieval queries. A transform that
/// comes back empty falls back to the original query.
inline std::vector<std::string> transform_query(QueryTransform gene, const std::string& query,
                                                const StageEnv& env) {
    if (trim(query).empty()) throw EmptyInput("query must be non-empty");
    if (gene == QueryTransform::none) return {query};

    const char* asset = nullptr;
    switch (gene) {
    case QueryTransform::multi_query: asset = "multi_query"; break;
    case QueryTransform::decomposition: asset = "decomposition"; break;
    case QueryTransform::step_back: asset = "step_back"; break;
    case QueryTransform::hyde: asset = "hyde"; break;
    case QueryTransform::clarification: asset = "clarification"; break;
    default: break;
    }
    auto reply = env.chat(env.prompt(asset).render({{"query", query}})).text;
    auto lines = detail::nonempty_lines(reply);

    std::vector<std::string> queries;
    switch (gene) {
    case QueryTransform::multi_query: {
        queries.push_back(query);
        for (std::size_t i = 0; i < lines.size() && i < env.ctx.config.multi_query_count; ++i)
            queries.push_back(lines[i]);
        break;
    }
    case QueryTransform::decomposition: {
        queries = lines;
        queries.push_back(query);
        break;
    }
    case QueryTransform::step_back: {
        if (!lines.empty()) queries.push_back(lines.front());
        queries.push_back(query);
        break;
    }
    case QueryTransform::hyde: {
        if (!trim(reply).empty()) queries.emplace_back(trim(reply));
        break;
    }
    case QueryTransform::clarification: {
        if (!lines.empty()) queries.push_back(lines.front());
        break;
    }
    default: break;
    }
    if (queries.empty()) queries.push_back(query);
    return queries;
}

/// Single query: plain top-k0 search. Multiple queries: per-query top-k0
/// lists merged by reciprocal-rank fusion (score = sum of 1/(rrf_k + rank)),
/// deduplicated by chunk id, ties broken by ascending id.
inline RankedList retrieve_merged(const std::vector<std::string>& queries, const VectorIndex& index,
                                  const StageEnv& env) {
    if (queries.empty()) throw EmptyInput("retrieve_merged needs at least one query");
    const auto& cfg = env.ctx.config;
    if (queries.size() == 1) return index.search(env.embed(queries.front()), cfg.k0);

    std::map<std::string, double> fused;
    for (const auto& q : queries) {
        auto list = index.search(env.embed(q), cfg.k0);
        for (std::size_t rank = 0; rank < list.items.size(); ++rank)
            fused[list.items[rank].chunk_id] += 1.0 / (cfg.rrf_k + static_cast<double>(rank + 1));
    }
    RankedList out;
    out.items.reserve(fused.size());
    for (const auto& [id, score] : fused) out.items.push_back({id, score});
    std::sort(out.items.begin(), out.items.end(), [](const ScoredChunk& a, const ScoredChunk& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.chunk_id < b.chunk_id;
    });
    return out;
}

/// Reorders candidates by reranker or LLM relevance; a permutation of the
/// input with replaced scores. On provider failure the input is returned
/// unchanged and a warning is recorded.
inline RankedList rerank_candidates(RerankGene gene, const std::string& query,
                                    const RankedList& candidates, const StageEnv& env,
                                    StageRecord& record) {
    if (gene == RerankGene::none || candidates.items.empty()) return candidates;
    try {
        std::vector<ScoredChunk> rescored;
        rescored.reserve(candidates.items.size());
        for (const auto& item : candidates.items) {
            const auto& text = env.chunk_text(item.chunk_id);
            double s = 0.0;
            if (gene == RerankGene::cross_encoder) {
                s = env.rerank_score(query, text);
            } else {
                auto reply = env.chat(
                    env.prompt("llm_rerank").render({{"query", query}, {"evidence", text}}));
                auto parsed = detail::parse_leading_number(reply.text);
                if (!parsed)
                    throw ProviderUnavailable("llm rerank reply had no score: " + reply.text);
                s = std::clamp(*parsed, 0.0, 1.0);
            }
            rescored.push_back({item.chunk_id, s});
        }
        std::sort(rescored.begin(), rescored.end(), [](const ScoredChunk& a, const ScoredChunk& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.chunk_id < b.chunk_id;
        });
        return {candidates.query_id, std::move(rescored)};
    } catch (const ProviderUnavailable& e) {
        record.warnings.push_back(std::string("rerank skipped: ") + e.what());
        return candidates;
    }
}

/// top_k keeps the K highest-ranked; similarity_threshold keeps scores >= tau
/// but never fewer than one item (the top item survives when all fall short).
inline RankedList filter_candidates(FilterGene gene, const RankedList& list,
                                    const PipelineConfig& cfg) {
    if (cfg.top_k < 1) throw InvalidParam("top_k must be >= 1");
    if (cfg.threshold < 0.0 || cfg.threshold > 1.0)
        throw InvalidParam("threshold must be in [0,1]");
    RankedList out;
    out.query_id = list.query_id;
    if (gene == FilterGene::top_k) {
        std::size_t n = std::min(cfg.top_k, list.items.size());
        out.items.assign(list.items.begin(), list.items.begin() + static_cast<std::ptrdiff_t>(n));
        return out;
    }
    for (const auto& item : list.items)
        if (item.score >= cfg.threshold) out.items.push_back(item);
    if (out.items.empty() && !list.items.empty()) out.items.push_back(list.items.front());
    return out;
}

/// Expands chunks into evidence texts. adjacent splices in prev/next chunk
/// texts of the same document (deduplicated); relevant_segment keeps, per
/// chunk, the sentences scoring above that chunk's mean against the query
/// (whole text kept when no sentence stands out). Missing neighbors are
/// skipped silently.
inline std::vector<std::string> augment_evidence(AugmentGene gene, const RankedList& list,
                                                 const std::string& query,
                                                 const StageEnv& env) {
    std::vector<std::string> texts;
    if (gene == AugmentGene::adjacent) {
        std::unordered_set<std::string> used;
        for (const auto& item : list.items) used.insert(item.chunk_id);
        std::unordered_set<std::string> emitted;
        const auto& index = *env.ctx.index;
        for (const auto& item : list.items) {
            std::vector<std::string> group;
            std::string cur = item.chunk_id;
            for (std::size_t w = 0; w < env.ctx.config.adjacency_window; ++w) {
                const auto* n = index.neighbors(cur);
                if (!n || n->prev.empty()) break;
                cur = n->prev;
                if (!used.insert(cur).second) break;
                group.insert(group.begin(), cur);
            }
            group.push_back(item.chunk_id);
            cur = item.chunk_id;
            for (std::size_t w = 0; w < env.ctx.config.adjacency_window; ++w) {
                const auto* n = index.neighbors(cur);
                if (!n || n->next.empty()) break;
                cur = n->next;
                if (!used.insert(cur).second) break;
                group.push_back(cur);
            }
            for (auto& id : group)
                if (emitted.insert(id).second) texts.push_back(env.chunk_text(id));
        }
        return texts;
    }
    if (gene == AugmentGene::relevant_segment) {
        for (const auto& item : list.items) {
            const auto& text = env.chunk_text(item.chunk_id);
            auto sentences = split_sentences(text);
            if (sentences.size() < 2) {
                texts.push_back(text);
                continue;
            }
            std::vector<double> scores;
            scores.reserve(sentences.size());
            double mean = 0.0;
            for (const auto& s : sentences) {
                scores.push_back(env.rerank_score(query, s));
                mean += scores.back();
            }
            mean /= static_cast<double>(sentences.size());
            std::string kept;
            for (std::size_t i = 0; i < sentences.size(); ++i) {
                if (scores[i] > mean) {
                    if (!kept.empty()) kept += ' ';
                    kept += sentences[i];
                }
            }
            texts.push_back(kept.empty() ? text : kept);
        }
        return texts;
    }
    for (const auto& item : list.items) texts.push_back(env.chunk_text(item.chunk_id));
    return texts;
}

/// llm_summarize: one compression call over the concatenation, but only when
/// the evidence exceeds the character budget. tree_summarize: pairwise merge
/// of adjacent texts until one remains (an odd text carries over unpaired).
inline std::vector<std::string> condense_evidence(CondenseGene gene, std::vector<std::string> texts,
                                                  const StageEnv& env) {
    if (gene == CondenseGene::none || texts.empty()) return texts;
    if (gene == CondenseGene::llm_summarize) {
        std::size_t total = 0;
        for (const auto& t : texts) total += utf8_len(t);
        if (total <= env.ctx.config.condense_budget_chars) return texts;
        std::string joined;
        for (const auto& t : texts) {
            if (!joined.empty()) joined += "\n\n";
            joined += t;
        }
        auto reply = env.chat(env.prompt("llm_summarize").render({{"evidence", joined}}));
        return {reply.text};
    }
    // tree_summarize
    while (texts.size() > 1) {
        std::vector<std::string> next;
        next.reserve((texts.size() + 1) / 2);
        for (std::size_t i = 0; i + 1 < texts.size(); i += 2) {
            auto reply = env.chat(env.prompt("tree_summarize")
                                      .render({{"evidence", texts[i] + "\n\n" + texts[i + 1]}}));
            next.push_back(reply.text);
        }
        if (texts.size() % 2 == 1) next.push_back(texts.back());
        texts = std::move(next);
    }
    return texts;
}

/// Lost-in-the-middle ordering: odd ranks to the front in order, even ranks
/// to the back reversed, so the strongest evidence sits at both ends.
inline std::vector<std::string> reorder_lost_in_middle(const std::vector<std::string>& texts) {
    std::vector<std::string> out;
    out.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); i += 2) out.push_back(texts[i]);
    for (std::size_t i = texts.size() - (texts.size() % 2 == 0 ? 0 : 1); i >= 2; i -= 2)
        out.push_back(texts[i - 1]);
    return out;
}

/// Builds the generation prompt: instruction, numbered evidence blocks, then
/// the question, with block order set by the compose gene.
inline std::string compose_prompt(ComposeGene gene, const std::vector<std::string>& evidence,
                                  const std::string& question, const PromptLibrary& prompts) {
    if (evidence.empty()) throw EmptyInput("compose needs at least one evidence text");
    auto ordered = gene == ComposeGene::long_context_reorder ? reorder_lost_in_middle(evidence)
                                                             : evidence;
    std::string blocks;
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        if (!blocks.empty()) blocks += "\n\n";
        blocks += "[" + std::to_string(i + 1) + "] " + ordered[i];
    }
    return PromptTemplate::substitute(prompts.get("answer").user,
                                      {{"evidence", blocks}, {"query", question}});
}

inline std::string generate_answer(const std::string& prompt, const StageEnv& env) {
    auto reply = env.chat(ChatRequest::make(env.prompt("answer").system, prompt));
    if (trim(reply.text).empty()) throw ProviderUnavailable("empty completion from generator");
    return reply.text;
}

/// reflection_revise: one critique call, plus one revise call unless the
/// critique comes back "OK". Provider failures keep the original answer and
/// record a warning.
inline std::string refine_answer(RefineGene gene, const std::string& answer,
                                 const std::vector<std::string>& evidence,
                                 const StageEnv& env, StageRecord& record) {
    if (gene == RefineGene::none) return answer;
    if (trim(answer).empty()) throw EmptyInput("refine needs a non-empty answer");
    std::string joined;
    for (const auto& t : evidence) {
        if (!joined.empty()) joined += "\n\n";
        joined += t;
    }
    try {
        auto critique = env.chat(
            env.prompt("critique").render({{"answer", answer}, {"evidence", joined}}));
        auto verdict = trim(critique.text);
        if (!verdict.starts_with("MISSING:")) return answer;
        auto missing = std::string(trim(verdict.substr(8)));
        auto revised = env.chat(
            env.prompt("revise").render({{"answer", answer}, {"missing", missing}}));
        return trim(revised.text).empty() ? answer : revised.text;
    } catch (const ProviderUnavailable& e) {
        record.warnings.push_back(std::string("refine skipped: ") + e.what());
        return answer;
    }
}

/// Runs a genome end-to-end: transform -> retrieve -> rerank -> filter ->
/// augment -> condense -> compose -> generate -> refine. The first
/// unrecoverable stage error aborts the run with the stage name attached.
inline PipelineOutput run_pipeline(const Genome& genome, const std::string& query,
                                   const PipelineContext& ctx) {
    ctx.config.validate();
    CallMeter meter(ctx.config.token_ceiling);
    StageEnv env{ctx, meter};
    PipelineOutput out;

    auto run_stage = [&](const char* name, std::size_t items_in, auto&& fn) {
        StageRecord rec;
        rec.stage = name;
        rec.items_in = items_in;
        auto before = meter.total();
        auto t0 = std::chrono::steady_clock::now();
        decltype(fn(rec)) result;
        try {
            result = fn(rec);
        } catch (const Error& e) {
            throw PipelineError(name, e);
        }
        rec.elapsed_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        rec.usage = {meter.total().prompt_tokens - before.prompt_tokens,
                     meter.total().completion_tokens - before.completion_tokens};
        out.trace.stages.push_back(std::move(rec));
        return result;
    };

    auto queries = run_stage("transform", 1, [&](StageRecord& rec) {
        auto qs = transform_query(genome.query_transform, query, env);
        rec.items_out = qs.size();
        return qs;
    });
    auto candidates = run_stage("retrieve", queries.size(), [&](StageRecord& rec) {
        auto list = retrieve_merged(queries, *ctx.index, env);
        rec.items_out = list.items.size();
        return list;
    });
    auto reranked = run_stage("rerank", candidates.items.size(), [&](StageRecord& rec) {
        auto list = rerank_candidates(genome.rerank, query, candidates, env, rec);
        rec.items_out = list.items.size();
        return list;
    });
    out.retrieved = run_stage("filter", reranked.items.size(), [&](StageRecord& rec) {
        auto list = filter_candidates(genome.filter, reranked, ctx.config);
        rec.items_out = list.items.size();
        return list;
    });
    auto evidence = run_stage("augment", out.retrieved.items.size(), [&](StageRecord& rec) {
        auto texts = augment_evidence(genome.augment, out.retrieved, query, env);
        rec.items_out = texts.size();
        return texts;
    });
    auto condensed = run_stage("condense", evidence.size(), [&](StageRecord& rec) {
        auto texts = condense_evidence(genome.condense, evidence, env);
        rec.items_out = texts.size();
        return texts;
    });
    auto prompt = run_stage("compose", condensed.size(), [&](StageRecord& rec) {
        rec.items_out = 1;
        return compose_prompt(genome.compose, condensed, query, *ctx.prompts);
    });
    auto answer = run_stage("generate", 1, [&](StageRecord& rec) {
        rec.items_out = 1;
        return generate_answer(prompt, env);
    });
    out.answer = run_stage("refine", 1, [&](StageRecord& rec) {
        rec.items_out = 1;
        return refine_answer(genome.refine, answer, condensed, env, rec);
    });

    out.usage = meter.total();
    return out;
}

} // namespace ragforge
