#pragma once

#include <algorithm>
#include <chrono>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "ragforge/corpus.hpp"
#include "ragforge/genome.hpp"
#include "ragforge/metrics.hpp"
#include "ragforge/pipeline.hpp"
#include "ragforge/util.hpp"

namespace ragforge {

struct GAConfig {
    std::size_t population_size = 20;
    std::size_t generations = 10;
    double mutation_rate = 0.1; // per gene
    std::size_t tournament_size = 3;
    std::size_t elite_count = 2;
    std::size_t eval_sample_size = 100;
    std::uint64_t rng_seed = 1;
    double fitness_alpha = 0.5;
    bool strict = false; // abort the search on a failed pipeline run
    std::function<bool(const Genome&)> constraint; // empty = accept everything

    bool accepts(const Genome& g) const { return !constraint || constraint(g); }

    void validate() const {
        if (population_size < 2) throw InvalidParam("population_size must be >= 2");
        if (mutation_rate < 0.0 || mutation_rate > 1.0)
            throw InvalidParam("mutation_rate must be in [0,1]");
        if (elite_count >= population_size)
            throw InvalidParam("elite_count must be below population_size");
        if (tournament_size < 2) throw InvalidParam("tournament_size must be >= 2");
        if (fitness_alpha < 0.0 || fitness_alpha > 1.0)
            throw InvalidParam("fitness_alpha must be in [0,1]");
    }
};

struct FitnessReport {
    Genome genome;
    double retrieval_mean = 0.0;  // mean per-query retrieval aggregate
    double generation_mean = 0.0; // mean per-query generation aggregate
    double fitness = 0.0;         // alpha * retrieval_mean + (1-alpha) * generation_mean
    TokenUsage tokens;            // summed pipeline usage over the sample
    std::size_t failed_queries = 0;
};

struct ParetoPoint {
    Genome genome;
    double overall_score = 0.0;
    double tokens_per_query = 0.0;
};

struct SearchLogRecord {
    std::size_t generation = 0;
    Genome genome;
    double retrieval_mean = 0.0;
    double generation_mean = 0.0;
    double fitness = 0.0;
    std::int64_t tokens = 0;
    double wall_ms = 0.0;
};

struct GAResult {
    std::vector<FitnessReport> ranked; // every evaluated genome, best first
    std::vector<SearchLogRecord> log;  // one record per distinct evaluation
    std::vector<double> best_fitness_per_generation;
};

inline Genome random_genome(Rng& rng, const std::function<bool(const Genome&)>& constraint = {}) {
    for (int attempt = 0; attempt < 10000; ++attempt) {
        Genome g;
        for (std::size_t f = 0; f < kFamilyCount; ++f)
            g.set_gene(f, static_cast<std::uint8_t>(uniform_index(rng, families::option_count(f))));
        if (!constraint || constraint(g)) return g;
    }
    throw InvalidParam("constraint rejected 10000 sampled genomes");
}

/// Uniform per-gene crossover: each gene comes from either parent with
/// probability one half.
inline Genome crossover(const Genome& a, const Genome& b, Rng& rng) {
    Genome child;
    for (std::size_t f = 0; f < kFamilyCount; ++f)
        child.set_gene(f, (rng() & 1) ? a.gene(f) : b.gene(f));
    return child;
}

/// Each gene is independently resampled to a different option of its family
/// with probability mu.
inline Genome mutate(const Genome& g, double mu, Rng& rng) {
    if (mu < 0.0 || mu > 1.0) throw InvalidParam("mutation rate must be in [0,1]");
    Genome out = g;
    for (std::size_t f = 0; f < kFamilyCount; ++f) {
        if (uniform01(rng) < mu) {
            auto n = families::option_count(f);
            auto shift = 1 + uniform_index(rng, n - 1);
            out.set_gene(f, static_cast<std::uint8_t>((g.gene(f) + shift) % n));
        }
    }
    return out;
}

// Keyed by (genome literal, evaluation-sample hash); safe for concurrent
// fitness evaluations within a generation.
class FitnessCache {
  public:
    static std::uint64_t sample_hash(std::span<const QAItem> sample) {
        std::uint64_t h = 14695981039346656037ull;
        for (const auto& q : sample) h = fnv1a(q.id, h);
        return h;
    }

    std::optional<FitnessReport> find(const Genome& g, std::uint64_t sample) const {
        std::lock_guard lock(mu_);
        auto it = map_.find(key(g, sample));
        return it == map_.end() ? std::nullopt : std::optional(it->second);
    }

    void put(const Genome& g, std::uint64_t sample, const FitnessReport& r) {
        std::lock_guard lock(mu_);
        map_.emplace(key(g, sample), r);
    }

    std::size_t size() const {
        std::lock_guard lock(mu_);
        return map_.size();
    }

  private:
    static std::string key(const Genome& g, std::uint64_t sample) {
        return g.to_string() + "#" + std::to_string(sample);
    }

    mutable std::mutex mu_;
    std::unordered_map<std::string, FitnessReport> map_;
};

/// Runs one QA item through the pipeline and scores it.
inline EvalRecord evaluate_one(const Genome& genome, const QAItem& item,
                               const PipelineContext& ctx, std::size_t ap_cutoff = 0) {
    auto output = run_pipeline(genome, item.question, ctx);
    EvalRecord rec;
    rec.qa_id = item.id;
    rec.genome = genome;
    GoldSet gold(item.gold_chunk_ids.begin(), item.gold_chunk_ids.end());
    rec.retrieval = RetrievalEval::compute(output.retrieved, gold, ap_cutoff);
    rec.generation.sim = semantic_similarity(output.answer, item.reference_answer,
                                             *ctx.providers.embedder);
    rec.generation.judge = judge_score(item.question, output.answer, item.reference_answer,
                                       *ctx.providers.chat, *ctx.prompts);
    rec.generation.aggregate = generation_score(rec.generation.sim, rec.generation.judge);
    rec.usage = output.usage;
    return rec;
}

/// Mean retrieval/generation aggregates over the sample combined by the
/// fitness weight. Failed runs score zero for their query unless strict mode
/// is on, in which case the error propagates.
inline FitnessReport evaluate_fitness(const Genome& genome, std::span<const QAItem> sample,
                                      const PipelineContext& ctx, double alpha = 0.5,
                                      bool strict = false, FitnessCache* cache = nullptr,
                                      std::vector<EvalRecord>* records = nullptr) {
    if (sample.empty()) throw EmptyInput("evaluate_fitness needs a non-empty qa sample");
    std::uint64_t shash = FitnessCache::sample_hash(sample);
    if (cache && !records) {
        if (auto hit = cache->find(genome, shash)) return *hit;
    }
    FitnessReport report;
    report.genome = genome;
    double r_sum = 0.0, g_sum = 0.0;
    for (const auto& item : sample) {
        try {
            auto rec = evaluate_one(genome, item, ctx);
            r_sum += rec.retrieval.aggregate;
            g_sum += rec.generation.aggregate;
            report.tokens += rec.usage;
            if (records) records->push_back(std::move(rec));
        } catch (const Error&) {
            if (strict) throw;
            ++report.failed_queries;
        }
    }
    auto n = static_cast<double>(sample.size());
    report.retrieval_mean = r_sum / n;
    report.generation_mean = g_sum / n;
    report.fitness = alpha * report.retrieval_mean + (1.0 - alpha) * report.generation_mean;
    if (cache) cache->put(genome, shash, report);
    return report;
}

/// Stratified evaluation subset: balanced across web and wikipedia when both
/// labels are present, uniform otherwise. Sampling is without replacement.
inline std::vector<QAItem>
sample_eval_set(std::span<const QAItem> pool,
                const std::function<std::optional<Source>(const QAItem&)>& label, std::size_t n,
                Rng& rng) {
    if (pool.size() < n)
        throw InsufficientPool("qa pool has " + std::to_string(pool.size()) +
                               " items, need " + std::to_string(n));
    std::vector<std::size_t> web, wiki, other;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        auto s = label ? label(pool[i]) : std::nullopt;
        if (s == Source::web)
            web.push_back(i);
        else if (s == Source::wikipedia)
            wiki.push_back(i);
        else
            other.push_back(i);
    }
    auto draw = [&](std::vector<std::size_t>& from, std::size_t count,
                    std::vector<std::size_t>& into) {
        for (std::size_t i = 0; i < count && !from.empty(); ++i) {
            auto j = uniform_index(rng, from.size());
            into.push_back(from[j]);
            from.erase(from.begin() + static_cast<std::ptrdiff_t>(j));
        }
    };
    std::vector<std::size_t> picked;
    if (!web.empty() && !wiki.empty() && other.empty()) {
        draw(web, n / 2, picked);
        draw(wiki, n - picked.size(), picked);
        // either side may run short; top up from whatever remains
        auto rest = web;
        rest.insert(rest.end(), wiki.begin(), wiki.end());
        draw(rest, n - picked.size(), picked);
    } else {
        std::vector<std::size_t> all;
        for (std::size_t i = 0; i < pool.size(); ++i) all.push_back(i);
        draw(all, n, picked);
    }
    std::sort(picked.begin(), picked.end());
    std::vector<QAItem> out;
    out.reserve(picked.size());
    for (auto i : picked) out.push_back(pool[i]);
    return out;
}

using FitnessFn = std::function<FitnessReport(const Genome&)>;

/// Budgeted genetic search: evaluate the population, carry the elites, refill
/// with tournament-selected parents crossed and mutated, repeat. Returns
/// every evaluated genome ranked by fitness. The fitness function seam lets
/// tests drive the search with synthetic landscapes.
inline GAResult ga_search(const GAConfig& config, const FitnessFn& fitness) {
    config.validate();
    Rng rng(config.rng_seed);

    GAResult result;
    std::unordered_map<std::string, FitnessReport> evaluated;

    auto fitness_of = [&](const Genome& g) -> const FitnessReport& {
        return evaluated.at(g.to_string());
    };
    auto better = [&](const FitnessReport& a, const FitnessReport& b) {
        if (a.fitness != b.fitness) return a.fitness > b.fitness;
        return a.genome.to_string() < b.genome.to_string();
    };

    std::vector<Genome> population;
    for (std::size_t i = 0; i < config.population_size; ++i)
        population.push_back(random_genome(rng, config.constraint));

    auto evaluate_population = [&](std::size_t generation) {
        for (const auto& g : population) {
            auto key = g.to_string();
            if (evaluated.contains(key)) continue;
            auto t0 = std::chrono::steady_clock::now();
            auto report = fitness(g);
            report.genome = g;
            double wall =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count();
            evaluated.emplace(key, report);
            result.log.push_back({generation, g, report.retrieval_mean, report.generation_mean,
                                  report.fitness, report.tokens.total(), wall});
        }
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& g : population) best = std::max(best, fitness_of(g).fitness);
        result.best_fitness_per_generation.push_back(best);
    };

    auto tournament = [&]() -> const Genome& {
        std::size_t best = uniform_index(rng, population.size());
        for (std::size_t i = 1; i < config.tournament_size; ++i) {
            std::size_t c = uniform_index(rng, population.size());
            if (better(fitness_of(population[c]), fitness_of(population[best]))) best = c;
        }
        return population[best];
    };

    evaluate_population(0);
    for (std::size_t gen = 1; gen <= config.generations; ++gen) {
        std::vector<Genome> sorted = population;
        std::sort(sorted.begin(), sorted.end(), [&](const Genome& a, const Genome& b) {
            return better(fitness_of(a), fitness_of(b));
        });
        std::vector<Genome> next(sorted.begin(),
                                 sorted.begin() + static_cast<std::ptrdiff_t>(std::min(
                                                      config.elite_count, sorted.size())));
        std::size_t rejected = 0;
        while (next.size() < config.population_size) {
            const Genome& a = tournament();
            const Genome& b = tournament();
            Genome child = mutate(crossover(a, b, rng), config.mutation_rate, rng);
            if (config.accepts(child)) {
                next.push_back(child);
                rejected = 0;
            } else if (++rejected > 10000) {
                next.push_back(random_genome(rng, config.constraint));
                rejected = 0;
            }
        }
        population = std::move(next);
        evaluate_population(gen);
    }

    for (auto& [key, report] : evaluated) result.ranked.push_back(report);
    std::sort(result.ranked.begin(), result.ranked.end(), better);
    return result;
}

/// Production search: samples the evaluation subset once, then scores genomes
/// with cached pipeline evaluations.
inline GAResult ga_search(const GAConfig& config, std::span<const QAItem> qa_pool,
                          const PipelineContext& ctx,
                          const std::function<std::optional<Source>(const QAItem&)>& label = {}) {
    config.validate();
    Rng sample_rng(config.rng_seed ^ 0x5eedf00dull);
    auto sample = sample_eval_set(qa_pool, label, config.eval_sample_size, sample_rng);
    auto cache = std::make_shared<FitnessCache>();
    auto sample_shared = std::make_shared<std::vector<QAItem>>(std::move(sample));
    FitnessFn fitness = [=, &ctx](const Genome& g) {
        return evaluate_fitness(g, *sample_shared, ctx, config.fitness_alpha, config.strict,
                                cache.get());
    };
    return ga_search(config, fitness);
}

/// Maximize score, minimize tokens. Returns the non-dominated points sorted
/// by descending score; a point is dominated when another has >= score and
/// <= tokens with at least one strict inequality.
inline std::vector<ParetoPoint> pareto_front(std::vector<ParetoPoint> points) {
    std::sort(points.begin(), points.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
        if (a.overall_score != b.overall_score) return a.overall_score > b.overall_score;
        return a.tokens_per_query < b.tokens_per_query;
    });
    std::vector<ParetoPoint> front;
    double min_tokens_above = std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    while (i < points.size()) {
        std::size_t j = i;
        while (j < points.size() && points[j].overall_score == points[i].overall_score) ++j;
        double group_min = points[i].tokens_per_query; // sorted ascending within the group
        if (group_min < min_tokens_above) {
            for (std::size_t k = i; k < j; ++k)
                if (points[k].tokens_per_query == group_min) front.push_back(points[k]);
            min_tokens_above = group_min;
        }
        i = j;
    }
    return front;
}

// ---------------------------------------------------------------------------
// Search log serialization (JSON Lines)

inline nlohmann::ordered_json to_json(const SearchLogRecord& r) {
    nlohmann::ordered_json j;
    j["generation"] = r.generation;
    j["genome"] = r.genome.to_string();
    j["retrieval"] = r.retrieval_mean;
    j["generation_score"] = r.generation_mean;
    j["fit"] = r.fitness;
    j["tokens"] = r.tokens;
    j["wall_ms"] = r.wall_ms;
    return j;
}

inline std::string search_log_to_jsonl(std::span<const SearchLogRecord> log) {
    std::string out;
    for (const auto& r : log) {
        out += to_json(r).dump();
        out += '\n';
    }
    return out;
}

} // namespace ragforge
