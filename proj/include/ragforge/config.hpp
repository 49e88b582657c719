#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "ragforge/errors.hpp"
#include "ragforge/optimizer.hpp"
#include "ragforge/pipeline.hpp"
#include "ragforge/providers_http.hpp"

namespace ragforge {

/// Everything a run needs, loaded from a JSON config file. CLI flags override
/// file values; file values override the built-in defaults shown here.
struct RunConfig {
    struct Corpus {
        std::string documents = "documents.jsonl";
        std::string qa = "qa.jsonl";
        std::string chunk_dump = "chunks.jsonl";
        std::size_t chunk_limit = 1000;
    } corpus;

    struct Index {
        std::string path = "index.rgix";
    } index;

    ProviderConfig provider;
    PipelineConfig pipeline;
    std::string prompt_dir = "assets/prompts";

    GAConfig ga;

    std::string report_out = "report.jsonl";
    std::string search_log = "search_log.jsonl";
    std::uint64_t seed = 1;
};

namespace detail {

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

} // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
    RunConfig c;
    if (j.contains("corpus")) {
        const auto& s = j.at("corpus");
        detail::read_if(s, "documents", c.corpus.documents);
        detail::read_if(s, "qa", c.corpus.qa);
        detail::read_if(s, "chunk_dump", c.corpus.chunk_dump);
        detail::read_if(s, "chunk_limit", c.corpus.chunk_limit);
    }
    if (j.contains("index")) detail::read_if(j.at("index"), "path", c.index.path);
    if (j.contains("provider")) {
        const auto& s = j.at("provider");
        std::string mode = "mock";
        detail::read_if(s, "mode", mode);
        if (mode != "mock" && mode != "http")
            throw UsageError("provider.mode must be 'mock' or 'http'");
        c.provider.mode = mode == "mock" ? ProviderMode::mock : ProviderMode::http;
        detail::read_if(s, "seed", c.provider.seed);
        detail::read_if(s, "token_ceiling", c.provider.token_ceiling);
        detail::read_if(s, "chat_url", c.provider.chat_url);
        detail::read_if(s, "embed_url", c.provider.embed_url);
        detail::read_if(s, "api_key", c.provider.api_key);
        detail::read_if(s, "chat_model", c.provider.chat_model);
        detail::read_if(s, "embed_model", c.provider.embed_model);
        detail::read_if(s, "embed_dim", c.provider.embed_dim);
        detail::read_if(s, "timeout_ms", c.provider.timeout_ms);
        detail::read_if(s, "retries", c.provider.retries);
    }
    if (j.contains("pipeline")) {
        const auto& s = j.at("pipeline");
        detail::read_if(s, "k0", c.pipeline.k0);
        detail::read_if(s, "top_k", c.pipeline.top_k);
        detail::read_if(s, "threshold", c.pipeline.threshold);
        detail::read_if(s, "window", c.pipeline.adjacency_window);
        detail::read_if(s, "condense_budget", c.pipeline.condense_budget_chars);
        detail::read_if(s, "rrf_k", c.pipeline.rrf_k);
        detail::read_if(s, "multi_query_count", c.pipeline.multi_query_count);
    }
    detail::read_if(j, "prompt_dir", c.prompt_dir);
    if (j.contains("ga")) {
        const auto& s = j.at("ga");
        detail::read_if(s, "population", c.ga.population_size);
        detail::read_if(s, "generations", c.ga.generations);
        detail::read_if(s, "mutation_rate", c.ga.mutation_rate);
        detail::read_if(s, "tournament", c.ga.tournament_size);
        detail::read_if(s, "elites", c.ga.elite_count);
        detail::read_if(s, "sample", c.ga.eval_sample_size);
        detail::read_if(s, "alpha", c.ga.fitness_alpha);
        detail::read_if(s, "strict", c.ga.strict);
    }
    detail::read_if(j, "report_out", c.report_out);
    detail::read_if(j, "search_log", c.search_log);
    detail::read_if(j, "seed", c.seed);
    c.ga.rng_seed = c.seed;
    if (!j.contains("provider") || !j.at("provider").contains("seed"))
        c.provider.seed = c.seed;
    return c;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw UsageError("config file " + path + ": " + e.what());
    }
    return parse_run_config(j);
}

inline void require_file(const std::string& path, const char* what) {
    if (!std::filesystem::exists(path))
        throw ParseError(std::string(what) + " not found: " + path);
}

} // namespace ragforge
