#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ragforge/errors.hpp"

namespace ragforge {

enum class QueryTransform : std::uint8_t { none, multi_query, decomposition, step_back, hyde, clarification };
enum class RerankGene : std::uint8_t { none, cross_encoder, llm };
enum class FilterGene : std::uint8_t { top_k, similarity_threshold };
enum class AugmentGene : std::uint8_t { none, adjacent, relevant_segment };
enum class CondenseGene : std::uint8_t { none, llm_summarize, tree_summarize };
enum class ComposeGene : std::uint8_t { naive_concat, long_context_reorder };
enum class RefineGene : std::uint8_t { none, reflection_revise };

inline constexpr std::size_t kFamilyCount = 7;

namespace families {

struct Family {
    const char* name;
    std::vector<const char*> options;
};

inline const std::array<Family, kFamilyCount>& all() {
    static const std::array<Family, kFamilyCount> fams = {{
        {"query_transform",
         {"none", "multi_query", "decomposition", "step_back", "hyde", "clarification"}},
        {"rerank", {"none", "cross_encoder", "llm"}},
        {"filter", {"top_k", "similarity_threshold"}},
        {"augment", {"none", "adjacent", "relevant_segment"}},
        {"condense", {"none", "llm_summarize", "tree_summarize"}},
        {"compose", {"naive_concat", "long_context_reorder"}},
        {"refine", {"none", "reflection_revise"}},
    }};
    return fams;
}

inline std::size_t option_count(std::size_t f) { return all()[f].options.size(); }

} // namespace families

/// One method choice per technique family; the unit the genetic search
/// evolves. Literal form is seven '+'-separated fields in fixed family order:
///   query_transform+rerank+filter+augment+condense+compose+refine
struct Genome {
    QueryTransform query_transform = QueryTransform::none;
    RerankGene rerank = RerankGene::none;
    FilterGene filter = FilterGene::top_k;
    AugmentGene augment = AugmentGene::none;
    CondenseGene condense = CondenseGene::none;
    ComposeGene compose = ComposeGene::naive_concat;
    RefineGene refine = RefineGene::none;

    friend bool operator==(const Genome&, const Genome&) = default;

    std::uint8_t gene(std::size_t f) const {
        switch (f) {
        case 0: return static_cast<std::uint8_t>(query_transform);
        case 1: return static_cast<std::uint8_t>(rerank);
        case 2: return static_cast<std::uint8_t>(filter);
        case 3: return static_cast<std::uint8_t>(augment);
        case 4: return static_cast<std::uint8_t>(condense);
        case 5: return static_cast<std::uint8_t>(compose);
        default: return static_cast<std::uint8_t>(refine);
        }
    }

    void set_gene(std::size_t f, std::uint8_t v) {
        switch (f) {
        case 0: query_transform = static_cast<QueryTransform>(v); break;
        case 1: rerank = static_cast<RerankGene>(v); break;
        case 2: filter = static_cast<FilterGene>(v); break;
        case 3: augment = static_cast<AugmentGene>(v); break;
        case 4: condense = static_cast<CondenseGene>(v); break;
        case 5: compose = static_cast<ComposeGene>(v); break;
        default: refine = static_cast<RefineGene>(v); break;
        }
    }

    std::string to_string() const {
        std::string out;
        for (std::size_t f = 0; f < kFamilyCount; ++f) {
            if (f) out += '+';
            out += families::all()[f].options[gene(f)];
        }
        return out;
    }

    static Genome parse(std::string_view literal) {
        std::vector<std::string_view> fields;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= literal.size(); ++i) {
            if (i == literal.size() || literal[i] == '+') {
                fields.push_back(literal.substr(start, i - start));
                start = i + 1;
            }
        }
        if (fields.size() != kFamilyCount)
            throw UsageError("genome literal needs " + std::to_string(kFamilyCount) +
                             " '+'-separated fields, got " + std::to_string(fields.size()));
        Genome g;
        for (std::size_t f = 0; f < kFamilyCount; ++f) {
            const auto& fam = families::all()[f];
            bool found = false;
            for (std::size_t i = 0; i < fam.options.size(); ++i) {
                if (fields[f] == fam.options[i]) {
                    g.set_gene(f, static_cast<std::uint8_t>(i));
                    found = true;
                    break;
                }
            }
            if (!found) {
                std::string opts;
                for (const auto* o : fam.options) {
                    if (!opts.empty()) opts += ", ";
                    opts += o;
                }
                throw UsageError("unknown " + std::string(fam.name) + " option '" +
                                 std::string(fields[f]) + "' (valid: " + opts + ")");
            }
        }
        return g;
    }

    // Dense retrieval + similarity thresholding + naive concatenation.
    static Genome baseline() {
        Genome g;
        g.filter = FilterGene::similarity_threshold;
        return g;
    }
};

inline std::size_t design_space_size() {
    std::size_t n = 1;
    for (std::size_t f = 0; f < kFamilyCount; ++f) n *= families::option_count(f);
    return n;
}

inline std::vector<Genome> all_genomes() {
    std::vector<Genome> out;
    out.reserve(design_space_size());
    Genome g;
    std::array<std::size_t, kFamilyCount> idx{};
    for (;;) {
        for (std::size_t f = 0; f < kFamilyCount; ++f)
            g.set_gene(f, static_cast<std::uint8_t>(idx[f]));
        out.push_back(g);
        std::size_t f = kFamilyCount;
        while (f > 0) {
            --f;
            if (++idx[f] < families::option_count(f)) break;
            idx[f] = 0;
            if (f == 0) return out;
        }
    }
}

/// Shorthand used in reports: non-default methods joined with " + " using the
/// published ablation labels; the all-default genome reads as the plain
/// dense-retrieval baseline.
inline std::string report_alias(const Genome& g) {
    static const char* qt[] = {nullptr,
                               "query_expansion_simple_multi_query_borda",
                               "query_decomposition",
                               "step_back_prompting",
                               "hyde",
                               "simple_query_refinement_clarification"};
    static const char* rr[] = {nullptr, "ce_rerank", "llm_rerank"};
    static const char* fl[] = {nullptr, "similarity_threshold"};
    static const char* ag[] = {nullptr, "adjacent_augmenter", "relevant_segment_extractor"};
    static const char* cd[] = {nullptr, "llm_summarize", "tree_summarize"};
    static const char* cp[] = {nullptr, "long_context_reorder"};
    static const char* rf[] = {nullptr, "reflection_revising"};

    std::vector<const char*> parts;
    if (auto* s = qt[static_cast<int>(g.query_transform)]) parts.push_back(s);
    if (auto* s = rr[static_cast<int>(g.rerank)]) parts.push_back(s);
    if (auto* s = fl[static_cast<int>(g.filter)]) parts.push_back(s);
    if (auto* s = ag[static_cast<int>(g.augment)]) parts.push_back(s);
    if (auto* s = cd[static_cast<int>(g.condense)]) parts.push_back(s);
    if (auto* s = cp[static_cast<int>(g.compose)]) parts.push_back(s);
    if (auto* s = rf[static_cast<int>(g.refine)]) parts.push_back(s);
    if (parts.empty()) return "vector_simple";
    std::string out;
    for (const auto* p : parts) {
        if (!out.empty()) out += " + ";
        out += p;
    }
    return out;
}

} // namespace ragforge
