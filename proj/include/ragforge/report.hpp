#pragma once

#include <cstdio>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ragforge/errors.hpp"
#include "ragforge/genome.hpp"
#include "ragforge/optimizer.hpp"

namespace ragforge {

struct ReportRow {
    std::string genome;          // genome literal
    double overall = 0.0;        // 0.5 * (retrieval + generation)
    double retrieval = 0.0;
    double generation = 0.0;
    double tokens_per_query = 0.0;
    bool pareto = false;

    friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

/// Builds report rows from fitness reports: overall is the equal-weight mean
/// of the two aggregates, tokens are per query, and the pareto flag marks the
/// non-dominated (overall, tokens) points. Rows come back sorted by overall,
/// best first.
inline std::vector<ReportRow> make_report(std::span<const FitnessReport> reports,
                                          std::size_t sample_size) {
    if (sample_size == 0) throw InvalidParam("sample_size must be >= 1");
    std::vector<ReportRow> rows;
    rows.reserve(reports.size());
    std::vector<ParetoPoint> points;
    for (const auto& r : reports) {
        ReportRow row;
        row.genome = r.genome.to_string();
        row.retrieval = r.retrieval_mean;
        row.generation = r.generation_mean;
        row.overall = overall_score(r.retrieval_mean, r.generation_mean);
        row.tokens_per_query = static_cast<double>(r.tokens.total()) /
                               static_cast<double>(sample_size);
        rows.push_back(row);
        points.push_back({r.genome, row.overall, row.tokens_per_query});
    }
    auto front = pareto_front(points);
    for (auto& row : rows)
        for (const auto& p : front)
            if (p.genome.to_string() == row.genome && p.overall_score == row.overall &&
                p.tokens_per_query == row.tokens_per_query)
                row.pareto = true;
    std::sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
        if (a.overall != b.overall) return a.overall > b.overall;
        return a.genome < b.genome;
    });
    return rows;
}

/// Fixed-width table with percentages at two decimals. The methods column
/// maps genome fields onto the published ablation shorthand (cross_encoder ->
/// ce_rerank, adjacent -> adjacent_augmenter, clarification ->
/// simple_query_refinement_clarification, and so on; see report_alias).
inline std::string format_report_table(std::span<const ReportRow> rows) {
    std::string out;
    char line[512];
    std::snprintf(line, sizeof line, "%-68s %9s %10s %11s %9s %7s\n", "configuration", "overall",
                  "retrieval", "generation", "tokens", "pareto");
    out += line;
    out.append(118, '-');
    out += '\n';
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%-68s %8.2f%% %10.3f %11.3f %9.1f %7s\n",
                      r.genome.c_str(), r.overall * 100.0, r.retrieval, r.generation,
                      r.tokens_per_query, r.pareto ? "*" : "");
        out += line;
        std::snprintf(line, sizeof line, "  (%s)\n", report_alias(Genome::parse(r.genome)).c_str());
        out += line;
    }
    return out;
}

inline void write_report_jsonl(const std::string& path, std::span<const ReportRow> rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write " + path);
    for (const auto& r : rows) {
        nlohmann::ordered_json j;
        j["genome"] = r.genome;
        j["overall"] = r.overall;
        j["retrieval"] = r.retrieval;
        j["generation"] = r.generation;
        j["tokens_per_query"] = r.tokens_per_query;
        j["pareto"] = r.pareto;
        out << j.dump() << '\n';
    }
}

inline std::vector<ReportRow> parse_report_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::vector<ReportRow> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            ReportRow r;
            r.genome = j.at("genome").get<std::string>();
            r.overall = j.at("overall").get<double>();
            r.retrieval = j.at("retrieval").get<double>();
            r.generation = j.at("generation").get<double>();
            r.tokens_per_query = j.at("tokens_per_query").get<double>();
            r.pareto = j.at("pareto").get<bool>();
            rows.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return rows;
}

} // namespace ragforge
