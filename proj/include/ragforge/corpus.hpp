#pragma once

#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ragforge/errors.hpp"
#include "ragforge/text.hpp"
#include "ragforge/util.hpp"

namespace ragforge {

enum class Source { web, wikipedia, synthetic };

inline const char* to_string(Source s) {
    switch (s) {
    case Source::web: return "web";
    case Source::wikipedia: return "wikipedia";
    case Source::synthetic: return "synthetic";
    }
    return "synthetic";
}

inline Source source_from_string(std::string_view s) {
    if (s == "web") return Source::web;
    if (s == "wikipedia") return Source::wikipedia;
    if (s == "synthetic") return Source::synthetic;
    throw ParseError("unknown source '" + std::string(s) + "'");
}

struct Document {
    std::string id;
    std::string title;
    Source source = Source::synthetic;
    std::string body; // markdown with '#' headings
    std::optional<std::string> topic;

    friend bool operator==(const Document&, const Document&) = default;
};

// Document title followed by the heading chain, outermost first.
struct SectionPath {
    std::vector<std::string> elements;

    friend bool operator==(const SectionPath&, const SectionPath&) = default;
};

struct Chunk {
    std::string id; // "{doc_id}#{ordinal}"
    std::string doc_id;
    SectionPath section_path;
    std::size_t ordinal = 0;
    std::string text;
    std::size_t char_len = 0; // code points, == utf8_len(text)

    friend bool operator==(const Chunk&, const Chunk&) = default;
};

struct QAItem {
    enum class QType { factual, interpretation };

    std::string id;
    std::string question;
    std::string reference_answer;
    std::vector<std::string> gold_chunk_ids;
    QType qtype = QType::factual;

    friend bool operator==(const QAItem&, const QAItem&) = default;
};

inline const char* to_string(QAItem::QType t) {
    return t == QAItem::QType::factual ? "factual" : "interpretation";
}

inline QAItem::QType qtype_from_string(std::string_view s) {
    if (s == "factual") return QAItem::QType::factual;
    if (s == "interpretation") return QAItem::QType::interpretation;
    throw ParseError("unknown qtype '" + std::string(s) + "'");
}

namespace detail {

// ATX heading: 1-6 '#' then at least one space then a non-empty title.
inline std::optional<std::pair<int, std::string>> parse_heading(std::string_view line) {
    std::size_t hashes = 0;
    while (hashes < line.size() && line[hashes] == '#') ++hashes;
    if (hashes == 0 || hashes > 6) return std::nullopt;
    if (hashes >= line.size() || line[hashes] != ' ') return std::nullopt;
    auto title = trim(line.substr(hashes + 1));
    if (title.empty()) return std::nullopt;
    return std::make_pair(static_cast<int>(hashes), std::string(title));
}

} // namespace detail

/// Splits a markdown body into header-scoped sections. Text before the first
/// heading sits under a path of just the document title; each heading opens a
/// section whose path is the title plus the active heading chain. Sections
/// whose text is blank are dropped.
inline std::vector<std::pair<SectionPath, std::string>>
parse_markdown_sections(const Document& doc) {
    if (trim(doc.body).empty()) throw EmptyDocument("document '" + doc.id + "' has a blank body");

    std::vector<std::pair<SectionPath, std::string>> sections;
    std::vector<std::pair<int, std::string>> heading_stack;
    std::string buffer;

    auto current_path = [&] {
        SectionPath p;
        p.elements.push_back(doc.title);
        for (const auto& [level, title] : heading_stack) p.elements.push_back(title);
        return p;
    };
    auto flush = [&] {
        auto text = trim(buffer);
        if (!text.empty()) sections.emplace_back(current_path(), std::string(text));
        buffer.clear();
    };

    for (auto line : split_lines(doc.body)) {
        if (auto heading = detail::parse_heading(line)) {
            flush();
            while (!heading_stack.empty() && heading_stack.back().first >= heading->first)
                heading_stack.pop_back();
            heading_stack.push_back(*heading);
        } else {
            buffer += std::string(line);
            buffer += '\n';
        }
    }
    flush();
    return sections;
}

namespace detail {

// Greedy boundary-respecting splitter: pack paragraphs up to the limit; a
// paragraph over the limit is split at sentence boundaries; a sentence over
// the limit is hard-cut at the limit.
inline std::vector<std::string> split_section_text(const std::string& text, std::size_t limit) {
    std::vector<std::string> pieces;
    std::string acc;
    std::size_t acc_len = 0;

    auto flush = [&] {
        if (!acc.empty()) {
            pieces.push_back(acc);
            acc.clear();
            acc_len = 0;
        }
    };
    auto append = [&](const std::string& part, std::size_t part_len, const char* sep,
                      std::size_t sep_len) {
        if (acc.empty()) {
            acc = part;
            acc_len = part_len;
        } else if (acc_len + sep_len + part_len <= limit) {
            acc += sep;
            acc += part;
            acc_len += sep_len + part_len;
        } else {
            flush();
            acc = part;
            acc_len = part_len;
        }
    };

    for (const auto& para : split_paragraphs(text)) {
        std::size_t plen = utf8_len(para);
        if (plen <= limit) {
            append(para, plen, "\n\n", 2);
            continue;
        }
        flush();
        for (const auto& sentence : split_sentences(para)) {
            std::size_t slen = utf8_len(sentence);
            if (slen <= limit) {
                append(sentence, slen, " ", 1);
                continue;
            }
            flush();
            std::string_view rest = sentence;
            while (utf8_len(rest) > limit) {
                auto cut = utf8_offset(rest, limit);
                pieces.emplace_back(rest.substr(0, cut));
                rest = rest.substr(cut);
            }
            if (!rest.empty()) {
                acc = std::string(rest);
                acc_len = utf8_len(rest);
            }
        }
        flush();
    }
    flush();
    return pieces;
}

} // namespace detail

inline std::vector<Chunk> chunk_document(const Document& doc, std::size_t chunk_limit = 1000) {
    if (chunk_limit < 50)
        throw InvalidLimit("chunk_limit " + std::to_string(chunk_limit) + " is below the floor of 50");
    auto sections = parse_markdown_sections(doc);

    std::vector<Chunk> chunks;
    std::size_t ordinal = 0;
    for (auto& [path, text] : sections) {
        for (auto& piece : detail::split_section_text(text, chunk_limit)) {
            Chunk c;
            c.doc_id = doc.id;
            c.ordinal = ordinal++;
            c.id = doc.id + "#" + std::to_string(c.ordinal);
            c.section_path = path;
            c.char_len = utf8_len(piece);
            c.text = std::move(piece);
            chunks.push_back(std::move(c));
        }
    }
    return chunks;
}

inline std::vector<Chunk> chunk_corpus(std::span<const Document> docs,
                                       std::size_t chunk_limit = 1000) {
    std::vector<Chunk> all;
    for (const auto& d : docs) {
        auto cs = chunk_document(d, chunk_limit);
        all.insert(all.end(), std::make_move_iterator(cs.begin()), std::make_move_iterator(cs.end()));
    }
    return all;
}

// ---------------------------------------------------------------------------
// JSON Lines serialization

using json = nlohmann::ordered_json;

inline json to_json(const Document& d) {
    json j;
    j["id"] = d.id;
    j["title"] = d.title;
    j["source"] = to_string(d.source);
    j["body"] = d.body;
    j["topic"] = d.topic ? json(*d.topic) : json(nullptr);
    return j;
}

inline Document document_from_json(const json& j) {
    Document d;
    d.id = j.at("id").get<std::string>();
    d.title = j.at("title").get<std::string>();
    d.source = source_from_string(j.at("source").get<std::string>());
    d.body = j.at("body").get<std::string>();
    if (j.contains("topic") && !j.at("topic").is_null())
        d.topic = j.at("topic").get<std::string>();
    if (d.id.empty()) throw ParseError("document id must be non-empty");
    if (trim(d.body).empty()) throw EmptyDocument("document '" + d.id + "' has a blank body");
    return d;
}

inline json to_json(const Chunk& c) {
    json j;
    j["id"] = c.id;
    j["doc_id"] = c.doc_id;
    j["section_path"] = c.section_path.elements;
    j["ordinal"] = c.ordinal;
    j["text"] = c.text;
    return j;
}

inline Chunk chunk_from_json(const json& j) {
    Chunk c;
    c.id = j.at("id").get<std::string>();
    c.doc_id = j.at("doc_id").get<std::string>();
    c.section_path.elements = j.at("section_path").get<std::vector<std::string>>();
    c.ordinal = j.at("ordinal").get<std::size_t>();
    c.text = j.at("text").get<std::string>();
    c.char_len = utf8_len(c.text);
    return c;
}

inline json to_json(const QAItem& q) {
    json j;
    j["id"] = q.id;
    j["question"] = q.question;
    j["reference_answer"] = q.reference_answer;
    j["gold_chunk_ids"] = q.gold_chunk_ids;
    j["qtype"] = to_string(q.qtype);
    return j;
}

inline QAItem qa_from_json(const json& j) {
    QAItem q;
    q.id = j.at("id").get<std::string>();
    q.question = j.at("question").get<std::string>();
    q.reference_answer = j.at("reference_answer").get<std::string>();
    q.gold_chunk_ids = j.at("gold_chunk_ids").get<std::vector<std::string>>();
    q.qtype = qtype_from_string(j.at("qtype").get<std::string>());
    return q;
}

namespace detail {

template <typename T, typename FromJson>
std::vector<T> load_jsonl(const std::string& path, FromJson&& from_json_fn) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::vector<T> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            out.push_back(from_json_fn(json::parse(line)));
        } catch (const Error&) {
            throw;
        } catch (const std::exception& e) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

template <typename T>
void save_jsonl(const std::string& path, std::span<const T> items) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write " + path);
    for (const auto& item : items) out << to_json(item).dump() << '\n';
}

} // namespace detail

inline std::vector<Document> load_documents(const std::string& path) {
    auto docs = detail::load_jsonl<Document>(path, document_from_json);
    std::unordered_set<std::string> ids;
    for (const auto& d : docs)
        if (!ids.insert(d.id).second) throw DuplicateId("document id '" + d.id + "'");
    return docs;
}

inline void save_documents(const std::string& path, std::span<const Document> docs) {
    detail::save_jsonl(path, docs);
}

inline std::vector<Chunk> load_chunks(const std::string& path) {
    return detail::load_jsonl<Chunk>(path, chunk_from_json);
}

inline void save_chunks(const std::string& path, std::span<const Chunk> chunks) {
    detail::save_jsonl(path, chunks);
}

/// Loads QA items and validates every gold id against the known chunk ids.
inline std::vector<QAItem> load_qa_dataset(const std::string& path,
                                           const std::unordered_set<std::string>& chunk_ids) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::vector<QAItem> out;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        QAItem q;
        try {
            q = qa_from_json(json::parse(line));
        } catch (const Error&) {
            throw;
        } catch (const std::exception& e) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (q.id.empty() || !seen.insert(q.id).second)
            throw ParseError(path + ":" + std::to_string(lineno) + ": missing or duplicate qa id");
        if (q.gold_chunk_ids.empty())
            throw ParseError(path + ":" + std::to_string(lineno) + ": empty gold_chunk_ids");
        for (const auto& gid : q.gold_chunk_ids)
            if (!chunk_ids.contains(gid))
                throw DanglingGoldChunk("qa '" + q.id + "' references unknown chunk '" + gid + "'");
        out.push_back(std::move(q));
    }
    return out;
}

inline void save_qa_dataset(const std::string& path, std::span<const QAItem> items) {
    detail::save_jsonl(path, items);
}

// ---------------------------------------------------------------------------
// Synthetic fixture corpus

struct SyntheticCorpus {
    std::vector<Document> documents;
    std::vector<QAItem> qa;
};

namespace detail {

inline std::string synth_word(Rng& rng) {
    static const char* syllables[] = {"ka", "ve", "tor", "mi", "sul", "ran", "pe",  "lo",
                                      "da", "zen", "bu",  "ir", "ya",  "tu",  "sek", "ol",
                                      "mar", "is", "ne",  "gu", "cev", "kim", "bal", "der"};
    std::size_t n = 2 + uniform_index(rng, 3);
    std::string w;
    for (std::size_t i = 0; i < n; ++i) w += syllables[uniform_index(rng, std::size(syllables))];
    return w;
}

inline std::string synth_sentence(Rng& rng, std::size_t words) {
    std::string s;
    for (std::size_t i = 0; i < words; ++i) {
        auto w = synth_word(rng);
        if (i == 0) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
        if (!s.empty()) s += ' ';
        s += w;
    }
    return s + ".";
}

inline std::string synth_paragraph(Rng& rng) {
    std::size_t sentences = 3 + uniform_index(rng, 5);
    std::string p;
    for (std::size_t i = 0; i < sentences; ++i) {
        if (!p.empty()) p += ' ';
        p += synth_sentence(rng, 6 + uniform_index(rng, 9));
    }
    return p;
}

} // namespace detail

/// Deterministic offline benchmark stand-in: multi-section markdown documents
/// with one planted fact sentence per question. The reference answer is the
/// fact sentence verbatim, and the gold chunk is wherever the default
/// chunking (limit 1000) placed it. Question and fact share two tokens that
/// occur nowhere else in the corpus, so dense retrieval can find the gold
/// chunk and the extractive mock answerer can quote the fact.
inline SyntheticCorpus generate_synthetic_corpus(std::uint64_t seed, std::size_t n_docs,
                                                 std::size_t questions_per_doc) {
    Rng rng(seed);
    SyntheticCorpus out;
    for (std::size_t d = 0; d < n_docs; ++d) {
        Document doc;
        doc.id = "syn-" + std::to_string(d);
        doc.source = (d % 2 == 0) ? Source::web : Source::wikipedia;
        {
            auto t1 = detail::synth_word(rng);
            t1[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(t1[0])));
            doc.title = t1 + " " + detail::synth_word(rng);
        }
        doc.topic = detail::synth_word(rng);

        struct Fact {
            std::string sentence, question;
        };
        std::vector<Fact> facts;
        for (std::size_t q = 0; q < questions_per_doc; ++q) {
            std::string entity =
                detail::synth_word(rng) + std::to_string(d) + "x" + std::to_string(q);
            std::string value = "deger" + std::to_string(rng() % 100000) + "v";
            std::string lead = detail::synth_word(rng);
            lead[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(lead[0])));
            std::string rel = detail::synth_word(rng);
            Fact f;
            f.sentence = lead + " " + entity + " " + rel + " " + value + " tanimlanmistir.";
            f.question = lead + " " + entity + " " + rel + " nedir?";
            facts.push_back(std::move(f));
        }

        std::size_t n_sections = 2 + uniform_index(rng, 3);
        std::vector<std::string> paragraphs;
        std::string body;
        if (uniform_index(rng, 2) == 0) body += detail::synth_paragraph(rng) + "\n\n";
        std::size_t fact_idx = 0;
        for (std::size_t s = 0; s < n_sections; ++s) {
            auto heading = detail::synth_word(rng) + " " + detail::synth_word(rng);
            body += "# " + heading + "\n\n";
            std::size_t paras = 1 + uniform_index(rng, 3);
            for (std::size_t p = 0; p < paras; ++p) body += detail::synth_paragraph(rng) + "\n\n";
            // spread facts across sections, remainder into the last section
            while (fact_idx < facts.size() &&
                   (s + 1 == n_sections || fact_idx * n_sections < (s + 1) * facts.size())) {
                body += facts[fact_idx].sentence + "\n\n";
                ++fact_idx;
            }
        }
        doc.body = body;

        auto chunks = chunk_document(doc);
        for (std::size_t q = 0; q < facts.size(); ++q) {
            QAItem item;
            item.id = doc.id + "-q" + std::to_string(q);
            item.question = facts[q].question;
            item.reference_answer = facts[q].sentence;
            item.qtype = (q % 2 == 0) ? QAItem::QType::factual : QAItem::QType::interpretation;
            for (const auto& c : chunks)
                if (c.text.find(facts[q].sentence) != std::string::npos)
                    item.gold_chunk_ids.push_back(c.id);
            if (item.gold_chunk_ids.empty())
                throw EmptyGold("synthetic fact for '" + item.id + "' not found in any chunk");
            out.qa.push_back(std::move(item));
        }
        out.documents.push_back(std::move(doc));
    }
    return out;
}

} // namespace ragforge
