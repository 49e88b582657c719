#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ragforge/corpus.hpp"
#include "ragforge/errors.hpp"
#include "ragforge/providers.hpp"

namespace ragforge {

struct ScoredChunk {
    std::string chunk_id;
    double score = 0.0;

    friend bool operator==(const ScoredChunk&, const ScoredChunk&) = default;
};

// Ranked retrieval list; scores non-increasing, chunk ids distinct.
struct RankedList {
    std::string query_id;
    std::vector<ScoredChunk> items;

    friend bool operator==(const RankedList&, const RankedList&) = default;
};

struct Neighbors {
    std::string prev; // empty when none
    std::string next;
};

namespace detail {

inline void write_u16(std::ostream& os, std::uint16_t v) {
    char b[2] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF)};
    os.write(b, 2);
}
inline void write_u32(std::ostream& os, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    os.write(b, 4);
}
inline void write_u64(std::ostream& os, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    os.write(b, 8);
}
inline void write_f32(std::ostream& os, float v) { write_u32(os, std::bit_cast<std::uint32_t>(v)); }

class ByteReader {
  public:
    ByteReader(std::istream& in, const std::string& path) : in_(in), path_(path) {}

    std::size_t offset() const { return offset_; }

    void read(char* dst, std::size_t n) {
        in_.read(dst, static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n)
            throw FormatError(path_ + ": truncated at offset " + std::to_string(offset_));
        offset_ += n;
    }
    std::uint16_t u16() {
        unsigned char b[2];
        read(reinterpret_cast<char*>(b), 2);
        return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
    }
    std::uint32_t u32() {
        unsigned char b[4];
        read(reinterpret_cast<char*>(b), 4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }
    std::uint64_t u64() {
        unsigned char b[8];
        read(reinterpret_cast<char*>(b), 8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::string str(std::size_t n) {
        std::string s(n, '\0');
        if (n) read(s.data(), n);
        return s;
    }

  private:
    std::istream& in_;
    std::string path_;
    std::size_t offset_ = 0;
};

} // namespace detail

/// Exact cosine top-k search over chunk embeddings. The corpus scale keeps a
/// flat scan both fast enough and noise-free for metric evaluation.
class VectorIndex {
  public:
    struct Entry {
        std::string id;
        Embedding vec;
    };

    static constexpr char kMagic[4] = {'R', 'G', 'I', 'X'};
    static constexpr std::uint32_t kVersion = 1;

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return entries_.size(); }
    const std::vector<Entry>& entries() const { return entries_; }

    const Embedding* vector_of(const std::string& chunk_id) const {
        auto it = by_id_.find(chunk_id);
        return it == by_id_.end() ? nullptr : &entries_[it->second].vec;
    }

    const Neighbors* neighbors(const std::string& chunk_id) const {
        auto it = adjacency_.find(chunk_id);
        return it == adjacency_.end() ? nullptr : &it->second;
    }

    /// One entry per chunk; adjacency derived from (doc_id, ordinal).
    static VectorIndex build(std::span<const Chunk> chunks, const Embedder& embedder,
                             TokenUsage* usage = nullptr) {
        if (chunks.empty()) throw EmptyCorpus("cannot index an empty chunk list");
        VectorIndex idx;
        idx.dim_ = embedder.dim();
        for (const auto& c : chunks) {
            if (idx.by_id_.contains(c.id)) throw DuplicateId("chunk id '" + c.id + "'");
            auto r = embedder.embed(c.text);
            if (usage) *usage += r.usage;
            if (idx.dim_ == 0) idx.dim_ = r.embedding.dim();
            if (r.embedding.dim() != idx.dim_)
                throw DimensionMismatch("embedding dim " + std::to_string(r.embedding.dim()) +
                                        " != index dim " + std::to_string(idx.dim_));
            idx.by_id_[c.id] = idx.entries_.size();
            idx.entries_.push_back({c.id, std::move(r.embedding)});
        }
        // adjacency by document ordinal
        std::map<std::string, std::map<std::size_t, std::string>> per_doc;
        for (const auto& c : chunks) per_doc[c.doc_id][c.ordinal] = c.id;
        for (const auto& [doc, ords] : per_doc) {
            for (auto it = ords.begin(); it != ords.end(); ++it) {
                Neighbors n;
                if (it != ords.begin()) n.prev = std::prev(it)->second;
                if (std::next(it) != ords.end()) n.next = std::next(it)->second;
                idx.adjacency_[it->second] = std::move(n);
            }
        }
        return idx;
    }

    /// Exact top-k by cosine similarity; ties broken by ascending chunk id.
    /// k larger than the index returns everything.
    RankedList search(const Embedding& query, std::size_t k) const {
        if (query.dim() != dim_)
            throw DimensionMismatch("query dim " + std::to_string(query.dim()) + " != index dim " +
                                    std::to_string(dim_));
        std::vector<std::pair<double, const std::string*>> scored;
        scored.reserve(entries_.size());
        for (const auto& e : entries_) scored.emplace_back(cosine(query, e.vec), &e.id);
        auto cmp = [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return *a.second < *b.second;
        };
        std::size_t take = std::min(k, scored.size());
        std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                          scored.end(), cmp);
        RankedList out;
        out.items.reserve(take);
        for (std::size_t i = 0; i < take; ++i) out.items.push_back({*scored[i].second, scored[i].first});
        return out;
    }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw FormatError("cannot write " + path);
        out.write(kMagic, 4);
        detail::write_u32(out, kVersion);
        detail::write_u32(out, static_cast<std::uint32_t>(dim_));
        detail::write_u64(out, entries_.size());
        for (const auto& e : entries_) {
            detail::write_u16(out, static_cast<std::uint16_t>(e.id.size()));
            out.write(e.id.data(), static_cast<std::streamsize>(e.id.size()));
            for (float v : e.vec.values) detail::write_f32(out, v);
        }
        auto write_opt = [&](const std::string& s) {
            detail::write_u16(out, static_cast<std::uint16_t>(s.size()));
            out.write(s.data(), static_cast<std::streamsize>(s.size()));
        };
        for (const auto& e : entries_) {
            static const Neighbors none;
            auto it = adjacency_.find(e.id);
            const Neighbors& n = it == adjacency_.end() ? none : it->second;
            write_opt(n.prev);
            write_opt(n.next);
        }
        if (!out) throw FormatError("write failed for " + path);
    }

    static VectorIndex load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw FormatError("cannot open " + path);
        detail::ByteReader r(in, path);
        char magic[4];
        r.read(magic, 4);
        if (std::memcmp(magic, kMagic, 4) != 0)
            throw FormatError(path + ": bad magic at offset 0");
        auto version = r.u32();
        if (version != kVersion)
            throw VersionMismatch(path + ": version " + std::to_string(version) + ", expected " +
                                  std::to_string(kVersion));
        VectorIndex idx;
        idx.dim_ = r.u32();
        if (idx.dim_ == 0) throw FormatError(path + ": zero dimension at offset 8");
        auto count = r.u64();
        idx.entries_.reserve(count);
        for (std::uint64_t i = 0; i < count; ++i) {
            auto off = r.offset();
            Entry e;
            e.id = r.str(r.u16());
            if (e.id.empty()) throw FormatError(path + ": empty id at offset " + std::to_string(off));
            e.vec.values.resize(idx.dim_);
            for (auto& v : e.vec.values) v = r.f32();
            if (idx.by_id_.contains(e.id))
                throw FormatError(path + ": duplicate id at offset " + std::to_string(off));
            idx.by_id_[e.id] = idx.entries_.size();
            idx.entries_.push_back(std::move(e));
        }
        for (std::uint64_t i = 0; i < count; ++i) {
            auto off = r.offset();
            Neighbors n;
            n.prev = r.str(r.u16());
            n.next = r.str(r.u16());
            for (const auto* s : {&n.prev, &n.next})
                if (!s->empty() && !idx.by_id_.contains(*s))
                    throw FormatError(path + ": adjacency references unknown id at offset " +
                                      std::to_string(off));
            idx.adjacency_[idx.entries_[i].id] = std::move(n);
        }
        return idx;
    }

  private:
    std::size_t dim_ = 0;
    std::vector<Entry> entries_;
    std::unordered_map<std::string, std::size_t> by_id_;
    std::unordered_map<std::string, Neighbors> adjacency_;
};

inline VectorIndex build_index(std::span<const Chunk> chunks, const Embedder& embedder,
                               TokenUsage* usage = nullptr) {
    return VectorIndex::build(chunks, embedder, usage);
}

} // namespace ragforge
