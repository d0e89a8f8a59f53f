#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "amr/graph.hpp"

namespace amr {

enum class AlignSource { SEM, PERCOLATED, JAMR };

struct Span {
    int start = 0;  // word indices, inclusive
    int end = 0;
    bool operator==(const Span&) const = default;
};

// node index -> token span + provenance; at most one entry per node
struct AlignmentMap {
    struct Entry {
        Span span;
        AlignSource source = AlignSource::SEM;
    };
    std::map<int, Entry> entries;

    bool aligned(int node) const { return entries.count(node) > 0; }
    std::optional<Span> span(int node) const {
        auto it = entries.find(node);
        if (it == entries.end()) return std::nullopt;
        return it->second.span;
    }
    size_t size() const { return entries.size(); }
};

struct AlignError : std::runtime_error {
    AlignError(const std::string& kind, int line, const std::string& msg)
        : std::runtime_error(msg), kind(kind), line(line) {}
    std::string kind;  // BadPath | BadSpan | UnknownNode
    int line;
};

// Node addressing used by the aligner output formats: dot-separated child
// indices counting relation edges in PENMAN declaration order. ISI paths are
// 1-based with root = "1"; JAMR paths are 0-based with root = "0".
int resolve_node_path(const AmrGraph& g, const std::string& path, int base);

// ISI / SEM output: one line per sentence of space-separated "tokidx-nodepath"
// pairs (e.g. "2-1.1").
AlignmentMap read_isi_alignments(const std::string& text, const AmrGraph& graph,
                                 int line_base = 1);

// JAMR "# ::alignments" payload: space-separated "start-end|path[+path...]"
// items, token end exclusive.
AlignmentMap read_jamr_alignments(const std::string& text, const AmrGraph& graph,
                                  int line_base = 1);

// aligned-node counts after each merge step
struct MergeTrace {
    size_t after_sem = 0;
    size_t after_percolate = 0;
    size_t after_jamr = 0;
    size_t after_percolate2 = 0;
};

// SEM entries, percolation to fixpoint, JAMR backfill, second percolation.
// SEM entries are never overwritten.
AlignmentMap merge_alignments(const AmrGraph& graph, const AlignmentMap& sem,
                              const AlignmentMap& jamr, MergeTrace* trace = nullptr);

// "start-end|path" items for the merged map, JAMR span convention
std::string format_alignments(const AmrGraph& graph, const AlignmentMap& map);

// Reads a "::alignments" metadata payload produced by format_alignments (or
// real JAMR output) back into a map.
AlignmentMap parse_alignment_meta(const CorpusEntry& entry);

}  // namespace amr
