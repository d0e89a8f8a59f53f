#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace amr {

// Rooted labeled directed graph with variables, concepts, role edges and
// constant-valued attributes. Directed cycles are rejected at parse time;
// reentrancies (several edges into one node) are allowed.
struct AmrGraph {
    struct Node {
        std::string var;
        std::string concept_name;
    };
    struct Edge {
        int src = -1;
        std::string role;  // without the leading ':'
        int dst = -1;
    };
    struct Attr {
        int node = -1;
        std::string role;
        std::string value;  // unquoted
    };

    std::vector<Node> nodes;
    std::vector<Edge> edges;
    std::vector<Attr> attrs;
    int root = -1;

    bool empty() const { return nodes.empty(); }

    int find_var(const std::string& var) const {
        for (size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i].var == var) return static_cast<int>(i);
        return -1;
    }

    int add_node(const std::string& var, const std::string& concept_name) {
        nodes.push_back({var, concept_name});
        return static_cast<int>(nodes.size()) - 1;
    }

    // no-op on exact duplicates so repeated arc actions cannot corrupt the graph
    void add_edge(int src, const std::string& role, int dst) {
        for (const Edge& e : edges)
            if (e.src == src && e.dst == dst && e.role == role) return;
        edges.push_back({src, role, dst});
    }

    void add_attr(int node, const std::string& role, const std::string& value) {
        attrs.push_back({node, role, value});
    }

    std::vector<int> out_edges(int node) const {
        std::vector<int> out;
        for (size_t i = 0; i < edges.size(); ++i)
            if (edges[i].src == node) out.push_back(static_cast<int>(i));
        return out;
    }

    int in_degree(int node) const {
        int d = 0;
        for (const Edge& e : edges) d += (e.dst == node);
        return d;
    }

    // true when dst is reachable from src following edge direction
    bool reaches(int src, int dst) const;

    // every node reachable from root following edge direction
    bool connected_from_root() const;

    // fresh variable name starting with the concept_name's first letter
    std::string fresh_var(const std::string& concept_name) const;
};

// Canonical triple form consumed by the scorer. TOP is encoded as one extra
// attribute triple (root-var, "TOP", root-concept_name).
struct TripleSet {
    std::vector<std::pair<std::string, std::string>> instances;            // (var, concept_name)
    std::vector<std::tuple<std::string, std::string, std::string>> relations;   // (src, role, dst)
    std::vector<std::tuple<std::string, std::string, std::string>> attributes;  // (var, role, value)

    size_t size() const { return instances.size() + relations.size() + attributes.size(); }
};

enum class ParseErrorKind {
    UnbalancedParens,
    DuplicateVariable,
    DanglingReference,
    CyclicGraph,
    BadToken,
};

struct ParseError : std::runtime_error {
    ParseError(ParseErrorKind k, size_t off, const std::string& msg)
        : std::runtime_error(msg), kind(k), offset(off) {}
    ParseErrorKind kind;
    size_t offset;  // byte offset into the input text
};

AmrGraph parse_penman(const std::string& text);
std::string serialize_penman(const AmrGraph& g, bool indent = true);

TripleSet to_triples(const AmrGraph& g);

// True when a and b are identical up to a bijective variable renaming.
// Exponential in the worst case; intended for tests and small graphs.
bool isomorphic(const AmrGraph& a, const AmrGraph& b);

// Wraps disconnected pieces under a multi-sentence root so the graph can be
// serialized. Returns the input unchanged when already connected.
AmrGraph ensure_connected(const AmrGraph& g);

// ---------------------------------------------------------------------------
// Corpus files: blank-line-separated PENMAN blocks with "# ::key value"
// metadata lines.

struct CorpusEntry {
    std::vector<std::pair<std::string, std::string>> meta;  // order preserved
    AmrGraph graph;

    const std::string* meta_value(const std::string& key) const {
        for (const auto& [k, v] : meta)
            if (k == key) return &v;
        return nullptr;
    }
    void set_meta(const std::string& key, const std::string& value) {
        for (auto& [k, v] : meta)
            if (k == key) { v = value; return; }
        meta.emplace_back(key, value);
    }
    // from "::tok" if present, else whitespace-split "::snt"
    std::vector<std::string> tokens() const;
};

std::vector<CorpusEntry> read_corpus(const std::string& path);
std::vector<CorpusEntry> parse_corpus(const std::string& text, const std::string& origin = "<string>");
void write_corpus(const std::vector<CorpusEntry>& corpus, const std::string& path);
std::string format_corpus(const std::vector<CorpusEntry>& corpus);

std::vector<std::string> split_ws(const std::string& s);

// temp file + rename
void atomic_write_text(const std::string& path, const std::string& content);

}  // namespace amr
