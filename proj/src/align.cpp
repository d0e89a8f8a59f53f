#include "amr/align.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace amr {

namespace {

std::vector<int> child_edges(const AmrGraph& g, int node) { return g.out_edges(node); }

bool parse_int(const std::string& s, int& out) {
    if (s.empty()) return false;
    out = 0;
    for (char c : s) {
        if (c < '0' || c > '9') return false;
        out = out * 10 + (c - '0');
    }
    return true;
}

}  // namespace

int resolve_node_path(const AmrGraph& g, const std::string& path, int base) {
    std::vector<int> parts;
    std::string piece;
    std::istringstream in(path);
    while (std::getline(in, piece, '.')) {
        int v;
        if (!parse_int(piece, v)) return -1;
        parts.push_back(v);
    }
    if (parts.empty() || parts[0] != base) return -1;
    int cur = g.root;
    if (cur < 0) return -1;
    for (size_t i = 1; i < parts.size(); ++i) {
        int idx = parts[i] - base;
        std::vector<int> kids = child_edges(g, cur);
        if (idx < 0 || idx >= static_cast<int>(kids.size())) return -1;
        cur = g.edges[kids[idx]].dst;
    }
    return cur;
}

AlignmentMap read_isi_alignments(const std::string& text, const AmrGraph& graph, int line_base) {
    AlignmentMap map;
    std::istringstream in(text);
    std::string line;
    int lineno = line_base - 1;
    while (std::getline(in, line)) {
        ++lineno;
        for (const std::string& item : split_ws(line)) {
            size_t dash = item.find('-');
            if (dash == std::string::npos || dash == 0)
                throw AlignError("BadSpan", lineno, "malformed ISI item '" + item + "'");
            int tok;
            if (!parse_int(item.substr(0, dash), tok))
                throw AlignError("BadSpan", lineno, "bad token index in '" + item + "'");
            std::string path = item.substr(dash + 1);
            // ISI addresses roles as "1.2.r"; only node alignments are kept
            if (!path.empty() && !std::isdigit(static_cast<unsigned char>(path.back()))) continue;
            int node = resolve_node_path(graph, path, 1);
            if (node < 0)
                throw AlignError("BadPath", lineno, "no node at path '" + path + "'");
            // multiword spans arrive as one pair per token; union them
            auto it = map.entries.find(node);
            if (it == map.entries.end()) {
                map.entries[node] = {{tok, tok}, AlignSource::SEM};
            } else {
                it->second.span.start = std::min(it->second.span.start, tok);
                it->second.span.end = std::max(it->second.span.end, tok);
            }
        }
    }
    return map;
}

AlignmentMap read_jamr_alignments(const std::string& text, const AmrGraph& graph, int line_base) {
    AlignmentMap map;
    std::istringstream in(text);
    std::string line;
    int lineno = line_base - 1;
    while (std::getline(in, line)) {
        ++lineno;
        for (const std::string& item : split_ws(line)) {
            size_t bar = item.find('|');
            if (bar == std::string::npos)
                throw AlignError("BadSpan", lineno, "malformed JAMR item '" + item + "'");
            std::string span = item.substr(0, bar);
            size_t dash = span.find('-');
            int start = 0, end = 0;
            if (dash == std::string::npos || !parse_int(span.substr(0, dash), start) ||
                !parse_int(span.substr(dash + 1), end) || end <= start)
                throw AlignError("BadSpan", lineno, "bad span in '" + item + "'");
            std::string paths = item.substr(bar + 1);
            std::istringstream ps(paths);
            std::string path;
            while (std::getline(ps, path, '+')) {
                int node = resolve_node_path(graph, path, 0);
                if (node < 0)
                    throw AlignError("BadPath", lineno, "no node at path '" + path + "'");
                if (!map.aligned(node))
                    map.entries[node] = {{start, end - 1}, AlignSource::JAMR};
            }
        }
    }
    return map;
}

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Preference classes from the percolation rule: :name, :unit for quantity
// nodes, :ARG2 for have-org-role / rate-entity, then anything but :mod.
int role_class(const AmrGraph& g, int node, const std::string& role) {
    if (role == "name") return 0;
    if (role == "unit" && ends_with(g.nodes[node].concept_name, "-quantity")) return 1;
    if (role == "ARG2" &&
        (g.nodes[node].concept_name == "have-org-role" || g.nodes[node].concept_name == "rate-entity"))
        return 2;
    if (role != "mod") return 3;
    return -1;  // :mod never percolates
}

// children before parents, repeated until no node changes
bool percolate(const AmrGraph& g, AlignmentMap& map) {
    bool changed_any = false;
    bool changed = true;
    while (changed) {
        changed = false;
        for (int n = static_cast<int>(g.nodes.size()) - 1; n >= 0; --n) {
            if (map.aligned(n)) continue;
            int best_class = 4;
            Span best_span{};
            std::string best_role;
            bool found = false;
            for (int ei : g.out_edges(n)) {
                const AmrGraph::Edge& e = g.edges[ei];
                if (!map.aligned(e.dst)) continue;
                int cls = role_class(g, n, e.role);
                if (cls < 0) continue;
                Span s = map.entries.at(e.dst).span;
                bool better = false;
                if (cls < best_class)
                    better = true;
                else if (cls == best_class) {
                    if (s.start < best_span.start)
                        better = true;  // leftmost span wins within a class
                    else if (s.start == best_span.start && e.role < best_role)
                        better = true;
                }
                if (better) {
                    best_class = cls;
                    best_span = s;
                    best_role = e.role;
                    found = true;
                }
            }
            if (found) {
                map.entries[n] = {best_span, AlignSource::PERCOLATED};
                changed = changed_any = true;
            }
        }
    }
    return changed_any;
}

}  // namespace

AlignmentMap merge_alignments(const AmrGraph& graph, const AlignmentMap& sem,
                              const AlignmentMap& jamr, MergeTrace* trace) {
    const int n = static_cast<int>(graph.nodes.size());
    for (const auto& [node, e] : sem.entries)
        if (node < 0 || node >= n)
            throw AlignError("UnknownNode", 0, "SEM alignment for unknown node");
    for (const auto& [node, e] : jamr.entries)
        if (node < 0 || node >= n)
            throw AlignError("UnknownNode", 0, "JAMR alignment for unknown node");

    AlignmentMap out = sem;
    if (trace) trace->after_sem = out.size();
    percolate(graph, out);
    if (trace) trace->after_percolate = out.size();
    for (const auto& [node, e] : jamr.entries)
        if (!out.aligned(node)) out.entries[node] = {e.span, AlignSource::JAMR};
    if (trace) trace->after_jamr = out.size();
    percolate(graph, out);
    if (trace) trace->after_percolate2 = out.size();
    return out;
}

namespace {

void paths_from(const AmrGraph& g, int node, const std::string& prefix,
                std::vector<std::string>& out) {
    if (out[node].empty()) out[node] = prefix;
    std::vector<int> kids = g.out_edges(node);
    for (size_t i = 0; i < kids.size(); ++i) {
        int dst = g.edges[kids[i]].dst;
        if (out[dst].empty()) paths_from(g, dst, prefix + "." + std::to_string(i), out);
    }
}

}  // namespace

std::string format_alignments(const AmrGraph& graph, const AlignmentMap& map) {
    std::vector<std::string> paths(graph.nodes.size());
    if (graph.root >= 0) paths_from(graph, graph.root, "0", paths);
    std::vector<std::pair<std::string, int>> items;  // (path, node)
    for (const auto& [node, e] : map.entries)
        if (!paths[node].empty()) items.emplace_back(paths[node], node);
    std::sort(items.begin(), items.end());
    std::string out;
    for (const auto& [path, node] : items) {
        const Span s = map.entries.at(node).span;
        if (!out.empty()) out += " ";
        out += std::to_string(s.start) + "-" + std::to_string(s.end + 1) + "|" + path;
    }
    return out;
}

AlignmentMap parse_alignment_meta(const CorpusEntry& entry) {
    const std::string* payload = entry.meta_value("alignments");
    if (!payload) return {};
    return read_jamr_alignments(*payload, entry.graph);
}

}  // namespace amr
