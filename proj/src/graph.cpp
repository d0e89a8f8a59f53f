#include "amr/graph.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <sstream>

namespace amr {

bool AmrGraph::reaches(int src, int dst) const {
    if (src == dst) return true;
    std::vector<int> stack{src};
    std::vector<char> seen(nodes.size(), 0);
    seen[src] = 1;
    while (!stack.empty()) {
        int cur = stack.back();
        stack.pop_back();
        for (const Edge& e : edges) {
            if (e.src != cur || seen[e.dst]) continue;
            if (e.dst == dst) return true;
            seen[e.dst] = 1;
            stack.push_back(e.dst);
        }
    }
    return false;
}

bool AmrGraph::connected_from_root() const {
    if (root < 0) return nodes.empty();
    std::vector<char> seen(nodes.size(), 0);
    std::vector<int> stack{root};
    seen[root] = 1;
    size_t count = 1;
    while (!stack.empty()) {
        int cur = stack.back();
        stack.pop_back();
        for (const Edge& e : edges)
            if (e.src == cur && !seen[e.dst]) {
                seen[e.dst] = 1;
                ++count;
                stack.push_back(e.dst);
            }
    }
    return count == nodes.size();
}

std::string AmrGraph::fresh_var(const std::string& concept_name) const {
    char c = concept_name.empty() ? 'x' : concept_name[0];
    if (!std::isalpha(static_cast<unsigned char>(c))) c = 'x';
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    std::string base(1, c);
    if (find_var(base) < 0) return base;
    for (int i = 2;; ++i) {
        std::string cand = base + std::to_string(i);
        if (find_var(cand) < 0) return cand;
    }
}

// ---------------------------------------------------------------------------
// PENMAN parsing

namespace {

struct Token {
    enum Kind { LParen, RParen, Slash, Role, Atom, Str } kind;
    std::string text;
    size_t offset;
};

bool is_atom_char(char c) {
    return !std::isspace(static_cast<unsigned char>(c)) && c != '(' && c != ')' && c != '/';
}

std::vector<Token> lex(const std::string& text) {
    std::vector<Token> toks;
    size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
        } else if (c == '(') {
            toks.push_back({Token::LParen, "(", i++});
        } else if (c == ')') {
            toks.push_back({Token::RParen, ")", i++});
        } else if (c == '/') {
            toks.push_back({Token::Slash, "/", i++});
        } else if (c == '"') {
            size_t start = i++;
            std::string s;
            while (i < text.size() && text[i] != '"') {
                if (text[i] == '\\' && i + 1 < text.size()) ++i;
                s += text[i++];
            }
            if (i >= text.size())
                throw ParseError(ParseErrorKind::BadToken, start, "unterminated string literal");
            ++i;  // closing quote
            toks.push_back({Token::Str, s, start});
        } else if (c == ':') {
            size_t start = i++;
            std::string s;
            while (i < text.size() && is_atom_char(text[i])) s += text[i++];
            if (s.empty())
                throw ParseError(ParseErrorKind::BadToken, start, "empty role label");
            toks.push_back({Token::Role, s, start});
        } else {
            size_t start = i;
            std::string s;
            while (i < text.size() && is_atom_char(text[i]) && text[i] != ':') s += text[i++];
            toks.push_back({Token::Atom, s, start});
        }
    }
    return toks;
}

struct Parser {
    const std::vector<Token>& toks;
    size_t pos = 0;
    AmrGraph g;
    std::set<std::string> declared;  // vars declared anywhere ("( v /" patterns)
    // edges created for forward/backward variable references, patched at the
    // end; the edge slot is reserved immediately so declaration order holds
    std::vector<std::tuple<size_t, std::string, size_t>> var_refs;  // (edge idx, var, offset)
    std::vector<size_t> node_offsets;

    explicit Parser(const std::vector<Token>& t) : toks(t) {
        for (size_t i = 0; i + 2 < toks.size(); ++i)
            if (toks[i].kind == Token::LParen && toks[i + 1].kind == Token::Atom &&
                toks[i + 2].kind == Token::Slash)
                declared.insert(toks[i + 1].text);
    }

    const Token& peek() const {
        if (pos >= toks.size())
            throw ParseError(ParseErrorKind::UnbalancedParens,
                             toks.empty() ? 0 : toks.back().offset, "unexpected end of input");
        return toks[pos];
    }
    Token take() {
        Token t = peek();
        ++pos;
        return t;
    }
    Token expect(Token::Kind k, const char* what) {
        const Token& t = peek();
        if (t.kind != k) {
            ParseErrorKind kind = (k == Token::LParen || k == Token::RParen)
                                      ? ParseErrorKind::UnbalancedParens
                                      : ParseErrorKind::BadToken;
            throw ParseError(kind, t.offset, std::string("expected ") + what);
        }
        return take();
    }

    int parse_node() {
        expect(Token::LParen, "'('");
        Token var = expect(Token::Atom, "variable name");
        if (g.find_var(var.text) >= 0)
            throw ParseError(ParseErrorKind::DuplicateVariable, var.offset,
                             "variable '" + var.text + "' declared twice");
        expect(Token::Slash, "'/'");
        Token concept_name = peek();
        if (concept_name.kind != Token::Atom && concept_name.kind != Token::Str)
            throw ParseError(ParseErrorKind::BadToken, concept_name.offset, "expected concept");
        take();
        int id = g.add_node(var.text, concept_name.text);
        node_offsets.push_back(var.offset);

        while (peek().kind == Token::Role) {
            Token role = take();
            const Token& t = peek();
            if (t.kind == Token::LParen) {
                int child = parse_node();
                g.add_edge(id, role.text, child);
            } else if (t.kind == Token::Str) {
                take();
                g.add_attr(id, role.text, t.text);
            } else if (t.kind == Token::Atom) {
                take();
                if (declared.count(t.text)) {
                    g.edges.push_back({id, role.text, -1});
                    var_refs.emplace_back(g.edges.size() - 1, t.text, t.offset);
                } else {
                    g.add_attr(id, role.text, t.text);
                }
            } else {
                throw ParseError(ParseErrorKind::BadToken, t.offset, "expected role target");
            }
        }
        expect(Token::RParen, "')'");
        return id;
    }

    AmrGraph run() {
        g.root = parse_node();
        if (pos != toks.size())
            throw ParseError(ParseErrorKind::UnbalancedParens, toks[pos].offset,
                             "trailing input after graph");
        for (const auto& [edge_idx, var, off] : var_refs) {
            int dst = g.find_var(var);
            if (dst < 0)
                throw ParseError(ParseErrorKind::DanglingReference, off,
                                 "reference to undeclared variable '" + var + "'");
            g.edges[edge_idx].dst = dst;
        }
        // cycle check: DFS coloring over the finished edge set
        std::vector<int> color(g.nodes.size(), 0);
        std::function<void(int)> dfs = [&](int n) {
            color[n] = 1;
            for (const AmrGraph::Edge& e : g.edges) {
                if (e.src != n) continue;
                if (color[e.dst] == 1)
                    throw ParseError(ParseErrorKind::CyclicGraph, node_offsets[e.dst],
                                     "directed cycle through variable '" + g.nodes[e.dst].var + "'");
                if (color[e.dst] == 0) dfs(e.dst);
            }
            color[n] = 2;
        };
        for (size_t n = 0; n < g.nodes.size(); ++n)
            if (color[n] == 0) dfs(static_cast<int>(n));
        return std::move(g);
    }
};

}  // namespace

AmrGraph parse_penman(const std::string& text) {
    std::vector<Token> toks = lex(text);
    if (toks.empty()) throw ParseError(ParseErrorKind::BadToken, 0, "empty input");
    return Parser(toks).run();
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

bool needs_quotes(const AmrGraph& g, const std::string& v) {
    if (v.empty()) return true;
    for (char c : v)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '+' && c != '-')
            return true;
    return g.find_var(v) >= 0;  // a bare constant must not shadow a variable
}

std::string quoted(const std::string& v) {
    std::string out = "\"";
    for (char c : v) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    out += '"';
    return out;
}

void write_node(const AmrGraph& g, int n, std::set<int>& emitted, std::string& out, int depth,
                bool indent) {
    out += "(" + g.nodes[n].var + " / " + g.nodes[n].concept_name;
    emitted.insert(n);

    std::vector<const AmrGraph::Attr*> attrs;
    for (const AmrGraph::Attr& a : g.attrs)
        if (a.node == n) attrs.push_back(&a);
    std::stable_sort(attrs.begin(), attrs.end(), [](const auto* a, const auto* b) {
        return std::tie(a->role, a->value) < std::tie(b->role, b->value);
    });

    std::vector<const AmrGraph::Edge*> out_e;
    for (const AmrGraph::Edge& e : g.edges)
        if (e.src == n) out_e.push_back(&e);
    std::stable_sort(out_e.begin(), out_e.end(), [&](const auto* a, const auto* b) {
        return std::tie(a->role, g.nodes[a->dst].var) < std::tie(b->role, g.nodes[b->dst].var);
    });

    auto newline = [&](int d) {
        if (indent) {
            out += "\n";
            out.append(static_cast<size_t>(d) * 4, ' ');
        } else {
            out += " ";
        }
    };

    for (const AmrGraph::Attr* a : attrs) {
        newline(depth + 1);
        out += ":" + a->role + " " + (needs_quotes(g, a->value) ? quoted(a->value) : a->value);
    }
    for (const AmrGraph::Edge* e : out_e) {
        newline(depth + 1);
        out += ":" + e->role + " ";
        if (emitted.count(e->dst))
            out += g.nodes[e->dst].var;
        else
            write_node(g, e->dst, emitted, out, depth + 1, indent);
    }
    out += ")";
}

}  // namespace

std::string serialize_penman(const AmrGraph& g, bool indent) {
    if (g.root < 0 || g.nodes.empty()) return "(a / amr-empty)";
    std::set<int> emitted;
    std::string out;
    write_node(g, g.root, emitted, out, 0, indent);
    return out;
}

TripleSet to_triples(const AmrGraph& g) {
    TripleSet t;
    for (const AmrGraph::Node& n : g.nodes) t.instances.emplace_back(n.var, n.concept_name);
    for (const AmrGraph::Edge& e : g.edges)
        t.relations.emplace_back(g.nodes[e.src].var, e.role, g.nodes[e.dst].var);
    for (const AmrGraph::Attr& a : g.attrs)
        t.attributes.emplace_back(g.nodes[a.node].var, a.role, a.value);
    if (g.root >= 0)
        t.attributes.emplace_back(g.nodes[g.root].var, "TOP", g.nodes[g.root].concept_name);
    return t;
}

// ---------------------------------------------------------------------------

namespace {

bool try_extend(const AmrGraph& a, const AmrGraph& b, std::vector<int>& map,
                std::vector<char>& used, size_t i) {
    if (i == a.nodes.size()) {
        for (const AmrGraph::Edge& e : a.edges) {
            bool found = false;
            for (const AmrGraph::Edge& f : b.edges)
                if (f.src == map[e.src] && f.dst == map[e.dst] && f.role == e.role) {
                    found = true;
                    break;
                }
            if (!found) return false;
        }
        for (const AmrGraph::Attr& x : a.attrs) {
            bool found = false;
            for (const AmrGraph::Attr& y : b.attrs)
                if (y.node == map[x.node] && y.role == x.role && y.value == x.value) {
                    found = true;
                    break;
                }
            if (!found) return false;
        }
        return map[a.root] == b.root;
    }
    for (size_t j = 0; j < b.nodes.size(); ++j) {
        if (used[j] || b.nodes[j].concept_name != a.nodes[i].concept_name) continue;
        map[i] = static_cast<int>(j);
        used[j] = 1;
        if (try_extend(a, b, map, used, i + 1)) return true;
        used[j] = 0;
    }
    return false;
}

}  // namespace

bool isomorphic(const AmrGraph& a, const AmrGraph& b) {
    if (a.nodes.size() != b.nodes.size() || a.edges.size() != b.edges.size() ||
        a.attrs.size() != b.attrs.size())
        return false;
    if (a.nodes.empty()) return true;
    std::vector<int> map(a.nodes.size(), -1);
    std::vector<char> used(b.nodes.size(), 0);
    return try_extend(a, b, map, used, 0);
}

AmrGraph ensure_connected(const AmrGraph& g) {
    if (g.nodes.empty() || g.connected_from_root()) return g;
    AmrGraph out = g;
    std::vector<char> seen(out.nodes.size(), 0);
    auto mark = [&](int start) {
        std::vector<int> stack{start};
        seen[start] = 1;
        while (!stack.empty()) {
            int cur = stack.back();
            stack.pop_back();
            for (const AmrGraph::Edge& e : out.edges)
                if (e.src == cur && !seen[e.dst]) {
                    seen[e.dst] = 1;
                    stack.push_back(e.dst);
                }
        }
    };
    int super = out.add_node(out.fresh_var("multi-sentence"), "multi-sentence");
    seen.push_back(1);
    int snt = 1;
    out.add_edge(super, "snt" + std::to_string(snt++), out.root);
    mark(out.root);
    // attach remaining components by their in-degree-0 entry points, then any leftovers
    for (int pass = 0; pass < 2; ++pass) {
        for (size_t n = 0; n < out.nodes.size(); ++n) {
            if (seen[n]) continue;
            if (pass == 0 && out.in_degree(static_cast<int>(n)) > 0) continue;
            out.add_edge(super, "snt" + std::to_string(snt++), static_cast<int>(n));
            mark(static_cast<int>(n));
        }
    }
    out.root = super;
    return out;
}

// ---------------------------------------------------------------------------
// Corpus IO

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string w;
    while (in >> w) out.push_back(w);
    return out;
}

std::vector<std::string> CorpusEntry::tokens() const {
    if (const std::string* tok = meta_value("tok")) return split_ws(*tok);
    if (const std::string* snt = meta_value("snt")) return split_ws(*snt);
    return {};
}

std::vector<CorpusEntry> parse_corpus(const std::string& text, const std::string& origin) {
    std::vector<CorpusEntry> corpus;
    std::istringstream in(text);
    std::string line;
    CorpusEntry cur;
    std::string graph_text;
    size_t lineno = 0, block_start = 1;

    auto flush = [&]() {
        bool has_graph = graph_text.find_first_not_of(" \t\r\n") != std::string::npos;
        if (!has_graph && cur.meta.empty()) return;
        if (has_graph) {
            try {
                cur.graph = parse_penman(graph_text);
            } catch (const ParseError& e) {
                throw std::runtime_error(origin + ":" + std::to_string(block_start) + ": " +
                                         e.what());
            }
        }
        corpus.push_back(std::move(cur));
        cur = CorpusEntry();
        graph_text.clear();
    };

    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) {
            flush();
            block_start = lineno + 1;
            continue;
        }
        if (line.rfind("# ::", 0) == 0) {
            std::string rest = line.substr(4);
            size_t sp = rest.find_first_of(" \t");
            if (sp == std::string::npos)
                cur.meta.emplace_back(rest, "");
            else
                cur.meta.emplace_back(rest.substr(0, sp), rest.substr(sp + 1));
            continue;
        }
        if (line[0] == '#') continue;  // plain comment
        graph_text += line;
        graph_text += "\n";
    }
    flush();
    return corpus;
}

std::vector<CorpusEntry> read_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open corpus file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_corpus(ss.str(), path);
}

std::string format_corpus(const std::vector<CorpusEntry>& corpus) {
    std::string out;
    for (const CorpusEntry& e : corpus) {
        for (const auto& [k, v] : e.meta) {
            out += "# ::" + k;
            if (!v.empty()) out += " " + v;
            out += "\n";
        }
        if (!e.graph.empty()) {
            out += serialize_penman(e.graph);
            out += "\n";
        }
        out += "\n";
    }
    return out;
}

void atomic_write_text(const std::string& path, const std::string& content) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw std::runtime_error("cannot write file: " + tmp);
        out << content;
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("cannot rename " + tmp + " to " + path);
}

void write_corpus(const std::vector<CorpusEntry>& corpus, const std::string& path) {
    atomic_write_text(path, format_corpus(corpus));
}

}  // namespace amr
