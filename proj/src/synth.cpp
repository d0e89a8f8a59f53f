#include "amr/synth.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <sstream>

#include "amr/rng.hpp"

namespace amr {

namespace {

const char* kNouns[] = {"boy", "girl", "dog", "cat", "apple", "house", "car", "book"};
const char* kVerbs[] = {"want-01", "see-01", "eat-01", "chase-01", "read-01", "find-01"};
const char* kAdjs[] = {"big", "small", "red", "happy"};
const char* kNames[] = {"Ann", "Bo", "Kim", "Lee", "Sam", "Ada"};
const char* kUnits[] = {"dollar", "euro"};

std::string base_form(const std::string& concept_name) {
    size_t dash = concept_name.rfind('-');
    if (dash == std::string::npos) return concept_name;
    for (size_t i = dash + 1; i < concept_name.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(concept_name[i]))) return concept_name;
    return concept_name.substr(0, dash);
}

struct Builder {
    std::vector<std::string> tokens;
    AmrGraph graph;
    AlignmentMap align;

    int token(const std::string& t) {
        tokens.push_back(t);
        return static_cast<int>(tokens.size()) - 1;
    }
    int node(const std::string& concept_name, int tok_start, int tok_end = -1) {
        int n = graph.add_node(graph.fresh_var(concept_name), concept_name);
        if (tok_start >= 0)
            align.entries[n] = {{tok_start, tok_end < 0 ? tok_start : tok_end},
                                AlignSource::SEM};
        return n;
    }
    // noun phrase "the [adj] noun"; returns the noun's node
    int noun_phrase(Rng& rng) {
        token("the");
        int adj_tok = -1;
        std::string adj;
        if (rng.bernoulli(0.3)) {
            adj = kAdjs[rng.below(4)];
            adj_tok = token(adj);
        }
        std::string noun = kNouns[rng.below(8)];
        int n = node(noun, token(noun));
        if (adj_tok >= 0) {
            int a = node(adj, adj_tok);
            graph.add_edge(n, "mod", a);
        }
        return n;
    }
    // named entity "Name [Name]"; returns the person/city node
    int entity(Rng& rng, const std::string& kind) {
        int width = rng.bernoulli(0.4) ? 2 : 1;
        int start = -1;
        std::vector<std::string> parts;
        for (int i = 0; i < width; ++i) {
            std::string nm = kNames[rng.below(6)];
            int t = token(nm);
            if (start < 0) start = t;
            parts.push_back(nm);
        }
        int end = start + width - 1;
        int e = node(kind, start, end);
        int nn = node("name", start, end);
        graph.add_edge(e, "name", nn);
        for (size_t i = 0; i < parts.size(); ++i)
            graph.add_attr(nn, "op" + std::to_string(i + 1), parts[i]);
        return e;
    }
};

CorpusEntry finish(Builder& b, int id, int root) {
    b.graph.root = root;
    CorpusEntry e;
    std::string snt;
    for (size_t i = 0; i < b.tokens.size(); ++i) snt += (i ? " " : "") + b.tokens[i];
    e.set_meta("id", "synth-" + std::to_string(id));
    e.set_meta("snt", snt);
    e.set_meta("tok", snt);
    e.set_meta("alignments", format_alignments(b.graph, b.align));
    e.graph = b.graph;
    return e;
}

}  // namespace

std::vector<CorpusEntry> generate_synthetic_corpus(const SynthConfig& cfg) {
    Rng rng(cfg.seed);
    std::vector<CorpusEntry> corpus;
    for (int i = 0; i < cfg.sentences; ++i) {
        Builder b;
        int root = -1;
        switch (rng.below(5)) {
            case 0: {  // the [adj] noun verb
                int n = b.noun_phrase(rng);
                std::string v = kVerbs[rng.below(6)];
                int vt = b.token(base_form(v));
                root = b.node(v, vt);
                b.graph.add_edge(root, "ARG0", n);
                if (rng.bernoulli(0.3)) {
                    b.token("not");
                    b.graph.add_attr(root, "polarity", "-");
                }
                break;
            }
            case 1: {  // the noun verb the noun
                int subj = b.noun_phrase(rng);
                std::string v = kVerbs[rng.below(6)];
                int vt = b.token(base_form(v));
                root = b.node(v, vt);
                int obj = b.noun_phrase(rng);
                b.graph.add_edge(root, "ARG0", subj);
                b.graph.add_edge(root, "ARG1", obj);
                break;
            }
            case 2: {  // control verb with a reentrant subject
                int subj = b.noun_phrase(rng);
                int wt = b.token("want");
                root = b.node("want-01", wt);
                b.token("to");
                std::string v = kVerbs[1 + rng.below(5)];
                int vt = b.token(base_form(v));
                int inner = b.node(v, vt);
                int obj = b.noun_phrase(rng);
                b.graph.add_edge(root, "ARG0", subj);
                b.graph.add_edge(root, "ARG1", inner);
                b.graph.add_edge(inner, "ARG0", subj);  // reentrancy
                b.graph.add_edge(inner, "ARG1", obj);
                break;
            }
            case 3: {  // Name [Name] verb the noun
                int subj = b.entity(rng, rng.bernoulli(0.25) ? "city" : "person");
                std::string v = kVerbs[rng.below(6)];
                int vt = b.token(base_form(v));
                root = b.node(v, vt);
                int obj = b.noun_phrase(rng);
                b.graph.add_edge(root, "ARG0", subj);
                b.graph.add_edge(root, "ARG1", obj);
                break;
            }
            case 4: {  // the noun cost NUM units
                int subj = b.noun_phrase(rng);
                int vt = b.token("cost");
                root = b.node("cost-01", vt);
                std::string num = std::to_string(1 + rng.below(9));
                int nt = b.token(num);
                int m = b.node("monetary-quantity", nt);
                std::string unit = kUnits[rng.below(2)];
                int ut = b.token(unit);
                int u = b.node(unit, ut);
                b.graph.add_edge(root, "ARG1", subj);
                b.graph.add_edge(root, "ARG2", m);
                b.graph.add_edge(m, "unit", u);
                b.graph.add_attr(m, "quant", num);
                break;
            }
        }
        corpus.push_back(finish(b, i, root));
    }

    if (cfg.unaligned_fraction > 0) {
        // strike every k-th node alignment across the corpus
        long total = 0;
        for (const CorpusEntry& e : corpus) total += static_cast<long>(e.graph.nodes.size());
        long strike = static_cast<long>(static_cast<double>(total) * cfg.unaligned_fraction);
        long stride = strike > 0 ? total / strike : 0;
        long counter = 0;
        for (CorpusEntry& e : corpus) {
            AlignmentMap m = parse_alignment_meta(e);
            AlignmentMap kept;
            for (const auto& [node, entry] : m.entries) {
                bool drop = stride > 0 && (counter % stride) == stride - 1;
                ++counter;
                if (!drop) kept.entries[node] = entry;
            }
            e.set_meta("alignments", format_alignments(e.graph, kept));
        }
    }
    return corpus;
}

AlignFixtures alignment_fixtures(const std::vector<CorpusEntry>& corpus) {
    AlignFixtures fx;
    for (size_t i = 0; i < corpus.size(); ++i) {
        const CorpusEntry& e = corpus[i];
        AlignmentMap full = parse_alignment_meta(e);

        // ISI: leave out entity parents (recovered by :name percolation) and,
        // every 7th sentence, one true leaf (recovered by the JAMR backfill,
        // possibly followed by the second percolation pass). JAMR covers
        // everything except entity parents. Merging reconstructs `full`.
        AlignmentMap isi = full, jamr = full;
        for (const AmrGraph::Edge& edge : e.graph.edges)
            if (edge.role == "name") {
                isi.entries.erase(edge.src);
                jamr.entries.erase(edge.src);
            }
        if (i % 7 == 3) {
            for (auto it = isi.entries.rbegin(); it != isi.entries.rend(); ++it)
                if (e.graph.out_edges(it->first).empty()) {
                    isi.entries.erase(std::next(it).base());
                    break;
                }
        }

        // ISI format wants 1-based paths and single-token anchors
        std::vector<std::string> paths(e.graph.nodes.size());
        std::function<void(int, const std::string&)> walk = [&](int node,
                                                                const std::string& prefix) {
            if (paths[static_cast<size_t>(node)].empty())
                paths[static_cast<size_t>(node)] = prefix;
            std::vector<int> kids = e.graph.out_edges(node);
            for (size_t k = 0; k < kids.size(); ++k) {
                int dst = e.graph.edges[static_cast<size_t>(kids[k])].dst;
                if (paths[static_cast<size_t>(dst)].empty())
                    walk(dst, prefix + "." + std::to_string(k + 1));
            }
        };
        if (e.graph.root >= 0) walk(e.graph.root, "1");
        std::string line;
        for (const auto& [node, entry] : isi.entries) {
            for (int t = entry.span.start; t <= entry.span.end; ++t) {
                if (!line.empty()) line += " ";
                line += std::to_string(t) + "-" + paths[static_cast<size_t>(node)];
            }
        }
        fx.isi_text += line + "\n";

        CorpusEntry bare = e;
        bare.meta.erase(std::remove_if(bare.meta.begin(), bare.meta.end(),
                                       [](const auto& kv) { return kv.first == "alignments"; }),
                        bare.meta.end());
        fx.bare.push_back(bare);

        CorpusEntry jamr_entry = e;
        jamr_entry.set_meta("alignments", format_alignments(e.graph, jamr));
        fx.jamr.push_back(jamr_entry);
    }
    return fx;
}

std::vector<ContextualVectors> synthetic_vectors(const std::vector<CorpusEntry>& corpus, int dim,
                                                 int layers, uint64_t seed) {
    std::vector<ContextualVectors> out;
    for (size_t s = 0; s < corpus.size(); ++s) {
        const std::vector<std::string> toks = corpus[s].tokens();
        ContextualVectors cv;
        cv.dim = dim;
        Rng rng(mix_seed(seed, s));
        for (size_t w = 0; w < toks.size(); ++w) {
            int start = static_cast<int>(cv.pieces.size());
            bool split = toks[w].size() > 3 && rng.bernoulli(0.3);
            if (split) {
                cv.pieces.push_back(toks[w].substr(0, 2));
                cv.pieces.push_back("##" + toks[w].substr(2));
            } else {
                cv.pieces.push_back(toks[w]);
            }
            cv.word_spans.emplace_back(start, static_cast<int>(cv.pieces.size()));
        }
        cv.layers.assign(static_cast<size_t>(layers), {});
        for (int l = 0; l < layers; ++l) {
            for (size_t w = 0; w < toks.size(); ++w) {
                auto [start, end] = cv.word_spans[w];
                // the word's identity lands on a token-hash coordinate; all of
                // the word's pieces share it so pooling preserves it
                uint64_t h = 1469598103934665603ull;
                for (char c : toks[w]) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ull;
                for (int p = start; p < end; ++p) {
                    std::vector<double> v(static_cast<size_t>(dim), 0.0);
                    v[h % static_cast<uint64_t>(dim)] = 1.0;
                    v[(h / 7) % static_cast<uint64_t>(dim)] += 0.5;
                    v[static_cast<size_t>(l) % static_cast<size_t>(dim)] += 0.01 * l;
                    cv.layers[static_cast<size_t>(l)].push_back(std::move(v));
                }
            }
        }
        out.push_back(std::move(cv));
    }
    return out;
}

}  // namespace amr
