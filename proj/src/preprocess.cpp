#include "amr/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "amr/align.hpp"

namespace amr {

// ---------------------------------------------------------------------------
// Pooling

std::vector<std::vector<double>> pool_vectors(const ContextualVectors& cv) {
    if (cv.layers.size() < 4)
        throw PreprocessError("LayerCount", "need at least 4 layers, got " +
                                                std::to_string(cv.layers.size()));
    const size_t n_pieces = cv.pieces.size();
    // word spans must tile the pieces exactly
    std::vector<std::pair<int, int>> spans = cv.word_spans;
    std::sort(spans.begin(), spans.end());
    int expect = 0;
    for (const auto& [start, end] : spans) {
        if (start != expect || end <= start)
            throw PreprocessError("SpanGap", "word spans do not tile the pieces at piece " +
                                                 std::to_string(expect));
        expect = end;
    }
    if (expect != static_cast<int>(n_pieces))
        throw PreprocessError("SpanGap", "word spans leave trailing pieces uncovered");

    // mean of the last 4 layers per piece
    std::vector<std::vector<double>> piece_vec(n_pieces, std::vector<double>(cv.dim, 0.0));
    for (size_t l = cv.layers.size() - 4; l < cv.layers.size(); ++l)
        for (size_t p = 0; p < n_pieces; ++p)
            for (int d = 0; d < cv.dim; ++d)
                piece_vec[p][static_cast<size_t>(d)] +=
                    cv.layers[l][p][static_cast<size_t>(d)] / 4.0;

    std::vector<std::vector<double>> out;
    for (const auto& [start, end] : cv.word_spans) {
        std::vector<double> w(static_cast<size_t>(cv.dim), 0.0);
        for (int p = start; p < end; ++p)
            for (int d = 0; d < cv.dim; ++d)
                w[static_cast<size_t>(d)] +=
                    piece_vec[static_cast<size_t>(p)][static_cast<size_t>(d)] / (end - start);
        out.push_back(std::move(w));
    }
    return out;
}

std::vector<ContextualVectors> read_vectors_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open vectors file: " + path);
    std::vector<ContextualVectors> out;
    std::string word;
    while (in >> word) {
        if (word != "sentence") throw std::runtime_error(path + ": expected 'sentence' record");
        ContextualVectors cv;
        size_t n_words, n_pieces, n_layers;
        in >> n_words >> n_pieces >> n_layers >> cv.dim;
        in >> word;  // "pieces"
        cv.pieces.resize(n_pieces);
        for (std::string& p : cv.pieces) in >> p;
        for (size_t w = 0; w < n_words; ++w) {
            int start, end;
            in >> word >> start >> end;  // "word s e"
            cv.word_spans.emplace_back(start, end);
        }
        cv.layers.assign(n_layers, {});
        for (size_t l = 0; l < n_layers; ++l) {
            int layer_no;
            in >> word >> layer_no;  // "layer k"
            cv.layers[l].assign(n_pieces, std::vector<double>(static_cast<size_t>(cv.dim)));
            for (size_t p = 0; p < n_pieces; ++p)
                for (int d = 0; d < cv.dim; ++d) in >> cv.layers[l][p][static_cast<size_t>(d)];
        }
        if (!in) throw std::runtime_error(path + ": truncated vectors record");
        out.push_back(std::move(cv));
    }
    return out;
}

void write_vectors_file(const std::vector<ContextualVectors>& sents, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write vectors file: " + path);
    out.precision(17);
    for (const ContextualVectors& cv : sents) {
        out << "sentence " << cv.word_spans.size() << " " << cv.pieces.size() << " "
            << cv.layers.size() << " " << cv.dim << "\n";
        out << "pieces";
        for (const std::string& p : cv.pieces) out << " " << p;
        out << "\n";
        for (const auto& [s, e] : cv.word_spans) out << "word " << s << " " << e << "\n";
        for (size_t l = 0; l < cv.layers.size(); ++l) {
            out << "layer " << l << "\n";
            for (const auto& piece : cv.layers[l]) {
                for (size_t d = 0; d < piece.size(); ++d) out << (d ? " " : "") << piece[d];
                out << "\n";
            }
        }
        out << "\n";
    }
}

// ---------------------------------------------------------------------------
// Linear tagger

namespace {

double tagger_loss(const std::vector<TaggerExample>& ex, const std::vector<int>& y,
                   const std::vector<double>& w, int L, int D, double l2,
                   std::vector<double>* grad) {
    const int W = D + 1;
    if (grad) std::fill(grad->begin(), grad->end(), 0.0);
    double loss = 0;
    std::vector<double> logits(static_cast<size_t>(L));
    for (size_t n = 0; n < ex.size(); ++n) {
        for (int l = 0; l < L; ++l) {
            const double* row = w.data() + static_cast<size_t>(l) * W;
            double s = row[D];
            for (int d = 0; d < D; ++d) s += row[d] * ex[n].x[static_cast<size_t>(d)];
            logits[static_cast<size_t>(l)] = s;
        }
        double mx = *std::max_element(logits.begin(), logits.end());
        double z = 0;
        for (double v : logits) z += std::exp(v - mx);
        double lz = mx + std::log(z);
        loss += (lz - logits[static_cast<size_t>(y[n])]) / static_cast<double>(ex.size());
        if (grad) {
            for (int l = 0; l < L; ++l) {
                double p = std::exp(logits[static_cast<size_t>(l)] - lz);
                double coef = (p - (l == y[n] ? 1.0 : 0.0)) / static_cast<double>(ex.size());
                double* grow = grad->data() + static_cast<size_t>(l) * W;
                for (int d = 0; d < D; ++d) grow[d] += coef * ex[n].x[static_cast<size_t>(d)];
                grow[D] += coef;
            }
        }
    }
    for (size_t i = 0; i < w.size(); ++i) {
        loss += 0.5 * l2 * w[i] * w[i];
        if (grad) (*grad)[i] += l2 * w[i];
    }
    return loss;
}

}  // namespace

LinearTagger train_linear_tagger(const std::vector<TaggerExample>& examples, double l2) {
    LinearTagger t;
    for (const TaggerExample& e : examples)
        if (std::find(t.labels.begin(), t.labels.end(), e.label) == t.labels.end())
            t.labels.push_back(e.label);
    std::sort(t.labels.begin(), t.labels.end());
    if (t.labels.size() < 2)
        throw PreprocessError("DegenerateLabels",
                              "tagger needs at least 2 label classes, got " +
                                  std::to_string(t.labels.size()));
    if (examples.empty()) throw PreprocessError("DegenerateLabels", "no training examples");
    t.dim = static_cast<int>(examples[0].x.size());
    const int L = static_cast<int>(t.labels.size());
    const int W = t.dim + 1;
    t.weights.assign(static_cast<size_t>(L) * W, 0.0);

    std::vector<int> y;
    for (const TaggerExample& e : examples)
        y.push_back(static_cast<int>(
            std::find(t.labels.begin(), t.labels.end(), e.label) - t.labels.begin()));

    std::vector<double> grad(t.weights.size());
    double step = 1.0;
    double loss = tagger_loss(examples, y, t.weights, L, t.dim, l2, &grad);
    for (int iter = 0; iter < 5000; ++iter) {
        std::vector<double> next = t.weights;
        for (size_t i = 0; i < next.size(); ++i) next[i] -= step * grad[i];
        double next_loss = tagger_loss(examples, y, next, L, t.dim, l2, nullptr);
        if (next_loss > loss) {  // objective is convex: back off instead
            step *= 0.5;
            if (step < 1e-12) break;
            continue;
        }
        double delta = loss - next_loss;
        t.weights = std::move(next);
        loss = tagger_loss(examples, y, t.weights, L, t.dim, l2, &grad);
        if (delta < 1e-6) break;
    }
    return t;
}

std::string LinearTagger::predict(const std::vector<double>& x) const {
    const int L = static_cast<int>(labels.size());
    const int W = dim + 1;
    int best = 0;
    double best_score = -1e300;
    for (int l = 0; l < L; ++l) {
        const double* row = weights.data() + static_cast<size_t>(l) * W;
        double s = row[dim];
        for (int d = 0; d < dim && d < static_cast<int>(x.size()); ++d)
            s += row[d] * x[static_cast<size_t>(d)];
        if (s > best_score) {
            best_score = s;
            best = l;
        }
    }
    return labels[static_cast<size_t>(best)];
}

std::vector<std::string> LinearTagger::tag(const std::vector<std::vector<double>>& xs) const {
    std::vector<std::string> out;
    for (const auto& x : xs) out.push_back(predict(x));
    return out;
}

void LinearTagger::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write tagger: " + path);
    out.precision(17);
    out << labels.size() << " " << dim << "\n";
    for (const std::string& l : labels) out << l << "\n";
    for (size_t i = 0; i < weights.size(); ++i) out << (i ? " " : "") << weights[i];
    out << "\n";
}

LinearTagger LinearTagger::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open tagger: " + path);
    LinearTagger t;
    size_t n;
    in >> n >> t.dim;
    t.labels.resize(n);
    for (std::string& l : t.labels) in >> l;
    t.weights.resize(n * static_cast<size_t>(t.dim + 1));
    for (double& w : t.weights) in >> w;
    if (!in) throw std::runtime_error("truncated tagger file: " + path);
    return t;
}

std::vector<std::vector<std::string>> jackknife_tags(
    const std::vector<std::vector<std::vector<double>>>& sentence_vectors,
    const std::vector<std::vector<std::string>>& sentence_labels, int folds, double l2) {
    if (folds < 2) throw PreprocessError("TooSmall", "jackknifing needs at least 2 folds");
    if (sentence_vectors.size() < static_cast<size_t>(folds))
        throw PreprocessError("TooSmall", "corpus smaller than fold count");
    if (sentence_vectors.size() != sentence_labels.size())
        throw std::runtime_error("jackknife: vectors/labels differ in length");

    std::vector<std::vector<std::string>> out(sentence_vectors.size());
    for (int fold = 0; fold < folds; ++fold) {
        std::vector<TaggerExample> train;
        for (size_t s = 0; s < sentence_vectors.size(); ++s) {
            if (static_cast<int>(s % static_cast<size_t>(folds)) == fold) continue;
            for (size_t w = 0; w < sentence_vectors[s].size(); ++w)
                train.push_back({sentence_vectors[s][w], sentence_labels[s][w]});
        }
        LinearTagger tagger = train_linear_tagger(train, l2);
        for (size_t s = fold; s < sentence_vectors.size(); s += static_cast<size_t>(folds))
            out[s] = tagger.tag(sentence_vectors[s]);
    }
    return out;
}

std::vector<std::string> concept_labels(const CorpusEntry& entry) {
    std::vector<std::string> labels(entry.tokens().size(), kNoneLabel);
    AlignmentMap align = parse_alignment_meta(entry);
    for (const auto& [node, e] : align.entries) {
        if (e.span.start < 0 || e.span.start >= static_cast<int>(labels.size())) continue;
        std::string& slot = labels[static_cast<size_t>(e.span.start)];
        if (slot == kNoneLabel) slot = entry.graph.nodes[static_cast<size_t>(node)].concept_name;
    }
    return labels;
}

// ---------------------------------------------------------------------------
// Tag files

std::vector<std::vector<std::pair<std::string, std::string>>> read_tag_file(
    const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open tag file: " + path);
    std::vector<std::vector<std::pair<std::string, std::string>>> out;
    std::vector<std::pair<std::string, std::string>> cur;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur = {};
            continue;
        }
        size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected 'token TAB tag'");
        cur.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

void write_tag_file(const std::vector<std::vector<std::pair<std::string, std::string>>>& sents,
                    const std::string& path) {
    std::string content;
    for (const auto& sent : sents) {
        for (const auto& [tok, tag] : sent) content += tok + "\t" + tag + "\n";
        content += "\n";
    }
    atomic_write_text(path, content);
}

// ---------------------------------------------------------------------------
// Wikification

std::string name_key(const AmrGraph& g, int node) {
    for (const AmrGraph::Edge& e : g.edges) {
        if (e.src != node || e.role != "name") continue;
        std::vector<std::pair<int, std::string>> ops;
        for (const AmrGraph::Attr& a : g.attrs) {
            if (a.node != e.dst || a.role.rfind("op", 0) != 0) continue;
            try {
                ops.emplace_back(std::stoi(a.role.substr(2)), a.value);
            } catch (...) {
            }
        }
        std::sort(ops.begin(), ops.end());
        std::string key;
        for (const auto& [k, v] : ops) {
            if (!key.empty()) key += " ";
            key += v;
        }
        return key;
    }
    return "";
}

WikiDictionary WikiDictionary::build(const std::vector<CorpusEntry>& corpus) {
    std::map<std::string, std::map<std::string, long>> counts;
    for (const CorpusEntry& e : corpus) {
        for (const AmrGraph::Attr& a : e.graph.attrs) {
            if (a.role != "wiki" || a.value == "-") continue;
            std::string key = name_key(e.graph, a.node);
            if (!key.empty()) ++counts[key][a.value];
        }
    }
    WikiDictionary dict;
    for (const auto& [key, links] : counts) {
        std::string best;
        long best_count = -1;
        for (const auto& [link, count] : links)
            if (count > best_count || (count == best_count && link < best)) {
                best = link;
                best_count = count;
            }
        dict.entries[key] = {best, best_count};
    }
    return dict;
}

void WikiDictionary::save(const std::string& path) const {
    std::string content;
    for (const auto& [name, lc] : entries)
        content += name + "\t" + lc.first + "\t" + std::to_string(lc.second) + "\n";
    atomic_write_text(path, content);
}

WikiDictionary WikiDictionary::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open wiki dictionary: " + path);
    WikiDictionary dict;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        size_t t1 = line.find('\t');
        size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t2 == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected 'name TAB link TAB count'");
        dict.entries[line.substr(0, t1)] = {line.substr(t1 + 1, t2 - t1 - 1),
                                            std::stol(line.substr(t2 + 1))};
    }
    return dict;
}

AmrGraph wikify(const AmrGraph& graph, const WikiDictionary& dict,
                const std::map<std::string, std::string>& linker_output) {
    AmrGraph out = graph;
    for (size_t n = 0; n < out.nodes.size(); ++n) {
        std::string key = name_key(out, static_cast<int>(n));
        if (key.empty()) continue;  // not a named node
        bool has_wiki = false;
        for (const AmrGraph::Attr& a : out.attrs)
            if (a.node == static_cast<int>(n) && a.role == "wiki") has_wiki = true;
        if (has_wiki) continue;
        auto in_dict = dict.entries.find(key);
        if (in_dict != dict.entries.end()) {
            out.add_attr(static_cast<int>(n), "wiki", in_dict->second.first);
            continue;
        }
        auto in_linker = linker_output.find(key);
        out.add_attr(static_cast<int>(n), "wiki",
                     in_linker != linker_output.end() ? in_linker->second : "-");
    }
    return out;
}

AmrGraph strip_wiki(const AmrGraph& graph) {
    AmrGraph out = graph;
    out.attrs.erase(std::remove_if(out.attrs.begin(), out.attrs.end(),
                                   [](const AmrGraph::Attr& a) { return a.role == "wiki"; }),
                    out.attrs.end());
    return out;
}

}  // namespace amr
