#pragma once

#include <map>
#include <string>
#include <vector>

#include "amr/graph.hpp"
#include "amr/rng.hpp"

namespace amr {

struct PreprocessError : std::runtime_error {
    PreprocessError(const std::string& kind, const std::string& msg)
        : std::runtime_error(msg), kind(kind) {}
    std::string kind;  // LayerCount | SpanGap | DegenerateLabels | TooSmall
};

// ---------------------------------------------------------------------------
// Contextual vectors (ingested; never trained through)

struct ContextualVectors {
    std::vector<std::string> pieces;
    std::vector<std::pair<int, int>> word_spans;        // piece ranges, end exclusive
    std::vector<std::vector<std::vector<double>>> layers;  // layer -> piece -> vector
    int dim = 0;

    size_t words() const { return word_spans.size(); }
};

// per word: mean over its pieces of the mean of the last 4 layers
std::vector<std::vector<double>> pool_vectors(const ContextualVectors& cv);

std::vector<ContextualVectors> read_vectors_file(const std::string& path);
void write_vectors_file(const std::vector<ContextualVectors>& sents, const std::string& path);

// ---------------------------------------------------------------------------
// Linear (multinomial logistic) tagger over word vectors

struct LinearTagger {
    std::vector<std::string> labels;
    int dim = 0;
    std::vector<double> weights;  // labels x (dim + 1), bias last

    std::string predict(const std::vector<double>& x) const;
    std::vector<std::string> tag(const std::vector<std::vector<double>>& xs) const;

    void save(const std::string& path) const;
    static LinearTagger load(const std::string& path);
};

struct TaggerExample {
    std::vector<double> x;
    std::string label;
};

// full-batch gradient descent to convergence (loss delta < 1e-6); the step
// halves whenever the regularized loss increases
LinearTagger train_linear_tagger(const std::vector<TaggerExample>& examples, double l2);

// fold i tagged by a tagger trained on the other folds; fold = index % folds
std::vector<std::vector<std::string>> jackknife_tags(
    const std::vector<std::vector<std::vector<double>>>& sentence_vectors,
    const std::vector<std::vector<std::string>>& sentence_labels, int folds, double l2);

// gold concept labels for tagger training: the first token of each aligned
// node's span carries the concept, all other tokens are NONE
std::vector<std::string> concept_labels(const CorpusEntry& entry);

inline constexpr const char* kNoneLabel = "NONE";

// ---------------------------------------------------------------------------
// Tag files: "token TAB tag" lines, blank line between sentences

std::vector<std::vector<std::pair<std::string, std::string>>> read_tag_file(
    const std::string& path);
void write_tag_file(const std::vector<std::vector<std::pair<std::string, std::string>>>& sents,
                    const std::string& path);

// ---------------------------------------------------------------------------
// Wikification

struct WikiDictionary {
    // name string -> (link, count); the stored link is the most frequent one,
    // ties broken lexicographically
    std::map<std::string, std::pair<std::string, long>> entries;

    static WikiDictionary build(const std::vector<CorpusEntry>& corpus);
    void save(const std::string& path) const;  // "name TAB link TAB count"
    static WikiDictionary load(const std::string& path);
};

// ":opN" constants of the node's name child joined by single spaces
std::string name_key(const AmrGraph& g, int node);

// dictionary first, linker output second, "-" otherwise; only named nodes
// without an existing :wiki attribute gain one
AmrGraph wikify(const AmrGraph& graph, const WikiDictionary& dict,
                const std::map<std::string, std::string>& linker_output);

AmrGraph strip_wiki(const AmrGraph& graph);

}  // namespace amr
