#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "amr/graph.hpp"

namespace amr {

struct MappingResult {
    std::map<std::string, std::string> mapping;  // pred var -> gold var
    int matched = 0;
    int pred_size = 0;
    int gold_size = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Table-1 metric columns.
struct MetricSuite {
    double smatch = 0, unlabeled = 0, no_wsd = 0, named_entities = 0, wikification = 0,
           negations = 0, concepts = 0, reentrancies = 0, srl = 0;

    static const std::vector<std::string>& names();
    double operator[](size_t i) const;
};

// Best-of-`restarts` random-restart hill climbing over variable mappings.
// The first restart is seeded by greedy concept matching, the rest are random.
// Inverse roles (":R-of") are normalized before matching.
MappingResult smatch_hill_climb(const TripleSet& pred, const TripleSet& gold, int restarts,
                                uint64_t seed);

// Exhaustive enumeration of all partial injections; the testing oracle for
// hill climbing. Guarded to min(|pred vars|, |gold vars|) <= 8.
struct TooLarge : std::runtime_error {
    using std::runtime_error::runtime_error;
};
MappingResult smatch_exact(const TripleSet& pred, const TripleSet& gold);

MetricSuite metric_breakdown(const AmrGraph& pred, const AmrGraph& gold, int restarts,
                             uint64_t seed);

// Sentence results plus micro-averaged suite (sum matched / sum sizes).
struct CorpusScore {
    std::vector<MetricSuite> per_sentence;
    MetricSuite micro;
    size_t sentences = 0;
};

inline constexpr int kDefaultRestarts = 4;

// Reference implementation, one sentence pair at a time.
CorpusScore score_corpus_serial(const std::vector<AmrGraph>& pred,
                                const std::vector<AmrGraph>& gold,
                                int restarts = kDefaultRestarts, uint64_t seed = 1);

// OpenMP sentence-parallel kernel; produces results identical to the serial
// one (per-sentence seeds are derived from the index, and micro counts are
// integer sums).
CorpusScore score_corpus_parallel(const std::vector<AmrGraph>& pred,
                                  const std::vector<AmrGraph>& gold,
                                  int restarts = kDefaultRestarts, uint64_t seed = 1,
                                  int jobs = 0);

CorpusScore score_corpus(const std::vector<AmrGraph>& pred, const std::vector<AmrGraph>& gold,
                         int restarts = kDefaultRestarts, uint64_t seed = 1, int jobs = 1);

// Plain sentence-level Smatch F1, the RL reward.
double smatch_f1(const AmrGraph& pred, const AmrGraph& gold, int restarts, uint64_t seed);

}  // namespace amr
