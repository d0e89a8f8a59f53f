#pragma once

#include <string>
#include <vector>

#include "amr/align.hpp"
#include "amr/graph.hpp"
#include "amr/preprocess.hpp"

namespace amr {

// Small template-generated corpora whose alignments are complete and whose
// graphs the oracle can derive exactly. Used by the bundled data files, the
// training tests and the benchmark.
struct SynthConfig {
    int sentences = 60;
    uint64_t seed = 7;
    // fraction of nodes whose alignment entry is removed (rounded down)
    double unaligned_fraction = 0.0;
};

// entries carry ::id, ::snt, ::tok and merged-style ::alignments metadata
std::vector<CorpusEntry> generate_synthetic_corpus(const SynthConfig& cfg);

// aligner-output fixtures derived from a fully aligned corpus: an ISI file
// that leaves entity parents and some leaves out, and a JAMR-annotated copy
// with full coverage. Merging the two reconstructs the original alignments.
struct AlignFixtures {
    std::vector<CorpusEntry> bare;  // alignments stripped
    std::string isi_text;           // one line per sentence
    std::vector<CorpusEntry> jamr;  // ::alignments metadata retained
};
AlignFixtures alignment_fixtures(const std::vector<CorpusEntry>& corpus);

// deterministic per-token contextual vectors (each token's identity is
// recoverable from its vector, so the linear tagger can learn from them);
// words occasionally split into two pieces to exercise pooling
std::vector<ContextualVectors> synthetic_vectors(const std::vector<CorpusEntry>& corpus, int dim,
                                                 int layers, uint64_t seed);

}  // namespace amr
