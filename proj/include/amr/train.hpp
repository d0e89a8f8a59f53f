#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "amr/model.hpp"
#include "amr/smatch.hpp"
#include "amr/transition.hpp"

namespace amr {

struct MissingInit : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyCorpus : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// sqrt-renormalization used to flatten sampling distributions
std::vector<double> sqrt_flatten(const std::vector<double>& probs);

enum class DecodeMode { Greedy, Sample, Beam };

struct DecodeConfig {
    DecodeMode mode = DecodeMode::Greedy;
    int beam = 1;
    double epsilon = 0.0;  // per-sentence flattening probability (Sample only)
    uint64_t seed = 1;
};

struct DecodeResult {
    AmrGraph graph;
    std::vector<Action> actions;
    double score = 0.0;     // sum of action and label log-probabilities
    bool flattened = false;  // Sample mode: sqrt-flattening was active
};

DecodeResult decode(const ParserModel& model, const SentenceFeatures& feats,
                    const DecodeConfig& cfg);

// decode on an external tape, keeping the picked log-prob terms for REINFORCE
struct SampledDecode {
    DecodeResult result;
    std::vector<Var> logp_terms;
};
SampledDecode sample_decode(const ParserModel& model, Tape& tape, const SentenceFeatures& feats,
                            double epsilon, Rng& rng);

// model log-probability of a fixed action sequence under the same masked
// distributions sampling uses
double rescore_actions(const ParserModel& model, const SentenceFeatures& feats,
                       const std::vector<Action>& actions);

// corpus decoding; serial reference plus the OpenMP kernel (read-only params)
std::vector<DecodeResult> decode_corpus_serial(const ParserModel& model,
                                               const std::vector<SentenceFeatures>& sents,
                                               const DecodeConfig& cfg);
std::vector<DecodeResult> decode_corpus_parallel(const ParserModel& model,
                                                 const std::vector<SentenceFeatures>& sents,
                                                 const DecodeConfig& cfg, int jobs);
std::vector<DecodeResult> decode_corpus(const ParserModel& model,
                                        const std::vector<SentenceFeatures>& sents,
                                        const DecodeConfig& cfg, int jobs = 1);

// ---------------------------------------------------------------------------

struct TrainSentence {
    SentenceFeatures feats;
    std::vector<Action> actions;  // oracle sequence
    AmrGraph gold;
    AmrGraph reachable;
    double weight = 1.0;  // Smatch(reachable, gold) when weighting is on
    int dropped_nodes = 0;
    int dropped_arcs = 0;
};

// runs the oracle over an aligned corpus ("# ::alignments" metadata)
std::vector<TrainSentence> oracle_corpus(const std::vector<CorpusEntry>& corpus);
// mean Smatch of the oracle-reachable graphs against gold (the upper bound)
double oracle_upper_bound(const std::vector<TrainSentence>& sents, int restarts, uint64_t seed,
                          int jobs = 1);
void attach_smatch_weights(std::vector<TrainSentence>& sents, int restarts, uint64_t seed);

Vocab build_word_vocab(const std::vector<TrainSentence>& sents, int min_count = 1);
Vocab build_concept_vocab(const std::vector<TrainSentence>& sents);
Vocab build_role_vocab(const std::vector<TrainSentence>& sents);

struct TrainConfig {
    int epochs = 50;
    double lr = 0.1;
    double lr_decay = 0.05;  // lr_e = lr / (1 + decay * epoch)
    double clip = 5.0;
    bool weight_by_smatch = false;
    int eval_beam = 1;
    int smatch_restarts = kDefaultRestarts;
    uint64_t seed = 1;
    int jobs = 1;
    // stop early once train-set Smatch reaches this (0 = off)
    double stop_at_train_smatch = 0.0;
};

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double dev_smatch = 0.0;
};

struct TrainResult {
    std::vector<EpochLog> log;
    double best_dev = -1.0;
    int best_epoch = -1;
};

// maximum-likelihood training over oracle actions; keeps the best-dev weights
// in `model` on return
TrainResult train_mle(ParserModel& model, std::vector<TrainSentence> train,
                      const std::vector<TrainSentence>& dev, const TrainConfig& cfg);

struct RlConfig {
    int epochs = 20;
    double lr = 0.05;
    double lr_decay = 0.05;
    double clip = 5.0;
    double epsilon = 0.05;  // flattening probability
    int batch_size = 40;
    int smatch_restarts = kDefaultRestarts;
    int eval_beam = 1;
    uint64_t seed = 1;
    int jobs = 1;
};

struct RlStats {
    long sampled = 0;
    long zero_advantage = 0;     // r(sample) == r(greedy): contributes no gradient
    long flattened_decodes = 0;  // sentences whose sampling was flattened
    long updates = 0;
    // largest change of the accumulated gradient norm across zero-advantage
    // sentences; exactly 0 when they contribute nothing
    double zero_adv_grad_delta = 0.0;
};

// self-critical policy gradient from an MLE-initialized model
TrainResult train_rl(ParserModel& model, std::vector<TrainSentence> train,
                     const std::vector<TrainSentence>& dev, const RlConfig& cfg,
                     RlStats* stats = nullptr);

// best-of-N-seeds protocol: train with seeds seed..seed+n-1, keep the best dev
TrainResult train_mle_best_of_seeds(
    ParserModel& best_model, const std::function<ParserModel(uint64_t)>& make_model,
    std::vector<TrainSentence> train, const std::vector<TrainSentence>& dev, TrainConfig cfg,
    int n_seeds);

double eval_corpus_smatch(const ParserModel& model, const std::vector<TrainSentence>& sents,
                          int beam, int restarts, uint64_t seed, int jobs = 1);

}  // namespace amr
