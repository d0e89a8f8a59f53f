#include "amr/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "amr/align.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace amr {

std::vector<double> sqrt_flatten(const std::vector<double>& probs) {
    std::vector<double> out(probs.size());
    double z = 0;
    for (size_t i = 0; i < probs.size(); ++i) {
        out[i] = std::sqrt(probs[i]);
        z += out[i];
    }
    if (z > 0)
        for (double& x : out) x /= z;
    return out;
}

namespace {

std::vector<double> probs_of(const Tape& tape, Var logp) {
    std::vector<double> p = tape.val(logp).v;
    for (double& x : p) x = std::exp(x);
    return p;
}

size_t sample_index(const std::vector<double>& probs, Rng& rng) {
    double u = rng.real();
    double acc = 0;
    for (size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    return probs.size() - 1;
}

}  // namespace

// ---------------------------------------------------------------------------
// Sampled decode

SampledDecode sample_decode(const ParserModel& model, Tape& tape, const SentenceFeatures& feats,
                            double epsilon, Rng& rng) {
    SampledDecode out;
    out.result.flattened = epsilon > 0 && rng.bernoulli(epsilon);
    ParserState state = ParserState::init(feats.tokens);
    ModelRun run(model, tape, feats);
    while (!state.terminal()) {
        StepScores scores = run.score_step(state);
        // payload actions the model has no labels for cannot be produced
        std::vector<int> usable;
        for (size_t i = 0; i < scores.legal.size(); ++i)
            if (payload_kind(scores.legal[i]) == PayloadKind::None ||
                !model.label_subset(scores.legal[i]).empty())
                usable.push_back(static_cast<int>(i));
        Var act_logp = scores.action_logp;
        if (usable.size() != scores.legal.size())
            act_logp = tape.log_softmax(tape.gather(scores.action_logp, usable));
        std::vector<double> ap = probs_of(tape, act_logp);
        if (out.result.flattened) ap = sqrt_flatten(ap);
        size_t pick = sample_index(ap, rng);
        Action action{scores.legal[static_cast<size_t>(usable[pick])], ""};
        Var logp_term = tape.pick(act_logp, static_cast<int>(pick));

        PayloadKind family = payload_kind(action.kind);
        if (family != PayloadKind::None) {
            const std::vector<int>& subset = model.label_subset(action.kind);
            Var lab_logp = run.label_logp_for(scores.s_t, action.kind);
            std::vector<double> lp = probs_of(tape, lab_logp);
            if (out.result.flattened) lp = sqrt_flatten(lp);
            size_t lab = sample_index(lp, rng);
            action.payload = model.payload_at(family, subset[lab]);
            logp_term = tape.add(logp_term, tape.pick(lab_logp, static_cast<int>(lab)));
        }
        out.logp_terms.push_back(logp_term);
        out.result.score += tape.val(logp_term).v[0];
        run.apply(state, action);
        state.apply(action);
        out.result.actions.push_back(action);
    }
    out.result.graph = state.result();
    return out;
}

double rescore_actions(const ParserModel& model, const SentenceFeatures& feats,
                       const std::vector<Action>& actions) {
    Tape tape;
    ParserState state = ParserState::init(feats.tokens);
    ModelRun run(model, tape, feats);
    double total = 0;
    for (const Action& a : actions) {
        StepScores scores = run.score_step(state);
        std::vector<int> usable;
        int pos = -1;
        for (size_t i = 0; i < scores.legal.size(); ++i) {
            if (payload_kind(scores.legal[i]) != PayloadKind::None &&
                model.label_subset(scores.legal[i]).empty())
                continue;
            if (scores.legal[i] == a.kind) pos = static_cast<int>(usable.size());
            usable.push_back(static_cast<int>(i));
        }
        if (pos < 0) throw IllegalAction("rescore: action not available");
        Var act_logp = scores.action_logp;
        if (usable.size() != scores.legal.size())
            act_logp = tape.log_softmax(tape.gather(scores.action_logp, usable));
        total += tape.val(act_logp).v[static_cast<size_t>(pos)];
        if (payload_kind(a.kind) != PayloadKind::None) {
            int lab = model.subset_position(a);
            if (lab < 0) throw IllegalAction("rescore: payload missing from label subset");
            total += tape.val(run.label_logp_for(scores.s_t, a.kind)).v[static_cast<size_t>(lab)];
        }
        run.apply(state, a);
        state.apply(a);
    }
    return total;
}

// ---------------------------------------------------------------------------
// Beam decode (width 1 == greedy). The greedy lineage always survives pruning,
// so the best beam(w) score is never below the greedy score.

namespace {

struct BeamItem {
    ParserState state;
    ModelRun run;
    double score = 0.0;
    bool greedy_lineage = false;
};

struct Candidate {
    size_t item;
    Action action;
    double score;
    double step_logp;
    bool greedy_pick = false;  // best expansion of the greedy-lineage item
};

DecodeResult beam_decode(const ParserModel& model, const SentenceFeatures& feats, int width) {
    width = std::max(1, width);
    Tape tape;
    std::vector<BeamItem> beam;
    beam.push_back({ParserState::init(feats.tokens), ModelRun(model, tape, feats), 0.0, true});

    while (true) {
        bool all_terminal = true;
        for (const BeamItem& it : beam) all_terminal &= it.state.terminal();
        if (all_terminal) break;

        std::vector<Candidate> cands;
        std::vector<BeamItem> next;
        for (size_t i = 0; i < beam.size(); ++i) {
            BeamItem& item = beam[i];
            if (item.state.terminal()) {
                // carry finished hypotheses forward unchanged
                cands.push_back({i, Action{}, item.score, 0.0, item.greedy_lineage});
                continue;
            }
            StepScores scores = item.run.score_step(item.state);
            // copies: pushing label-head nodes may reallocate the tape
            std::vector<double> alp = tape.val(scores.action_logp).v;
            Var confirm_logp, dependent_logp, role_logp;
            std::vector<Candidate> local;
            for (size_t a = 0; a < scores.legal.size(); ++a) {
                ActionKind kind = scores.legal[a];
                PayloadKind family = payload_kind(kind);
                if (family == PayloadKind::None) {
                    local.push_back({i, Action{kind, ""}, item.score + alp[a], alp[a], false});
                    continue;
                }
                const std::vector<int>& subset = model.label_subset(kind);
                if (subset.empty()) continue;
                Var& head = family == PayloadKind::Role
                                ? role_logp
                                : (kind == ActionKind::DEPENDENT ? dependent_logp : confirm_logp);
                if (!head.valid()) head = item.run.label_logp_for(scores.s_t, kind);
                std::vector<double> llp = tape.val(head).v;
                // top-`width` labels for this action suffice for an exact beam
                std::vector<int> order(llp.size());
                std::iota(order.begin(), order.end(), 0);
                size_t keep = std::min<size_t>(static_cast<size_t>(width), order.size());
                std::partial_sort(order.begin(), order.begin() + static_cast<long>(keep),
                                  order.end(), [&](int x, int y) {
                                      return llp[static_cast<size_t>(x)] >
                                             llp[static_cast<size_t>(y)];
                                  });
                for (size_t k = 0; k < keep; ++k) {
                    int lab = order[k];
                    double lp = alp[a] + llp[static_cast<size_t>(lab)];
                    local.push_back(
                        {i,
                         Action{kind, model.payload_at(family, subset[static_cast<size_t>(lab)])},
                         item.score + lp, lp, false});
                }
            }
            if (item.greedy_lineage && !local.empty()) {
                size_t best = 0;
                for (size_t k = 1; k < local.size(); ++k)
                    if (local[k].step_logp > local[best].step_logp) best = k;
                local[best].greedy_pick = true;
            }
            cands.insert(cands.end(), local.begin(), local.end());
        }

        std::stable_sort(cands.begin(), cands.end(),
                         [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
        size_t keep = std::min<size_t>(static_cast<size_t>(width), cands.size());
        // the greedy continuation survives even when outscored
        size_t greedy_at = cands.size();
        for (size_t k = 0; k < cands.size(); ++k)
            if (cands[k].greedy_pick) {
                greedy_at = k;
                break;
            }
        std::vector<size_t> chosen;
        for (size_t k = 0; k < keep; ++k) chosen.push_back(k);
        if (greedy_at != cands.size() && greedy_at >= keep) {
            if (!chosen.empty()) chosen.back() = greedy_at;
            else chosen.push_back(greedy_at);
        }

        for (size_t k : chosen) {
            const Candidate& c = cands[k];
            BeamItem item = beam[c.item];  // copy shares the tape
            item.greedy_lineage = c.greedy_pick;
            if (!item.state.terminal()) {
                item.run.apply(item.state, c.action);
                item.state.apply(c.action);
                item.score = c.score;
            }
            next.push_back(std::move(item));
        }
        beam = std::move(next);
    }

    size_t best = 0;
    for (size_t i = 1; i < beam.size(); ++i)
        if (beam[i].score > beam[best].score) best = i;
    DecodeResult res;
    res.graph = beam[best].state.result();
    res.actions = beam[best].state.history;
    res.score = beam[best].score;
    return res;
}

}  // namespace

DecodeResult decode(const ParserModel& model, const SentenceFeatures& feats,
                    const DecodeConfig& cfg) {
    switch (cfg.mode) {
        case DecodeMode::Greedy:
            return beam_decode(model, feats, 1);
        case DecodeMode::Beam:
            return beam_decode(model, feats, cfg.beam);
        case DecodeMode::Sample: {
            Tape tape;
            Rng rng(cfg.seed);
            return sample_decode(model, tape, feats, cfg.epsilon, rng).result;
        }
    }
    return {};
}

std::vector<DecodeResult> decode_corpus_serial(const ParserModel& model,
                                               const std::vector<SentenceFeatures>& sents,
                                               const DecodeConfig& cfg) {
    std::vector<DecodeResult> out(sents.size());
    for (size_t i = 0; i < sents.size(); ++i) {
        DecodeConfig c = cfg;
        c.seed = mix_seed(cfg.seed, i);
        out[i] = decode(model, sents[i], c);
    }
    return out;
}

std::vector<DecodeResult> decode_corpus_parallel(const ParserModel& model,
                                                 const std::vector<SentenceFeatures>& sents,
                                                 const DecodeConfig& cfg, int jobs) {
    std::vector<DecodeResult> out(sents.size());
    const int n = static_cast<int>(sents.size());
#ifdef _OPENMP
    if (jobs > 0) omp_set_num_threads(jobs);
#pragma omp parallel for schedule(dynamic)
#endif
    for (int i = 0; i < n; ++i) {
        DecodeConfig c = cfg;
        c.seed = mix_seed(cfg.seed, static_cast<uint64_t>(i));
        out[static_cast<size_t>(i)] = decode(model, sents[static_cast<size_t>(i)], c);
    }
    return out;
}

std::vector<DecodeResult> decode_corpus(const ParserModel& model,
                                        const std::vector<SentenceFeatures>& sents,
                                        const DecodeConfig& cfg, int jobs) {
    if (jobs <= 1) return decode_corpus_serial(model, sents, cfg);
    return decode_corpus_parallel(model, sents, cfg, jobs);
}

// ---------------------------------------------------------------------------
// Corpus preparation

std::vector<TrainSentence> oracle_corpus(const std::vector<CorpusEntry>& corpus) {
    std::vector<TrainSentence> out;
    for (const CorpusEntry& e : corpus) {
        TrainSentence s;
        s.feats.tokens = e.tokens();
        s.gold = e.graph;
        OracleResult res = oracle(s.feats.tokens, e.graph, parse_alignment_meta(e));
        s.actions = std::move(res.actions);
        s.reachable = std::move(res.reachable);
        s.dropped_nodes = res.dropped_nodes;
        s.dropped_arcs = res.dropped_arcs;
        out.push_back(std::move(s));
    }
    return out;
}

double oracle_upper_bound(const std::vector<TrainSentence>& sents, int restarts, uint64_t seed,
                          int jobs) {
    std::vector<AmrGraph> pred, gold;
    for (const TrainSentence& s : sents) {
        pred.push_back(s.reachable);
        gold.push_back(s.gold);
    }
    return score_corpus(pred, gold, restarts, seed, jobs).micro.smatch;
}

void attach_smatch_weights(std::vector<TrainSentence>& sents, int restarts, uint64_t seed) {
    for (size_t i = 0; i < sents.size(); ++i)
        sents[i].weight = smatch_hill_climb(to_triples(sents[i].reachable),
                                            to_triples(sents[i].gold), restarts,
                                            mix_seed(seed, i))
                              .f1;
}

Vocab build_word_vocab(const std::vector<TrainSentence>& sents, int min_count) {
    std::vector<std::string> all;
    for (const TrainSentence& s : sents)
        all.insert(all.end(), s.feats.tokens.begin(), s.feats.tokens.end());
    return Vocab::build(all, min_count);
}

namespace {
Vocab payload_vocab(const std::vector<TrainSentence>& sents, PayloadKind family) {
    Vocab v;
    for (const TrainSentence& s : sents)
        for (const Action& a : s.actions)
            if (payload_kind(a.kind) == family) v.add(a.payload);
    return v;
}
}  // namespace

Vocab build_concept_vocab(const std::vector<TrainSentence>& sents) {
    return payload_vocab(sents, PayloadKind::Concept);
}
Vocab build_role_vocab(const std::vector<TrainSentence>& sents) {
    return payload_vocab(sents, PayloadKind::Role);
}

// ---------------------------------------------------------------------------
// MLE

namespace {

// negative log-likelihood of the oracle sequence, built on `tape`
Var sentence_nll(const ParserModel& model, Tape& tape, const TrainSentence& sent) {
    ParserState state = ParserState::init(sent.feats.tokens);
    ModelRun run(model, tape, sent.feats);
    std::vector<Var> terms;
    for (const Action& a : sent.actions) {
        StepScores scores = run.score_step(state);
        int pos = -1;
        for (size_t i = 0; i < scores.legal.size(); ++i)
            if (scores.legal[i] == a.kind) pos = static_cast<int>(i);
        if (pos < 0) throw IllegalAction("oracle action illegal during training replay");
        terms.push_back(tape.pick(scores.action_logp, pos));
        if (payload_kind(a.kind) != PayloadKind::None) {
            Var lab_logp = run.label_logp_for(scores.s_t, a.kind);
            int lab_pos = model.subset_position(a);
            if (lab_pos < 0) throw IllegalAction("oracle payload missing from label subset");
            terms.push_back(tape.pick(lab_logp, lab_pos));
        }
        run.apply(state, a);
        state.apply(a);
    }
    if (terms.empty()) return tape.scalar(0.0);
    return tape.scale(tape.add_many(terms), -1.0);
}

std::vector<SentenceFeatures> features_of(const std::vector<TrainSentence>& sents) {
    std::vector<SentenceFeatures> out;
    for (const TrainSentence& s : sents) out.push_back(s.feats);
    return out;
}

}  // namespace

double eval_corpus_smatch(const ParserModel& model, const std::vector<TrainSentence>& sents,
                          int beam, int restarts, uint64_t seed, int jobs) {
    if (sents.empty()) return 0.0;
    DecodeConfig dc;
    dc.mode = beam <= 1 ? DecodeMode::Greedy : DecodeMode::Beam;
    dc.beam = beam;
    dc.seed = seed;
    std::vector<DecodeResult> decoded = decode_corpus(model, features_of(sents), dc, jobs);
    std::vector<AmrGraph> pred, gold;
    for (size_t i = 0; i < sents.size(); ++i) {
        pred.push_back(decoded[i].graph);
        gold.push_back(sents[i].gold);
    }
    return score_corpus(pred, gold, restarts, seed, jobs).micro.smatch;
}

TrainResult train_mle(ParserModel& model, std::vector<TrainSentence> train,
                      const std::vector<TrainSentence>& dev, const TrainConfig& cfg) {
    if (train.empty()) throw EmptyCorpus("train_mle: empty corpus");
    TrainResult result;
    Rng rng(mix_seed(cfg.seed, 0x7e1));
    ParamStore best = model.params();

    std::vector<size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double lr = cfg.lr / (1.0 + cfg.lr_decay * epoch);
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.below(i)]);

        double loss_sum = 0;
        for (size_t idx : order) {
            const TrainSentence& sent = train[idx];
            if (sent.actions.empty()) continue;
            Tape tape;
            Var nll = sentence_nll(model, tape, sent);
            double weight = cfg.weight_by_smatch ? sent.weight : 1.0;
            Var loss = tape.scale(nll, weight);
            loss_sum += tape.val(loss).v[0];
            model.params().zero_grads();
            tape.backward(loss);
            model.params().sgd_step(lr, cfg.clip);
        }

        EpochLog log;
        log.epoch = epoch;
        log.train_loss = loss_sum / static_cast<double>(train.size());
        const std::vector<TrainSentence>& eval_set = dev.empty() ? train : dev;
        log.dev_smatch = eval_corpus_smatch(model, eval_set, cfg.eval_beam, cfg.smatch_restarts,
                                            mix_seed(cfg.seed, 0xe0a1 + epoch), cfg.jobs);
        result.log.push_back(log);
        if (log.dev_smatch > result.best_dev) {
            result.best_dev = log.dev_smatch;
            result.best_epoch = epoch;
            best = model.params();
        }
        if (cfg.stop_at_train_smatch > 0 && log.dev_smatch >= cfg.stop_at_train_smatch) break;
    }
    model.params() = best;
    return result;
}

TrainResult train_mle_best_of_seeds(
    ParserModel& best_model, const std::function<ParserModel(uint64_t)>& make_model,
    std::vector<TrainSentence> train, const std::vector<TrainSentence>& dev, TrainConfig cfg,
    int n_seeds) {
    TrainResult best_result;
    for (int k = 0; k < std::max(1, n_seeds); ++k) {
        ParserModel model = make_model(cfg.seed + static_cast<uint64_t>(k));
        TrainConfig c = cfg;
        c.seed = cfg.seed + static_cast<uint64_t>(k);
        TrainResult r = train_mle(model, train, dev, c);
        if (r.best_dev > best_result.best_dev) {
            best_result = r;
            best_model = model;
        }
    }
    return best_result;
}

// ---------------------------------------------------------------------------
// Self-critical RL

TrainResult train_rl(ParserModel& model, std::vector<TrainSentence> train,
                     const std::vector<TrainSentence>& dev, const RlConfig& cfg, RlStats* stats) {
    if (train.empty()) throw EmptyCorpus("train_rl: empty corpus");
    TrainResult result;
    Rng rng(mix_seed(cfg.seed, 0x51));
    ParamStore best = model.params();
    const std::vector<TrainSentence>& eval_set = dev.empty() ? train : dev;

    double init_dev = eval_corpus_smatch(model, eval_set, cfg.eval_beam, cfg.smatch_restarts,
                                         mix_seed(cfg.seed, 0xe0a0), cfg.jobs);
    result.best_dev = init_dev;
    result.best_epoch = -1;  // the initializer itself

    std::vector<size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double lr = cfg.lr / (1.0 + cfg.lr_decay * epoch);
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.below(i)]);

        model.params().zero_grads();
        int in_batch = 0;
        double reward_sum = 0;
        for (size_t idx : order) {
            const TrainSentence& sent = train[idx];
            uint64_t sent_seed = mix_seed(cfg.seed, 0xba5e + idx * 1315423911ull +
                                                        static_cast<uint64_t>(epoch));
            // greedy baseline on read-only parameters
            DecodeConfig gc;
            gc.mode = DecodeMode::Greedy;
            DecodeResult greedy = decode(model, sent.feats, gc);
            double r_greedy =
                smatch_f1(greedy.graph, sent.gold, cfg.smatch_restarts, sent_seed);

            Tape tape;
            Rng srng(mix_seed(sent_seed, 0x5a));
            SampledDecode sample = sample_decode(model, tape, sent.feats, cfg.epsilon, srng);
            double r_sample =
                smatch_f1(sample.result.graph, sent.gold, cfg.smatch_restarts, sent_seed);
            if (stats) {
                ++stats->sampled;
                stats->flattened_decodes += sample.result.flattened;
            }
            reward_sum += r_sample;

            double advantage = r_sample - r_greedy;
            if (advantage == 0.0 || sample.logp_terms.empty()) {
                if (stats) {
                    double before = model.params().grad_norm();
                    ++stats->zero_advantage;
                    double after = model.params().grad_norm();
                    stats->zero_adv_grad_delta =
                        std::max(stats->zero_adv_grad_delta, std::fabs(after - before));
                }
            } else {
                // minimize -(advantage) * log p(sample), averaged over the batch
                Var logp = tape.add_many(sample.logp_terms);
                Var loss = tape.scale(logp, -advantage / cfg.batch_size);
                tape.backward(loss);
            }
            if (++in_batch == cfg.batch_size) {
                model.params().sgd_step(lr, cfg.clip);
                model.params().zero_grads();
                in_batch = 0;
                if (stats) ++stats->updates;
            }
        }
        if (in_batch > 0) {
            model.params().sgd_step(lr, cfg.clip);
            model.params().zero_grads();
            if (stats) ++stats->updates;
        }

        EpochLog log;
        log.epoch = epoch;
        log.train_loss = -reward_sum / static_cast<double>(train.size());
        log.dev_smatch = eval_corpus_smatch(model, eval_set, cfg.eval_beam, cfg.smatch_restarts,
                                            mix_seed(cfg.seed, 0xe0a1 + epoch), cfg.jobs);
        result.log.push_back(log);
        if (log.dev_smatch > result.best_dev) {
            result.best_dev = log.dev_smatch;
            result.best_epoch = epoch;
            best = model.params();
        }
    }
    model.params() = best;
    return result;
}

}  // namespace amr
