// Times the serial reference kernels against the OpenMP ones: corpus Smatch
// scoring and corpus decoding. Results must match bit for bit.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "amr/synth.hpp"
#include "amr/train.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace amr;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename F>
double timed(F&& f, int reps) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        auto t0 = Clock::now();
        f();
        best = std::min(best, seconds_since(t0));
    }
    return best;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"serial vs OpenMP corpus kernels"};
    int sentences = 200, restarts = 8, jobs = 0, reps = 3;
    app.add_option("--sentences", sentences)->capture_default_str();
    app.add_option("--restarts", restarts)->capture_default_str();
    app.add_option("--jobs", jobs, "thread count (0 = OpenMP default)")->capture_default_str();
    app.add_option("--reps", reps, "repetitions, best time kept")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
    int threads = jobs > 0 ? jobs : omp_get_max_threads();
#else
    int threads = 1;
    std::printf("built without OpenMP; parallel kernels run serially\n");
#endif

    SynthConfig cfg;
    cfg.sentences = sentences;
    cfg.seed = 1234;
    std::vector<CorpusEntry> corpus = generate_synthetic_corpus(cfg);
    std::vector<TrainSentence> sents = oracle_corpus(corpus);

    // scoring benchmark: oracle-reachable graphs against gold
    std::vector<AmrGraph> pred, gold;
    std::vector<SentenceFeatures> feats;
    for (const TrainSentence& s : sents) {
        pred.push_back(s.reachable);
        gold.push_back(s.gold);
        feats.push_back(s.feats);
    }

    std::printf("corpus: %d sentences, smatch restarts %d, threads %d\n\n", sentences, restarts,
                threads);

    CorpusScore serial_score, parallel_score;
    double t_score_serial =
        timed([&] { serial_score = score_corpus_serial(pred, gold, restarts, 99); }, reps);
    double t_score_parallel = timed(
        [&] { parallel_score = score_corpus_parallel(pred, gold, restarts, 99, threads); }, reps);
    bool score_match = serial_score.micro.smatch == parallel_score.micro.smatch;
    for (size_t i = 0; i < serial_score.per_sentence.size() && score_match; ++i)
        score_match = serial_score.per_sentence[i].smatch == parallel_score.per_sentence[i].smatch;

    // decoding benchmark: greedy decode with an untrained small model
    ModelConfig mc;
    mc.word_dim = 16;
    mc.input_dim = 16;
    mc.hidden_dim = 32;
    mc.action_dim = 8;
    mc.label_dim = 8;
    ParserModel model = ParserModel::create(mc, build_word_vocab(sents),
                                            build_concept_vocab(sents), build_role_vocab(sents),
                                            {}, 5);
    DecodeConfig dc;
    dc.mode = DecodeMode::Greedy;
    std::vector<DecodeResult> serial_dec, parallel_dec;
    double t_dec_serial = timed([&] { serial_dec = decode_corpus_serial(model, feats, dc); }, reps);
    double t_dec_parallel =
        timed([&] { parallel_dec = decode_corpus_parallel(model, feats, dc, threads); }, reps);
    bool dec_match = serial_dec.size() == parallel_dec.size();
    for (size_t i = 0; i < serial_dec.size() && dec_match; ++i)
        dec_match = serial_dec[i].actions == parallel_dec[i].actions &&
                    serial_dec[i].score == parallel_dec[i].score;

    std::printf("%-22s %10s %10s %9s %8s\n", "kernel", "serial(s)", "openmp(s)", "speedup",
                "match");
    std::printf("%-22s %10.3f %10.3f %8.2fx %8s\n", "smatch scoring", t_score_serial,
                t_score_parallel, t_score_serial / t_score_parallel,
                score_match ? "yes" : "NO");
    std::printf("%-22s %10.3f %10.3f %8.2fx %8s\n", "greedy decoding", t_dec_serial,
                t_dec_parallel, t_dec_serial / t_dec_parallel, dec_match ? "yes" : "NO");
    return score_match && dec_match ? 0 : 1;
}
