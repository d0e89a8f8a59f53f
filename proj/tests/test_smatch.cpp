#include "amr/smatch.hpp"

#include <cmath>

#include "amr/rng.hpp"
#include "doctest.h"

using namespace amr;

namespace {

TripleSet triples_of(const char* text) { return to_triples(parse_penman(text)); }

AmrGraph random_graph(Rng& rng, int max_vars) {
    AmrGraph g;
    int n = 1 + static_cast<int>(rng.below(max_vars));
    const char* concepts[] = {"want-01", "boy", "girl", "go-02", "dog"};
    const char* roles[] = {"ARG0", "ARG1", "mod"};
    for (int i = 0; i < n; ++i)
        g.add_node("x" + std::to_string(i), concepts[rng.below(5)]);
    g.root = 0;
    for (int i = 1; i < n; ++i)
        g.add_edge(static_cast<int>(rng.below(i)), roles[rng.below(3)], i);
    if (n > 1 && rng.bernoulli(0.3))
        g.add_edge(0, roles[rng.below(3)], 1 + static_cast<int>(rng.below(n - 1)));
    if (rng.bernoulli(0.3)) g.add_attr(static_cast<int>(rng.below(n)), "polarity", "-");
    return g;
}

}  // namespace

TEST_CASE("identical graphs score 1.0") {
    TripleSet t = triples_of("(w / want-01 :ARG0 (b / boy))");
    MappingResult r = smatch_hill_climb(t, t, 4, 7);
    CHECK(r.f1 == doctest::Approx(1.0));
    CHECK(r.matched == 4);
    MappingResult e = smatch_exact(t, t);
    CHECK(e.f1 == doctest::Approx(1.0));
}

TEST_CASE("worked example: boy vs girl is 0.75") {
    TripleSet pred = triples_of("(w / want-01 :ARG0 (g / girl))");
    TripleSet gold = triples_of("(w / want-01 :ARG0 (b / boy))");
    MappingResult ex = smatch_exact(pred, gold);
    CHECK(ex.matched == 3);
    CHECK(ex.pred_size == 4);
    CHECK(ex.gold_size == 4);
    CHECK(ex.precision == doctest::Approx(0.75));
    CHECK(ex.recall == doctest::Approx(0.75));
    CHECK(ex.f1 == doctest::Approx(0.75));
    MappingResult hc = smatch_hill_climb(pred, gold, 4, 11);
    CHECK(hc.f1 == doctest::Approx(0.75));
}

TEST_CASE("disjoint singletons score zero") {
    TripleSet pred = triples_of("(a / apple)");
    TripleSet gold = triples_of("(d / dog)");
    CHECK(smatch_exact(pred, gold).f1 == doctest::Approx(0.0));
    CHECK(smatch_hill_climb(pred, gold, 4, 3).f1 == doctest::Approx(0.0));
}

TEST_CASE("swap of pred and gold exchanges precision and recall") {
    TripleSet a = triples_of("(w / want-01 :ARG0 (b / boy) :ARG1 (d / dog))");
    TripleSet b = triples_of("(w / want-01 :ARG0 (b / boy))");
    MappingResult ab = smatch_exact(a, b);
    MappingResult ba = smatch_exact(b, a);
    CHECK(ab.precision == doctest::Approx(ba.recall));
    CHECK(ab.recall == doctest::Approx(ba.precision));
    CHECK(ab.f1 == doctest::Approx(ba.f1));
}

TEST_CASE("extra pred node lowers precision denominator only") {
    TripleSet gold = triples_of("(w / want-01 :ARG0 (b / boy))");
    TripleSet pred = triples_of("(w / want-01 :ARG0 (b / boy) :mod (x / xtra))");
    MappingResult r = smatch_exact(pred, gold);
    CHECK(r.matched == 4);
    CHECK(r.gold_size == 4);
    CHECK(r.pred_size == 6);
    CHECK(r.recall == doctest::Approx(1.0));
    CHECK(r.precision == doctest::Approx(4.0 / 6.0));
}

TEST_CASE("inverse roles normalized before scoring") {
    TripleSet a = triples_of("(b / boy :ARG0-of (w / want-01))");
    TripleSet b = triples_of("(w / want-01 :ARG0 (b / boy))");
    // TOP differs (boy vs want-01) but the relation matches after normalization
    MappingResult r = smatch_exact(a, b);
    CHECK(r.matched == 3);
}

TEST_CASE("guard rejects large exact scoring") {
    AmrGraph g;
    for (int i = 0; i < 9; ++i) g.add_node("v" + std::to_string(i), "c");
    g.root = 0;
    for (int i = 1; i < 9; ++i) g.add_edge(0, "op" + std::to_string(i), i);
    CHECK_THROWS_AS(smatch_exact(to_triples(g), to_triples(g)), TooLarge);
}

TEST_CASE("score invariant under variable renaming") {
    Rng rng(99);
    for (int i = 0; i < 50; ++i) {
        AmrGraph a = random_graph(rng, 5);
        AmrGraph b = random_graph(rng, 5);
        AmrGraph b2 = b;
        for (size_t n = 0; n < b2.nodes.size(); ++n) b2.nodes[n].var = "zz" + std::to_string(n);
        MappingResult r1 = smatch_exact(to_triples(a), to_triples(b));
        MappingResult r2 = smatch_exact(to_triples(a), to_triples(b2));
        CHECK(r1.f1 == doctest::Approx(r2.f1));
    }
}

TEST_CASE("hill climb monotone in restarts") {
    Rng rng(1234);
    for (int i = 0; i < 40; ++i) {
        AmrGraph a = random_graph(rng, 6);
        AmrGraph b = random_graph(rng, 6);
        TripleSet ta = to_triples(a), tb = to_triples(b);
        int prev = -1;
        for (int restarts : {1, 4, 8}) {
            MappingResult r = smatch_hill_climb(ta, tb, restarts, 5);
            CHECK(r.matched >= prev);
            prev = r.matched;
        }
    }
}

TEST_CASE("hill climb matches exact on small random pairs") {
    Rng rng(4242);
    int agree = 0;
    const int trials = 200;
    for (int i = 0; i < trials; ++i) {
        AmrGraph a = random_graph(rng, 6);
        AmrGraph b = random_graph(rng, 6);
        MappingResult hc = smatch_hill_climb(to_triples(a), to_triples(b), 20, 1000 + i);
        MappingResult ex = smatch_exact(to_triples(a), to_triples(b));
        CHECK(hc.matched <= ex.matched);
        agree += (hc.matched == ex.matched);
    }
    CHECK(agree >= trials * 99 / 100);
}

TEST_CASE("deterministic for fixed seed") {
    Rng rng(77);
    AmrGraph a = random_graph(rng, 6);
    AmrGraph b = random_graph(rng, 6);
    MappingResult r1 = smatch_hill_climb(to_triples(a), to_triples(b), 8, 99);
    MappingResult r2 = smatch_hill_climb(to_triples(a), to_triples(b), 8, 99);
    CHECK(r1.matched == r2.matched);
    CHECK(r1.mapping == r2.mapping);
}

TEST_CASE("metric breakdown identity") {
    AmrGraph g = parse_penman(
        "(s / say-01 :ARG0 (p / person :name (n / name :op1 \"Ann\") :wiki \"Ann_X\")"
        " :ARG1 (g / go-02 :polarity -))");
    MetricSuite m = metric_breakdown(g, g, 4, 5);
    for (size_t i = 0; i < MetricSuite::names().size(); ++i) CHECK(m[i] == doctest::Approx(1.0));
}

TEST_CASE("unlabeled forgives a wrong role label") {
    AmrGraph pred = parse_penman("(w / want-01 :ARG1 (b / boy))");
    AmrGraph gold = parse_penman("(w / want-01 :ARG0 (b / boy))");
    MetricSuite m = metric_breakdown(pred, gold, 4, 5);
    CHECK(m.unlabeled == doctest::Approx(1.0));
    CHECK(m.smatch < 1.0);
}

TEST_CASE("no_wsd forgives a wrong sense") {
    AmrGraph pred = parse_penman("(w / want-02 :ARG0 (b / boy))");
    AmrGraph gold = parse_penman("(w / want-01 :ARG0 (b / boy))");
    MetricSuite m = metric_breakdown(pred, gold, 4, 5);
    CHECK(m.no_wsd == doctest::Approx(1.0));
    CHECK(m.smatch < 1.0);
    CHECK(m.concepts < 1.0);
}

TEST_CASE("srl and reentrancy columns restrict properly") {
    AmrGraph gold = parse_penman(
        "(w / want-01 :ARG0 (b / boy) :ARG1 (e / eat-01 :ARG0 b :time (t / today)))");
    AmrGraph pred_no_reent = parse_penman(
        "(w / want-01 :ARG0 (b / boy) :ARG1 (e / eat-01 :time (t / today)))");
    MetricSuite m = metric_breakdown(pred_no_reent, gold, 8, 5);
    CHECK(m.reentrancies < 1.0);
    CHECK(m.concepts == doctest::Approx(1.0));
    MetricSuite id = metric_breakdown(gold, gold, 8, 5);
    CHECK(id.reentrancies == doctest::Approx(1.0));
    CHECK(id.srl == doctest::Approx(1.0));
}

TEST_CASE("corpus scoring parallel equals serial") {
    Rng rng(31337);
    std::vector<AmrGraph> pred, gold;
    for (int i = 0; i < 30; ++i) {
        pred.push_back(random_graph(rng, 6));
        gold.push_back(random_graph(rng, 6));
    }
    CorpusScore a = score_corpus_serial(pred, gold, 4, 9);
    CorpusScore b = score_corpus_parallel(pred, gold, 4, 9, 2);
    REQUIRE(a.per_sentence.size() == b.per_sentence.size());
    for (size_t i = 0; i < a.per_sentence.size(); ++i)
        for (size_t k = 0; k < MetricSuite::names().size(); ++k)
            CHECK(a.per_sentence[i][k] == b.per_sentence[i][k]);
    CHECK(a.micro.smatch == b.micro.smatch);
}
