#include "amr/align.hpp"

#include "doctest.h"

using namespace amr;

TEST_CASE("isi path resolution") {
    AmrGraph g = parse_penman("(w / want-01 :ARG0 (b / boy))");
    AlignmentMap m = read_isi_alignments("2-1.1 0-1", g);
    REQUIRE(m.size() == 2);
    CHECK(m.span(g.find_var("b"))->start == 2);
    CHECK(m.span(g.find_var("w"))->start == 0);
    CHECK(m.entries.at(g.find_var("b")).source == AlignSource::SEM);
}

TEST_CASE("jamr span and path") {
    AmrGraph g = parse_penman("(w / want-01 :ARG0 (b / boy))");
    AlignmentMap m = read_jamr_alignments("0-1|0 2-4|0.0", g);
    CHECK(m.span(g.find_var("w")) == Span{0, 0});
    CHECK(m.span(g.find_var("b")) == Span{2, 3});
    CHECK(m.entries.at(g.find_var("w")).source == AlignSource::JAMR);
}

TEST_CASE("bad path reports line") {
    AmrGraph g = parse_penman("(w / want-01 :ARG0 (b / boy))");
    try {
        read_isi_alignments("9-1.7", g);
        FAIL("expected BadPath");
    } catch (const AlignError& e) {
        CHECK(e.kind == "BadPath");
        CHECK(e.line == 1);
    }
    CHECK_THROWS_AS(read_jamr_alignments("3-2|0", g), AlignError);  // end <= start
}

TEST_CASE("percolation prefers :name") {
    // person unaligned; name child aligned 2..3
    AmrGraph g = parse_penman(
        "(p / person :name (n / name :op1 \"Ann\") :mod (m / old))");
    AlignmentMap sem;
    sem.entries[g.find_var("n")] = {{2, 3}, AlignSource::SEM};
    sem.entries[g.find_var("m")] = {{0, 0}, AlignSource::SEM};
    AlignmentMap out = merge_alignments(g, sem, {});
    REQUIRE(out.aligned(g.find_var("p")));
    CHECK(out.span(g.find_var("p")) == Span{2, 3});
    CHECK(out.entries.at(g.find_var("p")).source == AlignSource::PERCOLATED);
}

TEST_CASE("percolation prefers :unit for quantities and skips :mod") {
    AmrGraph g = parse_penman(
        "(q / monetary-quantity :unit (u / dollar) :mod (m / mere))");
    AlignmentMap sem;
    sem.entries[g.find_var("u")] = {{5, 5}, AlignSource::SEM};
    sem.entries[g.find_var("m")] = {{4, 4}, AlignSource::SEM};
    AlignmentMap out = merge_alignments(g, sem, {});
    CHECK(out.span(g.find_var("q")) == Span{5, 5});
}

TEST_CASE(":ARG2 wins for have-org-role") {
    AmrGraph g = parse_penman(
        "(h / have-org-role :ARG0 (p / person) :ARG2 (o / officer))");
    AlignmentMap sem;
    sem.entries[g.find_var("p")] = {{0, 0}, AlignSource::SEM};
    sem.entries[g.find_var("o")] = {{3, 3}, AlignSource::SEM};
    AlignmentMap out = merge_alignments(g, sem, {});
    CHECK(out.span(g.find_var("h")) == Span{3, 3});
}

TEST_CASE("jamr backfill then second percolation") {
    // w has only a :mod child so step 2 cannot fill it; JAMR fills b, then the
    // second pass percolates b upward through :ARG0
    AmrGraph g = parse_penman("(x / x1 :mod (w / want-01 :ARG0 (b / boy)))");
    AlignmentMap sem;
    AlignmentMap jamr;
    jamr.entries[g.find_var("b")] = {{0, 1}, AlignSource::JAMR};
    MergeTrace trace;
    AlignmentMap out = merge_alignments(g, sem, jamr, &trace);
    CHECK(out.entries.at(g.find_var("b")).source == AlignSource::JAMR);
    CHECK(out.span(g.find_var("b")) == Span{0, 1});
    REQUIRE(out.aligned(g.find_var("w")));
    CHECK(out.entries.at(g.find_var("w")).source == AlignSource::PERCOLATED);
    CHECK(trace.after_sem == 0);
    CHECK(trace.after_percolate == 0);
    CHECK(trace.after_jamr == 1);
    CHECK(trace.after_percolate2 == 2);  // w percolates, x blocked by :mod
    CHECK_FALSE(out.aligned(g.find_var("x")));
}

TEST_CASE("sem entries never overwritten and merge is idempotent") {
    AmrGraph g = parse_penman("(w / want-01 :ARG0 (b / boy))");
    AlignmentMap sem;
    sem.entries[g.find_var("w")] = {{1, 1}, AlignSource::SEM};
    AlignmentMap jamr;
    jamr.entries[g.find_var("w")] = {{0, 0}, AlignSource::JAMR};
    jamr.entries[g.find_var("b")] = {{2, 2}, AlignSource::JAMR};
    AlignmentMap out = merge_alignments(g, sem, jamr);
    CHECK(out.span(g.find_var("w")) == Span{1, 1});
    CHECK(out.entries.at(g.find_var("w")).source == AlignSource::SEM);
    CHECK(out.span(g.find_var("b")) == Span{2, 2});

    AlignmentMap again = merge_alignments(g, out, jamr);
    REQUIRE(again.size() == out.size());
    for (const auto& [node, e] : out.entries) {
        CHECK(again.entries.at(node).span == e.span);
        CHECK(again.entries.at(node).source == e.source);
    }
}

TEST_CASE("coverage monotone across steps") {
    AmrGraph g = parse_penman(
        "(s / say-01 :ARG0 (p / person :name (n / name :op1 \"Ann\")) :ARG1 (g2 / go-02))");
    AlignmentMap sem;
    sem.entries[g.find_var("n")] = {{0, 0}, AlignSource::SEM};
    AlignmentMap jamr;
    jamr.entries[g.find_var("g2")] = {{2, 2}, AlignSource::JAMR};
    MergeTrace t;
    merge_alignments(g, sem, jamr, &t);
    CHECK(t.after_sem <= t.after_percolate);
    CHECK(t.after_percolate <= t.after_jamr);
    CHECK(t.after_jamr <= t.after_percolate2);
}

TEST_CASE("leftmost child wins ties within a class") {
    AmrGraph g = parse_penman("(a / and :op1 (b / b1) :op2 (c / c1))");
    AlignmentMap sem;
    sem.entries[g.find_var("b")] = {{4, 4}, AlignSource::SEM};
    sem.entries[g.find_var("c")] = {{1, 1}, AlignSource::SEM};
    AlignmentMap out = merge_alignments(g, sem, {});
    CHECK(out.span(g.find_var("a")) == Span{1, 1});
}

TEST_CASE("alignment meta round trip") {
    CorpusEntry e;
    e.graph = parse_penman("(w / want-01 :ARG0 (b / boy))");
    e.set_meta("tok", "the boy wants");
    AlignmentMap m;
    m.entries[e.graph.find_var("w")] = {{2, 2}, AlignSource::SEM};
    m.entries[e.graph.find_var("b")] = {{1, 1}, AlignSource::JAMR};
    e.set_meta("alignments", format_alignments(e.graph, m));
    AlignmentMap back = parse_alignment_meta(e);
    REQUIRE(back.size() == 2);
    CHECK(back.span(e.graph.find_var("w")) == Span{2, 2});
    CHECK(back.span(e.graph.find_var("b")) == Span{1, 1});
}
