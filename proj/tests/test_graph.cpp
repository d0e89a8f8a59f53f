#include "amr/graph.hpp"

#include <algorithm>

#include "amr/rng.hpp"
#include "doctest.h"

using namespace amr;

TEST_CASE("parse simple graph") {
    AmrGraph g = parse_penman("(w / want-01 :ARG0 (b / boy))");
    CHECK(g.nodes.size() == 2);
    CHECK(g.edges.size() == 1);
    CHECK(g.nodes[g.root].var == "w");
    CHECK(g.nodes[g.root].concept_name == "want-01");
    CHECK(g.edges[0].role == "ARG0");
    CHECK(g.nodes[g.edges[0].src].var == "w");
    CHECK(g.nodes[g.edges[0].dst].var == "b");
}

TEST_CASE("parse reentrancy") {
    AmrGraph g = parse_penman("(a / and :op1 (b / boy) :op2 b)");
    CHECK(g.nodes.size() == 2);
    REQUIRE(g.edges.size() == 2);
    CHECK(g.edges[0].role == "op1");
    CHECK(g.edges[1].role == "op2");
    CHECK(g.edges[0].dst == g.edges[1].dst);
    CHECK(g.in_degree(g.edges[0].dst) == 2);
}

TEST_CASE("parse attributes and quoting") {
    AmrGraph g = parse_penman("(p / possible-01 :polarity - :ARG1 (g / go-02 :li \"x y\"))");
    REQUIRE(g.attrs.size() == 2);
    CHECK(g.attrs[0].role == "polarity");
    CHECK(g.attrs[0].value == "-");
    CHECK(g.attrs[1].value == "x y");
    std::string s = serialize_penman(g);
    CHECK(s.find(":polarity -") != std::string::npos);
    CHECK(s.find("\"x y\"") != std::string::npos);
}

TEST_CASE("parse errors carry kind and offset") {
    CHECK_THROWS_AS(parse_penman("(w / want-01 :ARG0 (b / boy)"), ParseError);
    try {
        parse_penman("(a / x :mod (a / y))");
        FAIL("expected DuplicateVariable");
    } catch (const ParseError& e) {
        CHECK(e.kind == ParseErrorKind::DuplicateVariable);
        CHECK(e.offset > 0);
    }
    try {
        parse_penman("(a / x :mod (b / y :mod a))");
        FAIL("expected CyclicGraph");
    } catch (const ParseError& e) {
        CHECK(e.kind == ParseErrorKind::CyclicGraph);
        CHECK(e.offset == 1);  // points at the cycle's variable declaration
    }
    // bare atoms that never get declared are constants, not dangling refs
    AmrGraph g = parse_penman("(a / x :mod b)");
    CHECK(g.attrs.size() == 1);
}

TEST_CASE("to_triples partitions and adds TOP") {
    AmrGraph g = parse_penman("(w / want-01 :ARG0 (b / boy))");
    TripleSet t = to_triples(g);
    CHECK(t.instances.size() == 2);
    CHECK(t.relations.size() == 1);
    REQUIRE(t.attributes.size() == 1);
    CHECK(std::get<1>(t.attributes[0]) == "TOP");
    CHECK(std::get<2>(t.attributes[0]) == "want-01");

    TripleSet single = to_triples(parse_penman("(a / apple)"));
    CHECK(single.instances.size() == 1);
    CHECK(single.relations.empty());
    CHECK(single.attributes.size() == 1);

    AmrGraph neg = parse_penman("(g / go-02 :polarity -)");
    TripleSet tn = to_triples(neg);
    bool has_polarity = false;
    for (const auto& [v, r, val] : tn.attributes)
        if (r == "polarity" && val == "-") has_polarity = true;
    CHECK(has_polarity);
}

TEST_CASE("triple count identity") {
    const char* cases[] = {
        "(w / want-01 :ARG0 (b / boy))",
        "(a / and :op1 (b / boy) :op2 b)",
        "(g / go-02 :polarity - :ARG0 (p / person :name (n / name :op1 \"Ann\")))",
    };
    for (const char* text : cases) {
        AmrGraph g = parse_penman(text);
        TripleSet t = to_triples(g);
        CHECK(t.size() == g.nodes.size() + g.edges.size() + g.attrs.size() + 1);
    }
}

TEST_CASE("serialize round trip") {
    const char* cases[] = {
        "(w / want-01 :ARG0 (b / boy))",
        "(a / and :op1 (b / boy) :op2 b)",
        "(a / apple)",
        "(p / person :name (n / name :op1 \"Barack\" :op2 \"Obama\") :wiki \"Barack_Obama\")",
    };
    for (const char* text : cases) {
        AmrGraph g = parse_penman(text);
        AmrGraph h = parse_penman(serialize_penman(g));
        CHECK(isomorphic(g, h));
    }
}

TEST_CASE("reentrant node emitted once") {
    AmrGraph g = parse_penman("(a / and :op1 (b / boy) :op2 b)");
    std::string s = serialize_penman(g, false);
    size_t first = s.find("(b / boy)");
    CHECK(first != std::string::npos);
    CHECK(s.find("(b / boy)", first + 1) == std::string::npos);
    CHECK(s.find(":op2 b") != std::string::npos);
}

TEST_CASE("single node serialization") {
    AmrGraph g;
    g.root = g.add_node("a", "apple");
    CHECK(serialize_penman(g) == "(a / apple)");
}

namespace {

// random rooted DAG with reentrancies, every node reachable from the root
AmrGraph random_dag(Rng& rng, int max_nodes) {
    AmrGraph g;
    int n = 1 + static_cast<int>(rng.below(max_nodes));
    const char* concepts[] = {"alpha", "beta-01", "gamma", "delta-02", "eps"};
    for (int i = 0; i < n; ++i)
        g.add_node("v" + std::to_string(i), concepts[rng.below(5)]);
    g.root = 0;
    const char* roles[] = {"ARG0", "ARG1", "op1", "mod", "time"};
    // spanning edges parent < child keep it acyclic and reachable
    for (int i = 1; i < n; ++i)
        g.add_edge(static_cast<int>(rng.below(i)), roles[rng.below(5)], i);
    for (int extra = static_cast<int>(rng.below(3)); extra > 0; --extra) {
        int a = static_cast<int>(rng.below(n)), b = static_cast<int>(rng.below(n));
        if (a < b) g.add_edge(a, roles[rng.below(5)], b);
    }
    if (rng.bernoulli(0.5)) g.add_attr(static_cast<int>(rng.below(n)), "polarity", "-");
    return g;
}

}  // namespace

TEST_CASE("property: serialize/parse isomorphism on random DAGs") {
    Rng rng(20240601);
    for (int iter = 0; iter < 200; ++iter) {
        AmrGraph g = random_dag(rng, 12);
        AmrGraph h = parse_penman(serialize_penman(g));
        REQUIRE(isomorphic(g, h));
    }
}

TEST_CASE("corpus io with metadata") {
    std::string text =
        "# ::id s1\n# ::snt the boy wants\n# ::tok the boy wants\n"
        "(w / want-01 :ARG0 (b / boy))\n\n"
        "# ::id s2\n# ::snt go\n(g / go-02)\n";
    std::vector<CorpusEntry> corpus = parse_corpus(text);
    REQUIRE(corpus.size() == 2);
    CHECK(*corpus[0].meta_value("id") == "s1");
    CHECK(corpus[0].tokens() == std::vector<std::string>{"the", "boy", "wants"});
    CHECK(corpus[1].graph.nodes.size() == 1);

    std::vector<CorpusEntry> again = parse_corpus(format_corpus(corpus));
    REQUIRE(again.size() == 2);
    CHECK(isomorphic(again[0].graph, corpus[0].graph));
    CHECK(*again[1].meta_value("id") == "s2");
}

TEST_CASE("ensure_connected wraps orphan pieces") {
    AmrGraph g;
    int a = g.add_node("a", "alpha");
    g.add_node("b", "beta");
    g.root = a;
    AmrGraph fixed = ensure_connected(g);
    CHECK(fixed.connected_from_root());
    AmrGraph reparsed = parse_penman(serialize_penman(fixed));
    CHECK(reparsed.nodes.size() == 3);

    AmrGraph ok = parse_penman("(w / want-01 :ARG0 (b / boy))");
    CHECK(isomorphic(ensure_connected(ok), ok));
}
