#include "amr/preprocess.hpp"

#include <cmath>
#include <cstdio>

#include "amr/synth.hpp"
#include "doctest.h"

using namespace amr;

namespace {

ContextualVectors make_cv(int words, int pieces_per_word, int layers, int dim) {
    ContextualVectors cv;
    cv.dim = dim;
    for (int w = 0; w < words; ++w) {
        int start = static_cast<int>(cv.pieces.size());
        for (int p = 0; p < pieces_per_word; ++p)
            cv.pieces.push_back("w" + std::to_string(w) + "p" + std::to_string(p));
        cv.word_spans.emplace_back(start, start + pieces_per_word);
    }
    cv.layers.assign(static_cast<size_t>(layers),
                     std::vector<std::vector<double>>(
                         cv.pieces.size(), std::vector<double>(static_cast<size_t>(dim), 0.0)));
    return cv;
}

}  // namespace

TEST_CASE("pooling identical layers is the identity") {
    ContextualVectors cv = make_cv(1, 1, 4, 3);
    for (auto& layer : cv.layers) layer[0] = {1.0, 2.0, 3.0};
    std::vector<std::vector<double>> out = pool_vectors(cv);
    REQUIRE(out.size() == 1);
    CHECK(out[0] == std::vector<double>{1.0, 2.0, 3.0});
}

TEST_CASE("pooling averages pieces") {
    ContextualVectors cv = make_cv(1, 2, 4, 2);
    for (auto& layer : cv.layers) {
        layer[0] = {2.0, 4.0};
        layer[1] = {4.0, 8.0};
    }
    std::vector<std::vector<double>> out = pool_vectors(cv);
    CHECK(out[0][0] == doctest::Approx(3.0));
    CHECK(out[0][1] == doctest::Approx(6.0));
}

TEST_CASE("pooling uses only the last four layers") {
    ContextualVectors cv = make_cv(1, 1, 6, 1);
    cv.layers[0][0] = {100.0};  // ignored
    cv.layers[1][0] = {100.0};  // ignored
    cv.layers[2][0] = {1.0};
    cv.layers[3][0] = {2.0};
    cv.layers[4][0] = {3.0};
    cv.layers[5][0] = {6.0};
    std::vector<std::vector<double>> out = pool_vectors(cv);
    CHECK(out[0][0] == doctest::Approx(3.0));  // (1+2+3+6)/4
}

TEST_CASE("pooling errors") {
    ContextualVectors three = make_cv(1, 1, 3, 2);
    CHECK_THROWS_AS(pool_vectors(three), PreprocessError);
    try {
        pool_vectors(three);
    } catch (const PreprocessError& e) {
        CHECK(e.kind == "LayerCount");
    }
    ContextualVectors gap = make_cv(2, 1, 4, 2);
    gap.word_spans[1] = {2, 3};  // skips piece 1
    gap.pieces.push_back("extra");
    for (auto& layer : gap.layers) layer.emplace_back(2, 0.0);
    try {
        pool_vectors(gap);
        FAIL("expected SpanGap");
    } catch (const PreprocessError& e) {
        CHECK(e.kind == "SpanGap");
    }
}

TEST_CASE("vectors file round trip") {
    SynthConfig cfg;
    cfg.sentences = 3;
    std::vector<CorpusEntry> corpus = generate_synthetic_corpus(cfg);
    std::vector<ContextualVectors> vecs = synthetic_vectors(corpus, 6, 4, 99);
    std::string path = "vectors_test.txt";
    write_vectors_file(vecs, path);
    std::vector<ContextualVectors> back = read_vectors_file(path);
    REQUIRE(back.size() == vecs.size());
    for (size_t i = 0; i < vecs.size(); ++i) {
        CHECK(back[i].pieces == vecs[i].pieces);
        CHECK(back[i].word_spans == vecs[i].word_spans);
        CHECK(back[i].layers == vecs[i].layers);
    }
    std::remove(path.c_str());
}

TEST_CASE("linear tagger fits a separable toy set") {
    std::vector<TaggerExample> ex;
    Rng rng(5);
    for (int i = 0; i < 40; ++i) {
        double cls = i % 2 ? 1.0 : -1.0;
        ex.push_back({{cls + rng.real(-0.2, 0.2), rng.real(-1, 1)}, i % 2 ? "A" : "B"});
    }
    LinearTagger t = train_linear_tagger(ex, 1e-4);
    int correct = 0;
    for (const TaggerExample& e : ex) correct += t.predict(e.x) == e.label;
    CHECK(correct == 40);
}

TEST_CASE("degenerate label set rejected") {
    std::vector<TaggerExample> ex{{{1.0}, "A"}, {{2.0}, "A"}};
    CHECK_THROWS_AS(train_linear_tagger(ex, 0.0), PreprocessError);
}

TEST_CASE("duplicating examples keeps the decision function") {
    std::vector<TaggerExample> ex;
    Rng rng(6);
    for (int i = 0; i < 20; ++i)
        ex.push_back({{rng.real(-1, 1), rng.real(-1, 1)}, i % 2 ? "A" : "B"});
    std::vector<TaggerExample> doubled = ex;
    doubled.insert(doubled.end(), ex.begin(), ex.end());
    LinearTagger t1 = train_linear_tagger(ex, 1e-3);
    LinearTagger t2 = train_linear_tagger(doubled, 1e-3);
    for (double x = -1; x <= 1; x += 0.23)
        for (double y = -1; y <= 1; y += 0.23)
            CHECK(t1.predict({x, y}) == t2.predict({x, y}));
}

TEST_CASE("tagger training loss decreases") {
    std::vector<TaggerExample> ex;
    Rng rng(7);
    for (int i = 0; i < 30; ++i)
        ex.push_back({{rng.real(-1, 1)}, i % 3 ? "X" : "Y"});
    LinearTagger t = train_linear_tagger(ex, 1e-3);
    // against the zero-weight model: log(2) per example
    double fit_nll = 0;
    for (const TaggerExample& e : ex) {
        // loss of the trained model
        double sx = t.weights[0] * e.x[0] + t.weights[1];
        double sy = t.weights[2] * e.x[0] + t.weights[3];
        double mx = std::max(sx, sy);
        double lz = mx + std::log(std::exp(sx - mx) + std::exp(sy - mx));
        fit_nll += (lz - (e.label == "X" ? sx : sy)) / ex.size();
    }
    CHECK(fit_nll < std::log(2.0));
}

TEST_CASE("tagger save/load round trip") {
    std::vector<TaggerExample> ex{{{1.0, 0.0}, "A"}, {{-1.0, 0.0}, "B"}, {{0.9, 0.1}, "A"}};
    LinearTagger t = train_linear_tagger(ex, 1e-3);
    std::string path = "tagger_test.txt";
    t.save(path);
    LinearTagger back = LinearTagger::load(path);
    CHECK(back.labels == t.labels);
    CHECK(back.dim == t.dim);
    for (double x = -1; x <= 1; x += 0.37)
        CHECK(back.predict({x, 0.2}) == t.predict({x, 0.2}));
    std::remove(path.c_str());
}

TEST_CASE("jackknife tags every sentence deterministically") {
    SynthConfig cfg;
    cfg.sentences = 12;
    std::vector<CorpusEntry> corpus = generate_synthetic_corpus(cfg);
    std::vector<ContextualVectors> cv = synthetic_vectors(corpus, 16, 4, 3);
    std::vector<std::vector<std::vector<double>>> vecs;
    std::vector<std::vector<std::string>> labels;
    for (size_t i = 0; i < corpus.size(); ++i) {
        vecs.push_back(pool_vectors(cv[i]));
        labels.push_back(concept_labels(corpus[i]));
        REQUIRE(vecs.back().size() == labels.back().size());
    }
    std::vector<std::vector<std::string>> tags = jackknife_tags(vecs, labels, 4, 1e-3);
    REQUIRE(tags.size() == corpus.size());
    for (size_t i = 0; i < tags.size(); ++i) CHECK(tags[i].size() == labels[i].size());
    std::vector<std::vector<std::string>> again = jackknife_tags(vecs, labels, 4, 1e-3);
    CHECK(tags == again);

    CHECK_THROWS_AS(jackknife_tags(vecs, labels, 1, 1e-3), PreprocessError);
    std::vector<std::vector<std::vector<double>>> two(vecs.begin(), vecs.begin() + 2);
    std::vector<std::vector<std::string>> two_l(labels.begin(), labels.begin() + 2);
    CHECK_THROWS_AS(jackknife_tags(two, two_l, 10, 1e-3), PreprocessError);
}

TEST_CASE("concept labels put the concept on the span head") {
    SynthConfig cfg;
    cfg.sentences = 5;
    std::vector<CorpusEntry> corpus = generate_synthetic_corpus(cfg);
    for (const CorpusEntry& e : corpus) {
        std::vector<std::string> labels = concept_labels(e);
        int non_none = 0;
        for (const std::string& l : labels) non_none += l != kNoneLabel;
        CHECK(non_none > 0);
        CHECK(labels.size() == e.tokens().size());
    }
}

TEST_CASE("tag file round trip") {
    std::vector<std::vector<std::pair<std::string, std::string>>> sents{
        {{"the", "DET"}, {"boy", "NN"}},
        {{"go", "VB"}},
    };
    std::string path = "tags_test.tsv";
    write_tag_file(sents, path);
    auto back = read_tag_file(path);
    CHECK(back == sents);
    std::remove(path.c_str());
}

TEST_CASE("wiki dictionary keeps the most frequent link") {
    std::vector<CorpusEntry> corpus = parse_corpus(
        "(p / person :wiki \"Ann_A\" :name (n / name :op1 \"Ann\"))\n\n"
        "(p / person :wiki \"Ann_B\" :name (n / name :op1 \"Ann\"))\n\n"
        "(p / person :wiki \"Ann_B\" :name (n / name :op1 \"Ann\"))\n\n"
        "(q / city :wiki \"Rome\" :name (n / name :op1 \"Roma\" :op2 \"Citta\"))\n");
    WikiDictionary dict = WikiDictionary::build(corpus);
    CHECK(dict.entries.at("Ann").first == "Ann_B");
    CHECK(dict.entries.at("Ann").second == 2);
    CHECK(dict.entries.at("Roma Citta").first == "Rome");

    std::string path = "wiki_test.tsv";
    dict.save(path);
    WikiDictionary back = WikiDictionary::load(path);
    CHECK(back.entries == dict.entries);
    std::remove(path.c_str());

    // ties break lexicographically
    std::vector<CorpusEntry> tie = parse_corpus(
        "(p / person :wiki \"Zed\" :name (n / name :op1 \"Bo\"))\n\n"
        "(p / person :wiki \"Abe\" :name (n / name :op1 \"Bo\"))\n");
    CHECK(WikiDictionary::build(tie).entries.at("Bo").first == "Abe");
}

TEST_CASE("wikify precedence: dictionary, then linker, then '-'") {
    WikiDictionary dict;
    dict.entries["Ann"] = {"Ann_(dict)", 3};
    std::map<std::string, std::string> linker{{"Ann", "Ann_(linker)"}, {"Bo", "Bo_(linker)"}};
    AmrGraph g = parse_penman(
        "(s / see-01 :ARG0 (p / person :name (n / name :op1 \"Ann\"))"
        " :ARG1 (q / person :name (n2 / name :op1 \"Bo\"))"
        " :ARG2 (r / person :name (n3 / name :op1 \"Cy\")))");
    AmrGraph out = wikify(g, dict, linker);
    std::map<std::string, std::string> wiki;
    for (const AmrGraph::Attr& a : out.attrs)
        if (a.role == "wiki") wiki[out.nodes[a.node].var] = a.value;
    CHECK(wiki.at("p") == "Ann_(dict)");   // dictionary beats linker
    CHECK(wiki.at("q") == "Bo_(linker)");  // linker fallback
    CHECK(wiki.at("r") == "-");            // neither

    AmrGraph stripped = strip_wiki(out);
    for (const AmrGraph::Attr& a : stripped.attrs) CHECK(a.role != "wiki");
    CHECK(stripped.nodes.size() == out.nodes.size());
}

TEST_CASE("wikify leaves existing wiki attributes alone") {
    WikiDictionary dict;
    dict.entries["Ann"] = {"Ann_(dict)", 1};
    AmrGraph g =
        parse_penman("(p / person :wiki \"Kept\" :name (n / name :op1 \"Ann\"))");
    AmrGraph out = wikify(g, dict, {});
    int wiki_count = 0;
    for (const AmrGraph::Attr& a : out.attrs)
        if (a.role == "wiki") {
            ++wiki_count;
            CHECK(a.value == "Kept");
        }
    CHECK(wiki_count == 1);
}
