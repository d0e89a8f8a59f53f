#include "amr/model.hpp"

#include <cmath>
#include <cstdio>

#include "doctest.h"

using namespace amr;

namespace {

ParserModel tiny_model(bool attention, uint64_t seed = 5, int hidden = 6) {
    ModelConfig cfg;
    cfg.word_dim = 5;
    cfg.input_dim = 4;
    cfg.hidden_dim = hidden;
    cfg.action_dim = 3;
    cfg.label_dim = 3;
    cfg.attention = attention;
    Vocab words, concepts, roles;
    for (const char* w : {"the", "boy", "wants", "a", "dog"}) words.add(w);
    for (const char* c : {"boy", "want-01", "dog", "polarity/-"}) concepts.add(c);
    for (const char* r : {"ARG0", "ARG1", "mod"}) roles.add(r);
    return ParserModel::create(cfg, words, concepts, roles, {}, seed);
}

SentenceFeatures feats(const std::vector<std::string>& toks) {
    SentenceFeatures f;
    f.tokens = toks;
    return f;
}

void zero_param(ParserModel& m, const std::string& name) {
    for (double& x : m.params().get(name).value.v) x = 0.0;
}

}  // namespace

TEST_CASE("encoder emits one state per token with fixed width") {
    ParserModel m = tiny_model(true);
    Tape tape;
    ModelRun run(m, tape, feats({"the", "boy", "wants"}));
    REQUIRE(run.encoder_states().size() == 3);
    const int enc_dim = 2 * (m.config().hidden_dim / 2);
    for (Var h : run.encoder_states())
        CHECK(tape.val(h).shape == std::vector<int>{enc_dim});

    // reversing the sentence changes values but not shapes
    Tape tape2;
    ModelRun rev(m, tape2, feats({"wants", "boy", "the"}));
    REQUIRE(rev.encoder_states().size() == 3);
    CHECK(tape2.val(rev.encoder_states()[0]).shape == std::vector<int>{enc_dim});
    CHECK(tape2.val(rev.encoder_states()[0]).v != tape.val(run.encoder_states()[0]).v);
}

TEST_CASE("zero attention matrix gives uniform weights and mean context") {
    ParserModel m = tiny_model(true);
    zero_param(m, "att.wa");
    Tape tape;
    ModelRun run(m, tape, feats({"the", "boy", "wants"}));
    ParserState s = ParserState::init({"the", "boy", "wants"});
    run.score_step(s);
    REQUIRE(run.last_alpha().has_value());
    const Tensor& alpha = tape.val(*run.last_alpha());
    REQUIRE(alpha.v.size() == 3);
    for (double a : alpha.v) CHECK(a == doctest::Approx(1.0 / 3));
}

TEST_CASE("single token sentence puts all attention on it") {
    ParserModel m = tiny_model(true);
    Tape tape;
    ModelRun run(m, tape, feats({"boy"}));
    ParserState s = ParserState::init({"boy"});
    run.score_step(s);
    const Tensor& alpha = tape.val(*run.last_alpha());
    REQUIRE(alpha.v.size() == 1);
    CHECK(alpha.v[0] == doctest::Approx(1.0));
}

TEST_CASE("attention matches a scalar recomputation") {
    ParserModel m = tiny_model(true);
    Tape tape;
    ModelRun run(m, tape, feats({"boy", "wants"}));
    ParserState s = ParserState::init({"boy", "wants"});
    run.score_step(s);

    // recompute e_i = a^T Wa h_i with plain loops
    const Tensor& a = tape.val(run.history_summary());
    const Tensor& wa = m.params().get("att.wa").value;
    std::vector<double> e;
    for (Var hv : run.encoder_states()) {
        const Tensor& h = tape.val(hv);
        double s_i = 0;
        for (int r = 0; r < wa.shape[0]; ++r)
            for (int c = 0; c < wa.shape[1]; ++c)
                s_i += a.v[static_cast<size_t>(r)] * wa.v[static_cast<size_t>(r) * wa.shape[1] + c] *
                       h.v[static_cast<size_t>(c)];
        e.push_back(s_i);
    }
    double mx = std::max(e[0], e[1]);
    double z = std::exp(e[0] - mx) + std::exp(e[1] - mx);
    const Tensor& alpha = tape.val(*run.last_alpha());
    CHECK(alpha.v[0] == doctest::Approx(std::exp(e[0] - mx) / z).epsilon(1e-12));
    CHECK(alpha.v[1] == doctest::Approx(std::exp(e[1] - mx) / z).epsilon(1e-12));
    CHECK(alpha.v[0] + alpha.v[1] == doctest::Approx(1.0).epsilon(1e-9));

    // the context vector is the alpha-weighted sum of the encoder states
    const Tensor& h0 = tape.val(run.encoder_states()[0]);
    const Tensor& h1 = tape.val(run.encoder_states()[1]);
    REQUIRE(run.last_context().has_value());
    const Tensor& ctx = tape.val(*run.last_context());
    for (size_t d = 0; d < h0.v.size(); ++d) {
        double expect = alpha.v[0] * h0.v[d] + alpha.v[1] * h1.v[d];
        CHECK(ctx.v[d] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("all-zero fusion collapses to ReLU(d)") {
    ParserModel m = tiny_model(true);
    for (const char* p : {"state.w", "fuse.w1_dec", "fuse.w1_att", "fuse.w2_dec", "fuse.w2_att"})
        zero_param(m, p);
    auto& d = m.params().get("state.d").value.v;
    for (size_t i = 0; i < d.size(); ++i) d[i] = (i % 2) ? 0.5 : -0.5;
    Tape tape;
    ModelRun run(m, tape, feats({"boy"}));
    ParserState s = ParserState::init({"boy"});
    StepScores scores = run.score_step(s);
    const Tensor& st = tape.val(scores.s_t);
    for (size_t i = 0; i < st.v.size(); ++i)
        CHECK(st.v[i] == doctest::Approx(std::max(0.0, d[i])));
}

TEST_CASE("no-attention state equals the plain formula bit exactly") {
    ParserModel m = tiny_model(false);
    Tape tape;
    ModelRun run(m, tape, feats({"the", "boy"}));
    ParserState s = ParserState::init({"the", "boy"});
    run.apply(s, {ActionKind::SHIFT, ""});
    s.apply({ActionKind::SHIFT, ""});
    StepScores scores = run.score_step(s);

    const Tensor& st = tape.val(run.stack_summary());
    const Tensor& b = tape.val(run.buffer_summary());
    const Tensor& a = tape.val(run.history_summary());
    const Tensor& w = m.params().get("state.w").value;
    const Tensor& d = m.params().get("state.d").value;
    std::vector<double> cat;
    cat.insert(cat.end(), st.v.begin(), st.v.end());
    cat.insert(cat.end(), b.v.begin(), b.v.end());
    cat.insert(cat.end(), a.v.begin(), a.v.end());
    REQUIRE(static_cast<int>(cat.size()) == w.shape[1]);
    for (int r = 0; r < w.shape[0]; ++r) {
        double acc = d.v[static_cast<size_t>(r)];
        for (int c = 0; c < w.shape[1]; ++c)
            acc += w.v[static_cast<size_t>(r) * w.shape[1] + c] * cat[static_cast<size_t>(c)];
        double expect = std::max(0.0, acc);
        CHECK(tape.val(scores.s_t).v[static_cast<size_t>(r)] == expect);  // bit exact
    }
}

TEST_CASE("single legal action gets probability one") {
    ParserModel m = tiny_model(true);
    Tape tape;
    ModelRun run(m, tape, feats({"the", "boy"}));
    ParserState s = ParserState::init({"the", "boy"});
    StepScores scores = run.score_step(s);
    REQUIRE(scores.legal == std::vector<ActionKind>{ActionKind::SHIFT});
    CHECK(std::exp(tape.val(scores.action_logp).v[0]) == doctest::Approx(1.0));
}

TEST_CASE("masked softmax equals mask-then-renormalize") {
    ParserModel m = tiny_model(true);
    Tape tape;
    ModelRun run(m, tape, feats({"boy"}));
    ParserState s = ParserState::init({"boy"});
    s.apply({ActionKind::SHIFT, ""});
    run.apply(ParserState::init({"boy"}), {ActionKind::SHIFT, ""});
    StepScores scores = run.score_step(s);
    REQUIRE(scores.legal.size() > 1);

    // full softmax then renormalize over the legal subset
    const Tensor& w = m.params().get("head.action.w").value;
    const Tensor& b = m.params().get("head.action.b").value;
    const Tensor& st = tape.val(scores.s_t);
    std::vector<double> logits(kActionKinds);
    for (int r = 0; r < kActionKinds; ++r) {
        double acc = b.v[static_cast<size_t>(r)];
        for (int c = 0; c < w.shape[1]; ++c)
            acc += w.v[static_cast<size_t>(r) * w.shape[1] + c] * st.v[static_cast<size_t>(c)];
        logits[static_cast<size_t>(r)] = acc;
    }
    double z = 0;
    for (double l : logits) z += std::exp(l);
    double masked_z = 0;
    for (ActionKind k : scores.legal) masked_z += std::exp(logits[static_cast<size_t>(k)]) / z;
    for (size_t i = 0; i < scores.legal.size(); ++i) {
        double expect =
            (std::exp(logits[static_cast<size_t>(scores.legal[i])]) / z) / masked_z;
        CHECK(std::exp(tape.val(scores.action_logp).v[i]) == doctest::Approx(expect));
    }
}

TEST_CASE("label head picks the family and distributions normalize") {
    ParserModel m = tiny_model(true);
    CHECK(payload_kind(ActionKind::SHIFT) == PayloadKind::None);
    CHECK(payload_kind(ActionKind::CONFIRM) == PayloadKind::Concept);
    CHECK(payload_kind(ActionKind::LEFT_ARC) == PayloadKind::Role);
    Tape tape;
    ModelRun run(m, tape, feats({"boy"}));
    ParserState s = ParserState::init({"boy"});
    StepScores scores = run.score_step(s);
    for (PayloadKind family : {PayloadKind::Concept, PayloadKind::Role}) {
        Var lp = run.label_logp(scores.s_t, family);
        CHECK(tape.val(lp).v.size() == static_cast<size_t>(m.family_size(family)));
        double z = 0;
        for (double x : tape.val(lp).v) {
            z += std::exp(x);
            CHECK(std::exp(x) > 0.0);
        }
        CHECK(z == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("gradient check through a full parser step") {
    ParserModel m = tiny_model(true, 11, 4);
    std::vector<Action> actions{{ActionKind::SHIFT, ""},
                                {ActionKind::REDUCE, ""},
                                {ActionKind::SHIFT, ""},
                                {ActionKind::CONFIRM, "boy"},
                                {ActionKind::SHIFT, ""},
                                {ActionKind::CONFIRM, "want-01"},
                                {ActionKind::LEFT_ARC, "ARG0"},
                                {ActionKind::SWAP, ""},
                                {ActionKind::SHIFT, ""},
                                {ActionKind::DEPENDENT, "polarity/-"},
                                {ActionKind::REDUCE, ""},
                                {ActionKind::FINISH, ""}};
    auto f = [&](Tape& tape) -> Var {
        SentenceFeatures fs = feats({"the", "boy", "wants"});
        ParserState state = ParserState::init(fs.tokens);
        ModelRun run(m, tape, fs);
        std::vector<Var> terms;
        for (const Action& a : actions) {
            StepScores scores = run.score_step(state);
            for (size_t i = 0; i < scores.legal.size(); ++i)
                if (scores.legal[i] == a.kind)
                    terms.push_back(tape.pick(scores.action_logp, static_cast<int>(i)));
            if (payload_kind(a.kind) != PayloadKind::None)
                terms.push_back(tape.pick(run.label_logp_for(scores.s_t, a.kind),
                                          m.subset_position(a)));
            run.apply(state, a);
            state.apply(a);
        }
        return tape.scale(tape.add_many(terms), -1.0);
    };
    CHECK(gradient_check(m.params(), f) < 1e-4);
}

TEST_CASE("model save/load reproduces forwards bit exactly") {
    ParserModel m = tiny_model(true);
    std::string path = "model_roundtrip.bin";
    m.save(path);
    ParserModel loaded = ParserModel::load(path);
    CHECK(loaded.config().hidden_dim == m.config().hidden_dim);
    CHECK(loaded.config().attention == m.config().attention);
    CHECK(loaded.words().size() == m.words().size());
    CHECK(loaded.concepts().items() == m.concepts().items());

    SentenceFeatures fs = feats({"the", "boy", "wants"});
    Tape t1, t2;
    ModelRun r1(m, t1, fs), r2(loaded, t2, fs);
    ParserState s = ParserState::init(fs.tokens);
    StepScores a = r1.score_step(s), b = r2.score_step(s);
    CHECK(t1.val(a.action_logp).v == t2.val(b.action_logp).v);
    std::remove(path.c_str());
}

TEST_CASE("tag channels contribute learned embeddings with UNK fallback") {
    ModelConfig cfg;
    cfg.word_dim = 4;
    cfg.input_dim = 4;
    cfg.hidden_dim = 4;
    cfg.tag_dim = 2;
    cfg.attention = false;
    cfg.tag_channels = {"pos"};
    Vocab words, concepts, roles, pos;
    words.add("boy");
    concepts.add("boy");
    roles.add("ARG0");
    pos.add("NN");
    std::map<std::string, Vocab> tags;
    tags.emplace("pos", pos);
    ParserModel m = ParserModel::create(cfg, words, concepts, roles, tags, 3);

    SentenceFeatures with_tag;
    with_tag.tokens = {"boy"};
    with_tag.tags["pos"] = {"NN"};
    SentenceFeatures without_tag;
    without_tag.tokens = {"boy"};

    Tape t1, t2, t3;
    ModelRun a(m, t1, with_tag), b(m, t2, without_tag);
    SentenceFeatures unk_tag;
    unk_tag.tokens = {"boy"};
    unk_tag.tags["pos"] = {"ZZZ"};
    ModelRun c(m, t3, unk_tag);
    ParserState s = ParserState::init({"boy"});
    const Tensor& va = t1.val(a.score_step(s).s_t);
    const Tensor& vb = t2.val(b.score_step(s).s_t);
    const Tensor& vc = t3.val(c.score_step(s).s_t);
    CHECK(va.v != vb.v);      // a known tag changes the representation
    CHECK(vb.v == vc.v);      // missing and unknown tags share the UNK slot
}
