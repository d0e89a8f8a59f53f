#include "amr/model.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace amr {

// ---------------------------------------------------------------------------
// Vocab

int Vocab::add(const std::string& s) {
    auto it = index_.find(s);
    if (it != index_.end()) return it->second;
    int id = static_cast<int>(items_.size());
    items_.push_back(s);
    index_.emplace(s, id);
    return id;
}

int Vocab::get(const std::string& s) const {
    auto it = index_.find(s);
    return it == index_.end() ? 0 : it->second;
}

Vocab Vocab::build(const std::vector<std::string>& tokens, int min_count) {
    std::map<std::string, int> counts;
    for (const std::string& t : tokens) ++counts[t];
    Vocab v;
    for (const std::string& t : tokens)
        if (counts[t] >= min_count) v.add(t);
    return v;
}

void Vocab::save(const std::string& path) const {
    std::string content;
    for (const std::string& s : items_) content += s + "\n";
    atomic_write_text(path, content);
}

Vocab Vocab::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open vocab: " + path);
    Vocab v;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) v.add(line);
    return v;
}

// ---------------------------------------------------------------------------
// ModelConfig

std::string ModelConfig::to_text() const {
    std::ostringstream out;
    out << "word_dim=" << word_dim << "\ninput_dim=" << input_dim
        << "\nhidden_dim=" << hidden_dim << "\naction_dim=" << action_dim
        << "\nlabel_dim=" << label_dim << "\ntag_dim=" << tag_dim
        << "\npretrained_dim=" << pretrained_dim << "\nattention=" << (attention ? 1 : 0)
        << "\n";
    out << "tag_channels=";
    for (size_t i = 0; i < tag_channels.size(); ++i)
        out << (i ? "," : "") << tag_channels[i];
    out << "\n";
    return out.str();
}

void ModelConfig::set(const std::string& key, const std::string& value) {
    if (key == "word_dim") word_dim = std::stoi(value);
    else if (key == "input_dim") input_dim = std::stoi(value);
    else if (key == "hidden_dim") hidden_dim = std::stoi(value);
    else if (key == "action_dim") action_dim = std::stoi(value);
    else if (key == "label_dim") label_dim = std::stoi(value);
    else if (key == "tag_dim") tag_dim = std::stoi(value);
    else if (key == "pretrained_dim") pretrained_dim = std::stoi(value);
    else if (key == "attention") attention = value == "1" || value == "true" || value == "on";
    else if (key == "tag_channels") {
        tag_channels.clear();
        std::istringstream in(value);
        std::string item;
        while (std::getline(in, item, ','))
            if (!item.empty()) tag_channels.push_back(item);
    } else {
        throw std::runtime_error("unknown model config key '" + key + "'");
    }
}

ModelConfig ModelConfig::from_text(const std::string& text) {
    ModelConfig cfg;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        cfg.set(line.substr(0, eq), line.substr(eq + 1));
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// ParserModel

ParserModel ParserModel::create(const ModelConfig& cfg, Vocab words, Vocab concepts, Vocab roles,
                                std::map<std::string, Vocab> tag_vocabs, uint64_t seed) {
    ParserModel m;
    m.cfg_ = cfg;
    m.words_ = std::move(words);
    m.concepts_ = std::move(concepts);
    m.roles_ = std::move(roles);
    m.tag_vocabs_ = std::move(tag_vocabs);
    for (const std::string& ch : m.cfg_.tag_channels)
        if (!m.tag_vocabs_.count(ch)) m.tag_vocabs_.emplace(ch, Vocab{});
    m.ps_ = std::make_shared<ParamStore>();
    m.init_params(seed);
    m.rebuild_label_subsets();
    return m;
}

void ParserModel::rebuild_label_subsets() {
    plain_concepts_.clear();
    dependent_atoms_.clear();
    all_roles_.clear();
    for (int i = 0; i < concepts_.size(); ++i) {
        if (concepts_.item(i).find('/') == std::string::npos)
            plain_concepts_.push_back(i);
        else
            dependent_atoms_.push_back(i);
    }
    for (int i = 0; i < roles_.size(); ++i) all_roles_.push_back(i);
}

const std::vector<int>& ParserModel::label_subset(ActionKind kind) const {
    switch (kind) {
        case ActionKind::DEPENDENT:
            return dependent_atoms_;
        case ActionKind::CONFIRM:
        case ActionKind::ENTITY:
            return plain_concepts_;
        default:
            return all_roles_;
    }
}

int ParserModel::subset_position(const Action& a) const {
    const std::vector<int>& subset = label_subset(a.kind);
    int row = payload_index(a);
    for (size_t i = 0; i < subset.size(); ++i)
        if (subset[i] == row) return static_cast<int>(i);
    return -1;
}

void ParserModel::init_params(uint64_t seed) {
    Rng rng(mix_seed(seed, 0xa17));
    ParamStore& ps = *ps_;
    const int H = cfg_.hidden_dim;
    const int enc_half = std::max(1, H / 2);

    ps.add("emb.word", {words_.size(), cfg_.word_dim}, Init::Uniform01, rng);
    ps.add("emb.action", {kActionKinds, cfg_.action_dim}, Init::Uniform01, rng);
    // one label-embedding space: <none> + concepts + roles
    ps.add("emb.label", {1 + concepts_.size() + roles_.size(), cfg_.label_dim}, Init::Uniform01,
           rng);
    int token_in = cfg_.word_dim + cfg_.pretrained_dim;
    for (const std::string& ch : cfg_.tag_channels) {
        ps.add("emb.tag." + ch, {tag_vocabs_.at(ch).size(), cfg_.tag_dim}, Init::Uniform01, rng);
        token_in += cfg_.tag_dim;
    }
    ps.add("proj.token.w", {cfg_.input_dim, token_in}, Init::Glorot, rng);
    ps.add("proj.token.b", {cfg_.input_dim}, Init::Zeros, rng);
    ps.add("proj.node.w", {cfg_.input_dim, cfg_.input_dim + cfg_.label_dim}, Init::Glorot, rng);
    ps.add("proj.node.b", {cfg_.input_dim}, Init::Zeros, rng);

    StackLstm(ps, "lstm.stack", cfg_.input_dim, H, rng);
    StackLstm(ps, "lstm.buffer", cfg_.input_dim, H, rng);
    StackLstm(ps, "lstm.history", cfg_.action_dim + cfg_.label_dim, H, rng);

    int state_in = 3 * H;
    if (cfg_.attention) {
        LstmCell::create(ps, "enc.fwd", cfg_.input_dim, enc_half, rng);
        LstmCell::create(ps, "enc.bwd", cfg_.input_dim, enc_half, rng);
        const int enc_dim = 2 * enc_half;
        ps.add("att.wa", {H, enc_dim}, Init::Glorot, rng);
        ps.add("fuse.w1_dec", {H, 2 * H}, Init::Glorot, rng);
        ps.add("fuse.w1_att", {H, enc_dim}, Init::Glorot, rng);
        ps.add("fuse.w2_dec", {H, 2 * H}, Init::Glorot, rng);
        ps.add("fuse.w2_att", {H, enc_dim}, Init::Glorot, rng);
        state_in += H;  // u_j
    }
    ps.add("state.w", {H, state_in}, Init::Glorot, rng);
    ps.add("state.d", {H}, Init::Zeros, rng);

    ps.add("head.action.w", {kActionKinds, H}, Init::Glorot, rng);
    ps.add("head.action.b", {kActionKinds}, Init::Zeros, rng);
    ps.add("head.concept.w", {concepts_.size(), H}, Init::Glorot, rng);
    ps.add("head.concept.b", {concepts_.size()}, Init::Zeros, rng);
    ps.add("head.role.w", {roles_.size(), H}, Init::Glorot, rng);
    ps.add("head.role.b", {roles_.size()}, Init::Zeros, rng);
}

int ParserModel::label_index(const Action& a) const {
    switch (payload_kind(a.kind)) {
        case PayloadKind::None:
            return 0;
        case PayloadKind::Concept:
            return 1 + concepts_.get(a.payload);
        case PayloadKind::Role:
            return 1 + concepts_.size() + roles_.get(a.payload);
    }
    return 0;
}

int ParserModel::payload_index(const Action& a) const {
    switch (payload_kind(a.kind)) {
        case PayloadKind::Concept:
            return concepts_.get(a.payload);
        case PayloadKind::Role:
            return roles_.get(a.payload);
        default:
            return -1;
    }
}

std::string ParserModel::payload_at(PayloadKind family, int index) const {
    if (family == PayloadKind::Concept) return concepts_.item(index);
    if (family == PayloadKind::Role) return roles_.item(index);
    return "";
}

int ParserModel::family_size(PayloadKind family) const {
    if (family == PayloadKind::Concept) return concepts_.size();
    if (family == PayloadKind::Role) return roles_.size();
    return 0;
}

namespace {
constexpr const char* kVocabMark = "%%vocab ";
}

std::string ParserModel::snapshot() const {
    std::string out = cfg_.to_text();
    auto dump = [&out](const std::string& name, const Vocab& v) {
        out += kVocabMark + name + "\n";
        for (const std::string& s : v.items()) out += s + "\n";
    };
    dump("words", words_);
    dump("concepts", concepts_);
    dump("roles", roles_);
    for (const auto& [ch, v] : tag_vocabs_) dump("tag:" + ch, v);
    return out;
}

ParserModel ParserModel::from_snapshot(std::shared_ptr<ParamStore> ps, const std::string& snap) {
    ParserModel m;
    m.ps_ = std::move(ps);
    std::istringstream in(snap);
    std::string line, cfg_text;
    Vocab* current = nullptr;
    bool skip_first = false;
    auto begin_vocab = [&](const std::string& name) -> Vocab* {
        if (name == "words") return &m.words_;
        if (name == "concepts") return &m.concepts_;
        if (name == "roles") return &m.roles_;
        if (name.rfind("tag:", 0) == 0)
            return &m.tag_vocabs_.emplace(name.substr(4), Vocab{}).first->second;
        return nullptr;
    };
    while (std::getline(in, line)) {
        if (line.rfind(kVocabMark, 0) == 0) {
            current = begin_vocab(line.substr(std::string(kVocabMark).size()));
            skip_first = true;  // the stored list starts with <unk>
            continue;
        }
        if (current) {
            if (skip_first) {
                skip_first = false;
                continue;
            }
            if (!line.empty()) current->add(line);
        } else {
            cfg_text += line + "\n";
        }
    }
    m.cfg_ = ModelConfig::from_text(cfg_text);
    m.rebuild_label_subsets();
    return m;
}

void ParserModel::save(const std::string& path) const { ps_->save(path, snapshot()); }

ParserModel ParserModel::load(const std::string& path) {
    auto ps = std::make_shared<ParamStore>();
    std::string snap = ps->load(path);
    return from_snapshot(std::move(ps), snap);
}

// ---------------------------------------------------------------------------
// ModelRun

ModelRun::ModelRun(const ParserModel& model, Tape& tape, const SentenceFeatures& feats)
    : m_(&model), t_(&tape) {
    ParamStore& ps = *m_->ps_;
    const ModelConfig& cfg = m_->cfg_;
    stack_ = StackLstm::attach(ps, "lstm.stack", cfg.input_dim, cfg.hidden_dim);
    buffer_ = StackLstm::attach(ps, "lstm.buffer", cfg.input_dim, cfg.hidden_dim);
    history_ = StackLstm::attach(ps, "lstm.history", cfg.action_dim + cfg.label_dim,
                                 cfg.hidden_dim);
    stack_.start(tape);
    buffer_.start(tape);
    history_.start(tape);

    const size_t n = feats.tokens.size();
    Parameter& word_emb = ps.get("emb.word");
    Var proj_w = tape.param(ps.get("proj.token.w"));
    Var proj_b = tape.param(ps.get("proj.token.b"));
    for (size_t i = 0; i < n; ++i) {
        std::vector<Var> parts;
        parts.push_back(tape.lookup(word_emb, m_->words_.get(feats.tokens[i])));
        if (cfg.pretrained_dim > 0) {
            Tensor pre({cfg.pretrained_dim});
            if (i < feats.pretrained.size() &&
                static_cast<int>(feats.pretrained[i].size()) == cfg.pretrained_dim)
                pre.v = feats.pretrained[i];
            parts.push_back(tape.constant(std::move(pre)));  // frozen channel
        }
        for (const std::string& ch : cfg.tag_channels) {
            Parameter& table = ps.get("emb.tag." + ch);
            int idx = 0;
            auto it = feats.tags.find(ch);
            if (it != feats.tags.end() && i < it->second.size())
                idx = m_->tag_vocabs_.at(ch).get(it->second[i]);
            parts.push_back(tape.lookup(table, idx));
        }
        token_vecs_.push_back(tape.affine(proj_w, tape.concat(parts), proj_b));
    }

    // right-to-left buffer reading: the front token ends up on top
    for (size_t i = n; i > 0; --i) buffer_.push(token_vecs_[i - 1]);

    if (cfg.attention && n > 0) {
        const int half = std::max(1, cfg.hidden_dim / 2);
        LstmCell fwd = LstmCell::attach(ps, "enc.fwd", cfg.input_dim, half);
        LstmCell bwd = LstmCell::attach(ps, "enc.bwd", cfg.input_dim, half);
        std::vector<Var> fw(n), bw(n);
        LstmState s{tape.constant(Tensor({half})), tape.constant(Tensor({half}))};
        for (size_t i = 0; i < n; ++i) {
            s = lstm_step(tape, fwd, s, token_vecs_[i]);
            fw[i] = s.h;
        }
        s = {tape.constant(Tensor({half})), tape.constant(Tensor({half}))};
        for (size_t i = n; i > 0; --i) {
            s = lstm_step(tape, bwd, s, token_vecs_[i - 1]);
            bw[i - 1] = s.h;
        }
        for (size_t i = 0; i < n; ++i)
            enc_.push_back(tape.concat(std::vector<Var>{fw[i], bw[i]}));
    }
}

Var ModelRun::node_vec(int head_token, const std::string& concept_label) {
    ParamStore& ps = *m_->ps_;
    Var concept_emb = t_->lookup(
        ps.get("emb.label"),
        m_->label_index(Action{ActionKind::CONFIRM, concept_label}));
    Var cat = t_->concat(std::vector<Var>{token_vec(head_token), concept_emb});
    return t_->affine(t_->param(ps.get("proj.node.w")), cat, t_->param(ps.get("proj.node.b")));
}

void ModelRun::apply(const ParserState& state, const Action& a) {
    ParamStore& ps = *m_->ps_;
    auto vec_of = [&](const Item& it) -> Var {
        auto found = item_vecs_.find(it.uid);
        if (found != item_vecs_.end()) return found->second;
        return token_vec(it.span_start);
    };

    switch (a.kind) {
        case ActionKind::SHIFT: {
            Var v = vec_of(state.buffer.front());
            buffer_.pop();
            stack_.push(v);
            break;
        }
        case ActionKind::REDUCE:
            stack_.pop();
            break;
        case ActionKind::CONFIRM: {
            const Item& top = state.top();
            Var v = node_vec(top.span_start, a.payload);
            item_vecs_[top.uid] = v;
            stack_.pop();
            stack_.push(v);
            break;
        }
        case ActionKind::MERGE: {
            const Item& hi = state.top();
            const Item& lo = state.second();
            int head = std::min(lo.span_start, hi.span_start);
            stack_.pop();
            stack_.pop();
            Var v = token_vec(head);
            item_vecs_[state.next_uid] = v;  // uid the machine will assign
            stack_.push(v);
            break;
        }
        case ActionKind::ENTITY: {
            const Item& top = state.top();
            Var v = node_vec(top.span_start, a.payload);
            item_vecs_[top.uid] = v;
            stack_.pop();
            stack_.push(v);
            break;
        }
        case ActionKind::DEPENDENT:
        case ActionKind::LEFT_ARC:
        case ActionKind::FINISH:
            break;
        case ActionKind::RIGHT_ARC:
            stack_.pop();
            break;
        case ActionKind::SWAP: {
            Var top_v = vec_of(state.top());
            Var second_v = vec_of(state.second());
            stack_.pop();
            stack_.pop();
            stack_.push(top_v);
            buffer_.push(second_v);
            break;
        }
    }
    Var act_emb = t_->lookup(ps.get("emb.action"), static_cast<int>(a.kind));
    Var lab_emb = t_->lookup(ps.get("emb.label"), m_->label_index(a));
    history_.push(t_->concat(std::vector<Var>{act_emb, lab_emb}));
}

Var ModelRun::fuse_state() {
    ParamStore& ps = *m_->ps_;
    Var st = stack_.summary();
    Var b = buffer_.summary();
    Var a = history_.summary();
    std::vector<Var> state_parts{st, b, a};
    if (m_->cfg_.attention && !enc_.empty()) {
        // general attention: e_i = a_j^T Wa h_i, queried by the action history
        Var q = t_->matvec_t(t_->param(ps.get("att.wa")), a);
        std::vector<Var> logits;
        for (Var h : enc_) logits.push_back(t_->dot(q, h));
        Var alpha = t_->softmax(t_->concat(logits));
        last_alpha_ = alpha;
        Var c = t_->weighted_sum(enc_, alpha);
        last_context_ = c;
        Var d = t_->concat(std::vector<Var>{a, st});
        Var g = t_->tanh_(t_->add(t_->matvec(t_->param(ps.get("fuse.w1_dec")), d),
                                  t_->matvec(t_->param(ps.get("fuse.w1_att")), c)));
        std::vector<Var> u_parts{g, t_->matvec(t_->param(ps.get("fuse.w2_dec")), d),
                                 t_->matvec(t_->param(ps.get("fuse.w2_att")), c)};
        state_parts.push_back(t_->tanh_(t_->add_many(u_parts)));
    }
    return t_->relu(t_->affine(t_->param(ps.get("state.w")), t_->concat(state_parts),
                               t_->param(ps.get("state.d"))));
}

StepScores ModelRun::score_step(const ParserState& state) {
    StepScores out;
    out.legal = state.legal_actions();
    out.s_t = fuse_state();
    Var logits = t_->affine(t_->param(m_->ps_->get("head.action.w")), out.s_t,
                            t_->param(m_->ps_->get("head.action.b")));
    std::vector<int> idx;
    for (ActionKind k : out.legal) idx.push_back(static_cast<int>(k));
    out.action_logp = t_->log_softmax(t_->gather(logits, idx));
    return out;
}

Var ModelRun::label_logp(Var s_t, PayloadKind family) {
    ParamStore& ps = *m_->ps_;
    const char* head = family == PayloadKind::Concept ? "head.concept" : "head.role";
    Var logits = t_->affine(t_->param(ps.get(std::string(head) + ".w")), s_t,
                            t_->param(ps.get(std::string(head) + ".b")));
    return t_->log_softmax(logits);
}

Var ModelRun::label_logp_for(Var s_t, ActionKind kind) {
    ParamStore& ps = *m_->ps_;
    PayloadKind family = payload_kind(kind);
    const char* head = family == PayloadKind::Concept ? "head.concept" : "head.role";
    Var logits = t_->affine(t_->param(ps.get(std::string(head) + ".w")), s_t,
                            t_->param(ps.get(std::string(head) + ".b")));
    return t_->log_softmax(t_->gather(logits, m_->label_subset(kind)));
}

}  // namespace amr
