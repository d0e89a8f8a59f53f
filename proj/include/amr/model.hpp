#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "amr/autodiff.hpp"
#include "amr/transition.hpp"

namespace amr {

// index 0 is the learned <unk> slot
class Vocab {
public:
    Vocab() { add("<unk>"); }
    int add(const std::string& s);
    int get(const std::string& s) const;  // 0 when unknown
    bool contains(const std::string& s) const { return index_.count(s) > 0; }
    int size() const { return static_cast<int>(items_.size()); }
    const std::string& item(int i) const { return items_[static_cast<size_t>(i)]; }
    const std::vector<std::string>& items() const { return items_; }

    // entries below min_count collapse into <unk>
    static Vocab build(const std::vector<std::string>& tokens, int min_count = 1);
    void save(const std::string& path) const;  // one entry per line
    static Vocab load_file(const std::string& path);

private:
    std::vector<std::string> items_;
    std::map<std::string, int> index_;
};

struct ModelConfig {
    int word_dim = 100;
    int input_dim = 100;
    int hidden_dim = 100;
    int action_dim = 20;
    int label_dim = 20;
    int tag_dim = 20;
    int pretrained_dim = 0;  // width of ingested contextual vectors, 0 = off
    bool attention = true;
    std::vector<std::string> tag_channels;  // subset of {pos, dep, ner, concept}

    std::string to_text() const;
    static ModelConfig from_text(const std::string& text);
    // applies "key=value" lines / flags
    void set(const std::string& key, const std::string& value);
};

// per-sentence inputs beyond the raw tokens
struct SentenceFeatures {
    std::vector<std::string> tokens;
    std::map<std::string, std::vector<std::string>> tags;   // channel -> per token
    std::vector<std::vector<double>> pretrained;             // per token, may be empty
};

class ModelRun;

// The parser network: embeddings, encoder, three state LSTMs, attention and
// fusion weights, and the action/concept/role output heads.
class ParserModel {
public:
    ParserModel() = default;
    static ParserModel create(const ModelConfig& cfg, Vocab words, Vocab concepts, Vocab roles,
                              std::map<std::string, Vocab> tag_vocabs, uint64_t seed);

    void save(const std::string& path) const;
    static ParserModel load(const std::string& path);

    const ModelConfig& config() const { return cfg_; }
    ParamStore& params() { return *ps_; }
    const ParamStore& params() const { return *ps_; }
    const Vocab& words() const { return words_; }
    const Vocab& concepts() const { return concepts_; }
    const Vocab& roles() const { return roles_; }

    int label_index(const Action& a) const;         // combined label-embedding row
    int payload_index(const Action& a) const;        // row in the family head
    std::string payload_at(PayloadKind family, int index) const;
    int family_size(PayloadKind family) const;

    // head rows a given action may label with: CONFIRM/ENTITY take plain
    // concepts, DEPENDENT takes the "role/value" atoms, arcs take any role
    const std::vector<int>& label_subset(ActionKind kind) const;
    // position of the action's payload inside label_subset(kind), -1 if absent
    int subset_position(const Action& a) const;

    friend class ModelRun;

private:
    ModelConfig cfg_;
    Vocab words_, concepts_, roles_;
    std::map<std::string, Vocab> tag_vocabs_;
    std::shared_ptr<ParamStore> ps_;  // shared so runs can outlive copies of the handle
    std::vector<int> plain_concepts_, dependent_atoms_, all_roles_;

    void init_params(uint64_t seed);
    void rebuild_label_subsets();
    std::string snapshot() const;
    static ParserModel from_snapshot(std::shared_ptr<ParamStore> ps, const std::string& snap);
};

struct StepScores {
    std::vector<ActionKind> legal;
    Var s_t;         // fused parser state (ReLU output)
    Var action_logp;  // log-probabilities over `legal`, in order
};

// One sentence pass: builds the encoder once, then mirrors machine actions on
// the stack/buffer/history LSTMs. Copyable; copies share the tape, so beam
// items branch cheaply.
class ModelRun {
public:
    ModelRun(const ParserModel& model, Tape& tape, const SentenceFeatures& feats);

    // mirror `a` applied to `state` (call right before ParserState::apply)
    void apply(const ParserState& state, const Action& a);

    StepScores score_step(const ParserState& state);
    Var label_logp(Var s_t, PayloadKind family);
    // log-probabilities restricted to label_subset(kind), renormalized
    Var label_logp_for(Var s_t, ActionKind kind);

    // encoder states (empty when attention is off)
    const std::vector<Var>& encoder_states() const { return enc_; }
    // last attention weights and context vector (for inspection/tests)
    std::optional<Var> last_alpha() const { return last_alpha_; }
    std::optional<Var> last_context() const { return last_context_; }
    Var stack_summary() const { return stack_.summary(); }
    Var buffer_summary() const { return buffer_.summary(); }
    Var history_summary() const { return history_.summary(); }

private:
    const ParserModel* m_;
    Tape* t_;
    StackLstm stack_, buffer_, history_;
    std::vector<Var> token_vecs_;
    std::vector<Var> enc_;
    std::map<int, Var> item_vecs_;  // by machine uid
    std::optional<Var> last_alpha_;
    std::optional<Var> last_context_;

    Var token_vec(int i) const { return token_vecs_[static_cast<size_t>(i)]; }
    Var node_vec(int head_token, const std::string& concept_label);
    Var fuse_state();
};

}  // namespace amr
