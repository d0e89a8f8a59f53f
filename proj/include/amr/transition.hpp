#pragma once

#include <deque>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "amr/align.hpp"
#include "amr/graph.hpp"

namespace amr {

enum class ActionKind {
    SHIFT,
    REDUCE,
    CONFIRM,
    MERGE,
    ENTITY,
    DEPENDENT,
    LEFT_ARC,
    RIGHT_ARC,
    SWAP,
    FINISH,
};
inline constexpr int kActionKinds = 10;

const char* action_name(ActionKind k);
std::optional<ActionKind> action_from_name(const std::string& name);

// which payload the label head must supply
enum class PayloadKind { None, Concept, Role };
PayloadKind payload_kind(ActionKind k);

struct Action {
    ActionKind kind = ActionKind::SHIFT;
    std::string payload;  // concept, "role/value" for DEPENDENT, or role label

    bool operator==(const Action&) const = default;
};

std::string format_action(const Action& a);
Action parse_action(const std::string& text);
std::string format_actions(const std::vector<Action>& seq);
std::vector<Action> parse_actions(const std::string& line);

struct IllegalAction : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Stack/buffer item: an unconfirmed (possibly merged) token span, or a
// confirmed graph node. uid is stable across moves and is what the SWAP
// budget and the model's item vectors key on.
struct Item {
    int uid = -1;
    bool is_node = false;
    int node = -1;        // index into partial graph when is_node
    int span_start = -1;  // token coverage; head token = span_start
    int span_end = -1;
};

// The transition-system configuration. A value type: apply() mutates in
// place, copy the state to branch (beam search does).
struct ParserState {
    std::vector<std::string> tokens;
    std::vector<Item> stack;   // back() is the top
    std::deque<Item> buffer;   // front() is next to shift
    std::vector<Action> history;
    AmrGraph partial;
    bool finished = false;

    int next_uid = 0;
    int steps = 0;
    std::set<std::pair<int, size_t>> swap_log;  // (uid, buffer size at swap)

    static ParserState init(const std::vector<std::string>& tokens);

    bool terminal() const { return finished || (buffer.empty() && stack.empty()); }
    // every sequence of legal actions terminates within this many steps
    int step_budget() const { return 10 * std::max<int>(1, static_cast<int>(tokens.size())); }
    bool budget_restricted() const;

    const Item& top() const { return stack.back(); }
    const Item& second() const { return stack[stack.size() - 2]; }

    std::vector<ActionKind> legal_actions() const;
    bool is_legal(ActionKind k) const;
    void apply(const Action& a);

    // terminal graph with the root resolved (top of stack at FINISH, else the
    // zero-in-degree node covering the most nodes)
    AmrGraph result() const;
};

// replays a whole sequence from the initial state
ParserState replay(const std::vector<std::string>& tokens, const std::vector<Action>& actions);

struct OracleResult {
    std::vector<Action> actions;
    AmrGraph reachable;   // exactly what replaying `actions` produces
    int dropped_nodes = 0;  // gold nodes not derivable (unaligned / conflicting)
    int dropped_arcs = 0;   // gold edges not derivable
};

// Converts an aligned (sentence, graph) pair into a training action sequence.
// Unaligned gold nodes are dropped; the loss is visible in `reachable`.
OracleResult oracle(const std::vector<std::string>& tokens, const AmrGraph& gold,
                    const AlignmentMap& align);

}  // namespace amr
