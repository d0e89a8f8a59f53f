#include "amr/transition.hpp"

#include <algorithm>
#include <map>

namespace amr {

namespace {
const char* kActionNames[kActionKinds] = {"SHIFT",  "REDUCE",    "CONFIRM",  "MERGE",
                                          "ENTITY", "DEPENDENT", "LEFT-ARC", "RIGHT-ARC",
                                          "SWAP",   "FINISH"};
}

const char* action_name(ActionKind k) { return kActionNames[static_cast<int>(k)]; }

std::optional<ActionKind> action_from_name(const std::string& name) {
    for (int i = 0; i < kActionKinds; ++i)
        if (name == kActionNames[i]) return static_cast<ActionKind>(i);
    return std::nullopt;
}

PayloadKind payload_kind(ActionKind k) {
    switch (k) {
        case ActionKind::CONFIRM:
        case ActionKind::ENTITY:
        case ActionKind::DEPENDENT:
            return PayloadKind::Concept;
        case ActionKind::LEFT_ARC:
        case ActionKind::RIGHT_ARC:
            return PayloadKind::Role;
        default:
            return PayloadKind::None;
    }
}

std::string format_action(const Action& a) {
    if (payload_kind(a.kind) == PayloadKind::None) return action_name(a.kind);
    return std::string(action_name(a.kind)) + ":" + a.payload;
}

Action parse_action(const std::string& text) {
    size_t colon = text.find(':');
    std::string name = colon == std::string::npos ? text : text.substr(0, colon);
    std::optional<ActionKind> kind = action_from_name(name);
    if (!kind) throw std::runtime_error("unknown action '" + text + "'");
    Action a{*kind, colon == std::string::npos ? "" : text.substr(colon + 1)};
    if ((payload_kind(a.kind) == PayloadKind::None) != a.payload.empty())
        throw std::runtime_error("bad payload in action '" + text + "'");
    return a;
}

std::string format_actions(const std::vector<Action>& seq) {
    std::string out;
    for (const Action& a : seq) {
        if (!out.empty()) out += " ";
        out += format_action(a);
    }
    return out;
}

std::vector<Action> parse_actions(const std::string& line) {
    std::vector<Action> out;
    for (const std::string& tok : split_ws(line)) out.push_back(parse_action(tok));
    return out;
}

// ---------------------------------------------------------------------------

ParserState ParserState::init(const std::vector<std::string>& tokens) {
    ParserState s;
    s.tokens = tokens;
    for (size_t i = 0; i < tokens.size(); ++i)
        s.buffer.push_back(Item{s.next_uid++, false, -1, static_cast<int>(i), static_cast<int>(i)});
    return s;
}

bool ParserState::budget_restricted() const {
    // leave room to drain the remaining items within the 10n budget
    int items = static_cast<int>(stack.size() + buffer.size());
    return steps >= step_budget() - 2 * items;
}

bool ParserState::is_legal(ActionKind k) const {
    if (terminal()) return false;
    const size_t ss = stack.size();
    const bool top_token = ss >= 1 && !stack.back().is_node;
    const bool top_node = ss >= 1 && stack.back().is_node;

    if (budget_restricted()) {
        switch (k) {
            case ActionKind::REDUCE:
                return ss >= 1;
            case ActionKind::SHIFT:
                return ss == 0 && !buffer.empty();
            case ActionKind::FINISH:
                return buffer.empty() && ss == 1 && top_node;
            default:
                return false;
        }
    }
    switch (k) {
        case ActionKind::SHIFT:
            return !buffer.empty();
        case ActionKind::REDUCE:
            return ss >= 1;
        case ActionKind::CONFIRM:
            return top_token;
        case ActionKind::MERGE:
            return ss >= 2 && !stack.back().is_node && !second().is_node;
        case ActionKind::ENTITY:
            return top_token;
        case ActionKind::DEPENDENT:
            return top_node;
        case ActionKind::LEFT_ARC:  // arc top -> second; cycle-free
            return ss >= 2 && top_node && second().is_node &&
                   !partial.reaches(second().node, stack.back().node);
        case ActionKind::RIGHT_ARC:  // arc second -> top, pops top
            return ss >= 2 && top_node && second().is_node &&
                   !partial.reaches(stack.back().node, second().node);
        case ActionKind::SWAP:
            return ss >= 2 && !swap_log.count({second().uid, buffer.size()});
        case ActionKind::FINISH:
            return buffer.empty() && ss <= 1 && (ss == 0 || top_node);
    }
    return false;
}

std::vector<ActionKind> ParserState::legal_actions() const {
    std::vector<ActionKind> out;
    for (int i = 0; i < kActionKinds; ++i)
        if (is_legal(static_cast<ActionKind>(i))) out.push_back(static_cast<ActionKind>(i));
    return out;
}

void ParserState::apply(const Action& a) {
    if (!is_legal(a.kind))
        throw IllegalAction(std::string("illegal action ") + action_name(a.kind));
    bool need_payload = payload_kind(a.kind) != PayloadKind::None;
    if (need_payload == a.payload.empty())
        throw IllegalAction(std::string("bad payload for ") + action_name(a.kind));

    switch (a.kind) {
        case ActionKind::SHIFT:
            stack.push_back(buffer.front());
            buffer.pop_front();
            break;
        case ActionKind::REDUCE:
            stack.pop_back();
            break;
        case ActionKind::CONFIRM: {
            Item& it = stack.back();
            it.node = partial.add_node(partial.fresh_var(a.payload), a.payload);
            it.is_node = true;
            break;
        }
        case ActionKind::MERGE: {
            Item hi = stack.back();
            stack.pop_back();
            Item lo = stack.back();
            stack.pop_back();
            Item merged{next_uid++, false, -1, std::min(lo.span_start, hi.span_start),
                        std::max(lo.span_end, hi.span_end)};
            stack.push_back(merged);
            break;
        }
        case ActionKind::ENTITY: {
            Item& it = stack.back();
            int entity = partial.add_node(partial.fresh_var(a.payload), a.payload);
            int name = partial.add_node(partial.fresh_var("name"), "name");
            partial.add_edge(entity, "name", name);
            for (int t = it.span_start; t <= it.span_end; ++t)
                partial.add_attr(name, "op" + std::to_string(t - it.span_start + 1),
                                 tokens[static_cast<size_t>(t)]);
            it.node = entity;
            it.is_node = true;
            break;
        }
        case ActionKind::DEPENDENT: {
            size_t slash = a.payload.find('/');
            if (slash == std::string::npos)
                throw IllegalAction("DEPENDENT payload must be role/value");
            partial.add_attr(stack.back().node, a.payload.substr(0, slash),
                             a.payload.substr(slash + 1));
            break;
        }
        case ActionKind::LEFT_ARC:
            partial.add_edge(stack.back().node, a.payload, second().node);
            break;
        case ActionKind::RIGHT_ARC:
            partial.add_edge(second().node, a.payload, stack.back().node);
            stack.pop_back();
            break;
        case ActionKind::SWAP: {
            Item moved = second();
            swap_log.insert({moved.uid, buffer.size()});
            stack.erase(stack.end() - 2);
            buffer.push_front(moved);
            break;
        }
        case ActionKind::FINISH:
            if (!stack.empty()) partial.root = stack.back().node;
            finished = true;
            break;
    }
    history.push_back(a);
    ++steps;
}

AmrGraph ParserState::result() const {
    AmrGraph g = partial;
    if (g.root < 0 && !g.nodes.empty()) {
        // zero-in-degree node reaching the most nodes, ties to creation order
        int best = -1, best_cover = -1;
        for (size_t n = 0; n < g.nodes.size(); ++n) {
            if (g.in_degree(static_cast<int>(n)) > 0) continue;
            int cover = 0;
            for (size_t m = 0; m < g.nodes.size(); ++m)
                cover += g.reaches(static_cast<int>(n), static_cast<int>(m));
            if (cover > best_cover) {
                best_cover = cover;
                best = static_cast<int>(n);
            }
        }
        g.root = best >= 0 ? best : 0;
    }
    return g;
}

ParserState replay(const std::vector<std::string>& tokens, const std::vector<Action>& actions) {
    ParserState s = ParserState::init(tokens);
    for (const Action& a : actions) s.apply(a);
    return s;
}

// ---------------------------------------------------------------------------
// Oracle

namespace {

struct Unit {
    int gold_node = -1;
    Span span;
    bool entity = false;
    std::string payload;                                   // concept
    std::vector<std::pair<std::string, std::string>> attrs;  // (role, value), sorted
    bool dropped = false;
    bool confirmed = false;
};

struct PendingArc {
    int src_unit, dst_unit;
    std::string role;
    bool built = false;
    bool lost = false;
};

struct Plan {
    std::vector<Unit> units;
    std::vector<PendingArc> arcs;
    std::vector<int> token_unit;  // token index -> unit id or -1
    std::vector<int> node_unit;   // gold node -> unit id or -1
    int root_unit = -1;
    int dropped_nodes = 0;
    int dropped_arcs = 0;
};

bool entity_template(const AmrGraph& gold, const AlignmentMap& align, int node, Span span,
                     const std::vector<std::string>& tokens, int& name_node) {
    // one :name child whose concept is "name", leaf, with :opK attributes that
    // spell exactly the aligned token span
    std::vector<int> out = gold.out_edges(node);
    if (out.size() != 1) return false;
    const AmrGraph::Edge& e = gold.edges[out[0]];
    if (e.role != "name" || gold.nodes[e.dst].concept_name != "name") return false;
    int n = e.dst;
    if (!gold.out_edges(n).empty()) return false;
    if (gold.in_degree(n) != 1) return false;
    if (auto s = align.span(n); s && !(*s == span)) return false;
    std::vector<std::string> ops;
    for (const AmrGraph::Attr& a : gold.attrs) {
        if (a.node != n) continue;
        if (a.role.rfind("op", 0) != 0) return false;
        ops.push_back(a.value);
    }
    int width = span.end - span.start + 1;
    if (static_cast<int>(ops.size()) != width) return false;
    for (int i = 0; i < width; ++i)
        if (ops[static_cast<size_t>(i)] != tokens[static_cast<size_t>(span.start + i)])
            return false;
    name_node = n;
    return true;
}

Plan build_plan(const std::vector<std::string>& tokens, const AmrGraph& gold,
                const AlignmentMap& align) {
    Plan plan;
    plan.token_unit.assign(tokens.size(), -1);
    plan.node_unit.assign(gold.nodes.size(), -1);
    const int n_tokens = static_cast<int>(tokens.size());

    // aligned nodes in (span start, span end, node) order; in-bounds spans only
    std::vector<std::pair<Span, int>> aligned;
    for (const auto& [node, e] : align.entries) {
        if (e.span.start < 0 || e.span.end >= n_tokens || e.span.start > e.span.end) {
            ++plan.dropped_nodes;
            continue;
        }
        aligned.emplace_back(e.span, node);
    }
    std::sort(aligned.begin(), aligned.end(), [](const auto& a, const auto& b) {
        return std::tie(a.first.start, a.first.end, a.second) <
               std::tie(b.first.start, b.first.end, b.second);
    });
    plan.dropped_nodes += static_cast<int>(gold.nodes.size() - align.entries.size());

    std::vector<char> consumed(gold.nodes.size(), 0);  // name nodes folded into ENTITY
    std::vector<char> claimed(tokens.size(), 0);

    auto claim = [&](Span s) {
        for (int t = s.start; t <= s.end; ++t) claimed[static_cast<size_t>(t)] = 1;
    };
    auto free_span = [&](Span s) {
        for (int t = s.start; t <= s.end; ++t)
            if (claimed[static_cast<size_t>(t)]) return false;
        return true;
    };

    for (const auto& [span, node] : aligned) {
        if (consumed[node]) continue;
        if (!free_span(span)) {
            ++plan.dropped_nodes;
            continue;
        }
        Unit u;
        u.gold_node = node;
        u.span = span;
        u.payload = gold.nodes[node].concept_name;
        int name_node = -1;
        if (entity_template(gold, align, node, span, tokens, name_node)) {
            u.entity = true;
            consumed[name_node] = 1;
            // an unaligned name node was pre-counted as dropped, but ENTITY
            // materializes it
            if (!align.aligned(name_node)) --plan.dropped_nodes;
        }
        for (const AmrGraph::Attr& a : gold.attrs)
            if (a.node == node) u.attrs.emplace_back(a.role, a.value);
        std::sort(u.attrs.begin(), u.attrs.end());
        claim(span);
        int uid = static_cast<int>(plan.units.size());
        plan.node_unit[node] = uid;
        for (int t = span.start; t <= span.end; ++t) plan.token_unit[static_cast<size_t>(t)] = uid;
        plan.units.push_back(std::move(u));
    }

    for (const AmrGraph::Edge& e : gold.edges) {
        int su = plan.node_unit[e.src], du = plan.node_unit[e.dst];
        if (su < 0 || du < 0) {
            // the ENTITY action materializes the folded :name edge itself
            if (!(consumed[e.dst] && e.role == "name")) ++plan.dropped_arcs;
            continue;
        }
        plan.arcs.push_back({su, du, e.role, false, false});
    }
    if (gold.root >= 0) plan.root_unit = plan.node_unit[gold.root];
    return plan;
}

// chooser working over the live state; emits the next oracle action
class OracleRun {
public:
    OracleRun(const std::vector<std::string>& tokens, Plan plan)
        : state_(ParserState::init(tokens)), plan_(std::move(plan)) {}

    OracleResult run() {
        while (!state_.terminal()) {
            Action a = choose();
            state_.apply(a);
        }
        OracleResult res;
        res.actions = state_.history;
        res.reachable = state_.result();
        res.dropped_nodes = plan_.dropped_nodes;
        for (const PendingArc& a : plan_.arcs) res.dropped_arcs += a.lost;
        res.dropped_arcs += plan_.dropped_arcs;
        return res;
    }

private:
    ParserState state_;
    Plan plan_;
    std::map<int, int> item_unit_;  // item uid -> unit id

    int unit_of(const Item& it) const {
        auto found = item_unit_.find(it.uid);
        if (found != item_unit_.end()) return found->second;
        if (!it.is_node && it.span_start >= 0 &&
            it.span_start < static_cast<int>(plan_.token_unit.size())) {
            int u = plan_.token_unit[static_cast<size_t>(it.span_start)];
            if (u >= 0 && !plan_.units[static_cast<size_t>(u)].dropped) return u;
        }
        return -1;
    }

    std::vector<int> pending_of(int unit) const {
        std::vector<int> out;
        for (size_t i = 0; i < plan_.arcs.size(); ++i) {
            const PendingArc& a = plan_.arcs[i];
            if (a.built || a.lost) continue;
            if (a.src_unit == unit || a.dst_unit == unit) out.push_back(static_cast<int>(i));
        }
        return out;
    }

    void drop_unit(int u) {
        plan_.units[static_cast<size_t>(u)].dropped = true;
        ++plan_.dropped_nodes;
        for (size_t i = 0; i < plan_.arcs.size(); ++i) {
            PendingArc& a = plan_.arcs[i];
            if (!a.built && !a.lost && (a.src_unit == u || a.dst_unit == u)) a.lost = true;
        }
    }

    // stack position of a unit's item, -1 when absent (top = size-1)
    int stack_pos(int unit) const {
        for (int i = static_cast<int>(state_.stack.size()) - 1; i >= 0; --i)
            if (unit_of(state_.stack[static_cast<size_t>(i)]) == unit) return i;
        return -1;
    }
    bool in_buffer(int unit) const {
        for (const Item& it : state_.buffer)
            if (unit_of(it) == unit) return true;
        return false;
    }

    Action choose() {
        if (state_.budget_restricted()) {
            // drain: drop whatever is still pending
            if (!state_.stack.empty()) {
                const Item& top = state_.stack.back();
                int u = unit_of(top);
                if (u >= 0 && !pending_of(u).empty())
                    for (int ai : pending_of(u)) plan_.arcs[static_cast<size_t>(ai)].lost = true;
                if (state_.buffer.empty() && state_.stack.size() == 1 && top.is_node &&
                    state_.is_legal(ActionKind::FINISH))
                    return {ActionKind::FINISH, ""};
                return {ActionKind::REDUCE, ""};
            }
            return {ActionKind::SHIFT, ""};
        }

        if (!state_.stack.empty() && !state_.top().is_node) return token_rule();

        if (!state_.stack.empty() && state_.top().is_node) {
            int u = unit_of(state_.top());
            if (u >= 0) {
                Unit& unit = plan_.units[static_cast<size_t>(u)];
                if (!unit.attrs.empty()) {
                    auto [role, value] = unit.attrs.front();
                    unit.attrs.erase(unit.attrs.begin());
                    return {ActionKind::DEPENDENT, role + "/" + value};
                }
            }
            Action a;
            if (node_rule(u, a)) return a;
        }

        if (!state_.buffer.empty()) return {ActionKind::SHIFT, ""};
        if (state_.stack.size() <= 1 && state_.is_legal(ActionKind::FINISH))
            return {ActionKind::FINISH, ""};
        // blocked at the very end: give up on the top item
        if (!state_.stack.empty()) {
            int u = unit_of(state_.top());
            if (u >= 0)
                for (int ai : pending_of(u)) plan_.arcs[static_cast<size_t>(ai)].lost = true;
            return {ActionKind::REDUCE, ""};
        }
        return {ActionKind::SHIFT, ""};
    }

    Action token_rule() {
        const Item& top = state_.top();
        int u = unit_of(top);
        if (u < 0) return {ActionKind::REDUCE, ""};
        Unit& unit = plan_.units[static_cast<size_t>(u)];
        if (top.span_start == unit.span.start && top.span_end == unit.span.end) {
            item_unit_[top.uid] = u;
            unit.confirmed = true;
            if (unit.entity) return {ActionKind::ENTITY, unit.payload};
            return {ActionKind::CONFIRM, unit.payload};
        }
        // span incomplete: merge with an adjacent same-unit token or fetch it
        if (state_.stack.size() >= 2 && !state_.second().is_node &&
            unit_of(state_.second()) == u)
            return {ActionKind::MERGE, ""};
        if (!state_.buffer.empty() && !state_.buffer.front().is_node &&
            unit_of(state_.buffer.front()) == u)
            return {ActionKind::SHIFT, ""};
        drop_unit(u);
        return {ActionKind::REDUCE, ""};
    }

    // arc work for a confirmed node on top; false when nothing applies
    bool node_rule(int u, Action& out) {
        if (u < 0) {
            out = {ActionKind::REDUCE, ""};
            return true;
        }
        std::vector<int> pending = pending_of(u);
        if (state_.stack.size() >= 2 && state_.second().is_node) {
            int su = unit_of(state_.second());
            if (su >= 0) {
                // LEFT-ARC: top -> second, keeps both (reentrancy support)
                const PendingArc* best = nullptr;
                for (int ai : pending) {
                    const PendingArc& a = plan_.arcs[static_cast<size_t>(ai)];
                    if (a.src_unit == u && a.dst_unit == su && (!best || a.role < best->role))
                        best = &a;
                }
                if (best && state_.is_legal(ActionKind::LEFT_ARC)) {
                    const_cast<PendingArc*>(best)->built = true;
                    out = {ActionKind::LEFT_ARC, best->role};
                    return true;
                }
                // RIGHT-ARC pops the dependent, so it must be the last thing
                // the top item is waiting for
                if (pending.size() == 1) {
                    const PendingArc& a = plan_.arcs[static_cast<size_t>(pending[0])];
                    if (a.src_unit == su && a.dst_unit == u &&
                        state_.is_legal(ActionKind::RIGHT_ARC)) {
                        plan_.arcs[static_cast<size_t>(pending[0])].built = true;
                        out = {ActionKind::RIGHT_ARC, a.role};
                        return true;
                    }
                }
            }
        }
        // classify what the top still waits for
        bool with_deeper = false, with_second = false, with_future = false;
        for (int ai : pending) {
            const PendingArc& a = plan_.arcs[static_cast<size_t>(ai)];
            int other = a.src_unit == u ? a.dst_unit : a.src_unit;
            int pos = stack_pos(other);
            if (pos >= 0 && pos < static_cast<int>(state_.stack.size()) - 1) {
                if (pos == static_cast<int>(state_.stack.size()) - 2)
                    with_second = true;
                else
                    with_deeper = true;
            } else if (in_buffer(other) || !plan_.units[static_cast<size_t>(other)].confirmed) {
                with_future = true;
            }
        }
        if ((with_deeper || with_second) && state_.stack.size() >= 2 &&
            state_.is_legal(ActionKind::SWAP)) {
            // with_second only reaches here when the orientation is wrong
            // (e.g. several second->top arcs); flipping the order fixes it
            out = {ActionKind::SWAP, ""};
            return true;
        }
        if ((with_deeper || with_second) && !state_.is_legal(ActionKind::SWAP) &&
            state_.buffer.empty()) {
            for (int ai : pending) plan_.arcs[static_cast<size_t>(ai)].lost = true;
            out = {ActionKind::REDUCE, ""};
            return true;
        }
        if (with_future) {
            if (!state_.buffer.empty()) {
                out = {ActionKind::SHIFT, ""};
                return true;
            }
            for (int ai : pending) plan_.arcs[static_cast<size_t>(ai)].lost = true;
            out = {ActionKind::REDUCE, ""};
            return true;
        }
        if (pending.empty()) {
            if (state_.stack.size() == 1 && state_.buffer.empty() &&
                state_.is_legal(ActionKind::FINISH)) {
                out = {ActionKind::FINISH, ""};
                return true;
            }
            // keep the planned root around while other items still need work
            if (u == plan_.root_unit && !(state_.stack.size() == 1 && state_.buffer.empty())) {
                if (!state_.buffer.empty()) {
                    out = {ActionKind::SHIFT, ""};
                    return true;
                }
                if (state_.stack.size() >= 2 && state_.is_legal(ActionKind::SWAP)) {
                    out = {ActionKind::SWAP, ""};
                    return true;
                }
            }
            out = {ActionKind::REDUCE, ""};
            return true;
        }
        return false;
    }
};

}  // namespace

OracleResult oracle(const std::vector<std::string>& tokens, const AmrGraph& gold,
                    const AlignmentMap& align) {
    return OracleRun(tokens, build_plan(tokens, gold, align)).run();
}

}  // namespace amr
