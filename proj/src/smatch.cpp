#include "amr/smatch.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <numeric>
#include <set>

#include "amr/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace amr {

namespace {

bool is_inverse_role(const std::string& role) {
    return role.size() > 3 && role.compare(role.size() - 3, 3, "-of") == 0;
}

// ":R-of(a,b)" scored as "R(b,a)"
TripleSet normalize_inverse(const TripleSet& t) {
    TripleSet out = t;
    for (auto& [src, role, dst] : out.relations)
        if (is_inverse_role(role)) {
            role = role.substr(0, role.size() - 3);
            std::swap(src, dst);
        }
    return out;
}

// Triple sets compiled to dense integer ids for the mapping search.
struct Compiled {
    std::vector<std::string> pred_vars, gold_vars;
    std::map<std::string, int> pred_id, gold_id;

    std::vector<std::pair<int, int>> p_inst, g_inst;              // (var, concept_name id)
    std::vector<std::array<int, 3>> p_rel, g_rel;                 // (src, role id, dst)
    std::vector<std::array<int, 3>> p_attr, g_attr;               // (var, role id, value id)
    std::vector<int> g_concept;                                   // gold var -> concept_name id (-1 none)
    std::set<std::array<int, 3>> g_rel_set, g_attr_set;
    int pred_size = 0, gold_size = 0;
};

int intern(std::map<std::string, int>& pool, const std::string& s) {
    auto [it, _] = pool.emplace(s, static_cast<int>(pool.size()));
    return it->second;
}

int var_id(std::vector<std::string>& vars, std::map<std::string, int>& ids,
           const std::string& v) {
    auto it = ids.find(v);
    if (it != ids.end()) return it->second;
    int id = static_cast<int>(vars.size());
    vars.push_back(v);
    ids.emplace(v, id);
    return id;
}

Compiled compile(const TripleSet& pred_raw, const TripleSet& gold_raw) {
    TripleSet pred = normalize_inverse(pred_raw);
    TripleSet gold = normalize_inverse(gold_raw);
    Compiled c;
    std::map<std::string, int> concepts, roles, values;

    auto load = [&](const TripleSet& t, std::vector<std::string>& vars,
                    std::map<std::string, int>& ids, std::vector<std::pair<int, int>>& inst,
                    std::vector<std::array<int, 3>>& rel, std::vector<std::array<int, 3>>& attr) {
        std::set<std::pair<int, int>> inst_seen;
        std::set<std::array<int, 3>> rel_seen, attr_seen;
        for (const auto& [v, concept_name] : t.instances) {
            std::pair<int, int> x{var_id(vars, ids, v), intern(concepts, concept_name)};
            if (inst_seen.insert(x).second) inst.push_back(x);
        }
        for (const auto& [s, r, d] : t.relations) {
            std::array<int, 3> x{var_id(vars, ids, s), intern(roles, r), var_id(vars, ids, d)};
            if (rel_seen.insert(x).second) rel.push_back(x);
        }
        for (const auto& [v, r, val] : t.attributes) {
            std::array<int, 3> x{var_id(vars, ids, v), intern(roles, r), intern(values, val)};
            if (attr_seen.insert(x).second) attr.push_back(x);
        }
    };
    load(pred, c.pred_vars, c.pred_id, c.p_inst, c.p_rel, c.p_attr);
    load(gold, c.gold_vars, c.gold_id, c.g_inst, c.g_rel, c.g_attr);

    c.g_concept.assign(c.gold_vars.size(), -1);
    for (const auto& [v, concept_name] : c.g_inst) c.g_concept[v] = concept_name;
    c.g_rel_set.insert(c.g_rel.begin(), c.g_rel.end());
    c.g_attr_set.insert(c.g_attr.begin(), c.g_attr.end());
    c.pred_size = static_cast<int>(c.p_inst.size() + c.p_rel.size() + c.p_attr.size());
    c.gold_size = static_cast<int>(c.g_inst.size() + c.g_rel.size() + c.g_attr.size());
    return c;
}

int matched_count(const Compiled& c, const std::vector<int>& map) {
    int m = 0;
    for (const auto& [v, concept_name] : c.p_inst)
        if (map[v] >= 0 && c.g_concept[map[v]] == concept_name) ++m;
    for (const auto& [s, r, d] : c.p_rel)
        if (map[s] >= 0 && map[d] >= 0 && c.g_rel_set.count({map[s], r, map[d]})) ++m;
    for (const auto& [v, r, val] : c.p_attr)
        if (map[v] >= 0 && c.g_attr_set.count({map[v], r, val})) ++m;
    return m;
}

MappingResult finish(const Compiled& c, const std::vector<int>& map, int matched) {
    MappingResult r;
    r.matched = matched;
    r.pred_size = c.pred_size;
    r.gold_size = c.gold_size;
    for (size_t i = 0; i < map.size(); ++i)
        if (map[i] >= 0) r.mapping[c.pred_vars[i]] = c.gold_vars[map[i]];
    r.precision = c.pred_size > 0 ? static_cast<double>(matched) / c.pred_size
                                  : (c.gold_size == 0 ? 1.0 : 0.0);
    r.recall = c.gold_size > 0 ? static_cast<double>(matched) / c.gold_size
                               : (c.pred_size == 0 ? 1.0 : 0.0);
    double pr = r.precision + r.recall;
    r.f1 = pr > 0 ? 2.0 * r.precision * r.recall / pr : 0.0;
    return r;
}

// One full sweep of single-variable moves and pairwise swaps; applies the best
// strictly-positive gain. Ties go to the lowest pred-var index, then the
// lowest candidate gold index.
bool climb_step(const Compiled& c, std::vector<int>& map, std::vector<int>& inverse, int& score) {
    const int np = static_cast<int>(c.pred_vars.size());
    const int ng = static_cast<int>(c.gold_vars.size());
    int best_gain = 0, best_p = -1, best_g = -2;
    for (int p = 0; p < np; ++p) {
        for (int g = -1; g < ng; ++g) {
            if (g == map[p]) continue;
            int old_p = map[p];
            int other = g >= 0 ? inverse[g] : -1;
            // move p -> g; if g is taken, the holder takes p's old image (swap)
            map[p] = g;
            if (other >= 0) map[other] = old_p;
            int s = matched_count(c, map);
            map[p] = old_p;
            if (other >= 0) map[other] = g;
            if (s - score > best_gain) {
                best_gain = s - score;
                best_p = p;
                best_g = g;
            }
        }
    }
    if (best_p < 0) return false;
    int old_p = map[best_p];
    int other = best_g >= 0 ? inverse[best_g] : -1;
    map[best_p] = best_g;
    if (other >= 0) map[other] = old_p;
    if (old_p >= 0) inverse[old_p] = other;
    if (best_g >= 0) inverse[best_g] = best_p;
    score += best_gain;
    return true;
}

MappingResult search(const Compiled& c, int restarts, uint64_t seed) {
    const int np = static_cast<int>(c.pred_vars.size());
    const int ng = static_cast<int>(c.gold_vars.size());
    Rng rng(seed);

    std::vector<int> best_map(np, -1);
    int best_score = -1;
    std::vector<int> p_concept(np, -1);
    for (const auto& [v, concept_name] : c.p_inst) p_concept[v] = concept_name;

    for (int r = 0; r < restarts; ++r) {
        std::vector<int> map(np, -1), inverse(ng, -1);
        if (r == 0) {
            // greedy concept_name-match initialization
            for (int p = 0; p < np; ++p) {
                if (p_concept[p] < 0) continue;
                for (int g = 0; g < ng; ++g)
                    if (inverse[g] < 0 && c.g_concept[g] == p_concept[p]) {
                        map[p] = g;
                        inverse[g] = p;
                        break;
                    }
            }
        } else {
            std::vector<int> perm(ng);
            std::iota(perm.begin(), perm.end(), 0);
            for (int i = ng - 1; i > 0; --i)
                std::swap(perm[i], perm[rng.below(static_cast<uint64_t>(i) + 1)]);
            for (int p = 0; p < np && p < ng; ++p) {
                map[p] = perm[p];
                inverse[perm[p]] = p;
            }
        }
        int score = matched_count(c, map);
        while (climb_step(c, map, inverse, score)) {
        }
        if (score > best_score) {
            best_score = score;
            best_map = map;
        }
    }
    return finish(c, best_map, best_score);
}

void enumerate(const Compiled& c, std::vector<int>& map, std::vector<char>& used, size_t p,
               int& best, std::vector<int>& best_map) {
    if (p == c.pred_vars.size()) {
        int s = matched_count(c, map);
        if (s > best) {
            best = s;
            best_map = map;
        }
        return;
    }
    map[p] = -1;
    enumerate(c, map, used, p + 1, best, best_map);
    for (size_t g = 0; g < c.gold_vars.size(); ++g) {
        if (used[g]) continue;
        used[g] = 1;
        map[p] = static_cast<int>(g);
        enumerate(c, map, used, p + 1, best, best_map);
        used[g] = 0;
    }
    map[p] = -1;
}

}  // namespace

MappingResult smatch_hill_climb(const TripleSet& pred, const TripleSet& gold, int restarts,
                                uint64_t seed) {
    Compiled c = compile(pred, gold);
    return search(c, std::max(restarts, 1), seed);
}

MappingResult smatch_exact(const TripleSet& pred, const TripleSet& gold) {
    Compiled c = compile(pred, gold);
    if (std::min(c.pred_vars.size(), c.gold_vars.size()) > 8)
        throw TooLarge("smatch_exact: more than 8 variables on both sides");
    std::vector<int> map(c.pred_vars.size(), -1), best_map(c.pred_vars.size(), -1);
    std::vector<char> used(c.gold_vars.size(), 0);
    int best = -1;
    enumerate(c, map, used, 0, best, best_map);
    return finish(c, best_map, best);
}

double smatch_f1(const AmrGraph& pred, const AmrGraph& gold, int restarts, uint64_t seed) {
    return smatch_hill_climb(to_triples(pred), to_triples(gold), restarts, seed).f1;
}

// ---------------------------------------------------------------------------
// Fine-grained breakdown

namespace {

std::string strip_sense(const std::string& concept_name) {
    size_t dash = concept_name.rfind('-');
    if (dash == std::string::npos || dash + 1 >= concept_name.size()) return concept_name;
    for (size_t i = dash + 1; i < concept_name.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(concept_name[i]))) return concept_name;
    if (concept_name.size() - dash - 1 < 2) return concept_name;  // -91, -01 style senses only
    return concept_name.substr(0, dash);
}

TripleSet unlabeled_triples(const AmrGraph& g) {
    TripleSet t = normalize_inverse(to_triples(g));
    for (auto& [s, role, d] : t.relations) role = "rel";
    return t;
}

TripleSet no_wsd_triples(const AmrGraph& g) {
    TripleSet t = to_triples(g);
    for (auto& [v, concept_name] : t.instances) concept_name = strip_sense(concept_name);
    for (auto& [v, role, val] : t.attributes)
        if (role == "TOP") val = strip_sense(val);
    return t;
}

// instances/relations/attributes restricted to a node subset (no TOP triple)
TripleSet restrict_to(const AmrGraph& g, const std::set<int>& keep) {
    TripleSet t;
    for (int n : keep) t.instances.emplace_back(g.nodes[n].var, g.nodes[n].concept_name);
    for (const AmrGraph::Edge& e : g.edges)
        if (keep.count(e.src) && keep.count(e.dst))
            t.relations.emplace_back(g.nodes[e.src].var, e.role, g.nodes[e.dst].var);
    for (const AmrGraph::Attr& a : g.attrs)
        if (keep.count(a.node)) t.attributes.emplace_back(g.nodes[a.node].var, a.role, a.value);
    return t;
}

TripleSet named_entity_triples(const AmrGraph& g) {
    std::set<int> keep;
    std::vector<int> stack;
    for (const AmrGraph::Edge& e : g.edges)
        if (e.role == "name" && keep.insert(e.src).second) stack.push_back(e.src);
    while (!stack.empty()) {
        int cur = stack.back();
        stack.pop_back();
        for (const AmrGraph::Edge& e : g.edges)
            if (e.src == cur && keep.insert(e.dst).second) stack.push_back(e.dst);
    }
    return restrict_to(g, keep);
}

TripleSet wiki_triples(const AmrGraph& g) {
    TripleSet t;
    for (const AmrGraph::Attr& a : g.attrs)
        if (a.role == "wiki") t.attributes.emplace_back(g.nodes[a.node].var, a.role, a.value);
    return t;
}

TripleSet negation_triples(const AmrGraph& g) {
    TripleSet t;
    std::set<int> vars;
    for (const AmrGraph::Attr& a : g.attrs)
        if (a.role == "polarity") {
            t.attributes.emplace_back(g.nodes[a.node].var, a.role, a.value);
            vars.insert(a.node);
        }
    for (int n : vars) t.instances.emplace_back(g.nodes[n].var, g.nodes[n].concept_name);
    return t;
}

bool is_core_arg(const std::string& role) {
    if (role.size() < 4 || role.compare(0, 3, "ARG") != 0) return false;
    for (size_t i = 3; i < role.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(role[i]))) return false;
    return true;
}

TripleSet relation_subset(const AmrGraph& g, bool reentrant_only, bool srl_only) {
    TripleSet all = normalize_inverse(to_triples(g));
    std::map<std::string, int> indeg;
    for (const auto& [s, r, d] : all.relations) ++indeg[d];
    TripleSet t;
    std::set<std::string> vars;
    for (const auto& [s, r, d] : all.relations) {
        if (reentrant_only && indeg[d] <= 1) continue;
        if (srl_only && !is_core_arg(r)) continue;
        t.relations.emplace_back(s, r, d);
        vars.insert(s);
        vars.insert(d);
    }
    for (const auto& [v, concept_name] : all.instances)
        if (vars.count(v)) t.instances.emplace_back(v, concept_name);
    return t;
}

double restricted_f1(const TripleSet& pred, const TripleSet& gold, int restarts, uint64_t seed) {
    if (pred.size() == 0 && gold.size() == 0) return 1.0;  // nothing to get wrong
    return smatch_hill_climb(pred, gold, restarts, seed).f1;
}

double concept_bag_f1(const AmrGraph& pred, const AmrGraph& gold) {
    std::multiset<std::string> p, g;
    for (const AmrGraph::Node& n : pred.nodes) p.insert(n.concept_name);
    for (const AmrGraph::Node& n : gold.nodes) g.insert(n.concept_name);
    std::vector<std::string> common;
    std::set_intersection(p.begin(), p.end(), g.begin(), g.end(), std::back_inserter(common));
    if (p.empty() && g.empty()) return 1.0;
    if (p.empty() || g.empty()) return 0.0;
    double prec = static_cast<double>(common.size()) / p.size();
    double rec = static_cast<double>(common.size()) / g.size();
    return prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
}

}  // namespace

const std::vector<std::string>& MetricSuite::names() {
    static const std::vector<std::string> n{"smatch",       "unlabeled",    "no_wsd",
                                            "named_ent",    "wikification", "negations",
                                            "concepts",     "reentrancies", "srl"};
    return n;
}

double MetricSuite::operator[](size_t i) const {
    const double* v[] = {&smatch,       &unlabeled, &no_wsd,       &named_entities, &wikification,
                         &negations,    &concepts,  &reentrancies, &srl};
    return *v[i];
}

MetricSuite metric_breakdown(const AmrGraph& pred, const AmrGraph& gold, int restarts,
                             uint64_t seed) {
    MetricSuite m;
    m.smatch = smatch_hill_climb(to_triples(pred), to_triples(gold), restarts, seed).f1;
    m.unlabeled =
        restricted_f1(unlabeled_triples(pred), unlabeled_triples(gold), restarts, seed);
    m.no_wsd = restricted_f1(no_wsd_triples(pred), no_wsd_triples(gold), restarts, seed);
    m.named_entities =
        restricted_f1(named_entity_triples(pred), named_entity_triples(gold), restarts, seed);
    m.wikification = restricted_f1(wiki_triples(pred), wiki_triples(gold), restarts, seed);
    m.negations = restricted_f1(negation_triples(pred), negation_triples(gold), restarts, seed);
    m.concepts = concept_bag_f1(pred, gold);
    m.reentrancies = restricted_f1(relation_subset(pred, true, false),
                                   relation_subset(gold, true, false), restarts, seed);
    m.srl = restricted_f1(relation_subset(pred, false, true), relation_subset(gold, false, true),
                          restarts, seed);
    return m;
}

// ---------------------------------------------------------------------------
// Corpus kernels. Micro Smatch sums integer matched/size counts, so the
// parallel kernel is bit-identical to the serial one.

namespace {

struct MicroCounts {
    long matched = 0, pred = 0, gold = 0;
    void add(const MappingResult& r) {
        matched += r.matched;
        pred += r.pred_size;
        gold += r.gold_size;
    }
    double f1() const {
        double p = pred > 0 ? static_cast<double>(matched) / pred : (gold == 0 ? 1.0 : 0.0);
        double r = gold > 0 ? static_cast<double>(matched) / gold : (pred == 0 ? 1.0 : 0.0);
        return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
    }
};

}  // namespace

CorpusScore score_corpus_serial(const std::vector<AmrGraph>& pred,
                                const std::vector<AmrGraph>& gold, int restarts, uint64_t seed) {
    if (pred.size() != gold.size())
        throw std::runtime_error("score_corpus: corpora differ in length");
    CorpusScore out;
    out.sentences = pred.size();
    out.per_sentence.resize(pred.size());
    MicroCounts smatch;
    double concept_sum = 0;
    for (size_t i = 0; i < pred.size(); ++i) {
        uint64_t s = mix_seed(seed, i);
        out.per_sentence[i] = metric_breakdown(pred[i], gold[i], restarts, s);
        smatch.add(smatch_hill_climb(to_triples(pred[i]), to_triples(gold[i]), restarts, s));
        concept_sum += out.per_sentence[i].concepts;
    }
    out.micro = MetricSuite{};
    out.micro.smatch = smatch.f1();
    // remaining columns reported as sentence means over the breakdown
    for (size_t i = 0; i < pred.size(); ++i) {
        out.micro.unlabeled += out.per_sentence[i].unlabeled;
        out.micro.no_wsd += out.per_sentence[i].no_wsd;
        out.micro.named_entities += out.per_sentence[i].named_entities;
        out.micro.wikification += out.per_sentence[i].wikification;
        out.micro.negations += out.per_sentence[i].negations;
        out.micro.reentrancies += out.per_sentence[i].reentrancies;
        out.micro.srl += out.per_sentence[i].srl;
    }
    if (!pred.empty()) {
        double n = static_cast<double>(pred.size());
        out.micro.unlabeled /= n;
        out.micro.no_wsd /= n;
        out.micro.named_entities /= n;
        out.micro.wikification /= n;
        out.micro.negations /= n;
        out.micro.reentrancies /= n;
        out.micro.srl /= n;
        out.micro.concepts = concept_sum / n;
    }
    return out;
}

CorpusScore score_corpus_parallel(const std::vector<AmrGraph>& pred,
                                  const std::vector<AmrGraph>& gold, int restarts, uint64_t seed,
                                  int jobs) {
    if (pred.size() != gold.size())
        throw std::runtime_error("score_corpus: corpora differ in length");
    CorpusScore out;
    out.sentences = pred.size();
    out.per_sentence.resize(pred.size());
    std::vector<MappingResult> full(pred.size());
    const int n = static_cast<int>(pred.size());
#ifdef _OPENMP
    if (jobs > 0) omp_set_num_threads(jobs);
#pragma omp parallel for schedule(dynamic)
#endif
    for (int i = 0; i < n; ++i) {
        uint64_t s = mix_seed(seed, static_cast<uint64_t>(i));
        out.per_sentence[i] = metric_breakdown(pred[i], gold[i], restarts, s);
        full[i] = smatch_hill_climb(to_triples(pred[i]), to_triples(gold[i]), restarts, s);
    }
    MicroCounts smatch;
    for (const MappingResult& r : full) smatch.add(r);
    out.micro = MetricSuite{};
    out.micro.smatch = smatch.f1();
    for (int i = 0; i < n; ++i) {
        out.micro.unlabeled += out.per_sentence[i].unlabeled;
        out.micro.no_wsd += out.per_sentence[i].no_wsd;
        out.micro.named_entities += out.per_sentence[i].named_entities;
        out.micro.wikification += out.per_sentence[i].wikification;
        out.micro.negations += out.per_sentence[i].negations;
        out.micro.reentrancies += out.per_sentence[i].reentrancies;
        out.micro.srl += out.per_sentence[i].srl;
        out.micro.concepts += out.per_sentence[i].concepts;
    }
    if (n > 0) {
        out.micro.unlabeled /= n;
        out.micro.no_wsd /= n;
        out.micro.named_entities /= n;
        out.micro.wikification /= n;
        out.micro.negations /= n;
        out.micro.reentrancies /= n;
        out.micro.srl /= n;
        out.micro.concepts /= n;
    }
    return out;
}

CorpusScore score_corpus(const std::vector<AmrGraph>& pred, const std::vector<AmrGraph>& gold,
                         int restarts, uint64_t seed, int jobs) {
    if (jobs <= 1) return score_corpus_serial(pred, gold, restarts, seed);
    return score_corpus_parallel(pred, gold, restarts, seed, jobs);
}

}  // namespace amr
