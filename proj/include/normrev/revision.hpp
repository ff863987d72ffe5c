#pragma once

#include "normrev/error.hpp"
#include "normrev/model.hpp"
#include "normrev/norms.hpp"
#include "normrev/strictness.hpp"

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace normrev {

enum class revision_relation { relaxation, strengthening, equivalent, incomparable };
enum class sanction_change { increased, decreased, mixed, unchanged, not_comparable };

inline std::string_view to_string(revision_relation r) {
    switch (r) {
    case revision_relation::relaxation: return "Relaxation";
    case revision_relation::strengthening: return "Strengthening";
    case revision_relation::equivalent: return "Equivalent";
    case revision_relation::incomparable: return "Incomparable";
    }
    return "?";
}

inline std::string_view to_string(sanction_change c) {
    switch (c) {
    case sanction_change::increased: return "Increased";
    case sanction_change::decreased: return "Decreased";
    case sanction_change::mixed: return "Mixed";
    case sanction_change::unchanged: return "Unchanged";
    case sanction_change::not_comparable: return "NotComparable";
    }
    return "?";
}

/// Equivalent and Incomparable are both regular alterations.
inline bool is_alteration(revision_relation r) {
    return r == revision_relation::equivalent || r == revision_relation::incomparable;
}

struct revision_verdict {
    revision_relation relation = revision_relation::equivalent;
    std::optional<path> witness_in_r_not_n; ///< violates the revised set only
    std::optional<path> witness_in_n_not_r; ///< violates the original set only
    sanction_change sanctions = sanction_change::unchanged;
};

struct containment_result {
    bool contained = true;
    std::optional<path> counterexample;
};

namespace detail {

inline void require_total(const transition_system& m) {
    if (auto dead = find_deadlock(m)) throw not_total(*dead);
}

inline void require_vocabulary(const transition_system& m, const norm_set& ns) {
    for (const auto& a : atoms_of(ns))
        if (!m.atoms.contains(a))
            throw vocabulary_mismatch("norm set '" + ns.id + "' uses atom '" + a + "' outside the model vocabulary");
}

/// Rewrites a lasso into the same infinite word with the shortest stem and a
/// primitive cycle.
inline path normalize_lasso(std::vector<state_id> stem, std::vector<state_id> cycle) {
    while (!stem.empty() && stem.back() == cycle.back()) {
        std::rotate(cycle.rbegin(), cycle.rbegin() + 1, cycle.rend());
        stem.pop_back();
    }
    const std::size_t n = cycle.size();
    for (std::size_t period = 1; period < n; ++period) {
        if (n % period != 0) continue;
        bool periodic = true;
        for (std::size_t i = period; i < n && periodic; ++i) periodic = cycle[i] == cycle[i - period];
        if (periodic) {
            cycle.resize(period);
            break;
        }
    }
    return path::lasso(std::move(stem), cycle);
}

/// Product of a transition system with path-mode monitors for a list of
/// norms. Nodes are discovered breadth-first from the initial node with
/// successors in lexicographic state order, so the BFS tree holds the
/// lexicographically least shortest path to every node.
class monitor_product {
public:
    struct node {
        std::size_t state;
        std::vector<lifecycle> monitors;
    };

    /// `keep` decides which nodes exist; successors failing it are dropped.
    template <typename Keep>
    monitor_product(const state_graph& g, std::vector<const norm*> norms, semantics sem, Keep keep)
        : graph_(g), norms_(std::move(norms)), sem_(sem) {
        node first{g.init(), {}};
        for (const norm* n : norms_)
            first.monitors.push_back(monitor_init(*n, monitor_mode::path, g.labels(g.init()), sem_).state.phase);
        if (!keep(first)) return;
        add(std::move(first), npos);
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const auto from = nodes_[i];
            for (auto t : g.successors(from.state)) {
                node next{t, advance(from.monitors, g.labels(t))};
                if (!keep(next)) continue;
                auto [idx, fresh] = add(std::move(next), i);
                succ_[i].push_back(idx);
                (void)fresh;
            }
        }
    }

    std::size_t size() const { return nodes_.size(); }
    const node& at(std::size_t i) const { return nodes_[i]; }
    const std::vector<std::size_t>& successors(std::size_t i) const { return succ_[i]; }
    std::size_t depth(std::size_t i) const { return depth_[i]; }

    /// M-states from the initial node up to and including `i`.
    std::vector<state_id> trail(std::size_t i) const {
        std::vector<state_id> out;
        for (std::size_t k = i; k != npos; k = parent_[k]) out.push_back(graph_.id(nodes_[k].state));
        std::reverse(out.begin(), out.end());
        return out;
    }

    /// Shortest, then lexicographically least, cycle through `i`, as M-states
    /// starting at `i`. Empty if `i` lies on no cycle.
    std::vector<state_id> shortest_cycle(std::size_t i) const {
        std::vector<std::size_t> parent(size(), npos);
        std::vector<bool> seen(size(), false);
        std::deque<std::size_t> queue{i};
        seen[i] = true;
        while (!queue.empty()) {
            auto u = queue.front();
            queue.pop_front();
            for (auto v : succ_[u]) {
                if (v == i) {
                    std::vector<state_id> out;
                    for (std::size_t k = u; k != npos; k = parent[k]) out.push_back(graph_.id(nodes_[k].state));
                    std::reverse(out.begin(), out.end());
                    return out;
                }
                if (!seen[v]) {
                    seen[v] = true;
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        return {};
    }

    /// Marks nodes that belong to a cycle (non-trivial SCC or self-loop).
    std::vector<bool> on_cycle() const {
        // Iterative Tarjan.
        const std::size_t n = size();
        std::vector<std::size_t> index(n, npos), low(n, 0), comp(n, npos);
        std::vector<bool> on_stack(n, false), cyclic(n, false);
        std::vector<std::size_t> stack;
        std::vector<std::pair<std::size_t, std::size_t>> call;
        std::size_t counter = 0, comps = 0;
        for (std::size_t root = 0; root < n; ++root) {
            if (index[root] != npos) continue;
            call.emplace_back(root, 0);
            index[root] = low[root] = counter++;
            stack.push_back(root);
            on_stack[root] = true;
            while (!call.empty()) {
                auto& [u, next] = call.back();
                if (next < succ_[u].size()) {
                    auto v = succ_[u][next++];
                    if (index[v] == npos) {
                        index[v] = low[v] = counter++;
                        stack.push_back(v);
                        on_stack[v] = true;
                        call.emplace_back(v, 0);
                    } else if (on_stack[v]) {
                        low[u] = std::min(low[u], index[v]);
                    }
                    continue;
                }
                const std::size_t done = u;
                call.pop_back();
                if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[done]);
                if (low[done] == index[done]) {
                    std::vector<std::size_t> members;
                    std::size_t w;
                    do {
                        w = stack.back();
                        stack.pop_back();
                        on_stack[w] = false;
                        comp[w] = comps;
                        members.push_back(w);
                    } while (w != done);
                    ++comps;
                    bool has_cycle = members.size() > 1;
                    if (!has_cycle)
                        for (auto v : succ_[done]) has_cycle = has_cycle || v == done;
                    for (auto m : members) cyclic[m] = has_cycle;
                }
            }
        }
        return cyclic;
    }

private:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    std::vector<lifecycle> advance(const std::vector<lifecycle>& from, const label_set& labels) const {
        std::vector<lifecycle> out(from.size());
        for (std::size_t k = 0; k < from.size(); ++k)
            out[k] = monitor_step(monitor_state{from[k], monitor_mode::path}, *norms_[k], labels, sem_).state.phase;
        return out;
    }

    std::pair<std::size_t, bool> add(node n, std::size_t parent) {
        std::vector<std::uint8_t> key;
        key.reserve(n.monitors.size() + sizeof(std::size_t));
        for (std::size_t b = 0; b < sizeof(std::size_t); ++b) key.push_back(static_cast<std::uint8_t>(n.state >> (8 * b)));
        for (auto l : n.monitors) key.push_back(static_cast<std::uint8_t>(l));
        auto [it, fresh] = index_.emplace(std::move(key), nodes_.size());
        if (fresh) {
            nodes_.push_back(std::move(n));
            succ_.emplace_back();
            parent_.push_back(parent);
            depth_.push_back(parent == npos ? 0 : depth_[parent] + 1);
        }
        return {it->second, fresh};
    }

    const state_graph& graph_;
    std::vector<const norm*> norms_;
    semantics sem_;
    std::vector<node> nodes_;
    std::vector<std::vector<std::size_t>> succ_;
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> depth_;
    std::map<std::vector<std::uint8_t>, std::size_t> index_;
};

} // namespace detail

/// Decides Viol(M, small) ⊆ Viol(M, big).
///
/// Builds the product of M with path-mode monitors for both sets, drops
/// every node where a `big` monitor is violated, and looks for a node where
/// a `small` monitor is violated that lies on a cycle. Such a node yields a
/// lasso violating `small` but not `big`. The returned counterexample has
/// the shortest stem, then the shortest cycle, then the least state ids.
inline containment_result viol_contains(const transition_system& m, const norm_set& big, const norm_set& small,
                                        semantics sem = {}) {
    state_graph g(m);
    detail::require_total(m);
    detail::require_vocabulary(m, big);
    detail::require_vocabulary(m, small);

    std::vector<const norm*> norms;
    for (const auto& n : big.norms) norms.push_back(&n);
    for (const auto& n : small.norms) norms.push_back(&n);
    const std::size_t nbig = big.norms.size();

    auto keep = [&](const detail::monitor_product::node& x) {
        for (std::size_t k = 0; k < nbig; ++k)
            if (x.monitors[k] == lifecycle::violated) return false;
        return true;
    };
    detail::monitor_product product(g, norms, sem, keep);

    auto small_violated = [&](std::size_t i) {
        const auto& mon = product.at(i).monitors;
        return std::any_of(mon.begin() + static_cast<std::ptrdiff_t>(nbig), mon.end(),
                           [](lifecycle l) { return l == lifecycle::violated; });
    };

    auto cyclic = product.on_cycle();
    std::optional<std::size_t> best_depth;
    std::optional<path> best;
    // Nodes are in BFS order: depth is non-decreasing, and within a depth the
    // trails are lexicographically increasing.
    for (std::size_t i = 0; i < product.size(); ++i) {
        if (best_depth && product.depth(i) > *best_depth) break;
        if (!cyclic[i] || !small_violated(i)) continue;
        auto trail = product.trail(i);
        trail.pop_back();
        auto cycle = product.shortest_cycle(i);
        if (!best || cycle.size() < best->cycle_length) {
            best_depth = product.depth(i);
            best = path::lasso(std::move(trail), cycle);
        }
    }
    if (!best) return {};
    return {false, detail::normalize_lasso(best->stem(), best->cycle())};
}

/// Component-wise sanction comparison of norms matched by id.
inline sanction_change compare_sanctions(const norm_set& before, const norm_set& after) {
    if (before.norms.size() != after.norms.size()) return sanction_change::not_comparable;
    bool up = false, down = false;
    for (const auto& n : before.norms) {
        const norm* r = after.find(n.id);
        if (!r) return sanction_change::not_comparable;
        if (r->sanction > n.sanction) up = true;
        if (r->sanction < n.sanction) down = true;
    }
    if (up && down) return sanction_change::mixed;
    if (up) return sanction_change::increased;
    if (down) return sanction_change::decreased;
    return sanction_change::unchanged;
}

inline revision_relation relation_from(bool revised_in_original, bool original_in_revised) {
    if (revised_in_original && original_in_revised) return revision_relation::equivalent;
    if (revised_in_original) return revision_relation::relaxation;
    if (original_in_revised) return revision_relation::strengthening;
    return revision_relation::incomparable;
}

/// Classifies replacing `original` with `revised` by comparing Viol-sets.
/// Relaxation means Viol(M, revised) ⊂ Viol(M, original), strictly.
inline revision_verdict classify_revision(const transition_system& m, const norm_set& original,
                                          const norm_set& revised, semantics sem = {}) {
    auto r_in_n = viol_contains(m, original, revised, sem);
    auto n_in_r = viol_contains(m, revised, original, sem);
    revision_verdict v;
    v.relation = relation_from(r_in_n.contained, n_in_r.contained);
    v.witness_in_r_not_n = std::move(r_in_n.counterexample);
    v.witness_in_n_not_r = std::move(n_in_r.counterexample);
    v.sanctions = compare_sanctions(original, revised);
    return v;
}

// ── Syntactic cases ──────────────────────────────────────────────────────

enum class syntactic_direction { relaxation_or_equivalent, strengthening_or_equivalent, unknown };
enum class syntactic_case { cond, target, deadline };

inline std::string_view to_string(syntactic_direction d) {
    switch (d) {
    case syntactic_direction::relaxation_or_equivalent: return "RelaxationOrEquivalent";
    case syntactic_direction::strengthening_or_equivalent: return "StrengtheningOrEquivalent";
    case syntactic_direction::unknown: return "Unknown";
    }
    return "?";
}

inline std::string_view to_string(syntactic_case c) {
    switch (c) {
    case syntactic_case::cond: return "CondCase";
    case syntactic_case::target: return "TargetCase";
    case syntactic_case::deadline: return "DeadlineCase";
    }
    return "?";
}

struct syntactic_verdict {
    syntactic_direction direction = syntactic_direction::unknown;
    std::set<syntactic_case> fired;
    /// An obligation deadline case fired; it is applied with reversed
    /// polarity (an earlier deadline yields more violations).
    bool deviation = false;
    /// Every component is equivalent under the strictness mode.
    bool unchanged = false;
};

/// Applies the single-norm relaxation cases to `after` versus `before`.
///
/// A component "relaxes" when: cond gets stricter; the target gets less
/// strict (obligation) or stricter (prohibition); the deadline gets less
/// strict (prohibition) or stricter (obligation, flagged as deviation).
/// The mirror changes strengthen. `never` counts as the strictest deadline.
/// With a model, strictness is model-relative; otherwise logical.
inline syntactic_verdict syntactic_classify(const norm& before, const norm& after, const transition_system* m = nullptr) {
    syntactic_verdict v;
    if (before.kind != after.kind) return v;

    enum class effect { none, relax, strengthen, unknown };
    auto effect_of = [](strictness_relation r, bool stricter_relaxes) {
        switch (r) {
        case strictness_relation::equivalent: return effect::none;
        case strictness_relation::strictly_stricter: return stricter_relaxes ? effect::relax : effect::strengthen;
        case strictness_relation::strictly_less_strict: return stricter_relaxes ? effect::strengthen : effect::relax;
        case strictness_relation::incomparable: return effect::unknown;
        }
        return effect::unknown;
    };
    const bool obligation = before.kind == norm_kind::obligation;
    auto dl = [](const norm& n) { return n.deadline ? *n.deadline : formula::bottom(); };

    const std::pair<syntactic_case, effect> parts[] = {
        {syntactic_case::cond, effect_of(strictness(after.cond, before.cond, m), true)},
        {syntactic_case::target, effect_of(strictness(after.target, before.target, m), !obligation)},
        {syntactic_case::deadline, effect_of(strictness(dl(after), dl(before), m), obligation)},
    };

    bool relax = false, strengthen = false;
    for (const auto& [c, e] : parts) {
        if (e == effect::unknown) return syntactic_verdict{};
        if (e == effect::none) continue;
        (e == effect::relax ? relax : strengthen) = true;
        v.fired.insert(c);
        if (c == syntactic_case::deadline && obligation) v.deviation = true;
    }
    if (relax && strengthen) return syntactic_verdict{};
    v.unchanged = !relax && !strengthen;
    v.direction = strengthen ? syntactic_direction::strengthening_or_equivalent
                             : syntactic_direction::relaxation_or_equivalent;
    return v;
}

// ── Candidate generation ─────────────────────────────────────────────────

enum class edit_direction { relax, strengthen, alter };

inline std::string_view to_string(edit_direction d) {
    switch (d) {
    case edit_direction::relax: return "relax";
    case edit_direction::strengthen: return "strengthen";
    case edit_direction::alter: return "alter";
    }
    return "?";
}

struct candidate_pool {
    std::vector<formula> formulas;
    std::vector<decimal> sanctions;

    friend bool operator==(const candidate_pool&, const candidate_pool&) = default;
};

/// A single-component edit of a norm.
struct candidate {
    norm revised;
    std::string component;  ///< cond, target, deadline or sanction
    std::string edit;       ///< replace, and, or
    std::size_t pool_index; ///< into pool.formulas or pool.sanctions
    syntactic_verdict verdict;
};

/// Enumerates single-component edits of `n` whose syntactic direction
/// matches `direction` (alter accepts Unknown). Formula components are tried
/// in the order cond, target, deadline; each pool formula replaces the
/// component, is conjoined with it, and is disjoined with it. Sanction edits
/// come last and match by numeric direction. Edits that change nothing
/// (syntactically equivalent) and duplicates are skipped.
inline std::vector<candidate> generate_candidates(const norm& n, const candidate_pool& pool, edit_direction direction,
                                                  const transition_system* m = nullptr) {
    std::vector<candidate> out;
    auto seen = [&](const norm& r) {
        if (r == n) return true;
        return std::any_of(out.begin(), out.end(), [&](const candidate& c) { return c.revised == r; });
    };
    auto wanted = [&](const syntactic_verdict& v) {
        if (v.unchanged) return false;
        switch (direction) {
        case edit_direction::relax: return v.direction == syntactic_direction::relaxation_or_equivalent;
        case edit_direction::strengthen: return v.direction == syntactic_direction::strengthening_or_equivalent;
        case edit_direction::alter: return v.direction == syntactic_direction::unknown;
        }
        return false;
    };

    for (const char* component : {"cond", "target", "deadline"}) {
        const std::string comp = component;
        for (std::size_t i = 0; i < pool.formulas.size(); ++i) {
            const formula& p = pool.formulas[i];
            std::vector<std::pair<std::string, std::optional<formula>>> edits;
            if (comp == "deadline" && !n.deadline) {
                edits.emplace_back("replace", p);
            } else {
                const formula cur = comp == "cond" ? n.cond : comp == "target" ? n.target : *n.deadline;
                edits.emplace_back("replace", p);
                edits.emplace_back("and", formula::conj(cur, p));
                edits.emplace_back("or", formula::disj(cur, p));
            }
            for (auto& [style, f] : edits) {
                norm r = n;
                if (comp == "cond") r.cond = *f;
                else if (comp == "target") r.target = *f;
                else r.deadline = f;
                if (seen(r)) continue;
                auto v = syntactic_classify(n, r, m);
                if (wanted(v)) out.push_back(candidate{std::move(r), comp, style, i, v});
            }
        }
    }
    for (std::size_t i = 0; i < pool.sanctions.size(); ++i) {
        const decimal s = pool.sanctions[i];
        if (s == n.sanction) continue;
        if (direction == edit_direction::relax && s > n.sanction) continue;
        if (direction == edit_direction::strengthen && s < n.sanction) continue;
        norm r = n;
        r.sanction = s;
        if (seen(r)) continue;
        auto v = syntactic_classify(n, r, m);
        out.push_back(candidate{std::move(r), "sanction", "replace", i, v});
    }
    return out;
}

/// `ns` with the norm of the same id replaced by `revised`.
inline norm_set apply_candidate(const norm_set& ns, const norm& revised, std::string new_id) {
    norm_set out = ns;
    out.id = std::move(new_id);
    for (auto& n : out.norms)
        if (n.id == revised.id) n = revised;
    return out;
}

} // namespace normrev
