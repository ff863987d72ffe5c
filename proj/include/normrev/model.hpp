#pragma once

#include "normrev/error.hpp"
#include "normrev/formula.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace normrev {

using state_id = std::string;
using edge = std::pair<state_id, state_id>;

/// Finite transition system M = (S, T, s0, V) with V : S -> 2^Props.
///
/// Ordered containers keep the value canonical, so structural equality is
/// plain member-wise equality. The raw value may be ill-formed; `validate`
/// lists what is wrong with it.
struct transition_system {
    atom_set atoms;
    std::map<state_id, label_set> states;
    state_id init;
    std::set<edge> edges;

    friend bool operator==(const transition_system&, const transition_system&) = default;
};

/// Defect list; empty means well-formed.
inline std::vector<std::string> validate(const transition_system& m, bool allow_placeholders = false) {
    std::vector<std::string> defects;
    for (const auto& a : m.atoms)
        if (!is_identifier(a, allow_placeholders)) defects.push_back("invalid atom name '" + a + "'");
    if (m.states.empty()) defects.emplace_back("no states");
    if (m.init.empty())
        defects.emplace_back("missing init");
    else if (!m.states.contains(m.init))
        defects.push_back("unknown state '" + m.init + "' as init");
    for (const auto& [id, labels] : m.states) {
        if (!is_identifier(id)) defects.push_back("invalid state id '" + id + "'");
        for (const auto& a : labels)
            if (!m.atoms.contains(a)) defects.push_back("unknown atom '" + a + "' in labels of state '" + id + "'");
    }
    for (const auto& [from, to] : m.edges) {
        if (!m.states.contains(from)) defects.push_back("unknown state '" + from + "' in edge " + from + "->" + to);
        if (!m.states.contains(to)) defects.push_back("unknown state '" + to + "' in edge " + from + "->" + to);
    }
    return defects;
}

/// Index-based view of a well-formed transition system.
///
/// State indices follow lexicographic id order, and successor lists are
/// sorted, so iterating successors visits them in lexicographic id order.
class state_graph {
public:
    explicit state_graph(const transition_system& m) {
        // Template worlds carry `{a}` in atom names; the graph does not care.
        if (auto defects = validate(m, true); !defects.empty()) throw invalid_model(std::move(defects));
        std::map<state_id, std::size_t> index;
        for (const auto& [id, labels] : m.states) {
            index.emplace(id, ids_.size());
            ids_.push_back(id);
            labels_.push_back(labels);
        }
        succ_.resize(ids_.size());
        for (const auto& [from, to] : m.edges) succ_[index.at(from)].push_back(index.at(to));
        init_ = index.at(m.init);
        index_ = std::move(index);
    }

    std::size_t size() const { return ids_.size(); }
    std::size_t init() const { return init_; }
    const state_id& id(std::size_t s) const { return ids_[s]; }
    const label_set& labels(std::size_t s) const { return labels_[s]; }
    const std::vector<std::size_t>& successors(std::size_t s) const { return succ_[s]; }
    std::optional<std::size_t> find(const state_id& id) const {
        auto it = index_.find(id);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    std::vector<bool> reachable_mask() const {
        std::vector<bool> seen(size(), false);
        std::vector<std::size_t> stack{init_};
        seen[init_] = true;
        while (!stack.empty()) {
            auto s = stack.back();
            stack.pop_back();
            for (auto t : succ_[s])
                if (!seen[t]) {
                    seen[t] = true;
                    stack.push_back(t);
                }
        }
        return seen;
    }

private:
    std::vector<state_id> ids_;
    std::vector<label_set> labels_;
    std::vector<std::vector<std::size_t>> succ_;
    std::map<state_id, std::size_t> index_;
    std::size_t init_ = 0;
};

/// A run of M: either a finite prefix, or a lasso whose last `cycle_length`
/// states repeat forever.
struct path {
    std::vector<state_id> states;
    std::size_t cycle_length = 0;

    static path finite(std::vector<state_id> s) { return path{std::move(s), 0}; }
    static path lasso(std::vector<state_id> stem, const std::vector<state_id>& cycle) {
        std::size_t n = cycle.size();
        stem.insert(stem.end(), cycle.begin(), cycle.end());
        return path{std::move(stem), n};
    }

    bool is_lasso() const { return cycle_length > 0; }
    std::vector<state_id> stem() const {
        return {states.begin(), states.end() - static_cast<std::ptrdiff_t>(cycle_length)};
    }
    std::vector<state_id> cycle() const {
        return {states.end() - static_cast<std::ptrdiff_t>(cycle_length), states.end()};
    }
    /// Stem followed by `cycles` copies of the cycle; the prefix itself for finite paths.
    std::vector<state_id> unroll(std::size_t cycles) const {
        if (!is_lasso()) return states;
        std::vector<state_id> out = stem();
        auto c = cycle();
        for (std::size_t k = 0; k < cycles; ++k) out.insert(out.end(), c.begin(), c.end());
        return out;
    }

    friend bool operator==(const path&, const path&) = default;
};

/// Empty when `p` is a T-respecting run of `m` (starting at s0 if `from_init`).
inline std::optional<std::string> check_path(const transition_system& m, const path& p, bool from_init = true) {
    if (p.states.empty()) return "empty path";
    for (const auto& s : p.states)
        if (!m.states.contains(s)) return "unknown state '" + s + "'";
    if (from_init && p.states.front() != m.init) return "path does not start at init state '" + m.init + "'";
    for (std::size_t i = 0; i + 1 < p.states.size(); ++i)
        if (!m.edges.contains({p.states[i], p.states[i + 1]}))
            return "no transition " + p.states[i] + "->" + p.states[i + 1];
    if (p.is_lasso()) {
        if (p.cycle_length > p.states.size()) return "cycle longer than path";
        const auto& loop_head = p.states[p.states.size() - p.cycle_length];
        if (!m.edges.contains({p.states.back(), loop_head}))
            return "cycle does not close: no transition " + p.states.back() + "->" + loop_head;
    }
    return std::nullopt;
}

inline std::set<state_id> reachable(const transition_system& m) {
    state_graph g(m);
    auto mask = g.reachable_mask();
    std::set<state_id> out;
    for (std::size_t s = 0; s < g.size(); ++s)
        if (mask[s]) out.insert(g.id(s));
    return out;
}

/// First reachable state without a successor, if any.
inline std::optional<state_id> find_deadlock(const transition_system& m) {
    state_graph g(m);
    auto mask = g.reachable_mask();
    for (std::size_t s = 0; s < g.size(); ++s)
        if (mask[s] && g.successors(s).empty()) return g.id(s);
    return std::nullopt;
}

inline bool is_total(const transition_system& m) { return !find_deadlock(m).has_value(); }

/// Adds a self-loop to every reachable deadlock state.
inline transition_system complete_total(const transition_system& m) {
    state_graph g(m);
    auto mask = g.reachable_mask();
    transition_system out = m;
    for (std::size_t s = 0; s < g.size(); ++s)
        if (mask[s] && g.successors(s).empty()) out.edges.emplace(g.id(s), g.id(s));
    return out;
}

inline constexpr std::uint64_t default_path_budget = 1'000'000;

/// Calls `visit` with every T-respecting sequence of exactly `length` states
/// from s0, in lexicographic order. Throws budget_exceeded up front when the
/// number of such sequences is above `budget`.
inline void for_each_path(const transition_system& m, std::size_t length,
                          const std::function<void(const path&)>& visit,
                          std::uint64_t budget = default_path_budget) {
    if (length == 0) throw error("path length must be positive");
    state_graph g(m);
    if (!is_total(m)) throw not_total(*find_deadlock(m));

    // count[k][s]: number of sequences of k more states after s (saturating).
    constexpr auto cap = std::numeric_limits<std::uint64_t>::max() / 2;
    std::vector<std::uint64_t> ways(g.size(), 1), next(g.size());
    for (std::size_t k = 1; k < length; ++k) {
        for (std::size_t s = 0; s < g.size(); ++s) {
            std::uint64_t sum = 0;
            for (auto t : g.successors(s)) sum = std::min(cap, sum + ways[t]);
            next[s] = sum;
        }
        ways.swap(next);
    }
    if (ways[g.init()] > budget)
        throw budget_exceeded("path enumeration of length " + std::to_string(length) + " exceeds budget of " +
                              std::to_string(budget) + " paths");

    std::vector<std::size_t> cur{g.init()};
    std::vector<std::size_t> branch{0};
    path p;
    while (!cur.empty()) {
        if (cur.size() == length) {
            p.states.clear();
            for (auto s : cur) p.states.push_back(g.id(s));
            visit(p);
            cur.pop_back();
            branch.pop_back();
            continue;
        }
        auto& b = branch.back();
        const auto& succ = g.successors(cur.back());
        if (b < succ.size()) {
            cur.push_back(succ[b++]);
            branch.push_back(0);
        } else {
            cur.pop_back();
            branch.pop_back();
        }
    }
}

inline std::vector<path> enumerate_paths(const transition_system& m, std::size_t length,
                                         std::uint64_t budget = default_path_budget) {
    std::vector<path> out;
    for_each_path(m, length, [&](const path& p) { out.push_back(p); }, budget);
    return out;
}

/// Uniform index in [0, n) from a 64-bit Mersenne twister.
inline std::size_t draw_index(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

/// Uniform double in [0, 1).
inline double draw_unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Random walk of `length` states from s0; successors drawn uniformly.
inline path sample_path(const transition_system& m, std::size_t length, std::uint64_t seed) {
    state_graph g(m);
    if (!is_total(m)) throw not_total(*find_deadlock(m));
    std::mt19937_64 rng(seed);
    path p;
    if (length == 0) return p;
    std::size_t s = g.init();
    p.states.push_back(g.id(s));
    while (p.states.size() < length) {
        const auto& succ = g.successors(s);
        s = succ[draw_index(rng, succ.size())];
        p.states.push_back(g.id(s));
    }
    return p;
}

/// Random lasso from s0: walks uniformly and, whenever the walk revisits a
/// state, closes the loop there with probability 1/2.
inline path sample_lasso(const transition_system& m, std::uint64_t seed) {
    state_graph g(m);
    if (!is_total(m)) throw not_total(*find_deadlock(m));
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> walk{g.init()};
    for (;;) {
        const auto& succ = g.successors(walk.back());
        std::size_t next = succ[draw_index(rng, succ.size())];
        for (std::size_t i = walk.size(); i-- > 0;) {
            if (walk[i] != next) continue;
            if (rng() & 1u) {
                std::vector<state_id> stem, cycle;
                for (std::size_t k = 0; k < i; ++k) stem.push_back(g.id(walk[k]));
                for (std::size_t k = i; k < walk.size(); ++k) cycle.push_back(g.id(walk[k]));
                return path::lasso(std::move(stem), cycle);
            }
            break;
        }
        walk.push_back(next);
    }
}

} // namespace normrev
