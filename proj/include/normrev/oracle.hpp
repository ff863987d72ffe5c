#pragma once

#include "normrev/revision.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace normrev {

struct oracle_options {
    std::size_t max_nodes = 5000;             ///< reachable monitor configurations
    std::optional<std::size_t> horizon;       ///< default: 2 x configuration count
    std::uint64_t max_expansions = 50'000'000; ///< DFS steps over all searches
};

namespace detail {

/// Brute-force search for a run that violates `a` but never `b`.
///
/// Enumerates runs from s0 depth-first, replaying every norm monitor along
/// each run. A run is accepted once a configuration (state plus all monitor
/// phases) repeats and the repeated configuration already violates `a`:
/// monitors are deterministic and Violated is absorbing, so looping forever
/// keeps the verdicts. A run whose first repeat does not qualify is not
/// extended, because cutting the loop out of any longer witness leaves a
/// witness.
class violation_search {
public:
    violation_search(const state_graph& g, const norm_set& a, const norm_set& b, semantics sem)
        : g_(g), sem_(sem) {
        for (const auto& n : a.norms) norms_.push_back(&n);
        for (const auto& n : b.norms) norms_.push_back(&n);
        na_ = a.norms.size();
    }

    /// Number of distinct configurations reachable from s0, capped at `cap + 1`.
    std::size_t count_configurations(std::size_t cap) const {
        std::set<config> seen{initial()};
        std::vector<config> todo{initial()};
        while (!todo.empty() && seen.size() <= cap) {
            config c = std::move(todo.back());
            todo.pop_back();
            for (auto t : g_.successors(c.state)) {
                config d = step(c, t);
                if (seen.insert(d).second) todo.push_back(std::move(d));
            }
        }
        return seen.size();
    }

    std::optional<path> find(std::size_t horizon, std::uint64_t& budget) const {
        std::vector<config> run{initial()};
        if (violates_b(run.back())) return std::nullopt;
        std::map<config, std::size_t> position{{run.back(), 0}};
        std::vector<std::size_t> branch{0};
        while (!run.empty()) {
            if (budget == 0) throw budget_exceeded("oracle search exceeded its expansion budget");
            --budget;
            const auto& succ = g_.successors(run.back().state);
            auto& next = branch.back();
            if (next == succ.size() || run.size() >= horizon) {
                position.erase(run.back());
                run.pop_back();
                branch.pop_back();
                continue;
            }
            config c = step(run.back(), succ[next++]);
            if (violates_b(c)) continue;
            if (auto it = position.find(c); it != position.end()) {
                if (violates_a(c)) return lasso_from(run, it->second);
                continue;
            }
            position.emplace(c, run.size());
            run.push_back(std::move(c));
            branch.push_back(0);
        }
        return std::nullopt;
    }

private:
    struct config {
        std::size_t state;
        std::vector<lifecycle> phases;
        friend auto operator<=>(const config&, const config&) = default;
    };

    config initial() const {
        config c{g_.init(), {}};
        for (const norm* n : norms_)
            c.phases.push_back(monitor_init(*n, monitor_mode::path, g_.labels(c.state), sem_).state.phase);
        return c;
    }

    config step(const config& c, std::size_t to) const {
        config d{to, c.phases};
        for (std::size_t k = 0; k < norms_.size(); ++k)
            d.phases[k] =
                monitor_step(monitor_state{c.phases[k], monitor_mode::path}, *norms_[k], g_.labels(to), sem_).state.phase;
        return d;
    }

    bool violates_a(const config& c) const {
        for (std::size_t k = 0; k < na_; ++k)
            if (c.phases[k] == lifecycle::violated) return true;
        return false;
    }
    bool violates_b(const config& c) const {
        for (std::size_t k = na_; k < norms_.size(); ++k)
            if (c.phases[k] == lifecycle::violated) return true;
        return false;
    }

    path lasso_from(const std::vector<config>& run, std::size_t loop_at) const {
        std::vector<state_id> stem, cycle;
        for (std::size_t i = 0; i < loop_at; ++i) stem.push_back(g_.id(run[i].state));
        for (std::size_t i = loop_at; i < run.size(); ++i) cycle.push_back(g_.id(run[i].state));
        return normalize_lasso(std::move(stem), std::move(cycle));
    }

    const state_graph& g_;
    semantics sem_;
    std::vector<const norm*> norms_;
    std::size_t na_ = 0;
};

} // namespace detail

/// Independent brute-force counterpart of classify_revision.
inline revision_verdict oracle_compare(const transition_system& m, const norm_set& original, const norm_set& revised,
                                       oracle_options opts = {}, semantics sem = {}) {
    state_graph g(m);
    detail::require_total(m);
    detail::require_vocabulary(m, original);
    detail::require_vocabulary(m, revised);

    detail::violation_search r_not_n(g, revised, original, sem);
    detail::violation_search n_not_r(g, original, revised, sem);
    const std::size_t nodes = r_not_n.count_configurations(opts.max_nodes);
    if (nodes > opts.max_nodes)
        throw budget_exceeded("oracle: more than " + std::to_string(opts.max_nodes) + " monitor configurations");
    const std::size_t horizon = opts.horizon.value_or(2 * nodes);

    std::uint64_t budget = opts.max_expansions;
    revision_verdict v;
    v.witness_in_r_not_n = r_not_n.find(horizon, budget);
    v.witness_in_n_not_r = n_not_r.find(horizon, budget);
    v.relation = relation_from(!v.witness_in_r_not_n, !v.witness_in_n_not_r);
    v.sanctions = compare_sanctions(original, revised);
    return v;
}

} // namespace normrev
