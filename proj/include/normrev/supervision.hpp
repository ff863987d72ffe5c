#pragma once

#include "normrev/decimal.hpp"
#include "normrev/error.hpp"
#include "normrev/model.hpp"
#include "normrev/norms.hpp"
#include "normrev/revision.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace normrev {

enum class enforcement { sanctioning, regimentation };
enum class objective_kind { max_consecutive, always_below_count, never_atom };

inline std::string_view to_string(enforcement e) {
    return e == enforcement::sanctioning ? "sanctioning" : "regimentation";
}

inline std::string_view to_string(objective_kind k) {
    switch (k) {
    case objective_kind::max_consecutive: return "max_consecutive";
    case objective_kind::always_below_count: return "always_below_count";
    case objective_kind::never_atom: return "never_atom";
    }
    return "?";
}

/// System objective over an atom family (`{a}` grounds per agent).
///
///  - max_consecutive: no agent holds the atom for more than `k` steps in a row
///  - always_below_count: fewer than `threshold` agents hold the atom
///  - never_atom: no agent holds the atom
struct objective {
    std::string id;
    objective_kind kind = objective_kind::never_atom;
    std::string atom;
    std::size_t k = 1;
    std::size_t threshold = 0;
    std::optional<double> max_minutes; ///< source of `k` when given in minutes
    bool per_agent = true;

    friend bool operator==(const objective&, const objective&) = default;
};

struct agent_spec {
    std::string id;
    double lambda = 1.0;  ///< sanction sensitivity
    double epsilon = 0.0; ///< exploration rate
    std::map<state_id, double> utilities;

    friend bool operator==(const agent_spec&, const agent_spec&) = default;
};

struct scenario {
    std::string name;
    transition_system world; ///< template; atom names may carry `{a}`
    std::map<state_id, double> utilities;
    std::vector<agent_spec> agents;
    norm_set norms; ///< templates
    std::vector<objective> objectives;
    candidate_pool pool;
    enforcement mode = enforcement::sanctioning;
    std::uint64_t seed = 0;
    std::size_t horizon = 0;
    std::size_t window = 1;
    double theta_low = 0.0;
    double theta_high = 1.0;
    double minutes_per_step = 1.0;

    double utility(const agent_spec& a, const state_id& s) const {
        if (auto it = a.utilities.find(s); it != a.utilities.end()) return it->second;
        if (auto it = utilities.find(s); it != utilities.end()) return it->second;
        return 0.0;
    }

    friend bool operator==(const scenario&, const scenario&) = default;
};

inline std::vector<std::string> validate(const scenario& sc) {
    std::vector<std::string> defects;
    for (auto& d : validate(sc.world, true)) defects.push_back("world: " + d);
    if (defects.empty() && !is_total(sc.world)) defects.push_back("world: transition relation is not total");
    if (sc.agents.empty()) defects.emplace_back("agents: at least one agent is required");
    std::set<std::string> ids;
    for (const auto& a : sc.agents) {
        if (!is_identifier(a.id)) defects.push_back("agents: invalid agent id '" + a.id + "'");
        if (!ids.insert(a.id).second) defects.push_back("agents: duplicate id " + a.id);
        if (!(a.lambda >= 0)) defects.push_back("agents: lambda of " + a.id + " must be >= 0");
        if (!(a.epsilon >= 0 && a.epsilon <= 1)) defects.push_back("agents: epsilon of " + a.id + " must be in [0,1]");
        for (const auto& [s, u] : a.utilities)
            if (!sc.world.states.contains(s)) defects.push_back("agents: utility for unknown state '" + s + "'");
    }
    for (const auto& [s, u] : sc.utilities)
        if (!sc.world.states.contains(s)) defects.push_back("utilities: unknown state '" + s + "'");
    for (auto& d : validate(sc.norms, &sc.world.atoms)) defects.push_back("norms: " + d);
    for (std::size_t i = 0; i < sc.pool.formulas.size(); ++i)
        for (const auto& a : atoms_of(sc.pool.formulas[i]))
            if (!sc.world.atoms.contains(a))
                defects.push_back("pool: unknown atom '" + a + "' in formula " + std::to_string(i));
    for (const auto& s : sc.pool.sanctions)
        if (s < decimal{}) defects.emplace_back("pool: negative sanction");
    std::set<std::string> oids;
    for (const auto& o : sc.objectives) {
        if (!oids.insert(o.id).second) defects.push_back("objectives: duplicate id " + o.id);
        if (!sc.world.atoms.contains(o.atom)) defects.push_back("objectives: unknown atom '" + o.atom + "'");
        if (o.kind == objective_kind::max_consecutive && o.k < 1) defects.push_back("objectives: k must be >= 1");
    }
    if (sc.window < 1) defects.emplace_back("window must be >= 1");
    if (sc.horizon > 0 && sc.window > sc.horizon) defects.emplace_back("window must not exceed horizon");
    if (!(sc.theta_low >= 0 && sc.theta_low <= sc.theta_high && sc.theta_high <= 1))
        defects.emplace_back("thresholds must satisfy 0 <= low <= high <= 1");
    if (!(sc.minutes_per_step > 0)) defects.emplace_back("minutes_per_step must be > 0");
    return defects;
}

inline void require_valid(const scenario& sc) {
    if (auto d = validate(sc); !d.empty()) throw invalid_model(std::move(d));
}

// ── Run log ──────────────────────────────────────────────────────────────

struct agent_snapshot {
    std::string agent;
    state_id state;
    label_set labels; ///< grounded
    bool explored = false;
    bool deadlock = false; ///< regimentation left no compliant successor

    friend bool operator==(const agent_snapshot&, const agent_snapshot&) = default;
};

struct verdict_summary {
    std::string relation;
    std::string sanctions;
    std::string syntactic;

    friend bool operator==(const verdict_summary&, const verdict_summary&) = default;
};

struct revision_decision {
    std::size_t step = 0;
    std::size_t window = 0;
    std::string direction;
    double window_score = 0;
    std::size_t candidates = 0;
    bool adopted = false;
    std::string from_set;
    std::string to_set;
    std::string norm;
    std::string component;
    std::string edit;
    std::size_t pool_index = 0;
    double candidate_score = 0;
    std::optional<verdict_summary> verdict;
    std::optional<norm_set> revised; ///< the adopted set

    friend bool operator==(const revision_decision&, const revision_decision&) = default;
};

struct step_record {
    std::size_t step = 0;
    std::string normset;
    std::vector<agent_snapshot> agents;
    std::vector<monitor_event> events;
    std::map<std::string, bool> objectives; ///< true when satisfied at this step
    std::vector<revision_decision> revisions;

    friend bool operator==(const step_record&, const step_record&) = default;
};

struct run_summary {
    std::map<std::string, double> objectives;
    std::vector<double> window_scores;
    decimal ledger_total;
    std::map<std::string, decimal> ledger_per_agent;
    std::size_t violations = 0;
    std::size_t deadlocks = 0;
    std::string final_set;

    friend bool operator==(const run_summary&, const run_summary&) = default;
};

struct run_log {
    std::vector<step_record> records;
    std::vector<revision_decision> decisions;
    std::map<std::string, norm_set> norm_sets; ///< every set that was enforced
    run_summary summary;

    friend bool operator==(const run_log&, const run_log&) = default;
};

// ── Objectives ───────────────────────────────────────────────────────────

inline std::size_t holders(const objective& o, const step_record& r) {
    std::size_t n = 0;
    for (const auto& a : r.agents)
        if (a.labels.contains(ground_name(o.atom, a.agent))) ++n;
    return n;
}

/// Satisfaction rate of `o` over `records`, in [0, 1].
inline double evaluate_objective(const objective& o, std::span<const step_record> records) {
    if (records.empty()) return 1.0;
    if (o.kind == objective_kind::max_consecutive) {
        std::map<std::string, std::size_t> run, longest;
        for (const auto& a : records.front().agents) longest[a.agent] = 0;
        for (const auto& r : records)
            for (const auto& a : r.agents) {
                auto& cur = run[a.agent];
                cur = a.labels.contains(ground_name(o.atom, a.agent)) ? cur + 1 : 0;
                longest[a.agent] = std::max(longest[a.agent], cur);
            }
        if (longest.empty()) return 1.0;
        std::size_t ok = 0;
        for (const auto& [agent, n] : longest)
            if (n <= o.k) ++ok;
        return static_cast<double>(ok) / static_cast<double>(longest.size());
    }
    std::size_t ok = 0;
    for (const auto& r : records) {
        const std::size_t n = holders(o, r);
        if (o.kind == objective_kind::always_below_count ? n < o.threshold : n == 0) ++ok;
    }
    return static_cast<double>(ok) / static_cast<double>(records.size());
}

/// Mean satisfaction over all objectives; 1 without objectives.
inline double window_score(const std::vector<objective>& objs, std::span<const step_record> records) {
    if (objs.empty()) return 1.0;
    double sum = 0;
    for (const auto& o : objs) sum += evaluate_objective(o, records);
    return sum / static_cast<double>(objs.size());
}

// ── Simulator ────────────────────────────────────────────────────────────

/// A grounded norm with the agent it charges (empty for global norms).
struct norm_instance {
    norm grounded;
    std::string owner;
    monitor_state state{lifecycle::idle, monitor_mode::event};
};

inline std::vector<norm_instance> instantiate(const norm_set& ns, const std::vector<std::string>& agents) {
    std::vector<norm_instance> out;
    for (const auto& n : ns.norms) {
        if (has_placeholder(n))
            for (const auto& a : agents) out.push_back({ground(n, a), a, {lifecycle::idle, monitor_mode::event}});
        else
            out.push_back({n, {}, {lifecycle::idle, monitor_mode::event}});
    }
    return out;
}

struct scored_successor {
    std::size_t state;
    double utility = 0;
    decimal penalty;        ///< sanctions the agent itself would be charged
    bool violating = false; ///< some enforced norm would be violated
    double score = 0;
};

struct agent_choice {
    std::size_t state;
    bool explored = false;
    bool deadlock = false;
};

/// Multi-agent episode over per-agent copies of the world template. Agents
/// move in id order within a tick; monitors run in event mode on the union
/// of all agents' grounded labels.
class episode {
public:
    episode(const scenario& sc, const norm_set& enforced, std::uint64_t seed)
        : sc_(sc), graph_(sc.world), rng_(seed) {
        for (const auto& a : sc.agents) order_.push_back(&a);
        std::sort(order_.begin(), order_.end(), [](auto* x, auto* y) { return x->id < y->id; });
        for (const auto* a : order_) {
            ids_.push_back(a->id);
            std::vector<label_set> labels;
            for (std::size_t s = 0; s < graph_.size(); ++s) {
                label_set g;
                for (const auto& atom : graph_.labels(s)) g.insert(ground_name(atom, a->id));
                labels.push_back(std::move(g));
            }
            grounded_.push_back(std::move(labels));
        }
        positions_.assign(order_.size(), graph_.init());
        runs_.assign(sc.objectives.size(), std::vector<std::size_t>(order_.size(), 0));
        enforce(enforced);
    }

    /// Switches to a new norm set; all monitors restart idle.
    void enforce(const norm_set& ns) {
        set_ = ns;
        instances_ = instantiate(ns, ids_);
    }

    /// Moves agents to the given states (by index) and clears objective runs.
    void place(const std::vector<std::size_t>& positions) {
        positions_ = positions;
        for (auto& r : runs_) std::fill(r.begin(), r.end(), 0);
    }

    const std::vector<std::size_t>& positions() const { return positions_; }
    const std::vector<std::string>& agent_ids() const { return ids_; }
    const norm_set& enforced() const { return set_; }
    const state_graph& graph() const { return graph_; }
    const std::vector<norm_instance>& instances() const { return instances_; }

    label_set global_labels(const std::vector<std::size_t>& positions) const {
        label_set out;
        for (std::size_t i = 0; i < positions.size(); ++i)
            out.insert(grounded_[i][positions[i]].begin(), grounded_[i][positions[i]].end());
        return out;
    }

    /// One-step event-mode lookahead for every successor of agent `i`, with
    /// agents before `i` already at their new positions in `positions`.
    std::vector<scored_successor> score_successors(std::size_t i, const std::vector<std::size_t>& positions) const {
        const agent_spec& a = *order_[i];
        std::vector<scored_successor> out;
        auto hypo = positions;
        for (auto t : graph_.successors(positions[i])) {
            hypo[i] = t;
            const label_set labels = global_labels(hypo);
            scored_successor s{t, sc_.utility(a, graph_.id(t)), {}, false, 0};
            for (const auto& inst : instances_) {
                auto r = monitor_step(inst.state, inst.grounded, labels);
                if (std::find(r.events.begin(), r.events.end(), event_kind::violated) == r.events.end()) continue;
                s.violating = true;
                if (inst.owner.empty() || inst.owner == a.id) s.penalty += inst.grounded.sanction;
            }
            s.score = s.utility - a.lambda * s.penalty.to_double();
            out.push_back(s);
        }
        return out;
    }

    /// Policy: argmax of utility minus lambda times own sanctions (ties to the
    /// least state id), epsilon-uniform exploration; under regimentation,
    /// violating successors are removed first unless none would remain.
    agent_choice choose(std::size_t i, const std::vector<std::size_t>& positions) {
        auto scored = score_successors(i, positions);
        agent_choice c{positions[i]};
        if (sc_.mode == enforcement::regimentation) {
            std::vector<scored_successor> allowed;
            for (const auto& s : scored)
                if (!s.violating) allowed.push_back(s);
            if (allowed.empty())
                c.deadlock = true;
            else
                scored = std::move(allowed);
        }
        const double u = draw_unit(rng_);
        if (u < order_[i]->epsilon) {
            c.state = scored[draw_index(rng_, scored.size())].state;
            c.explored = true;
            return c;
        }
        const scored_successor* best = &scored.front();
        for (const auto& s : scored)
            if (s.score > best->score) best = &s;
        c.state = best->state;
        return c;
    }

    step_record initial_record() {
        step_record r;
        r.step = 0;
        observe(r, {});
        return r;
    }

    step_record tick(std::size_t step) {
        std::vector<agent_choice> choices;
        auto next = positions_;
        for (std::size_t i = 0; i < order_.size(); ++i) {
            auto c = choose(i, next);
            next[i] = c.state;
            choices.push_back(c);
        }
        positions_ = std::move(next);
        step_record r;
        r.step = step;
        observe(r, choices);
        return r;
    }

private:
    void observe(step_record& r, const std::vector<agent_choice>& choices) {
        r.normset = set_.id;
        for (std::size_t i = 0; i < order_.size(); ++i) {
            agent_snapshot a{ids_[i], graph_.id(positions_[i]), grounded_[i][positions_[i]]};
            if (!choices.empty()) {
                a.explored = choices[i].explored;
                a.deadlock = choices[i].deadlock;
            }
            r.agents.push_back(std::move(a));
        }
        const label_set labels = global_labels(positions_);
        for (auto& inst : instances_) {
            auto res = monitor_step(inst.state, inst.grounded, labels);
            inst.state = res.state;
            for (auto kind : res.events)
                r.events.push_back(monitor_event{r.step, inst.grounded.id, inst.owner, kind,
                                                 kind == event_kind::violated ? inst.grounded.sanction : decimal{}});
        }
        for (std::size_t k = 0; k < sc_.objectives.size(); ++k) {
            const objective& o = sc_.objectives[k];
            bool ok = true;
            if (o.kind == objective_kind::max_consecutive) {
                for (std::size_t i = 0; i < order_.size(); ++i) {
                    auto& run = runs_[k][i];
                    run = r.agents[i].labels.contains(ground_name(o.atom, ids_[i])) ? run + 1 : 0;
                    if (run > o.k) ok = false;
                }
            } else {
                const std::size_t n = holders(o, r);
                ok = o.kind == objective_kind::always_below_count ? n < o.threshold : n == 0;
            }
            r.objectives[o.id] = ok;
        }
    }

    const scenario& sc_;
    state_graph graph_;
    std::mt19937_64 rng_;
    std::vector<const agent_spec*> order_;
    std::vector<std::string> ids_;
    std::vector<std::vector<label_set>> grounded_;
    std::vector<std::size_t> positions_;
    std::vector<std::vector<std::size_t>> runs_;
    norm_set set_;
    std::vector<norm_instance> instances_;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of the rollout scoring candidate `candidate` in review `window`.
inline std::uint64_t rollout_seed(std::uint64_t seed, std::size_t window, std::size_t candidate) {
    return splitmix64(splitmix64(splitmix64(seed) ^ window) ^ candidate);
}

namespace detail {

inline void summarize(const scenario& sc, run_log& log) {
    run_summary& s = log.summary;
    for (const auto& o : sc.objectives) s.objectives[o.id] = evaluate_objective(o, log.records);
    const std::span<const step_record> all(log.records);
    for (std::size_t end = sc.window + 1; end <= log.records.size(); end += sc.window)
        s.window_scores.push_back(window_score(sc.objectives, all.subspan(end - sc.window, sc.window)));
    for (const auto& r : log.records) {
        for (const auto& e : r.events) {
            if (e.kind != event_kind::violated) continue;
            ++s.violations;
            s.ledger_total += e.sanction;
            s.ledger_per_agent[e.agent] += e.sanction;
        }
        for (const auto& a : r.agents)
            if (a.deadlock) ++s.deadlocks;
    }
    s.final_set = log.records.empty() ? std::string{} : log.records.back().normset;
}

} // namespace detail

/// Runs one episode of `sc.horizon` ticks under `enforced`.
inline run_log run_episode(const scenario& sc, const norm_set& enforced) {
    require_valid(sc);
    episode ep(sc, enforced, sc.seed);
    run_log log;
    log.norm_sets.emplace(enforced.id, enforced);
    log.records.push_back(ep.initial_record());
    for (std::size_t t = 1; t <= sc.horizon; ++t) log.records.push_back(ep.tick(t));
    detail::summarize(sc, log);
    return log;
}

/// Direction chosen from where the window's failing steps fall: mostly on
/// violation-free steps means the norms over-restrict (relax); mostly on
/// steps with violations means they are too weak (strengthen).
inline std::vector<edit_direction> review_directions(std::span<const step_record> window) {
    std::size_t failing = 0, with_violation = 0;
    for (const auto& r : window) {
        bool fails = std::any_of(r.objectives.begin(), r.objectives.end(), [](const auto& kv) { return !kv.second; });
        if (!fails) continue;
        ++failing;
        if (std::any_of(r.events.begin(), r.events.end(),
                        [](const monitor_event& e) { return e.kind == event_kind::violated; }))
            ++with_violation;
    }
    if (failing > 0 && 4 * with_violation <= failing) return {edit_direction::relax};
    if (failing > 0 && 4 * with_violation >= 3 * failing) return {edit_direction::strengthen};
    return {edit_direction::relax, edit_direction::strengthen};
}

/// Score of a fresh `sc.window`-tick rollout of `ns` from `positions`.
inline double rollout_score(const scenario& sc, const norm_set& ns, const std::vector<std::size_t>& positions,
                            std::uint64_t seed) {
    episode ep(sc, ns, seed);
    ep.place(positions);
    ep.initial_record();
    std::vector<step_record> records;
    for (std::size_t t = 1; t <= sc.window; ++t) records.push_back(ep.tick(t));
    return window_score(sc.objectives, records);
}

/// Runtime supervision: every `window` ticks, a window scoring below
/// `theta_low` triggers a review. Single-norm edits from the candidate pool
/// are scored by seeded rollouts, and the best one is enforced when it beats
/// the window's score. Ties go to the least norm id, then generation order.
inline run_log supervise(const scenario& sc) {
    require_valid(sc);
    episode ep(sc, sc.norms, sc.seed);
    run_log log;
    log.norm_sets.emplace(sc.norms.id, sc.norms);
    log.records.push_back(ep.initial_record());
    std::size_t revision_count = 0;

    for (std::size_t t = 1; t <= sc.horizon; ++t) {
        log.records.push_back(ep.tick(t));
        if (t % sc.window != 0) continue;
        const std::size_t window_index = t / sc.window;
        std::span<const step_record> window(log.records.data() + (t + 1 - sc.window), sc.window);
        const double score = window_score(sc.objectives, window);
        if (score >= sc.theta_low) continue;

        const norm_set current = ep.enforced();
        revision_decision d;
        d.step = t;
        d.window = window_index;
        d.window_score = score;
        d.from_set = current.id;
        const auto directions = review_directions(window);
        d.direction = directions.size() == 1 ? std::string(to_string(directions.front())) : "relax+strengthen";

        struct scored {
            candidate cand;
            double score;
            std::size_t index;
        };
        std::vector<scored> all;
        for (const auto& n : current.norms)
            for (auto dir : directions)
                for (auto& c : generate_candidates(n, sc.pool, dir, &sc.world)) {
                    const std::size_t idx = all.size();
                    norm_set trial = apply_candidate(current, c.revised, current.id);
                    double s = rollout_score(sc, trial, ep.positions(), rollout_seed(sc.seed, window_index, idx));
                    all.push_back({std::move(c), s, idx});
                }
        d.candidates = all.size();
        const scored* best = nullptr;
        for (const auto& s : all) {
            if (!best || s.score > best->score ||
                (s.score == best->score && s.cand.revised.id < best->cand.revised.id))
                best = &s;
        }
        if (best && best->score > score) {
            norm_set next = apply_candidate(current, best->cand.revised, sc.norms.id + ".r" + std::to_string(++revision_count));
            d.adopted = true;
            d.to_set = next.id;
            d.norm = best->cand.revised.id;
            d.component = best->cand.component;
            d.edit = best->cand.edit;
            d.pool_index = best->cand.pool_index;
            d.candidate_score = best->score;
            try {
                auto v = classify_revision(sc.world, current, next);
                d.verdict = verdict_summary{std::string(to_string(v.relation)), std::string(to_string(v.sanctions)),
                                            std::string(to_string(best->cand.verdict.direction))};
            } catch (const error&) {
                // Norms mentioning other agents' atoms have no single-agent model.
            }
            d.revised = next;
            log.norm_sets.emplace(next.id, next);
            ep.enforce(next);
        } else if (best) {
            d.candidate_score = best->score;
        }
        log.records.back().revisions.push_back(d);
        log.decisions.push_back(std::move(d));
    }
    detail::summarize(sc, log);
    return log;
}

/// Re-derives every monitor event of `log` by running each grounded norm
/// over the recorded labels, restarting at every norm-set change.
inline std::vector<monitor_event> replay_events(const run_log& log) {
    std::vector<monitor_event> out;
    std::size_t begin = 0;
    while (begin < log.records.size()) {
        std::size_t end = begin;
        while (end < log.records.size() && log.records[end].normset == log.records[begin].normset) ++end;
        const norm_set& ns = log.norm_sets.at(log.records[begin].normset);
        std::vector<std::string> agents;
        for (const auto& a : log.records[begin].agents) agents.push_back(a.agent);
        std::vector<label_set> trace;
        for (std::size_t i = begin; i < end; ++i) {
            label_set labels;
            for (const auto& a : log.records[i].agents) labels.insert(a.labels.begin(), a.labels.end());
            trace.push_back(std::move(labels));
        }
        // Events are ordered by step, then by instance.
        std::vector<std::vector<monitor_event>> per_instance;
        for (const auto& inst : instantiate(ns, agents)) {
            auto tr = run_trace(norm_set{ns.id, {inst.grounded}}, trace, monitor_mode::event);
            for (auto& e : tr.events) {
                e.step += log.records[begin].step;
                e.agent = inst.owner;
            }
            per_instance.push_back(std::move(tr.events));
        }
        std::vector<std::size_t> cursor(per_instance.size(), 0);
        for (std::size_t i = begin; i < end; ++i)
            for (std::size_t k = 0; k < per_instance.size(); ++k)
                while (cursor[k] < per_instance[k].size() && per_instance[k][cursor[k]].step == log.records[i].step)
                    out.push_back(per_instance[k][cursor[k]++]);
        begin = end;
    }
    return out;
}

} // namespace normrev
