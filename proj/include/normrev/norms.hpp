#pragma once

#include "normrev/decimal.hpp"
#include "normrev/error.hpp"
#include "normrev/formula.hpp"
#include "normrev/model.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace normrev {

enum class norm_kind { obligation, prohibition };

/// Conditional norm (cond; O|F(target); deadline; sanction).
///
/// An empty deadline is `never`: the instance is never withdrawn and never
/// reaches a deadline state.
struct norm {
    std::string id;
    formula cond;
    norm_kind kind = norm_kind::prohibition;
    formula target;
    std::optional<formula> deadline;
    decimal sanction;

    friend bool operator==(const norm&, const norm&) = default;
};

struct norm_set {
    std::string id;
    std::vector<norm> norms;

    const norm* find(std::string_view norm_id) const {
        for (const auto& n : norms)
            if (n.id == norm_id) return &n;
        return nullptr;
    }

    friend bool operator==(const norm_set&, const norm_set&) = default;
};

inline atom_set atoms_of(const norm& n) {
    atom_set out = atoms_of(n.cond);
    collect_atoms(n.target, out);
    if (n.deadline) collect_atoms(*n.deadline, out);
    return out;
}

inline atom_set atoms_of(const norm_set& ns) {
    atom_set out;
    for (const auto& n : ns.norms) out.merge(atoms_of(n));
    return out;
}

/// Structural defects: duplicate ids, negative sanctions, atoms outside
/// `vocabulary` (when given).
inline std::vector<std::string> validate(const norm_set& ns, const atom_set* vocabulary = nullptr) {
    std::vector<std::string> defects;
    std::set<std::string> seen;
    for (const auto& n : ns.norms) {
        if (!seen.insert(n.id).second) defects.push_back("duplicate id " + n.id);
        if (n.sanction < decimal{}) defects.push_back("negative sanction in norm " + n.id);
        if (vocabulary)
            for (const auto& a : atoms_of(n))
                if (!vocabulary->contains(a)) defects.push_back("unknown atom '" + a + "' in norm " + n.id);
    }
    return defects;
}

/// Non-fatal findings. An obligation whose deadline is `never` can never be
/// violated.
inline std::vector<std::string> lint(const norm_set& ns) {
    std::vector<std::string> warnings;
    for (const auto& n : ns.norms)
        if (n.kind == norm_kind::obligation && !n.deadline)
            warnings.push_back("norm " + n.id + ": obligation with deadline never can never be violated");
    return warnings;
}

inline norm ground(const norm& n, const std::string& agent) {
    norm out = n;
    out.cond = ground(n.cond, agent);
    out.target = ground(n.target, agent);
    if (n.deadline) out.deadline = ground(*n.deadline, agent);
    return out;
}

inline bool has_placeholder(const norm& n) {
    return has_placeholder(n.cond) || has_placeholder(n.target) || (n.deadline && has_placeholder(*n.deadline));
}

// ── Monitors ──────────────────────────────────────────────────────────────

enum class lifecycle { idle, active, violated };
enum class monitor_mode { path, event };
enum class event_kind { detached, complied, withdrawn, violated };

/// Which check wins when target and deadline hold in the same state.
enum class tie_break { target_first, deadline_first };

struct semantics {
    tie_break tie = tie_break::target_first;
};

inline std::string_view to_string(lifecycle l) {
    switch (l) {
    case lifecycle::idle: return "idle";
    case lifecycle::active: return "active";
    case lifecycle::violated: return "violated";
    }
    return "?";
}

inline std::string_view to_string(event_kind k) {
    switch (k) {
    case event_kind::detached: return "detached";
    case event_kind::complied: return "complied";
    case event_kind::withdrawn: return "withdrawn";
    case event_kind::violated: return "violated";
    }
    return "?";
}

inline std::string_view to_string(monitor_mode m) { return m == monitor_mode::path ? "path" : "event"; }

struct monitor_state {
    lifecycle phase = lifecycle::idle;
    monitor_mode mode = monitor_mode::path;

    friend bool operator==(const monitor_state&, const monitor_state&) = default;
};

struct step_result {
    monitor_state state;
    std::vector<event_kind> events;
};

/// Advances one norm monitor by one labeling.
///
/// Idle detaches when cond holds and runs the active checks on the same
/// labeling. Path mode keeps Violated absorbing; event mode treats Violated
/// as Idle on the next input. A closed instance re-checks cond only from the
/// next labeling on.
inline step_result monitor_step(monitor_state s, const norm& n, const label_set& labels, semantics sem = {}) {
    step_result r{s, {}};
    if (s.phase == lifecycle::violated) {
        if (s.mode == monitor_mode::path) return r;
        r.state.phase = lifecycle::idle;
    }
    if (r.state.phase == lifecycle::idle) {
        if (!eval(n.cond, labels)) return r;
        r.state.phase = lifecycle::active;
        r.events.push_back(event_kind::detached);
    }
    const bool target = eval(n.target, labels);
    const bool due = n.deadline && eval(*n.deadline, labels);
    const bool deadline_wins = due && sem.tie == tie_break::deadline_first;
    if (n.kind == norm_kind::obligation) {
        if (target && !deadline_wins) {
            r.state.phase = lifecycle::idle;
            r.events.push_back(event_kind::complied);
        } else if (due) {
            r.state.phase = lifecycle::violated;
            r.events.push_back(event_kind::violated);
        }
    } else {
        if (target && !deadline_wins) {
            r.state.phase = lifecycle::violated;
            r.events.push_back(event_kind::violated);
        } else if (due) {
            r.state.phase = lifecycle::idle;
            r.events.push_back(event_kind::withdrawn);
        }
    }
    return r;
}

/// Processes the initial labeling exactly like a step from Idle.
inline step_result monitor_init(const norm& n, monitor_mode mode, const label_set& labels, semantics sem = {}) {
    return monitor_step(monitor_state{lifecycle::idle, mode}, n, labels, sem);
}

// ── Traces and the sanction ledger ───────────────────────────────────────

struct monitor_event {
    std::size_t step = 0;
    std::string norm;
    std::string agent; ///< owner of the sanction; empty for global norms
    event_kind kind = event_kind::detached;
    decimal sanction; ///< non-zero only for violations

    friend bool operator==(const monitor_event&, const monitor_event&) = default;
};

class sanction_ledger {
public:
    void charge(const monitor_event& e) {
        entries_.push_back(e);
        total_ += e.sanction;
        per_agent_[e.agent] += e.sanction;
    }

    const std::vector<monitor_event>& entries() const { return entries_; }
    decimal total() const { return total_; }
    /// Totals keyed by agent; the empty key collects global charges.
    const std::map<std::string, decimal>& per_agent() const { return per_agent_; }

private:
    std::vector<monitor_event> entries_;
    decimal total_;
    std::map<std::string, decimal> per_agent_;
};

struct trace_result {
    std::vector<monitor_event> events;
    std::vector<monitor_state> final_states; ///< one per norm, in set order
    sanction_ledger ledger;
};

/// Monitors every norm of `ns` independently over a labeling sequence.
/// Events come out in step order, and in norm order within a step.
inline trace_result run_trace(const norm_set& ns, const std::vector<label_set>& trace, monitor_mode mode,
                              semantics sem = {}) {
    trace_result out;
    out.final_states.assign(ns.norms.size(), monitor_state{lifecycle::idle, mode});
    for (std::size_t step = 0; step < trace.size(); ++step) {
        for (std::size_t k = 0; k < ns.norms.size(); ++k) {
            const norm& n = ns.norms[k];
            auto r = monitor_step(out.final_states[k], n, trace[step], sem);
            out.final_states[k] = r.state;
            for (auto kind : r.events) {
                monitor_event e{step, n.id, {}, kind, kind == event_kind::violated ? n.sanction : decimal{}};
                if (kind == event_kind::violated) out.ledger.charge(e);
                out.events.push_back(std::move(e));
            }
        }
    }
    return out;
}

/// Labeling sequence of a path; lassos are unrolled to stem + `cycles` loops.
inline std::vector<label_set> labels_along(const transition_system& m, const path& p, std::size_t cycles = 2) {
    std::vector<label_set> out;
    for (const auto& s : p.unroll(cycles)) {
        auto it = m.states.find(s);
        if (it == m.states.end()) throw error("unknown state '" + s + "' on path");
        out.push_back(it->second);
    }
    return out;
}

inline trace_result run_trace(const norm_set& ns, const transition_system& m, const path& p, monitor_mode mode,
                              semantics sem = {}) {
    return run_trace(ns, labels_along(m, p), mode, sem);
}

/// Number of loop unrollings used to decide violation on a lasso. A single
/// monitor's state at the loop head can only take two values before it
/// repeats or becomes Violated, so two passes see every behaviour.
inline constexpr std::size_t lasso_unroll = 2;

inline bool violates(const norm& n, const std::vector<label_set>& trace, semantics sem = {}) {
    monitor_state s{lifecycle::idle, monitor_mode::path};
    for (const auto& labels : trace) {
        s = monitor_step(s, n, labels, sem).state;
        if (s.phase == lifecycle::violated) return true;
    }
    return false;
}

/// Path-mode violation of `n` on `p`.
inline bool violates_path(const norm& n, const transition_system& m, const path& p, semantics sem = {}) {
    return violates(n, labels_along(m, p, lasso_unroll), sem);
}

/// Membership of `p` in Viol(M, N): some norm of the set is violated.
inline bool violates_path(const norm_set& ns, const transition_system& m, const path& p, semantics sem = {}) {
    auto trace = labels_along(m, p, lasso_unroll);
    for (const auto& n : ns.norms)
        if (violates(n, trace, sem)) return true;
    return false;
}

} // namespace normrev
