#pragma once

#include "normrev/dsl.hpp"
#include "normrev/model.hpp"
#include "normrev/norms.hpp"
#include "normrev/revision.hpp"
#include "normrev/supervision.hpp"

#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace testing_support {

using namespace normrev;

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string shipped(const std::string& name) { return std::string(NORMREV_SCENARIOS) + "/" + name; }
inline std::string golden(const std::string& name) { return std::string(NORMREV_GOLDEN) + "/" + name; }

inline transition_system shipped_model(const std::string& name) {
    return parse_model(read_file(shipped(name + ".ts.json")), name);
}

inline norm_set shipped_norms(const std::string& name) {
    return parse_norms(read_file(shipped(name + ".norm")), name, name + ".norm");
}

inline scenario shipped_scenario(const std::string& name) {
    return parse_scenario(read_file(shipped(name + ".scenario.json")), name);
}

/// Seeded generator of small random instances.
class generator {
public:
    explicit generator(std::uint64_t seed, std::size_t atoms = 3) : rng_(seed) {
        for (std::size_t i = 0; i < atoms; ++i) atoms_.push_back(std::string(1, static_cast<char>('a' + i)));
    }

    std::mt19937_64& rng() { return rng_; }
    const std::vector<std::string>& atoms() const { return atoms_; }

    std::size_t below(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }
    bool coin(double p = 0.5) { return std::uniform_real_distribution<double>(0, 1)(rng_) < p; }

    formula random_formula(std::size_t depth) {
        if (depth == 0 || coin(0.3)) {
            if (coin(0.1)) return coin() ? formula::top() : formula::bottom();
            return formula::var(atoms_[below(atoms_.size())]);
        }
        switch (below(3)) {
        case 0: return formula::negate(random_formula(depth - 1));
        case 1: return formula::conj(random_formula(depth - 1), random_formula(depth - 1));
        default: return formula::disj(random_formula(depth - 1), random_formula(depth - 1));
        }
    }

    /// Total system with 1..max_states states and random labels.
    transition_system random_model(std::size_t max_states = 5) {
        transition_system m;
        for (const auto& a : atoms_) m.atoms.insert(a);
        const std::size_t n = 1 + below(max_states);
        std::vector<std::string> ids;
        for (std::size_t i = 0; i < n; ++i) ids.push_back("s" + std::to_string(i));
        for (const auto& id : ids) {
            label_set l;
            for (const auto& a : atoms_)
                if (coin()) l.insert(a);
            m.states.emplace(id, l);
        }
        m.init = ids.front();
        for (const auto& from : ids) {
            m.edges.emplace(from, ids[below(n)]);
            for (const auto& to : ids)
                if (coin(0.3)) m.edges.emplace(from, to);
        }
        return m;
    }

    std::optional<formula> random_deadline(std::size_t depth) {
        if (coin(0.2)) return std::nullopt;
        return random_formula(depth);
    }

    norm random_norm(const std::string& id, std::size_t depth = 2) {
        norm n;
        n.id = id;
        n.cond = random_formula(depth);
        n.kind = coin() ? norm_kind::obligation : norm_kind::prohibition;
        n.target = random_formula(depth);
        n.deadline = random_deadline(depth);
        n.sanction = decimal::from_raw(static_cast<std::int64_t>(below(20'000'000'000ULL)));
        return n;
    }

    norm_set random_norm_set(const std::string& set_id, std::size_t max_norms = 2, std::size_t depth = 2) {
        norm_set ns{set_id, {}};
        const std::size_t k = 1 + below(max_norms);
        for (std::size_t i = 0; i < k; ++i) ns.norms.push_back(random_norm("n" + std::to_string(i), depth));
        return ns;
    }

    /// `n` with one formula component replaced by a fresh random formula.
    norm single_edit(const norm& n, std::size_t depth = 2) {
        norm r = n;
        switch (below(3)) {
        case 0: r.cond = random_formula(depth); break;
        case 1: r.target = random_formula(depth); break;
        default: r.deadline = random_deadline(depth); break;
        }
        return r;
    }

private:
    std::mt19937_64 rng_;
    std::vector<std::string> atoms_;
};

// `f` with every atom `x` renamed to the template `x_{a}`.
inline formula templated(const formula& f) {
    switch (f.kind()) {
    case formula::op::atom: return formula::var(f.name() + "_{a}");
    case formula::op::negation: return formula::negate(templated(f.left()));
    case formula::op::conjunction: return formula::conj(templated(f.left()), templated(f.right()));
    case formula::op::disjunction: return formula::disj(templated(f.left()), templated(f.right()));
    default: return f;
    }
}

// Small random scenario: one template atom per letter, random utilities.
inline scenario random_scenario(generator& gen, std::size_t agents) {
    scenario sc;
    sc.name = "rand";
    transition_system base = gen.random_model(4);
    for (const auto& a : base.atoms) sc.world.atoms.insert(a + "_{a}");
    for (const auto& [id, labels] : base.states) {
        label_set l;
        for (const auto& a : labels) l.insert(a + "_{a}");
        sc.world.states.emplace(id, l);
        sc.utilities[id] = static_cast<double>(gen.below(5));
    }
    sc.world.init = base.init;
    sc.world.edges = base.edges;
    for (std::size_t i = 0; i < agents; ++i)
        sc.agents.push_back({"ag" + std::to_string(i), 0.5 * static_cast<double>(gen.below(3)), gen.coin(0.3) ? 0.2 : 0.0, {}});
    norm_set raw = gen.random_norm_set("N");
    for (auto n : raw.norms) {
        n.cond = templated(n.cond);
        n.target = templated(n.target);
        if (n.deadline) n.deadline = templated(*n.deadline);
        sc.norms.norms.push_back(n);
    }
    sc.norms.id = "N";
    sc.objectives = {{"o", objective_kind::never_atom, "a_{a}", 1, 0, std::nullopt, true}};
    sc.seed = gen.below(1000);
    sc.horizon = 12;
    sc.window = 4;
    return sc;
}

// Scenario with optional fields filled at random, valid by construction.
inline scenario random_full_scenario(generator& gen) {
    scenario sc = random_scenario(gen, 1 + gen.below(3));
    sc.name = "s" + std::to_string(gen.below(100));
    for (auto& a : sc.agents) {
        a.lambda = static_cast<double>(gen.below(1000)) / 8.0;
        a.epsilon = static_cast<double>(gen.below(5)) / 4.0;
        if (gen.coin()) a.utilities[sc.world.init] = static_cast<double>(gen.below(9)) - 4.5;
    }
    sc.objectives.clear();
    const std::size_t n = gen.below(3);
    for (std::size_t i = 0; i < n; ++i) {
        objective o;
        o.id = "o" + std::to_string(i);
        o.atom = std::string(1, static_cast<char>('a' + gen.below(3))) + "_{a}";
        o.per_agent = gen.coin();
        switch (gen.below(3)) {
        case 0:
            o.kind = objective_kind::max_consecutive;
            o.k = 1 + gen.below(9);
            break;
        case 1:
            o.kind = objective_kind::always_below_count;
            o.threshold = gen.below(4);
            break;
        default: o.kind = objective_kind::never_atom;
        }
        sc.objectives.push_back(o);
    }
    for (std::size_t i = 0, k = gen.below(3); i < k; ++i) sc.pool.formulas.push_back(templated(gen.random_formula(2)));
    for (std::size_t i = 0, k = gen.below(3); i < k; ++i)
        sc.pool.sanctions.push_back(decimal::from_raw(static_cast<std::int64_t>(gen.below(1'000'000'000))));
    sc.mode = gen.coin() ? enforcement::sanctioning : enforcement::regimentation;
    sc.theta_low = static_cast<double>(gen.below(5)) / 8.0;
    sc.theta_high = 0.5 + static_cast<double>(gen.below(5)) / 8.0;
    sc.minutes_per_step = 0.25 * static_cast<double>(1 + gen.below(20));
    return sc;
}

} // namespace testing_support
