#pragma once

#include "normrev/formula.hpp"
#include "normrev/model.hpp"

#include <string_view>

namespace normrev {

enum class strictness_relation { strictly_stricter, equivalent, strictly_less_strict, incomparable };

inline std::string_view to_string(strictness_relation r) {
    switch (r) {
    case strictness_relation::strictly_stricter: return "StrictlyStricter";
    case strictness_relation::equivalent: return "Equivalent";
    case strictness_relation::strictly_less_strict: return "StrictlyLessStrict";
    case strictness_relation::incomparable: return "Incomparable";
    }
    return "?";
}

/// How "f is stricter than g" is decided.
enum class strictness_mode {
    model_relative, ///< containment of satisfying reachable states of a model
    logical,        ///< validity of the implication over all valuations
};

namespace detail {
inline strictness_relation from_containment(bool f_in_g, bool g_in_f) {
    if (f_in_g && g_in_f) return strictness_relation::equivalent;
    if (f_in_g) return strictness_relation::strictly_stricter;
    if (g_in_f) return strictness_relation::strictly_less_strict;
    return strictness_relation::incomparable;
}
} // namespace detail

/// Compares the reachable states of `m` satisfying `f` against those
/// satisfying `g`. StrictlyStricter means f holds in strictly fewer states.
inline strictness_relation strictness(const formula& f, const formula& g, const transition_system& m) {
    check_vocabulary(f, m.atoms);
    check_vocabulary(g, m.atoms);
    state_graph graph(m);
    auto mask = graph.reachable_mask();
    bool f_in_g = true, g_in_f = true;
    for (std::size_t s = 0; s < graph.size(); ++s) {
        if (!mask[s]) continue;
        bool a = eval(f, graph.labels(s));
        bool b = eval(g, graph.labels(s));
        if (a && !b) f_in_g = false;
        if (b && !a) g_in_f = false;
    }
    return detail::from_containment(f_in_g, g_in_f);
}

/// Model-independent variant, decided by exhaustive valuation sweep.
inline strictness_relation strictness(const formula& f, const formula& g) {
    return detail::from_containment(implies_valid(f, g), implies_valid(g, f));
}

inline strictness_relation strictness(const formula& f, const formula& g, const transition_system* m) {
    return m ? strictness(f, g, *m) : strictness(f, g);
}

} // namespace normrev
