#pragma once

#include "normrev/error.hpp"

#include <algorithm>
#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace normrev {

using atom_set = std::set<std::string>;
using label_set = std::set<std::string>;

/// Checks the identifier pattern `[a-zA-Z_][a-zA-Z0-9_]*`.
///
/// With `allow_placeholder`, the agent placeholder `{a}` may also appear
/// inside the name (norm and world templates).
inline bool is_identifier(const std::string& s, bool allow_placeholder = false) {
    if (s.empty()) return false;
    auto word = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
    auto digit = [](char c) { return c >= '0' && c <= '9'; };
    if (!word(s[0]) && !(allow_placeholder && s.compare(0, 3, "{a}") == 0)) return false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (allow_placeholder && s.compare(i, 3, "{a}") == 0) {
            i += 2;
            continue;
        }
        if (!word(s[i]) && !digit(s[i])) return false;
    }
    return true;
}

/// Immutable propositional formula over named atoms.
///
/// Nodes are shared; copying a formula is cheap. Equality is structural.
class formula {
public:
    enum class op : std::uint8_t { top, bottom, atom, negation, conjunction, disjunction };

    formula() : formula(op::top, {}, nullptr, nullptr) {}

    static formula top() { return formula(op::top, {}, nullptr, nullptr); }
    static formula bottom() { return formula(op::bottom, {}, nullptr, nullptr); }
    static formula var(std::string name) { return formula(op::atom, std::move(name), nullptr, nullptr); }
    static formula negate(formula f) { return formula(op::negation, {}, std::move(f).node_, nullptr); }
    static formula conj(formula l, formula r) {
        return formula(op::conjunction, {}, std::move(l).node_, std::move(r).node_);
    }
    static formula disj(formula l, formula r) {
        return formula(op::disjunction, {}, std::move(l).node_, std::move(r).node_);
    }

    op kind() const { return node_->kind; }
    const std::string& name() const { return node_->name; }
    formula left() const { return formula(node_->left); }
    formula right() const { return formula(node_->right); }

    std::size_t depth() const { return depth_of(*node_); }

    friend bool operator==(const formula& a, const formula& b) { return same(a.node_.get(), b.node_.get()); }

private:
    struct node {
        op kind;
        std::string name;
        std::shared_ptr<const node> left;
        std::shared_ptr<const node> right;
    };

    explicit formula(std::shared_ptr<const node> n) : node_(std::move(n)) {}
    formula(op k, std::string name, std::shared_ptr<const node> l, std::shared_ptr<const node> r)
        : node_(std::make_shared<const node>(node{k, std::move(name), std::move(l), std::move(r)})) {}

    static bool same(const node* a, const node* b) {
        if (a == b) return true;
        if (a->kind != b->kind) return false;
        switch (a->kind) {
        case op::top:
        case op::bottom: return true;
        case op::atom: return a->name == b->name;
        case op::negation: return same(a->left.get(), b->left.get());
        default: return same(a->left.get(), b->left.get()) && same(a->right.get(), b->right.get());
        }
    }

    static std::size_t depth_of(const node& n) {
        switch (n.kind) {
        case op::top:
        case op::bottom:
        case op::atom: return 0;
        case op::negation: return 1 + depth_of(*n.left);
        default: return 1 + std::max(depth_of(*n.left), depth_of(*n.right));
        }
    }

    std::shared_ptr<const node> node_;
};

inline void collect_atoms(const formula& f, atom_set& out) {
    switch (f.kind()) {
    case formula::op::top:
    case formula::op::bottom: return;
    case formula::op::atom: out.insert(f.name()); return;
    case formula::op::negation: collect_atoms(f.left(), out); return;
    default:
        collect_atoms(f.left(), out);
        collect_atoms(f.right(), out);
    }
}

inline atom_set atoms_of(const formula& f) {
    atom_set out;
    collect_atoms(f, out);
    return out;
}

/// Throws unknown_atom for the first atom of `f` missing from `vocabulary`.
inline void check_vocabulary(const formula& f, const atom_set& vocabulary) {
    for (const auto& a : atoms_of(f))
        if (!vocabulary.contains(a)) throw unknown_atom(a);
}

/// Truth value of `f` when exactly the atoms in `labels` hold.
inline bool eval(const formula& f, const label_set& labels) {
    switch (f.kind()) {
    case formula::op::top: return true;
    case formula::op::bottom: return false;
    case formula::op::atom: return labels.contains(f.name());
    case formula::op::negation: return !eval(f.left(), labels);
    case formula::op::conjunction: return eval(f.left(), labels) && eval(f.right(), labels);
    case formula::op::disjunction: return eval(f.left(), labels) || eval(f.right(), labels);
    }
    return false;
}

/// Vocabulary-checked evaluation.
inline bool eval(const formula& f, const label_set& labels, const atom_set& vocabulary) {
    check_vocabulary(f, vocabulary);
    return eval(f, labels);
}

inline constexpr std::size_t max_sweep_atoms = 20;

/// True iff `f -> g` under every valuation of the atoms occurring in either.
inline bool implies_valid(const formula& f, const formula& g) {
    atom_set all = atoms_of(f);
    collect_atoms(g, all);
    if (all.size() > max_sweep_atoms) throw vocabulary_too_large(all.size());
    std::vector<std::string> names(all.begin(), all.end());
    const std::uint32_t rows = 1u << names.size();
    label_set labels;
    for (std::uint32_t mask = 0; mask < rows; ++mask) {
        labels.clear();
        for (std::size_t i = 0; i < names.size(); ++i)
            if (mask & (1u << i)) labels.insert(names[i]);
        if (eval(f, labels) && !eval(g, labels)) return false;
    }
    return true;
}

/// Grounds the agent placeholder `{a}` in every atom name.
inline std::string ground_name(const std::string& name, const std::string& agent) {
    std::string out;
    out.reserve(name.size());
    for (std::size_t i = 0; i < name.size(); ++i) {
        if (name.compare(i, 3, "{a}") == 0) {
            out += agent;
            i += 2;
        } else {
            out += name[i];
        }
    }
    return out;
}

inline formula ground(const formula& f, const std::string& agent) {
    switch (f.kind()) {
    case formula::op::top:
    case formula::op::bottom: return f;
    case formula::op::atom: return formula::var(ground_name(f.name(), agent));
    case formula::op::negation: return formula::negate(ground(f.left(), agent));
    case formula::op::conjunction: return formula::conj(ground(f.left(), agent), ground(f.right(), agent));
    case formula::op::disjunction: return formula::disj(ground(f.left(), agent), ground(f.right(), agent));
    }
    return f;
}

inline bool has_placeholder(const formula& f) {
    for (const auto& a : atoms_of(f))
        if (a.find("{a}") != std::string::npos) return true;
    return false;
}

} // namespace normrev
