#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace normrev {

/// Base class for every error raised by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class unknown_atom : public error {
public:
    explicit unknown_atom(std::string atom)
        : error("unknown atom '" + atom + "'"), atom_(std::move(atom)) {}
    const std::string& atom() const noexcept { return atom_; }

private:
    std::string atom_;
};

class vocabulary_too_large : public error {
public:
    explicit vocabulary_too_large(std::size_t n)
        : error("valuation sweep over " + std::to_string(n) + " atoms exceeds the bound") {}
};

class budget_exceeded : public error {
public:
    using error::error;
};

class not_total : public error {
public:
    explicit not_total(const std::string& state)
        : error("transition relation is not total: state '" + state + "' has no successor") {}
};

class vocabulary_mismatch : public error {
public:
    using error::error;
};

class invalid_model : public error {
public:
    explicit invalid_model(std::vector<std::string> defects)
        : error(join(defects)), defects_(std::move(defects)) {}
    const std::vector<std::string>& defects() const noexcept { return defects_; }

private:
    static std::string join(const std::vector<std::string>& ds) {
        std::string out = "invalid transition system";
        for (const auto& d : ds) out += "; " + d;
        return out;
    }
    std::vector<std::string> defects_;
};

} // namespace normrev
