#pragma once

#include "normrev/decimal.hpp"
#include "normrev/error.hpp"
#include "normrev/formula.hpp"
#include "normrev/model.hpp"
#include "normrev/norms.hpp"
#include "normrev/revision.hpp"
#include "normrev/supervision.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace normrev {

struct source_span {
    std::string file;
    std::size_t line = 0; ///< 1-based; 0 when the defect has no text position
    std::size_t column = 0;
    std::size_t length = 1;

    friend bool operator==(const source_span&, const source_span&) = default;
};

/// One parse or schema defect. Parse errors carry `expected`/`found`;
/// schema errors carry `text` and, for JSON inputs, a JSON pointer `where`.
struct diagnostic {
    source_span span;
    std::string where;
    std::string expected;
    std::string found;
    std::string text;

    std::string message() const {
        std::ostringstream os;
        os << (span.file.empty() ? "<input>" : span.file);
        if (span.line > 0) os << ':' << span.line << ':' << span.column;
        if (!where.empty()) os << ": at " << where;
        os << ": ";
        if (!text.empty())
            os << text;
        else
            os << "expected " << expected << ", found " << found;
        return os.str();
    }
};

class parse_failure : public error {
public:
    explicit parse_failure(std::vector<diagnostic> diags) : error(join(diags)), diags_(std::move(diags)) {}
    const std::vector<diagnostic>& diagnostics() const noexcept { return diags_; }

private:
    static std::string join(const std::vector<diagnostic>& ds) {
        std::string out;
        for (const auto& d : ds) out += (out.empty() ? "" : "\n") + d.message();
        return out;
    }
    std::vector<diagnostic> diags_;
};

// ── Lexer ────────────────────────────────────────────────────────────────

namespace detail {

enum class tok { ident, number, amp, bar, bang, lparen, rparen, lbrace, rbrace, colon, semi, bad, end };

struct token {
    tok kind;
    std::string text;
    source_span span;
};

inline std::string describe(const token& t) {
    switch (t.kind) {
    case tok::end: return "end of input";
    case tok::ident: return "identifier '" + t.text + "'";
    case tok::number: return "number '" + t.text + "'";
    default: return "'" + t.text + "'";
    }
}

/// Tokenizer shared by the formula grammar and the norm DSL. `#` starts a
/// comment; a `# format N` comment with N other than 1 is reported.
inline std::vector<token> lex(std::string_view src, const std::string& file, std::vector<diagnostic>& diags) {
    std::vector<token> out;
    std::size_t line = 1, col = 1, i = 0;
    auto span = [&](std::size_t len) { return source_span{file, line, col, std::max<std::size_t>(len, 1)}; };
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k, ++i) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    };
    auto word = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
    auto digit = [](char c) { return c >= '0' && c <= '9'; };
    while (i < src.size()) {
        const char c = src[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            advance(1);
            continue;
        }
        if (c == '#') {
            std::size_t j = i;
            while (j < src.size() && src[j] != '\n') ++j;
            std::string_view comment = src.substr(i, j - i);
            constexpr std::string_view header = "# format ";
            if (comment.substr(0, header.size()) == header) {
                auto version = std::string(comment.substr(header.size()));
                while (!version.empty() && (version.back() == ' ' || version.back() == '\r')) version.pop_back();
                if (version != "1")
                    diags.push_back({span(j - i), {}, {}, {}, "unsupported format '" + version + "'"});
            }
            advance(j - i);
            continue;
        }
        if (word(c)) {
            std::size_t j = i + 1;
            while (j < src.size()) {
                if (word(src[j]) || digit(src[j]))
                    ++j;
                else if (src.substr(j, 3) == "{a}")
                    j += 3;
                else
                    break;
            }
            out.push_back({tok::ident, std::string(src.substr(i, j - i)), span(j - i)});
            advance(j - i);
            continue;
        }
        if (digit(c)) {
            std::size_t j = i;
            while (j < src.size() && (digit(src[j]) || src[j] == '.')) ++j;
            // Identifier characters glued to a number make one bad lexeme.
            bool glued = false;
            while (j < src.size() && (word(src[j]) || digit(src[j]))) {
                ++j;
                glued = true;
            }
            out.push_back({glued ? tok::bad : tok::number, std::string(src.substr(i, j - i)), span(j - i)});
            advance(j - i);
            continue;
        }
        tok k = tok::bad;
        switch (c) {
        case '&': k = tok::amp; break;
        case '|': k = tok::bar; break;
        case '!': k = tok::bang; break;
        case '(': k = tok::lparen; break;
        case ')': k = tok::rparen; break;
        case '{': k = tok::lbrace; break;
        case '}': k = tok::rbrace; break;
        case ':': k = tok::colon; break;
        case ';': k = tok::semi; break;
        default: break;
        }
        out.push_back({k, std::string(1, c), span(1)});
        advance(1);
    }
    out.push_back({tok::end, "", span(1)});
    return out;
}

/// Recursive-descent parser for
///   formula := disj ; disj := conj { "|" conj } ; conj := unary { "&" unary } ;
///   unary := "!" unary | "(" formula ")" | "true" | "false" | IDENT
class formula_parser {
public:
    formula_parser(const std::vector<token>& toks, std::size_t pos) : toks_(toks), pos_(pos) {}

    std::optional<formula> parse() {
        auto f = disj();
        if (failed_) return std::nullopt;
        return f;
    }

    std::size_t position() const { return pos_; }
    const std::optional<diagnostic>& failure() const { return failure_; }

private:
    const token& peek() const { return toks_[pos_]; }

    formula fail(const std::string& expected) {
        if (!failed_) failure_ = diagnostic{peek().span, {}, expected, describe(peek()), {}};
        failed_ = true;
        return formula::bottom();
    }

    formula disj() {
        formula f = conj();
        while (!failed_ && peek().kind == tok::bar) {
            ++pos_;
            f = formula::disj(f, conj());
        }
        return f;
    }

    formula conj() {
        formula f = unary();
        while (!failed_ && peek().kind == tok::amp) {
            ++pos_;
            f = formula::conj(f, unary());
        }
        return f;
    }

    formula unary() {
        if (failed_) return formula::bottom();
        const token& t = peek();
        switch (t.kind) {
        case tok::bang: ++pos_; return formula::negate(unary());
        case tok::lparen: {
            ++pos_;
            formula f = disj();
            if (failed_) return f;
            if (peek().kind != tok::rparen) return fail("')'");
            ++pos_;
            return f;
        }
        case tok::ident:
            ++pos_;
            if (t.text == "true") return formula::top();
            if (t.text == "false") return formula::bottom();
            return formula::var(t.text);
        default: return fail("operand");
        }
    }

    const std::vector<token>& toks_;
    std::size_t pos_;
    bool failed_ = false;
    std::optional<diagnostic> failure_;
};

} // namespace detail

/// Parses the formula grammar; `&` binds tighter than `|`, `!` tightest.
inline formula parse_formula(std::string_view text, const std::string& file = "<input>") {
    std::vector<diagnostic> diags;
    auto toks = detail::lex(text, file, diags);
    for (const auto& t : toks)
        if (t.kind == detail::tok::bad) diags.push_back({t.span, {}, "operand", detail::describe(t), {}});
    if (!diags.empty()) throw parse_failure(std::move(diags));
    detail::formula_parser p(toks, 0);
    auto f = p.parse();
    if (!f) throw parse_failure({*p.failure()});
    if (toks[p.position()].kind != detail::tok::end) {
        const auto& t = toks[p.position()];
        throw parse_failure({{t.span, {}, "'&', '|' or end of input", detail::describe(t), {}}});
    }
    return *f;
}

namespace detail {
enum class prec { disj = 0, conj = 1, unary = 2 };

inline void render_into(const formula& f, std::string& out, prec ctx) {
    auto wrap = [&](prec mine, auto&& body) {
        const bool parens = mine < ctx;
        if (parens) out += '(';
        body();
        if (parens) out += ')';
    };
    switch (f.kind()) {
    case formula::op::top: out += "true"; return;
    case formula::op::bottom: out += "false"; return;
    case formula::op::atom: out += f.name(); return;
    case formula::op::negation:
        out += '!';
        render_into(f.left(), out, prec::unary);
        return;
    case formula::op::conjunction:
        wrap(prec::conj, [&] {
            render_into(f.left(), out, prec::conj);
            out += " & ";
            render_into(f.right(), out, prec::unary);
        });
        return;
    case formula::op::disjunction:
        wrap(prec::disj, [&] {
            render_into(f.left(), out, prec::disj);
            out += " | ";
            render_into(f.right(), out, prec::conj);
        });
        return;
    }
}
} // namespace detail

/// Canonical text with minimal parentheses; parses back to the same tree.
inline std::string render(const formula& f) {
    std::string out;
    detail::render_into(f, out, detail::prec::disj);
    return out;
}

// ── Norm DSL ─────────────────────────────────────────────────────────────

/// Parses a norm file:
///   norm n1 { when: inRoad; forbid: speedAbove15; until: never; sanction: 10000; }
/// Every independent defect is reported, recovering at `;`, `}` and `norm`.
/// Atoms are checked against `vocabulary` when one is given.
inline norm_set parse_norms(std::string_view text, const std::string& set_id, const std::string& file = "<input>",
                            const atom_set* vocabulary = nullptr) {
    using detail::tok;
    std::vector<diagnostic> diags;
    auto toks = detail::lex(text, file, diags);
    norm_set out{set_id, {}};
    std::set<std::string> ids;
    std::size_t pos = 0;
    auto at = [&]() -> const detail::token& { return toks[pos]; };
    auto expect_err = [&](const std::string& what) {
        diags.push_back({at().span, {}, what, detail::describe(at()), {}});
    };
    auto schema_err = [&](const source_span& s, std::string msg) { diags.push_back({s, {}, {}, {}, std::move(msg)}); };
    auto skip_to_norm = [&] {
        while (at().kind != tok::end && !(at().kind == tok::ident && at().text == "norm")) ++pos;
    };

    while (at().kind != tok::end) {
        if (!(at().kind == tok::ident && at().text == "norm")) {
            expect_err("'norm'");
            ++pos;
            skip_to_norm();
            continue;
        }
        const source_span block_span = at().span;
        ++pos;
        if (at().kind != tok::ident || !is_identifier(at().text)) {
            expect_err("norm identifier");
            skip_to_norm();
            continue;
        }
        norm n;
        n.id = at().text;
        const source_span id_span = at().span;
        ++pos;
        if (at().kind != tok::lbrace) {
            expect_err("'{'");
            skip_to_norm();
            continue;
        }
        ++pos;

        std::map<std::string, source_span> seen;
        bool ok = true;
        bool have_kind = false;
        while (at().kind != tok::rbrace && at().kind != tok::end) {
            if (at().kind == tok::ident && at().text == "norm") break;
            if (at().kind != tok::ident) {
                expect_err("field name");
                ok = false;
                while (at().kind != tok::semi && at().kind != tok::rbrace && at().kind != tok::end) ++pos;
                if (at().kind == tok::semi) ++pos;
                continue;
            }
            const std::string key = at().text;
            const source_span key_span = at().span;
            ++pos;
            auto recover = [&] {
                ok = false;
                while (at().kind != tok::semi && at().kind != tok::rbrace && at().kind != tok::end &&
                       !(at().kind == tok::ident && at().text == "norm"))
                    ++pos;
                if (at().kind == tok::semi) ++pos;
            };
            static const std::set<std::string> keys{"when", "forbid", "oblige", "until", "sanction"};
            if (!keys.contains(key)) {
                schema_err(key_span, "unknown field '" + key + "'");
                recover();
                continue;
            }
            if (at().kind != tok::colon) {
                expect_err("':'");
                recover();
                continue;
            }
            ++pos;
            if (seen.contains(key) || ((key == "forbid" || key == "oblige") && have_kind)) {
                schema_err(key_span, key == "forbid" || key == "oblige"
                                         ? "exactly one of forbid/oblige is allowed in norm " + n.id
                                         : "duplicate field '" + key + "' in norm " + n.id);
                recover();
                continue;
            }
            seen.emplace(key, key_span);
            if (key == "forbid" || key == "oblige") have_kind = true;

            if (key == "sanction") {
                if (at().kind != tok::number) {
                    expect_err("non-negative decimal sanction");
                    recover();
                    continue;
                }
                auto d = decimal::parse(at().text);
                if (!d) {
                    schema_err(at().span, "sanction '" + at().text + "' is not a decimal with at most 6 fraction digits");
                    recover();
                    continue;
                }
                n.sanction = *d;
                ++pos;
            } else if (key == "until" && at().kind == tok::ident && at().text == "never") {
                n.deadline.reset();
                ++pos;
            } else {
                const source_span fspan = at().span;
                detail::formula_parser fp(toks, pos);
                auto f = fp.parse();
                if (!f) {
                    diags.push_back(*fp.failure());
                    pos = fp.position();
                    recover();
                    continue;
                }
                pos = fp.position();
                if (vocabulary)
                    for (const auto& a : atoms_of(*f))
                        if (!vocabulary->contains(a)) schema_err(fspan, "unknown atom '" + a + "' in norm " + n.id);
                if (key == "when") n.cond = *f;
                else if (key == "until") n.deadline = *f;
                else {
                    n.kind = key == "forbid" ? norm_kind::prohibition : norm_kind::obligation;
                    n.target = *f;
                }
            }
            if (at().kind != tok::semi) {
                expect_err("';'");
                recover();
                continue;
            }
            ++pos;
        }
        if (at().kind == tok::rbrace)
            ++pos;
        else {
            expect_err("'}'");
            ok = false;
        }
        for (const char* required : {"when", "until", "sanction"})
            if (!seen.contains(required)) {
                schema_err(block_span, std::string("missing field '") + required + "' in norm " + n.id);
                ok = false;
            }
        if (!have_kind) {
            schema_err(block_span, "norm " + n.id + " needs one of forbid/oblige");
            ok = false;
        }
        if (!ids.insert(n.id).second) {
            schema_err(id_span, "duplicate id " + n.id);
            ok = false;
        }
        if (ok) out.norms.push_back(std::move(n));
    }
    std::stable_sort(diags.begin(), diags.end(), [](const diagnostic& a, const diagnostic& b) {
        return std::pair(a.span.line, a.span.column) < std::pair(b.span.line, b.span.column);
    });
    if (!diags.empty()) throw parse_failure(std::move(diags));
    return out;
}

inline std::string render(const norm& n) {
    std::string out = "norm " + n.id + " { when: " + render(n.cond) + "; ";
    out += n.kind == norm_kind::prohibition ? "forbid: " : "oblige: ";
    out += render(n.target) + "; until: " + (n.deadline ? render(*n.deadline) : std::string("never"));
    out += "; sanction: " + n.sanction.str() + "; }";
    return out;
}

inline std::string render(const norm_set& ns) {
    std::string out = "# format 1\n";
    for (const auto& n : ns.norms) out += render(n) + "\n";
    return out;
}

// ── JSON helpers ─────────────────────────────────────────────────────────

using json = nlohmann::json;

namespace detail {

inline json parse_json(std::string_view text, const std::string& file) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        const std::size_t upto = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
        for (std::size_t i = 0; i < upto; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::string what = e.what();
        if (auto p = what.find("syntax error"); p != std::string::npos) what = what.substr(p);
        throw parse_failure({{{file, line, col, 1}, {}, {}, {}, "invalid JSON: " + what}});
    }
}

/// Collects schema defects with JSON-pointer locations.
class schema {
public:
    explicit schema(std::string file) : file_(std::move(file)) {}

    void fail(const std::string& where, std::string text) {
        diags_.push_back({{file_, 0, 0, 1}, where.empty() ? "/" : where, {}, {}, std::move(text)});
    }

    const json* field(const json& obj, const std::string& where, const char* key, bool required = true) {
        if (!obj.is_object()) {
            fail(where, "expected an object");
            return nullptr;
        }
        auto it = obj.find(key);
        if (it == obj.end()) {
            if (required) fail(where, std::string("missing field '") + key + "'");
            return nullptr;
        }
        return &*it;
    }

    std::optional<std::string> string(const json* v, const std::string& where) {
        if (!v) return std::nullopt;
        if (!v->is_string()) {
            fail(where, "expected a string");
            return std::nullopt;
        }
        return v->get<std::string>();
    }

    std::optional<double> number(const json* v, const std::string& where) {
        if (!v) return std::nullopt;
        if (!v->is_number()) {
            fail(where, "expected a number");
            return std::nullopt;
        }
        return v->get<double>();
    }

    std::optional<std::uint64_t> count(const json* v, const std::string& where) {
        if (!v) return std::nullopt;
        if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0)) {
            fail(where, "expected a non-negative integer");
            return std::nullopt;
        }
        return v->get<std::uint64_t>();
    }

    std::optional<decimal> amount(const json* v, const std::string& where) {
        if (!v) return std::nullopt;
        std::optional<decimal> d;
        if (v->is_string())
            d = decimal::parse(v->get<std::string>());
        else if (v->is_number_integer())
            d = decimal::parse(std::to_string(v->get<std::int64_t>()));
        if (!d) fail(where, "expected an exact decimal (string or integer)");
        return d;
    }

    std::vector<std::string> strings(const json* v, const std::string& where) {
        std::vector<std::string> out;
        if (!v) return out;
        if (!v->is_array()) {
            fail(where, "expected an array");
            return out;
        }
        for (std::size_t i = 0; i < v->size(); ++i)
            if (auto s = string(&(*v)[i], where + "/" + std::to_string(i))) out.push_back(*s);
        return out;
    }

    void format(const json& doc) {
        if (!doc.is_object() || !doc.contains("format")) return;
        const auto& f = doc["format"];
        if (!f.is_number_integer() || f.get<std::int64_t>() != 1) fail("/format", "unsupported format (expected 1)");
    }

    void absorb(const parse_failure& e, const std::string& where) {
        for (auto d : e.diagnostics()) {
            if (d.where.empty()) d.where = where;
            diags_.push_back(std::move(d));
        }
    }

    bool ok() const { return diags_.empty(); }
    void raise() {
        if (!diags_.empty()) throw parse_failure(std::move(diags_));
    }
    const std::string& file() const { return file_; }

private:
    std::string file_;
    std::vector<diagnostic> diags_;
};

/// Reads the model object; `extra` sees each state object (scenario worlds
/// carry per-state utilities).
template <typename Extra>
transition_system read_model(const json& doc, const std::string& base, schema& sc, bool allow_placeholders,
                             Extra&& extra) {
    transition_system m;
    for (auto& a : sc.strings(sc.field(doc, base, "atoms"), base + "/atoms")) m.atoms.insert(a);
    if (const json* states = sc.field(doc, base, "states")) {
        if (!states->is_array())
            sc.fail(base + "/states", "expected an array");
        else
            for (std::size_t i = 0; i < states->size(); ++i) {
                const std::string where = base + "/states/" + std::to_string(i);
                const json& s = (*states)[i];
                auto id = sc.string(sc.field(s, where, "id"), where + "/id");
                auto labels = sc.strings(sc.field(s, where, "labels", false), where + "/labels");
                if (!id) continue;
                if (m.states.contains(*id)) {
                    sc.fail(where + "/id", "duplicate state id " + *id);
                    continue;
                }
                m.states.emplace(*id, label_set(labels.begin(), labels.end()));
                extra(*id, s, where);
            }
    }
    if (auto init = sc.string(sc.field(doc, base, "init"), base + "/init")) m.init = *init;
    if (const json* edges = sc.field(doc, base, "edges")) {
        if (!edges->is_array())
            sc.fail(base + "/edges", "expected an array");
        else
            for (std::size_t i = 0; i < edges->size(); ++i) {
                const json& e = (*edges)[i];
                const std::string where = base + "/edges/" + std::to_string(i);
                if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string()) {
                    sc.fail(where, "expected a [from, to] pair of state ids");
                    continue;
                }
                m.edges.emplace(e[0].get<std::string>(), e[1].get<std::string>());
            }
    }
    if (sc.ok())
        for (auto& d : validate(m, allow_placeholders)) sc.fail(base, d);
    return m;
}

inline json model_json(const transition_system& m, const std::map<state_id, double>* utilities = nullptr) {
    json doc;
    doc["format"] = 1;
    doc["atoms"] = json::array();
    for (const auto& a : m.atoms) doc["atoms"].push_back(a);
    doc["states"] = json::array();
    for (const auto& [id, labels] : m.states) {
        json s{{"id", id}, {"labels", json::array()}};
        for (const auto& l : labels) s["labels"].push_back(l);
        if (utilities)
            if (auto it = utilities->find(id); it != utilities->end()) s["utility"] = it->second;
        doc["states"].push_back(std::move(s));
    }
    doc["init"] = m.init;
    doc["edges"] = json::array();
    for (const auto& [a, b] : m.edges) doc["edges"].push_back(json::array({a, b}));
    return doc;
}

} // namespace detail

/// Parses a model file; schema and well-formedness defects are all reported.
inline transition_system parse_model(std::string_view text, const std::string& file = "<input>") {
    json doc = detail::parse_json(text, file);
    detail::schema sc(file);
    sc.format(doc);
    auto m = detail::read_model(doc, "", sc, false, [](auto&&...) {});
    sc.raise();
    return m;
}

inline std::string render(const transition_system& m) { return detail::model_json(m).dump(2) + "\n"; }

// ── Paths ────────────────────────────────────────────────────────────────

inline json path_json(const path& p) {
    if (p.is_lasso()) return json{{"stem", p.stem()}, {"cycle", p.cycle()}};
    return json{{"path", p.states}};
}

/// Accepts {"path":[...]} for a finite prefix or {"stem":[...],"cycle":[...]}.
inline path parse_path(std::string_view text, const std::string& file = "<input>") {
    json doc = detail::parse_json(text, file);
    detail::schema sc(file);
    sc.format(doc);
    path p;
    if (doc.is_object() && doc.contains("cycle")) {
        auto stem = sc.strings(sc.field(doc, "", "stem", false), "/stem");
        auto cycle = sc.strings(sc.field(doc, "", "cycle"), "/cycle");
        if (cycle.empty() && sc.ok()) sc.fail("/cycle", "cycle must not be empty");
        p = path::lasso(std::move(stem), cycle);
    } else {
        p = path::finite(sc.strings(sc.field(doc, "", "path"), "/path"));
        if (p.states.empty() && sc.ok()) sc.fail("/path", "path must not be empty");
    }
    sc.raise();
    return p;
}

// ── Scenarios ────────────────────────────────────────────────────────────

inline scenario parse_scenario(std::string_view text, const std::string& file = "<input>") {
    json doc = detail::parse_json(text, file);
    detail::schema sc(file);
    sc.format(doc);
    scenario out;
    if (auto name = sc.string(sc.field(doc, "", "name", false), "/name")) out.name = *name;

    if (const json* world = sc.field(doc, "", "world"))
        out.world = detail::read_model(*world, "/world", sc, true, [&](const std::string& id, const json& s,
                                                                     const std::string& where) {
            if (auto u = sc.number(sc.field(s, where, "utility", false), where + "/utility")) out.utilities[id] = *u;
        });

    if (const json* agents = sc.field(doc, "", "agents")) {
        if (!agents->is_array()) sc.fail("/agents", "expected an array");
        else
            for (std::size_t i = 0; i < agents->size(); ++i) {
                const json& a = (*agents)[i];
                const std::string where = "/agents/" + std::to_string(i);
                agent_spec spec;
                if (auto id = sc.string(sc.field(a, where, "id"), where + "/id")) spec.id = *id;
                if (auto l = sc.number(sc.field(a, where, "lambda", false), where + "/lambda")) spec.lambda = *l;
                if (auto e = sc.number(sc.field(a, where, "epsilon", false), where + "/epsilon")) spec.epsilon = *e;
                if (const json* u = sc.field(a, where, "utilities", false)) {
                    if (!u->is_object()) sc.fail(where + "/utilities", "expected an object");
                    else
                        for (auto it = u->begin(); it != u->end(); ++it)
                            if (auto v = sc.number(&it.value(), where + "/utilities/" + it.key()))
                                spec.utilities[it.key()] = *v;
                }
                out.agents.push_back(std::move(spec));
            }
    }

    if (const json* norms = sc.field(doc, "", "norms")) {
        auto id = sc.string(sc.field(*norms, "/norms", "id"), "/norms/id");
        auto dsl = sc.string(sc.field(*norms, "/norms", "dsl"), "/norms/dsl");
        if (id && dsl) {
            try {
                out.norms = parse_norms(*dsl, *id, file + "#/norms/dsl");
            } catch (const parse_failure& e) {
                sc.absorb(e, "/norms/dsl");
            }
        }
    }

    if (const json* objs = sc.field(doc, "", "objectives")) {
        if (!objs->is_array()) sc.fail("/objectives", "expected an array");
        else
            for (std::size_t i = 0; i < objs->size(); ++i) {
                const json& o = (*objs)[i];
                const std::string where = "/objectives/" + std::to_string(i);
                objective obj;
                if (auto id = sc.string(sc.field(o, where, "id"), where + "/id")) obj.id = *id;
                if (auto atom = sc.string(sc.field(o, where, "atom"), where + "/atom")) obj.atom = *atom;
                if (auto scope = sc.string(sc.field(o, where, "scope", false), where + "/scope")) {
                    if (*scope != "per_agent" && *scope != "global")
                        sc.fail(where + "/scope", "expected per_agent or global");
                    obj.per_agent = *scope == "per_agent";
                }
                auto kind = sc.string(sc.field(o, where, "kind"), where + "/kind");
                if (!kind) continue;
                if (*kind == "max_consecutive") {
                    obj.kind = objective_kind::max_consecutive;
                    if (auto m = sc.number(sc.field(o, where, "max_minutes", false), where + "/max_minutes"))
                        obj.max_minutes = *m;
                    else if (auto k = sc.count(sc.field(o, where, "k"), where + "/k"))
                        obj.k = *k;
                } else if (*kind == "always_below_count") {
                    obj.kind = objective_kind::always_below_count;
                    if (auto t = sc.count(sc.field(o, where, "threshold"), where + "/threshold")) obj.threshold = *t;
                } else if (*kind == "never_atom") {
                    obj.kind = objective_kind::never_atom;
                } else {
                    sc.fail(where + "/kind", "unknown objective kind '" + *kind + "'");
                }
                out.objectives.push_back(std::move(obj));
            }
    }

    if (const json* pool = sc.field(doc, "", "pool", false)) {
        auto formulas = sc.strings(sc.field(*pool, "/pool", "formulas", false), "/pool/formulas");
        for (std::size_t i = 0; i < formulas.size(); ++i) {
            try {
                out.pool.formulas.push_back(parse_formula(formulas[i], file + "#/pool/formulas/" + std::to_string(i)));
            } catch (const parse_failure& e) {
                sc.absorb(e, "/pool/formulas/" + std::to_string(i));
            }
        }
        if (const json* s = sc.field(*pool, "/pool", "sanctions", false)) {
            if (!s->is_array()) sc.fail("/pool/sanctions", "expected an array");
            else
                for (std::size_t i = 0; i < s->size(); ++i)
                    if (auto d = sc.amount(&(*s)[i], "/pool/sanctions/" + std::to_string(i)))
                        out.pool.sanctions.push_back(*d);
        }
    }

    if (auto e = sc.string(sc.field(doc, "", "enforcement"), "/enforcement")) {
        if (*e == "sanctioning") out.mode = enforcement::sanctioning;
        else if (*e == "regimentation") out.mode = enforcement::regimentation;
        else sc.fail("/enforcement", "expected sanctioning or regimentation");
    }
    if (auto s = sc.count(sc.field(doc, "", "seed"), "/seed")) out.seed = *s;
    if (auto h = sc.count(sc.field(doc, "", "horizon"), "/horizon")) out.horizon = *h;
    if (auto w = sc.count(sc.field(doc, "", "window"), "/window")) out.window = *w;
    if (const json* th = sc.field(doc, "", "thresholds")) {
        if (auto lo = sc.number(sc.field(*th, "/thresholds", "low"), "/thresholds/low")) out.theta_low = *lo;
        if (auto hi = sc.number(sc.field(*th, "/thresholds", "high"), "/thresholds/high")) out.theta_high = *hi;
    }
    if (auto m = sc.number(sc.field(doc, "", "minutes_per_step"), "/minutes_per_step")) out.minutes_per_step = *m;

    for (auto& o : out.objectives)
        if (o.max_minutes && out.minutes_per_step > 0)
            o.k = static_cast<std::size_t>(std::floor(*o.max_minutes / out.minutes_per_step + 1e-9));

    if (sc.ok())
        for (auto& d : validate(out)) sc.fail("", d);
    sc.raise();
    return out;
}

inline json scenario_json(const scenario& s) {
    json doc;
    doc["format"] = 1;
    doc["name"] = s.name;
    doc["world"] = detail::model_json(s.world, &s.utilities);
    doc["world"].erase("format");
    doc["agents"] = json::array();
    for (const auto& a : s.agents) {
        json j{{"id", a.id}, {"lambda", a.lambda}, {"epsilon", a.epsilon}};
        if (!a.utilities.empty()) j["utilities"] = a.utilities;
        doc["agents"].push_back(std::move(j));
    }
    doc["norms"] = json{{"id", s.norms.id}, {"dsl", render(s.norms)}};
    doc["objectives"] = json::array();
    for (const auto& o : s.objectives) {
        json j{{"id", o.id}, {"kind", to_string(o.kind)}, {"atom", o.atom}, {"scope", o.per_agent ? "per_agent" : "global"}};
        if (o.kind == objective_kind::max_consecutive) {
            if (o.max_minutes) j["max_minutes"] = *o.max_minutes;
            else j["k"] = o.k;
        }
        if (o.kind == objective_kind::always_below_count) j["threshold"] = o.threshold;
        doc["objectives"].push_back(std::move(j));
    }
    doc["pool"] = json{{"formulas", json::array()}, {"sanctions", json::array()}};
    for (const auto& f : s.pool.formulas) doc["pool"]["formulas"].push_back(render(f));
    for (const auto& d : s.pool.sanctions) doc["pool"]["sanctions"].push_back(d.str());
    doc["enforcement"] = to_string(s.mode);
    doc["seed"] = s.seed;
    doc["horizon"] = s.horizon;
    doc["window"] = s.window;
    doc["thresholds"] = json{{"low", s.theta_low}, {"high", s.theta_high}};
    doc["minutes_per_step"] = s.minutes_per_step;
    return doc;
}

inline std::string render(const scenario& s) { return scenario_json(s).dump(2) + "\n"; }

// ── Run logs ─────────────────────────────────────────────────────────────

namespace detail {

inline json decision_json(const revision_decision& d) {
    json j{{"step", d.step},
           {"window", d.window},
           {"direction", d.direction},
           {"window_score", d.window_score},
           {"candidates", d.candidates},
           {"adopted", d.adopted},
           {"from", d.from_set},
           {"candidate_score", d.candidate_score}};
    if (d.adopted) {
        j["to"] = d.to_set;
        j["norm"] = d.norm;
        j["component"] = d.component;
        j["edit"] = d.edit;
        j["pool_index"] = d.pool_index;
    }
    if (d.verdict)
        j["verdict"] = json{{"relation", d.verdict->relation}, {"sanctions", d.verdict->sanctions},
                            {"syntactic", d.verdict->syntactic}};
    if (d.revised) j["norms"] = render(*d.revised);
    return j;
}

inline json event_json(const monitor_event& e) {
    return json{{"norm", e.norm}, {"agent", e.agent}, {"kind", to_string(e.kind)}, {"sanction", e.sanction.str()}};
}

} // namespace detail

/// One JSON object per step, then a trailing summary object. Keys are
/// sorted, so identical logs serialize to identical bytes.
inline std::string render(const run_log& log) {
    std::string out;
    std::set<std::string> announced;
    for (const auto& r : log.records) {
        json j{{"step", r.step}, {"normset", r.normset}};
        if (announced.insert(r.normset).second && log.norm_sets.contains(r.normset) && r.step == 0)
            j["norms"] = render(log.norm_sets.at(r.normset));
        j["agents"] = json::array();
        for (const auto& a : r.agents)
            j["agents"].push_back(json{{"id", a.agent},
                                       {"state", a.state},
                                       {"labels", a.labels},
                                       {"explored", a.explored},
                                       {"deadlock", a.deadlock}});
        j["events"] = json::array();
        for (const auto& e : r.events) j["events"].push_back(detail::event_json(e));
        j["objectives"] = r.objectives;
        j["revisions"] = json::array();
        for (const auto& d : r.revisions) j["revisions"].push_back(detail::decision_json(d));
        out += j.dump() + "\n";
    }
    const run_summary& s = log.summary;
    json sum{{"objectives", s.objectives},
             {"window_scores", s.window_scores},
             {"violations", s.violations},
             {"deadlocks", s.deadlocks},
             {"final_normset", s.final_set}};
    sum["ledger"]["total"] = s.ledger_total.str();
    sum["ledger"]["per_agent"] = json::object();
    for (const auto& [agent, amount] : s.ledger_per_agent) sum["ledger"]["per_agent"][agent] = amount.str();
    sum["revisions"] = json::array();
    for (const auto& d : log.decisions) sum["revisions"].push_back(detail::decision_json(d));
    out += json{{"summary", sum}}.dump() + "\n";
    return out;
}

/// Reads a run log back (records, decisions and the enforced norm sets).
/// Doubles come back as parsed from their shortest decimal form.
inline run_log parse_run_log(std::string_view text, const std::string& file = "<input>") {
    run_log log;
    std::size_t line_no = 0;
    std::size_t start = 0;
    auto fail = [&](const std::string& msg) {
        throw parse_failure({{{file, line_no, 1, 1}, {}, {}, {}, msg}});
    };
    auto read_decision = [&](const json& j) {
        revision_decision d;
        d.step = j.at("step").get<std::size_t>();
        d.window = j.at("window").get<std::size_t>();
        d.direction = j.at("direction").get<std::string>();
        d.window_score = j.at("window_score").get<double>();
        d.candidates = j.at("candidates").get<std::size_t>();
        d.adopted = j.at("adopted").get<bool>();
        d.from_set = j.at("from").get<std::string>();
        d.candidate_score = j.at("candidate_score").get<double>();
        if (d.adopted) {
            d.to_set = j.at("to").get<std::string>();
            d.norm = j.at("norm").get<std::string>();
            d.component = j.at("component").get<std::string>();
            d.edit = j.at("edit").get<std::string>();
            d.pool_index = j.at("pool_index").get<std::size_t>();
        }
        if (j.contains("verdict"))
            d.verdict = verdict_summary{j["verdict"].at("relation").get<std::string>(),
                                        j["verdict"].at("sanctions").get<std::string>(),
                                        j["verdict"].at("syntactic").get<std::string>()};
        if (j.contains("norms")) d.revised = parse_norms(j["norms"].get<std::string>(), d.to_set, file);
        return d;
    };
    auto kind_of = [&](const std::string& k) {
        for (auto e : {event_kind::detached, event_kind::complied, event_kind::withdrawn, event_kind::violated})
            if (to_string(e) == k) return e;
        fail("unknown event kind '" + k + "'");
        return event_kind::detached;
    };
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
            if (j.contains("summary")) {
                const json& s = j["summary"];
                log.summary.objectives = s.at("objectives").get<std::map<std::string, double>>();
                log.summary.window_scores = s.at("window_scores").get<std::vector<double>>();
                log.summary.violations = s.at("violations").get<std::size_t>();
                log.summary.deadlocks = s.at("deadlocks").get<std::size_t>();
                log.summary.final_set = s.at("final_normset").get<std::string>();
                log.summary.ledger_total = decimal::parse(s.at("ledger").at("total").get<std::string>()).value();
                for (auto it = s["ledger"]["per_agent"].begin(); it != s["ledger"]["per_agent"].end(); ++it)
                    log.summary.ledger_per_agent[it.key()] = decimal::parse(it.value().get<std::string>()).value();
                for (const auto& d : s.at("revisions")) log.decisions.push_back(read_decision(d));
                continue;
            }
            step_record r;
            r.step = j.at("step").get<std::size_t>();
            r.normset = j.at("normset").get<std::string>();
            if (j.contains("norms"))
                log.norm_sets.emplace(r.normset, parse_norms(j["norms"].get<std::string>(), r.normset, file));
            for (const auto& a : j.at("agents"))
                r.agents.push_back(agent_snapshot{a.at("id").get<std::string>(), a.at("state").get<std::string>(),
                                                  a.at("labels").get<label_set>(), a.at("explored").get<bool>(),
                                                  a.at("deadlock").get<bool>()});
            for (const auto& e : j.at("events"))
                r.events.push_back(monitor_event{r.step, e.at("norm").get<std::string>(), e.at("agent").get<std::string>(),
                                                 kind_of(e.at("kind").get<std::string>()),
                                                 decimal::parse(e.at("sanction").get<std::string>()).value()});
            r.objectives = j.at("objectives").get<std::map<std::string, bool>>();
            for (const auto& d : j.at("revisions")) {
                r.revisions.push_back(read_decision(d));
                if (r.revisions.back().revised) log.norm_sets.emplace(r.revisions.back().to_set, *r.revisions.back().revised);
            }
            log.records.push_back(std::move(r));
        } catch (const parse_failure&) {
            throw;
        } catch (const std::exception& e) {
            fail(std::string("malformed run log record: ") + e.what());
        }
    }
    return log;
}

} // namespace normrev
