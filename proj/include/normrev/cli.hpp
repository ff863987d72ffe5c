#pragma once

#include "normrev/dsl.hpp"
#include "normrev/model.hpp"
#include "normrev/norms.hpp"
#include "normrev/oracle.hpp"
#include "normrev/revision.hpp"
#include "normrev/supervision.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace normrev {

inline constexpr std::string_view version = "0.1.0";

/// Exit codes of `normrev classify`; other commands use 0 and 1 only.
namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int failure = 1;
inline constexpr int relaxation = 0;
inline constexpr int strengthening = 2;
inline constexpr int equivalent = 3;
inline constexpr int incomparable = 4;
inline constexpr int not_total = 5;
} // namespace exit_code

inline int exit_code_of(revision_relation r) {
    switch (r) {
    case revision_relation::relaxation: return exit_code::relaxation;
    case revision_relation::strengthening: return exit_code::strengthening;
    case revision_relation::equivalent: return exit_code::equivalent;
    case revision_relation::incomparable: return exit_code::incomparable;
    }
    return exit_code::failure;
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

namespace detail {

struct input_file {
    std::string path;
    std::string name; ///< basename, used in reports so they do not depend on the working directory
    std::string text;
};

inline input_file read_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error("cannot read file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return {path, std::filesystem::path(path).filename().string(), ss.str()};
}

/// Norm set id taken from the file name: `scenarios/r1.norm` is `r1`.
inline std::string set_id_of(const std::string& path) { return std::filesystem::path(path).stem().string(); }

class report {
public:
    explicit report(std::string command) { doc_["command"] = std::move(command); }

    void input(const input_file& f) { doc_["inputs"][f.name] = hex64(fnv1a64(f.text)); }
    void warn(std::string w) {
        warnings_.push_back(w);
        doc_["warnings"].push_back(std::move(w));
    }
    json& operator[](const char* key) { return doc_[key]; }
    void line(std::string l) { lines_.push_back(std::move(l)); }

    void print(std::ostream& out, bool as_json) {
        if (!doc_.contains("warnings")) doc_["warnings"] = json::array();
        if (as_json) {
            out << doc_.dump(2) << "\n";
            return;
        }
        for (const auto& l : lines_) out << l << "\n";
        for (const auto& w : warnings_) out << "warning: " << w << "\n";
    }

private:
    json doc_ = json::object();
    std::vector<std::string> lines_;
    std::vector<std::string> warnings_;
};

inline std::string join(const std::vector<state_id>& xs) {
    std::string out;
    for (const auto& x : xs) out += (out.empty() ? "" : " ") + x;
    return out;
}

inline json witness_json(const std::optional<path>& p) { return p ? path_json(*p) : json(nullptr); }

inline std::string witness_text(const std::optional<path>& p) {
    if (!p) return "none";
    return "stem [" + join(p->stem()) + "] cycle [" + join(p->cycle()) + "]";
}

inline json events_json(const std::vector<monitor_event>& events) {
    json out = json::array();
    for (const auto& e : events) {
        json j = event_json(e);
        j["step"] = e.step;
        if (e.agent.empty()) j.erase("agent");
        out.push_back(std::move(j));
    }
    return out;
}

struct options {
    bool as_json = false;
    // classify
    std::string model_path, before_path, after_path;
    bool syntactic = false, complete = false, oracle = false;
    std::string strictness_mode = "model";
    // check
    std::vector<std::string> norm_paths;
    // monitor
    std::string norms_path, path_file, mode = "event";
    std::size_t samples = 1, length = 10;
    std::uint64_t seed = 0;
    // simulate
    std::string scenario_path, out_path;
    bool supervise = false;
    std::optional<std::uint64_t> seed_override;
    // revise-candidates
    std::string norm_id, direction = "relax";
    std::vector<std::string> pool_formulas, pool_sanctions;
};

inline transition_system load_model(const input_file& f) { return parse_model(f.text, f.name); }

inline norm_set load_norms(const input_file& f, const atom_set* vocab) {
    return parse_norms(f.text, set_id_of(f.path), f.name, vocab);
}

inline int cmd_check(const options& o, std::ostream& out, std::ostream& err) {
    report r("check");
    std::vector<std::string> defects;
    auto mf = read_input(o.model_path);
    r.input(mf);
    std::optional<transition_system> m;
    try {
        m = load_model(mf);
    } catch (const parse_failure& e) {
        for (const auto& d : e.diagnostics()) defects.push_back(d.message());
    }
    if (m && !is_total(*m))
        r.warn(std::string("model is not total: state '") + *find_deadlock(*m) +
               "' has no successor (classify needs --complete-selfloops)");
    for (const auto& p : o.norm_paths) {
        auto nf = read_input(p);
        r.input(nf);
        try {
            auto ns = load_norms(nf, m ? &m->atoms : nullptr);
            for (auto& w : lint(ns)) r.warn(nf.name + ": " + w);
        } catch (const parse_failure& e) {
            for (const auto& d : e.diagnostics()) defects.push_back(d.message());
        }
    }
    r["ok"] = defects.empty();
    r["defects"] = defects;
    r.line(defects.empty() ? "ok" : "defects:");
    for (const auto& d : defects) r.line("  " + d);
    r.print(out, o.as_json);
    (void)err;
    return defects.empty() ? exit_code::ok : exit_code::failure;
}

inline int cmd_classify(const options& o, std::ostream& out, std::ostream& err) {
    report r("classify");
    auto mf = read_input(o.model_path);
    auto bf = read_input(o.before_path);
    auto af = read_input(o.after_path);
    r.input(mf);
    r.input(bf);
    r.input(af);
    transition_system m = load_model(mf);
    norm_set before = load_norms(bf, &m.atoms);
    norm_set after = load_norms(af, &m.atoms);
    if (!is_total(m)) {
        if (!o.complete) {
            err << "error: " << not_total(*find_deadlock(m)).what() << " (use --complete-selfloops)\n";
            return exit_code::not_total;
        }
        m = complete_total(m);
        r.warn("completed deadlock states with self-loops");
    }
    for (const auto* ns : {&before, &after})
        for (auto& w : lint(*ns)) r.warn(w);

    auto v = classify_revision(m, before, after);
    r["relation"] = std::string(to_string(v.relation));
    r["alteration"] = is_alteration(v.relation);
    r["sanctions"] = std::string(to_string(v.sanctions));
    r["witness_in_after_not_before"] = witness_json(v.witness_in_r_not_n);
    r["witness_in_before_not_after"] = witness_json(v.witness_in_n_not_r);
    r.line("relation: " + std::string(to_string(v.relation)) + (is_alteration(v.relation) ? " (alteration)" : ""));
    r.line("sanctions: " + std::string(to_string(v.sanctions)));
    r.line("violates " + after.id + " only: " + witness_text(v.witness_in_r_not_n));
    r.line("violates " + before.id + " only: " + witness_text(v.witness_in_n_not_r));

    if (o.syntactic) {
        const transition_system* sm = o.strictness_mode == "logical" ? nullptr : &m;
        json rows = json::array();
        auto emit = [&](const norm& a, const norm& b) {
            auto s = syntactic_classify(a, b, sm);
            json cases = json::array();
            std::string text;
            for (auto c : s.fired) {
                cases.push_back(std::string(to_string(c)));
                text += (text.empty() ? "" : ", ") + std::string(to_string(c));
            }
            rows.push_back(json{{"norm", a.id},
                                {"direction", std::string(to_string(s.direction))},
                                {"cases", cases},
                                {"deviation", s.deviation},
                                {"unchanged", s.unchanged}});
            r.line("syntactic " + a.id + ": " + std::string(to_string(s.direction)) + " {" + text + "}" +
                   (s.unchanged ? " [no formula changed]" : "") +
                   (s.deviation ? " [obligation deadline, reversed polarity]" : ""));
            if (s.deviation) r.warn("norm " + a.id + ": obligation deadline case applied with reversed polarity");
        };
        if (before.norms.size() == 1 && after.norms.size() == 1)
            emit(before.norms.front(), after.norms.front());
        else
            for (const auto& a : before.norms)
                if (const norm* b = after.find(a.id)) emit(a, *b);
        r["syntactic"] = rows;
        r["strictness"] = o.strictness_mode;
    }

    if (o.oracle) {
        auto ov = oracle_compare(m, before, after);
        r["oracle"] = std::string(to_string(ov.relation));
        r.line("oracle: " + std::string(to_string(ov.relation)));
        if (ov.relation != v.relation) {
            r.print(out, o.as_json);
            err << "error: oracle disagreement: classifier says " << to_string(v.relation) << ", oracle says "
                << to_string(ov.relation) << "\n";
            return exit_code::failure;
        }
    }
    r.print(out, o.as_json);
    return exit_code_of(v.relation);
}

inline int cmd_monitor(const options& o, std::ostream& out, std::ostream& err) {
    report r("monitor");
    auto mf = read_input(o.model_path);
    auto nf = read_input(o.norms_path);
    r.input(mf);
    r.input(nf);
    const transition_system m = load_model(mf);
    const norm_set ns = load_norms(nf, &m.atoms);
    const monitor_mode mode = o.mode == "path" ? monitor_mode::path : monitor_mode::event;
    for (auto& w : lint(ns)) r.warn(w);

    std::vector<path> paths;
    if (!o.path_file.empty()) {
        auto pf = read_input(o.path_file);
        r.input(pf);
        path p = parse_path(pf.text, pf.name);
        if (auto bad = check_path(m, p)) {
            err << "error: " << pf.name << ": " << *bad << "\n";
            return exit_code::failure;
        }
        paths.push_back(std::move(p));
    } else {
        for (std::size_t i = 0; i < o.samples; ++i) paths.push_back(sample_path(m, o.length, o.seed + i));
    }

    r["mode"] = std::string(to_string(mode));
    json runs = json::array();
    decimal total;
    for (const auto& p : paths) {
        auto tr = run_trace(ns, m, p, mode);
        json j{{"path", path_json(p)}, {"events", events_json(tr.events)}, {"total", tr.ledger.total().str()}};
        json finals = json::object();
        for (std::size_t k = 0; k < ns.norms.size(); ++k)
            finals[ns.norms[k].id] = std::string(to_string(tr.final_states[k].phase));
        j["final"] = finals;
        runs.push_back(std::move(j));
        r.line("path: " + (p.is_lasso() ? witness_text(p) : join(p.states)));
        for (const auto& e : tr.events)
            r.line("  step " + std::to_string(e.step) + ": " + e.norm + " " + std::string(to_string(e.kind)) +
                   (e.kind == event_kind::violated ? " sanction " + e.sanction.str() : ""));
        r.line("  ledger total: " + tr.ledger.total().str());
        total += tr.ledger.total();
    }
    r["runs"] = runs;
    r["total"] = total.str();
    if (paths.size() > 1) r.line("total over " + std::to_string(paths.size()) + " paths: " + total.str());
    r.print(out, o.as_json);
    return exit_code::ok;
}

inline json decision_report(const revision_decision& d) {
    json j = decision_json(d);
    j.erase("norms");
    return j;
}

inline int cmd_simulate(const options& o, std::ostream& out, std::ostream&) {
    report r(o.supervise ? "simulate --supervise" : "simulate");
    auto sf = read_input(o.scenario_path);
    r.input(sf);
    scenario sc = parse_scenario(sf.text, sf.name);
    if (o.seed_override) sc.seed = *o.seed_override;
    for (auto& w : lint(sc.norms)) r.warn(w);
    run_log log = o.supervise ? supervise(sc) : run_episode(sc, sc.norms);
    const std::string text = render(log);
    if (!o.out_path.empty()) {
        std::ofstream f(o.out_path, std::ios::binary);
        if (!f) throw error("cannot write file '" + o.out_path + "'");
        f << text;
    }
    const auto& s = log.summary;
    r["scenario"] = sc.name;
    r["seed"] = sc.seed;
    r["steps"] = log.records.size();
    r["objectives"] = s.objectives;
    r["window_scores"] = s.window_scores;
    r["violations"] = s.violations;
    r["deadlocks"] = s.deadlocks;
    r["ledger_total"] = s.ledger_total.str();
    r["final_normset"] = s.final_set;
    r["runlog_fnv1a"] = hex64(fnv1a64(text));
    json decisions = json::array();
    for (const auto& d : log.decisions) decisions.push_back(decision_report(d));
    r["revisions"] = decisions;

    r.line("scenario " + sc.name + ", seed " + std::to_string(sc.seed) + ", " + std::to_string(log.records.size()) +
           " records");
    for (const auto& [id, rate] : s.objectives) {
        std::ostringstream os;
        os << "objective " << id << ": " << rate;
        r.line(os.str());
    }
    {
        std::ostringstream os;
        os << "window scores:";
        for (double w : s.window_scores) os << ' ' << w;
        r.line(os.str());
    }
    r.line("violations: " + std::to_string(s.violations) + ", ledger total: " + s.ledger_total.str() +
           ", deadlocks: " + std::to_string(s.deadlocks));
    for (const auto& d : log.decisions) {
        std::ostringstream os;
        os << "review at step " << d.step << " (" << d.direction << ", window score " << d.window_score << ", "
           << d.candidates << " candidates): ";
        if (d.adopted) {
            os << "adopted " << d.to_set << " editing " << d.norm << " " << d.component << " (" << d.edit
               << ", pool " << d.pool_index << "), rollout score " << d.candidate_score;
            if (d.verdict) os << ", " << d.verdict->relation << ", sanctions " << d.verdict->sanctions;
        } else {
            os << "kept " << d.from_set;
        }
        r.line(os.str());
    }
    r.line("final norm set: " + s.final_set);
    r.print(out, o.as_json);
    return exit_code::ok;
}

inline int cmd_candidates(const options& o, std::ostream& out, std::ostream& err) {
    report r("revise-candidates");
    auto mf = read_input(o.model_path);
    auto nf = read_input(o.norms_path);
    r.input(mf);
    r.input(nf);
    const transition_system m = load_model(mf);
    const norm_set ns = load_norms(nf, &m.atoms);
    const norm* n = o.norm_id.empty() && ns.norms.size() == 1 ? &ns.norms.front() : ns.find(o.norm_id);
    if (!n) {
        err << "error: no norm '" << o.norm_id << "' in " << nf.name << "\n";
        return exit_code::failure;
    }
    candidate_pool pool;
    for (const auto& f : o.pool_formulas) {
        pool.formulas.push_back(parse_formula(f, "--formula"));
        check_vocabulary(pool.formulas.back(), m.atoms);
    }
    for (const auto& s : o.pool_sanctions) {
        auto d = decimal::parse(s);
        if (!d) throw error("--sanction '" + s + "' is not an exact decimal");
        pool.sanctions.push_back(*d);
    }
    const edit_direction dir = o.direction == "strengthen" ? edit_direction::strengthen
                               : o.direction == "alter"    ? edit_direction::alter
                                                           : edit_direction::relax;
    const transition_system* sm = o.strictness_mode == "logical" ? nullptr : &m;
    json rows = json::array();
    for (const auto& c : generate_candidates(*n, pool, dir, sm)) {
        json cases = json::array();
        for (auto k : c.verdict.fired) cases.push_back(std::string(to_string(k)));
        rows.push_back(json{{"component", c.component},
                            {"edit", c.edit},
                            {"pool_index", c.pool_index},
                            {"norm", render(c.revised)},
                            {"direction", std::string(to_string(c.verdict.direction))},
                            {"cases", cases},
                            {"deviation", c.verdict.deviation}});
        r.line(c.component + " " + c.edit + " pool[" + std::to_string(c.pool_index) + "] " +
               std::string(to_string(c.verdict.direction)) + ": " + render(c.revised));
    }
    r["norm"] = n->id;
    r["direction"] = o.direction;
    r["candidates"] = rows;
    if (rows.empty()) r.line("no candidates");
    r.print(out, o.as_json);
    return exit_code::ok;
}

} // namespace detail

/// Runs the `normrev` command line with `args` (without the program name).
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    detail::options o;
    CLI::App app{"Norm revision toolkit: monitor conditional norms, classify revisions, supervise simulations."};
    app.name("normrev");
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", std::string("normrev ") + std::string(version));
    app.add_flag("--json", o.as_json, "Print the report as JSON");

    auto* check = app.add_subcommand("check", "Validate a model and norm files, lint norms");
    check->add_option("model", o.model_path, "Model file (.ts.json)")->required();
    check->add_option("norms", o.norm_paths, "Norm files (.norm)");

    auto* classify = app.add_subcommand("classify", "Classify a norm revision");
    classify->add_option("model", o.model_path, "Model file (.ts.json)")->required();
    classify->add_option("before", o.before_path, "Original norm set")->required();
    classify->add_option("after", o.after_path, "Revised norm set")->required();
    classify->add_flag("--syntactic", o.syntactic, "Also report the syntactic cases");
    classify->add_flag("--complete-selfloops", o.complete, "Add self-loops to deadlock states first");
    classify->add_flag("--oracle", o.oracle, "Cross-check with the brute-force oracle");
    classify->add_option("--strictness", o.strictness_mode, "Strictness for syntactic cases")
        ->check(CLI::IsMember({"model", "logical"}));

    auto* monitor = app.add_subcommand("monitor", "Monitor norms along a path");
    monitor->add_option("model", o.model_path, "Model file (.ts.json)")->required();
    monitor->add_option("norms", o.norms_path, "Norm file (.norm)")->required();
    monitor->add_option("--path", o.path_file, "Path file; sampled paths are used without it");
    monitor->add_option("--mode", o.mode, "Monitor mode")->check(CLI::IsMember({"path", "event"}));
    monitor->add_option("--samples", o.samples, "Number of sampled paths")->check(CLI::PositiveNumber);
    monitor->add_option("--length", o.length, "Length of sampled paths")->check(CLI::PositiveNumber);
    monitor->add_option("--seed", o.seed, "Seed of the first sampled path");

    auto* simulate = app.add_subcommand("simulate", "Run a scenario, optionally supervised");
    simulate->add_option("scenario", o.scenario_path, "Scenario file (.scenario.json)")->required();
    simulate->add_flag("--supervise", o.supervise, "Run the norm update loop");
    simulate->add_option("--out", o.out_path, "Write the run log (.runlog.jsonl)");
    simulate->add_option("--seed-override", o.seed_override, "Replace the scenario seed");

    auto* candidates = app.add_subcommand("revise-candidates", "List single-component norm edits");
    candidates->add_option("model", o.model_path, "Model file (.ts.json)")->required();
    candidates->add_option("norms", o.norms_path, "Norm file (.norm)")->required();
    candidates->add_option("--norm", o.norm_id, "Norm id (optional for single-norm files)");
    candidates->add_option("--direction", o.direction, "Edit direction")
        ->check(CLI::IsMember({"relax", "strengthen", "alter"}));
    candidates->add_option("--formula", o.pool_formulas, "Pool formula (repeatable)");
    candidates->add_option("--sanction", o.pool_sanctions, "Pool sanction (repeatable)");
    candidates->add_option("--strictness", o.strictness_mode, "Strictness for syntactic cases")
        ->check(CLI::IsMember({"model", "logical"}));

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_code::ok;
    } catch (const CLI::CallForVersion&) {
        out << app.version() << "\n";
        return exit_code::ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::failure;
    }

    try {
        if (check->parsed()) return detail::cmd_check(o, out, err);
        if (classify->parsed()) return detail::cmd_classify(o, out, err);
        if (monitor->parsed()) return detail::cmd_monitor(o, out, err);
        if (simulate->parsed()) return detail::cmd_simulate(o, out, err);
        if (candidates->parsed()) return detail::cmd_candidates(o, out, err);
    } catch (const parse_failure& e) {
        for (const auto& d : e.diagnostics()) err << "error: " << d.message() << "\n";
        return exit_code::failure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::failure;
    }
    return exit_code::failure;
}

} // namespace normrev
