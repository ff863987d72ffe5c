// Acceptance suite: one line per criterion, nonzero exit on any failure.

#include "normrev/cli.hpp"
#include "normrev/oracle.hpp"
#include "support.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>

using namespace normrev;
using namespace testing_support;

namespace {

struct outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) detail = what;
        pass = pass && ok;
    }
};

struct instance {
    transition_system m;
    norm_set a, b;
};

// The 200 random instances shared by criteria 4 and 5.
std::vector<instance> random_instances() {
    generator gen(2024);
    std::vector<instance> out;
    for (int i = 0; i < 200; ++i) {
        instance x{gen.random_model(5), gen.random_norm_set("N", 2, 2), gen.random_norm_set("R", 2, 2)};
        out.push_back(std::move(x));
    }
    return out;
}

bool witness_ok(const transition_system& m, const norm_set& yes, const norm_set& no, const std::optional<path>& w) {
    return w && w->is_lasso() && !check_path(m, *w) && violates_path(yes, m, *w) && !violates_path(no, m, *w);
}

std::string cli_json(std::vector<std::string> args) {
    std::ostringstream out, err;
    run_cli(args, out, err);
    return out.str();
}

bool golden_classify(const std::string& model, const std::string& a, const std::string& b) {
    auto got = cli_json({"--json", "classify", shipped(model + ".ts.json"), shipped(a + ".norm"), shipped(b + ".norm"),
                         "--syntactic"});
    return got == read_file(golden("classify_" + a + "_" + b + ".json"));
}

// Relaxations found by criteria 1 to 4, checked again by criterion 6.
std::vector<instance> relaxations;

outcome criterion1() {
    outcome o;
    auto m = shipped_model("road");
    auto n1 = shipped_norms("n1");
    const std::pair<const char*, syntactic_case> cases[] = {
        {"r1", syntactic_case::cond}, {"r2", syntactic_case::target}, {"r3", syntactic_case::deadline}};
    for (const auto& [name, c] : cases) {
        auto r = shipped_norms(name);
        auto v = classify_revision(m, n1, r);
        o.require(v.relation == revision_relation::relaxation, std::string("n1->") + name + " not a relaxation");
        o.require(witness_ok(m, n1, r, v.witness_in_n_not_r), std::string("bad witness for ") + name);
        auto s = syntactic_classify(n1.norms[0], r.norms[0], &m);
        o.require(s.direction == syntactic_direction::relaxation_or_equivalent && s.fired == std::set{c},
                  std::string("syntactic case mismatch for ") + name);
        o.require(golden_classify("road", "n1", name), std::string("golden mismatch for ") + name);
        if (v.relation == revision_relation::relaxation) relaxations.push_back({m, n1, r});
    }
    o.require(compare_sanctions(n1, shipped_norms("s1")) == sanction_change::decreased, "n1->s1 not Decreased");
    o.require(golden_classify("road", "n1", "s1"), "golden mismatch for s1");
    if (o.pass) o.detail = "r1,r2,r3 Relaxation with cases {cond},{target},{deadline}; s1 Decreased";
    return o;
}

outcome criterion2() {
    outcome o;
    auto m = shipped_model("noise");
    auto n2 = shipped_norms("n2");
    for (auto name : {"r5", "r6"}) {
        auto r = shipped_norms(name);
        auto v = classify_revision(m, n2, r);
        o.require(v.relation == revision_relation::strengthening, std::string("n2->") + name + " not a strengthening");
        o.require(witness_ok(m, r, n2, v.witness_in_r_not_n), std::string("bad witness for ") + name);
        o.require(golden_classify("noise", "n2", name), std::string("golden mismatch for ") + name);
    }
    o.require(compare_sanctions(n2, shipped_norms("s2")) == sanction_change::increased, "n2->s2 not Increased");
    o.require(golden_classify("noise", "n2", "s2"), "golden mismatch for s2");
    if (o.pass) o.detail = "r5,r6 Strengthening; s2 Increased";
    return o;
}

outcome criterion3() {
    outcome o;
    auto m = shipped_model("narrow");
    auto n3 = shipped_norms("n3");
    for (auto name : {"r8", "r9"}) {
        auto r = shipped_norms(name);
        auto v = classify_revision(m, n3, r);
        o.require(v.relation == revision_relation::incomparable, std::string("n3->") + name + " not incomparable");
        o.require(witness_ok(m, n3, r, v.witness_in_n_not_r), std::string("bad N\\R witness for ") + name);
        o.require(witness_ok(m, r, n3, v.witness_in_r_not_n), std::string("bad R\\N witness for ") + name);
        o.require(golden_classify("narrow", "n3", name), std::string("golden mismatch for ") + name);
    }
    if (o.pass) o.detail = "r8,r9 Incomparable with both witnesses replayed";
    return o;
}

outcome criterion4(const std::vector<instance>& xs) {
    outcome o;
    const auto start = std::chrono::steady_clock::now();
    std::size_t agree = 0;
    std::map<std::string, std::size_t> mix;
    for (const auto& x : xs) {
        auto exact = classify_revision(x.m, x.a, x.b);
        auto brute = oracle_compare(x.m, x.a, x.b);
        if (exact.relation == brute.relation) ++agree;
        ++mix[std::string(to_string(exact.relation))];
        if (exact.relation == revision_relation::relaxation) relaxations.push_back(x);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.require(agree == xs.size(), "disagreements: " + std::to_string(xs.size() - agree));
    o.require(secs < 60.0, "runtime " + std::to_string(secs) + " s");
    char buf[128];
    std::snprintf(buf, sizeof buf, "%zu/%zu agree in %.2f s (", agree, xs.size(), secs);
    std::string detail = buf;
    for (const auto& [rel, n] : mix) detail += rel + " " + std::to_string(n) + (rel == mix.rbegin()->first ? ")" : ", ");
    if (o.pass) o.detail = detail;
    return o;
}

outcome criterion5(const std::vector<instance>& xs) {
    outcome o;
    generator gen(2025);
    std::size_t checked = 0, flagged = 0, failures = 0;
    auto check = [&](const transition_system& m, const norm& before, const norm& after) {
        auto s = syntactic_classify(before, after, &m);
        if (s.direction != syntactic_direction::relaxation_or_equivalent) return;
        if (s.deviation) {
            ++flagged;
            return;
        }
        ++checked;
        if (!viol_contains(m, norm_set{"N", {before}}, norm_set{"R", {after}}).contained) ++failures;
    };
    for (const auto& x : xs)
        for (std::size_t i = 0; i < std::min(x.a.norms.size(), x.b.norms.size()); ++i) check(x.m, x.a.norms[i], x.b.norms[i]);
    for (int i = 0; i < 200; ++i) {
        auto m = gen.random_model(5);
        norm n = gen.random_norm("n");
        check(m, n, gen.single_edit(n));
    }
    o.require(failures == 0, std::to_string(failures) + " unsound RelaxationOrEquivalent verdicts");
    o.detail = std::to_string(checked) + " unflagged verdicts sound, " + std::to_string(flagged) + " deviation-flagged";
    if (!o.pass) o.detail = std::to_string(failures) + " unsound of " + std::to_string(checked);
    return o;
}

outcome criterion6() {
    outcome o;
    std::size_t counterexamples = 0;
    for (const auto& x : relaxations)
        for (std::uint64_t seed = 0; seed < 1000; ++seed) {
            path p = sample_lasso(x.m, seed);
            if (violates_path(x.b, x.m, p) && !violates_path(x.a, x.m, p)) ++counterexamples;
        }
    o.require(counterexamples == 0, std::to_string(counterexamples) + " counterexamples");
    o.require(!relaxations.empty(), "no relaxations to check");
    if (o.pass) o.detail = std::to_string(relaxations.size()) + " relaxations x 1000 lassos, 0 counterexamples";
    return o;
}

outcome criterion7() {
    outcome o;
    for (auto name : {"road", "noise", "noise_regimented"}) {
        auto sc = shipped_scenario(name);
        for (bool sup : {false, true}) {
            auto run = [&] { return sup ? supervise(sc) : run_episode(sc, sc.norms); };
            auto first = run(), second = run();
            o.require(render(first) == render(second), std::string(name) + " run log not byte-identical");
            std::vector<monitor_event> logged;
            for (const auto& r : first.records) logged.insert(logged.end(), r.events.begin(), r.events.end());
            o.require(replay_events(first) == logged, std::string(name) + " replay mismatch");
            o.require(replay_events(parse_run_log(render(first))) == logged, std::string(name) + " replay from text mismatch");
            if (sc.mode == enforcement::regimentation && first.summary.deadlocks == 0)
                o.require(first.summary.violations == 0, std::string(name) + " regimented run has violations");
        }
    }
    if (o.pass) o.detail = "3 scenarios x 2 modes byte-identical, replay exact, regimentation clean";
    return o;
}

bool monotone_windows(const run_log& log) {
    const auto& w = log.summary.window_scores;
    return !w.empty() && w.back() >= w.front();
}

outcome criterion8() {
    outcome o;
    auto road = supervise(shipped_scenario("road"));
    bool relaxed = std::any_of(road.decisions.begin(), road.decisions.end(), [](const revision_decision& d) {
        return d.adopted && d.verdict && d.verdict->relation == "Relaxation";
    });
    o.require(relaxed, "road: no relaxation adopted");
    o.require(monotone_windows(road), "road: final window below first");
    auto noise = supervise(shipped_scenario("noise"));
    bool strengthened = std::any_of(noise.decisions.begin(), noise.decisions.end(), [](const revision_decision& d) {
        return d.adopted && d.verdict && (d.verdict->relation == "Strengthening" || d.verdict->sanctions == "Increased");
    });
    o.require(strengthened, "noise: no strengthening or sanction increase adopted");
    o.require(monotone_windows(noise), "noise: final window below first");
    for (auto name : {"road", "noise", "noise_regimented"}) {
        auto got = cli_json({"--json", "simulate", shipped(std::string(name) + ".scenario.json"), "--supervise"});
        o.require(got == read_file(golden(std::string("simulate_") + name + ".json")), std::string("golden mismatch for ") + name);
    }
    if (o.pass) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "road relaxed (windows %.2f -> %.2f); noise strengthened (windows %.2f -> %.2f)",
                      road.summary.window_scores.front(), road.summary.window_scores.back(),
                      noise.summary.window_scores.front(), noise.summary.window_scores.back());
        o.detail = buf;
    }
    return o;
}

outcome criterion9() {
    outcome o;
    auto v = [](const char* n) { return formula::var(n); };
    const std::pair<const char*, formula> precedence[] = {
        {"a | b & c", formula::disj(v("a"), formula::conj(v("b"), v("c")))},
        {"!a & b", formula::conj(formula::negate(v("a")), v("b"))},
        {"a & b | c", formula::disj(formula::conj(v("a"), v("b")), v("c"))},
        {"(a | b) & c", formula::conj(formula::disj(v("a"), v("b")), v("c"))},
        {"!(a | b)", formula::negate(formula::disj(v("a"), v("b")))},
    };
    for (const auto& [text, f] : precedence) o.require(parse_formula(text) == f, std::string("precedence: ") + text);
    try {
        parse_formula("a &");
        o.require(false, "'a &' accepted");
    } catch (const parse_failure& e) {
        const auto& d = e.diagnostics().front();
        o.require(d.span.column == 4 && d.expected == "operand", "'a &' diagnostic");
    }

    generator gen(2026);
    std::size_t bad = 0;
    for (int i = 0; i < 500; ++i) {
        formula f = gen.random_formula(1 + gen.below(5));
        if (!(parse_formula(render(f)) == f)) ++bad;
        norm_set ns = gen.random_norm_set("N", 4, 3);
        if (!(parse_norms(render(ns), ns.id) == ns)) ++bad;
        auto m = gen.random_model(8);
        if (!(parse_model(render(m)) == m)) ++bad;
        path p = sample_lasso(m, static_cast<std::uint64_t>(i));
        if (!(parse_path(path_json(p).dump()) == p)) ++bad;
        scenario sc = random_full_scenario(gen);
        if (!(parse_scenario(render(sc)) == sc)) ++bad;
        scenario small = random_scenario(gen, 1 + gen.below(3));
        small.horizon = gen.below(9);
        small.window = std::max<std::size_t>(1, std::min<std::size_t>(1 + gen.below(4), small.horizon));
        small.theta_low = 1.0;
        small.theta_high = 1.0;
        small.pool = {{formula::var("a_{a}")}, {decimal::from_units(2)}};
        auto log = supervise(small);
        if (!(parse_run_log(render(log)) == log)) ++bad;
    }
    o.require(bad == 0, std::to_string(bad) + " round-trip mismatches");
    if (o.pass) o.detail = "5 precedence examples; 500 values x 6 formats round-trip";
    return o;
}

} // namespace

int main() {
    const auto xs = random_instances();
    const std::vector<std::pair<std::string, std::function<outcome()>>> criteria{
        {"shipped road revisions", criterion1},
        {"shipped noise revisions", criterion2},
        {"shipped narrow revisions", criterion3},
        {"oracle equivalence", [&] { return criterion4(xs); }},
        {"syntactic soundness", [&] { return criterion5(xs); }},
        {"monitor/classifier consistency", criterion6},
        {"determinism and replay", criterion7},
        {"supervision direction", criterion8},
        {"round trips and parser", criterion9},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::cout << (o.pass ? "[PASS]" : "[FAIL]") << " criterion " << i + 1 << " (" << criteria[i].first
                  << "): " << o.detail << "\n";
        if (!o.pass) ++failed;
    }
    return failed == 0 ? 0 : 1;
}
