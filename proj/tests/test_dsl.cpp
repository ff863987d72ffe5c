#include "normrev/dsl.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace normrev;
using namespace testing_support;

namespace {

formula v(const char* n) { return formula::var(n); }

std::vector<diagnostic> diagnostics_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const parse_failure& e) {
        return e.diagnostics();
    }
    return {};
}

bool mentions(const std::vector<diagnostic>& ds, const std::string& needle) {
    return std::any_of(ds.begin(), ds.end(), [&](const diagnostic& d) { return d.message().find(needle) != std::string::npos; });
}

} // namespace

TEST(FormulaSyntax, PrecedenceExamples) {
    EXPECT_EQ(parse_formula("a | b & c"), formula::disj(v("a"), formula::conj(v("b"), v("c"))));
    EXPECT_EQ(parse_formula("!a & b"), formula::conj(formula::negate(v("a")), v("b")));
    EXPECT_EQ(parse_formula("!(a & b)"), formula::negate(formula::conj(v("a"), v("b"))));
    EXPECT_EQ(parse_formula("a & b | c"), formula::disj(formula::conj(v("a"), v("b")), v("c")));
    EXPECT_EQ(parse_formula("a | b | c"), formula::disj(formula::disj(v("a"), v("b")), v("c")));
    EXPECT_EQ(parse_formula("(a | b) & c"), formula::conj(formula::disj(v("a"), v("b")), v("c")));
    EXPECT_EQ(parse_formula("!!a"), formula::negate(formula::negate(v("a"))));
    EXPECT_EQ(parse_formula("true & false"), formula::conj(formula::top(), formula::bottom()));
    EXPECT_EQ(parse_formula("  inRoad_{a}\t&\nx "), formula::conj(v("inRoad_{a}"), v("x")));
}

TEST(FormulaSyntax, RenderIsMinimal) {
    EXPECT_EQ(render(parse_formula("(a & b) | c")), "a & b | c");
    EXPECT_EQ(render(parse_formula("a & (b | c)")), "a & (b | c)");
    EXPECT_EQ(render(parse_formula("a | (b | c)")), "a | (b | c)");
    EXPECT_EQ(render(parse_formula("!(a)")), "!a");
}

TEST(FormulaSyntax, DanglingOperator) {
    auto ds = diagnostics_of([] { parse_formula("a &"); });
    ASSERT_EQ(ds.size(), 1u);
    EXPECT_EQ(ds[0].span.line, 1u);
    EXPECT_EQ(ds[0].span.column, 4u);
    EXPECT_EQ(ds[0].expected, "operand");
    EXPECT_EQ(ds[0].found, "end of input");
}

TEST(FormulaSyntax, Errors) {
    auto unclosed = diagnostics_of([] { parse_formula("(a | b"); });
    ASSERT_EQ(unclosed.size(), 1u);
    EXPECT_EQ(unclosed[0].expected, "')'");
    auto trailing = diagnostics_of([] { parse_formula("a b"); });
    ASSERT_EQ(trailing.size(), 1u);
    EXPECT_EQ(trailing[0].span.column, 3u);
    EXPECT_EQ(trailing[0].expected, "'&', '|' or end of input");
    EXPECT_FALSE(diagnostics_of([] { parse_formula("1kmFarAway"); }).empty());
    EXPECT_FALSE(diagnostics_of([] { parse_formula(""); }).empty());
    EXPECT_FALSE(diagnostics_of([] { parse_formula("a $ b"); }).empty());
}

TEST(NormSyntax, ParsesBlock) {
    auto ns = parse_norms("norm n1 { when: inRoad; forbid: speedAbove15; until: never; sanction: 10000; }", "N");
    ASSERT_EQ(ns.norms.size(), 1u);
    const norm& n = ns.norms[0];
    EXPECT_EQ(n.id, "n1");
    EXPECT_EQ(n.cond, v("inRoad"));
    EXPECT_EQ(n.kind, norm_kind::prohibition);
    EXPECT_EQ(n.target, v("speedAbove15"));
    EXPECT_FALSE(n.deadline.has_value());
    EXPECT_EQ(n.sanction, decimal::from_units(10000));
}

TEST(NormSyntax, FieldOrderAndDecimals) {
    auto ns = parse_norms("# format 1\nnorm o {\n sanction: 0.25;\n until: d | e;\n oblige: t;\n when: c;\n}\n", "N");
    ASSERT_EQ(ns.norms.size(), 1u);
    EXPECT_EQ(ns.norms[0].kind, norm_kind::obligation);
    EXPECT_EQ(ns.norms[0].deadline, formula::disj(v("d"), v("e")));
    EXPECT_EQ(ns.norms[0].sanction, decimal::from_raw(250000));
}

TEST(NormSyntax, DuplicateId) {
    const char* text = "norm n1 { when: a; forbid: b; until: never; sanction: 1; }\n"
                       "norm n1 { when: a; forbid: c; until: never; sanction: 1; }\n";
    auto ds = diagnostics_of([&] { parse_norms(text, "N"); });
    ASSERT_EQ(ds.size(), 1u);
    EXPECT_EQ(ds[0].text, "duplicate id n1");
    EXPECT_EQ(ds[0].span.line, 2u);
}

TEST(NormSyntax, RecoversAndReportsEveryDefect) {
    const char* text = "norm a { when: x &; forbid: y; until: never; sanction: 1; }\n"
                       "norm b { when: x; oblige: y; forbid: z; until: never; sanction: -2; }\n"
                       "norm c { when: x; forbid: y; colour: red; }\n"
                       "norm d { when: q; forbid: y; until: never; sanction: 1; }\n";
    atom_set vocab{"x", "y", "z"};
    auto ds = diagnostics_of([&] { parse_norms(text, "N", "f.norm", &vocab); });
    EXPECT_TRUE(mentions(ds, "f.norm:1:19: expected operand"));
    EXPECT_TRUE(mentions(ds, "exactly one of forbid/oblige"));
    EXPECT_TRUE(mentions(ds, "non-negative decimal sanction"));
    EXPECT_TRUE(mentions(ds, "unknown field 'colour'"));
    EXPECT_TRUE(mentions(ds, "missing field 'until' in norm c"));
    EXPECT_TRUE(mentions(ds, "unknown atom 'q' in norm d"));
    for (std::size_t i = 1; i < ds.size(); ++i)
        EXPECT_LE(std::pair(ds[i - 1].span.line, ds[i - 1].span.column), std::pair(ds[i].span.line, ds[i].span.column));
}

TEST(NormSyntax, FormatVersion) {
    EXPECT_NO_THROW(parse_norms("# format 1\n", "N"));
    auto ds = diagnostics_of([] { parse_norms("# format 2\nnorm n { when: a; forbid: b; until: never; sanction: 1; }", "N"); });
    EXPECT_TRUE(mentions(ds, "format"));
}

TEST(JsonSyntax, ErrorPositions) {
    auto ds = diagnostics_of([] { parse_model("{\n  \"states\": [\n    {\"id\": \"s0\",,}\n  ]\n}", "m.json"); });
    ASSERT_EQ(ds.size(), 1u);
    EXPECT_EQ(ds[0].span.file, "m.json");
    EXPECT_EQ(ds[0].span.line, 3u);
}

TEST(JsonSyntax, SchemaPointers) {
    auto ds = diagnostics_of([] {
        parse_model(R"({"format":1,"atoms":["a"],"states":[{"id":"s0","labels":["a"]},{"id":3}],"init":"s0",)"
                    R"("edges":[["s0","s0"]]})");
    });
    EXPECT_TRUE(mentions(ds, "/states/1/id"));
    auto fmt = diagnostics_of([] { parse_model(R"({"format":7,"atoms":[],"states":[],"init":"s0","edges":[]})"); });
    EXPECT_TRUE(mentions(fmt, "format"));
}

TEST(JsonSyntax, PathShapes) {
    EXPECT_EQ(parse_path(R"({"path":["a","b"]})"), path::finite({"a", "b"}));
    EXPECT_EQ(parse_path(R"({"stem":["a"],"cycle":["b","c"]})"), path::lasso({"a"}, {"b", "c"}));
    EXPECT_FALSE(diagnostics_of([] { parse_path(R"({"stem":["a"],"cycle":[]})"); }).empty());
    EXPECT_FALSE(diagnostics_of([] { parse_path(R"({"path":[1]})"); }).empty());
}

TEST(RoundTrip, Formulas) {
    generator gen(71, 4);
    for (int i = 0; i < 500; ++i) {
        formula f = gen.random_formula(1 + gen.below(5));
        const std::string text = render(f);
        ASSERT_EQ(parse_formula(text), f) << text;
        ASSERT_EQ(render(parse_formula(text)), text);
    }
}

TEST(RoundTrip, NormSets) {
    generator gen(72);
    for (int i = 0; i < 500; ++i) {
        norm_set ns = gen.random_norm_set("N" + std::to_string(i), 4, 3);
        const std::string text = render(ns);
        ASSERT_EQ(parse_norms(text, ns.id), ns) << text;
    }
}

TEST(RoundTrip, Models) {
    generator gen(73);
    for (int i = 0; i < 500; ++i) {
        auto m = gen.random_model(8);
        if (gen.coin(0.2)) m.edges.erase(m.edges.begin()); // totality is not a format property
        const std::string text = render(m);
        ASSERT_EQ(parse_model(text), m) << text;
    }
}

TEST(RoundTrip, Paths) {
    generator gen(74);
    for (int i = 0; i < 500; ++i) {
        auto m = gen.random_model();
        path p = gen.coin() ? sample_lasso(m, static_cast<std::uint64_t>(i)) : sample_path(m, 1 + gen.below(6), i);
        ASSERT_EQ(parse_path(path_json(p).dump()), p);
    }
}

TEST(RoundTrip, Scenarios) {
    generator gen(75);
    for (int i = 0; i < 500; ++i) {
        scenario sc = random_full_scenario(gen);
        const std::string text = render(sc);
        auto back = parse_scenario(text);
        ASSERT_EQ(back, sc) << text;
        ASSERT_EQ(render(back), text);
    }
}

TEST(RoundTrip, RunLogs) {
    generator gen(76);
    for (int i = 0; i < 500; ++i) {
        scenario sc = random_scenario(gen, 1 + gen.below(3));
        sc.horizon = gen.below(9);
        sc.window = 1 + gen.below(4);
        if (sc.window > sc.horizon && sc.horizon > 0) sc.window = sc.horizon;
        sc.theta_low = gen.coin() ? 1.0 : 0.0;
        sc.theta_high = 1.0;
        sc.pool = {{formula::var("a_{a}"), formula::var("b_{a}")}, {decimal::from_units(2)}};
        auto log = supervise(sc);
        const std::string text = render(log);
        auto back = parse_run_log(text);
        ASSERT_EQ(back, log) << text;
        ASSERT_EQ(render(back), text);
    }
}

TEST(Shipped, FilesRoundTrip) {
    for (auto name : {"n1", "r1", "r2", "r3", "s1", "n2", "r5", "r6", "s2", "n3", "r8", "r9"}) {
        auto ns = shipped_norms(name);
        EXPECT_EQ(parse_norms(render(ns), name), ns) << name;
    }
    for (auto name : {"road", "noise", "narrow"}) {
        auto m = shipped_model(name);
        EXPECT_EQ(parse_model(render(m)), m) << name;
    }
    for (auto name : {"road", "noise", "noise_regimented"}) {
        auto sc = shipped_scenario(name);
        EXPECT_EQ(parse_scenario(render(sc)), sc) << name;
    }
}

TEST(Shipped, ScenarioTimeScale) {
    auto sc = shipped_scenario("road");
    ASSERT_EQ(sc.objectives.size(), 1u);
    EXPECT_EQ(sc.objectives[0].k, 7u);
}
