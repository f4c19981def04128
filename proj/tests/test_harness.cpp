#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "fixtures.hpp"
#include "wkb/curve.hpp"
#include "wkb/harness.hpp"

using namespace wkb;

TEST_CASE("caterpillar parameters materialize to increasing u") {
    CaterpillarParams p{2.0, {3.0, 10.0}};
    auto u = p.u();
    REQUIRE(u.size() == 4);
    CHECK(u[0] == 0.0);
    CHECK(u[1] == 2.0);
    CHECK(u[2] == doctest::Approx(8.0));
    CHECK(u[3] == doctest::Approx(68.0));
    CHECK_THROWS_AS((CaterpillarParams{0.0, {}}).validate(), ConfigError);
    CHECK_THROWS_AS((CaterpillarParams{1.0, {1.0}}).validate(), ConfigError);
    CHECK_THROWS_AS((CaterpillarParams{1.0, {0.5}}).u(), ConfigError);
}

TEST_CASE("Herm0 sampler is deterministic and stays in the regime") {
    Herm0Sampler a(7), b(7), c(8);
    for (int q = 0; q < 10; ++q) {
        HermitianInput x = a.next(), y = b.next(), z = c.next();
        CHECK((x.A - y.A).norm() == 0.0);
        CHECK(x.u == y.u);
        CHECK((x.A - z.A).norm() > 0.0);
        CHECK(in_herm0(x.A));
        CHECK(genericity_check(x.A).generic);
        double d = (x.u[2] - x.u[1]) / (x.u[1] - x.u[0]);
        CHECK(d >= 8.0);
        CHECK(d <= 64.0);
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j) CHECK(std::abs(x.A(i, j)) <= 0.3);
    }
}

TEST_CASE("Herm0 membership and the gap-scaled grid") {
    CHECK(in_herm0(fixtures::a3()));
    CHECK_FALSE(in_herm0(CMat::Identity(3, 3)));
    CMat D = CMat::Zero(2, 2);
    D(1, 1) = 1.0;
    CHECK_FALSE(in_herm0(D));
    CHECK(interlacing_gap(D) == doctest::Approx(0.0));
    auto g = gap_scaled_grid(fixtures::a3());
    REQUIRE(g.size() == 4);
    CHECK(g[0] == doctest::Approx(0.2 * interlacing_gap(fixtures::a3())));
    CHECK(g[3] == doctest::Approx(g[0] / 8));
    CHECK_THROWS_AS(gap_scaled_grid(D), NumError);
}

TEST_CASE("n=2 slopes match half periods of the distinguished cycles") {
    auto rows = check_mainconj(fixtures::n2(), halving_grid(0.2, 5));
    REQUIRE(rows.size() == 3);
    const double l2 = 1 + std::sqrt(2.0);
    for (auto& r : rows) {
        CHECK(r.pass);
        if (r.k == 2 && r.i == 1) CHECK(r.predicted == doctest::Approx(l2 / 2).epsilon(1e-9));
        if (r.k == 2 && r.i == 2) CHECK(r.predicted == doctest::Approx(1.0).epsilon(1e-9));
        if (r.k == 1) CHECK(std::abs(r.fitted) < 1e-10);
    }
    // tightening the slope tolerance below the O(eps) bias must fail the off-diagonal minor
    Tolerances strict;
    strict.slope = 1e-6;
    bool any_fail = false;
    for (auto& r : check_mainconj(fixtures::n2(), halving_grid(0.2, 5), strict)) any_fail |= !r.pass;
    CHECK(any_fail);
}

TEST_CASE("check_mainconj rejects inputs outside Herm0") {
    HermitianInput in = fixtures::n2();
    in.A(0, 1) = in.A(1, 0) = 0.0;
    CHECK_THROWS_AS(check_mainconj(in, halving_grid(0.2, 5)), NumError);
    HermitianInput d3{{0.0, 1.0, 100.0}, CMat::Zero(3, 3), 0.5};
    d3.A(1, 1) = 1.0;
    d3.A(2, 2) = 2.0;
    CHECK_THROWS_AS(check_mainconj(d3, halving_grid(0.2, 4)), NumError);
}

TEST_CASE("rhombus report flags equality and interlacing failures") {
    CHECK(check_rhombus(caterpillar_exponents(fixtures::a3())).strict());
    CMat A = CMat::Zero(3, 3);
    A(0, 0) = 1.0;
    A(1, 1) = 2.0;
    A(2, 2) = 3.0;
    A(1, 2) = A(2, 1) = 0.4;
    CHECK_FALSE(check_rhombus(caterpillar_exponents(A)).strict());

    XiTable xi;
    xi.n = 2;
    xi.xi = {{1.0, 2.0}, {1.0, 3.0}};
    RhombusReport r = check_rhombus(caterpillar_exponents(fixtures::a2()), &xi);
    CHECK(r.rhombus.empty());
    CHECK(r.interlacing.size() == 1);
    xi.xi = {{1.0, 2.0}, {0.5, 3.0}};
    CHECK(check_rhombus(caterpillar_exponents(fixtures::a2()), &xi).strict());
}

TEST_CASE("finite-difference KKS brackets reproduce the SU(2)* brackets") {
    for (double eps : {0.5, 0.3}) {
        PoissonResult p = poisson_check_n2({0.0, 1.0}, eps, fixtures::a2());
        CHECK(p.residual <= 1e-4);
        CHECK(p.residual_conj <= 1e-4);
        CHECK(p.step > 0);
    }
    // the bracket carries the 1/eps factor: rescaling eps changes lhs and rhs together
    PoissonResult a = poisson_check_n2({0.0, 1.0}, 0.5, fixtures::a2()), b = poisson_check_n2({0.0, 1.0}, 0.25, fixtures::a2());
    CHECK(std::abs(a.lhs / a.rhs - b.lhs / b.rhs) < 1e-4);
    // complex coupling and a trace that needs shifting
    CMat A(2, 2);
    A << 0.7, cplx(0.3, -0.4), cplx(0.3, 0.4), 1.9;
    PoissonResult c = poisson_check_n2({0.0, 2.0}, 0.4, A);
    CHECK(c.residual <= 1e-4);
    CHECK(c.residual_conj <= 1e-4);
    // a coarse fixed step leaves visible truncation error
    PoissonResult coarse = poisson_check_n2({0.0, 1.0}, 0.3, fixtures::a2(), 0.4);
    CHECK(coarse.residual > 100 * poisson_check_n2({0.0, 1.0}, 0.3, fixtures::a2()).residual);
}

TEST_CASE("caterpillar sweep shrinks toward corner eigenvalue sums") {
    std::vector<CaterpillarParams> grid = {{1.0, {2.0}}, {1.0, {10.0}}, {1.0, {100.0}}, {1.0, {1000.0}}};
    auto rows = caterpillar_sweep(grid, fixtures::a3());
    REQUIRE(rows.size() == 4 * 5);
    RVec l2 = corner_eigs(fixtures::a3(), 2);
    double prev = 1e9, prev_xi = 1e9;
    for (auto& r : rows) {
        CHECK(r.failure.empty());
        if (r.k == 2 && r.i == 1) {
            CHECK(r.target == doctest::Approx(-l2(1)));
            CHECK(r.error < prev);
            prev = r.error;
            double e = std::abs(r.xi[1] - l2(1));
            CHECK(e < prev_xi);
            prev_xi = e;
        }
    }
    CHECK(prev < 0.05 * l2(1));
    // xi depends on t only through the n=2 isomorphism: rescaling t leaves it unchanged
    auto a = caterpillar_sweep({{1.0, {50.0}}}, fixtures::a3()), b = caterpillar_sweep({{3.0, {50.0}}}, fixtures::a3());
    for (size_t q = 0; q < a.size(); ++q)
        if (a[q].k == 2)
            for (int i = 0; i < 2; ++i) CHECK(std::abs(a[q].xi[size_t(i)] - b[q].xi[size_t(i)]) < 1e-7);
    // strong coupling and a small ratio: the cut families overlap and the point is reported, not dropped
    CMat strong(3, 3);
    strong << 0, 1, 1, 1, 0.1, 1, 1, 1, 0.2;
    auto bad = caterpillar_sweep({{1.0, {1.2}}}, strong);
    REQUIRE(bad.size() == 5);
    CHECK(bad.front().failure.find("overlap") != std::string::npos);
}

TEST_CASE("scenarios: empty checks pass, schema errors are reported") {
    Scenario s;
    s.name = "nothing";
    Report r = run_scenario(s);
    CHECK(r.pass());
    CHECK(r.checks.empty());
    CHECK(r.to_json()["pass"] == true);

    nlohmann::json j = {{"schema", "wkb.scenario/1"}, {"name", "x"}, {"checks", {"mainconj"}}};
    CHECK(scenario_from_json(j).checks.size() == 1);
    auto bad = j;
    bad["checks"] = {"nope"};
    CHECK_THROWS_AS(scenario_from_json(bad), ConfigError);
    bad = j;
    bad["schema"] = "wkb.scenario/2";
    CHECK_THROWS_AS(scenario_from_json(bad), ConfigError);
    bad = j;
    bad["extra"] = 1;
    CHECK_THROWS_AS(scenario_from_json(bad), ConfigError);
    bad = j;
    bad["inputs"] = {{{"u", {1.0, 0.0}}, {"A", {{0, 1}, {1, 2}}}}};
    CHECK_THROWS_AS(scenario_from_json(bad), ConfigError);
    bad = j;
    bad["inputs"] = {{{"u", {0.0, 1.0}}, {"A", {{0, 1}, {2, 2}}}}};
    CHECK_THROWS_AS(scenario_from_json(bad), ConfigError);
    bad = j;
    bad["caterpillar"] = {{{"t", 1.0}, {"d", {0.5}}}};
    CHECK_THROWS_AS(scenario_from_json(bad), ConfigError);
    bad = j;
    bad["tolerances"] = {{"slope", -1}};
    CHECK_THROWS_AS(scenario_from_json(bad), ConfigError);
}

TEST_CASE("scenario JSON round trip") {
    for (auto& name : builtin_names()) {
        Scenario s = builtin_scenario(name);
        Scenario t = scenario_from_json(to_json(s));
        CHECK(to_json(t) == to_json(s));
        CHECK(t.inputs.size() == s.inputs.size());
    }
    CMat A(2, 2);
    A << 1, cplx(0, 2), cplx(0, -2), 3;
    HermitianInput in{{0.0, 1.5}, A, 0.25};
    HermitianInput back = input_from_json(to_json(in));
    CHECK((back.A - A).norm() == 0.0);
    CHECK(back.eps == 0.25);
    CHECK_THROWS_AS(builtin_scenario("missing"), ConfigError);
}

TEST_CASE("builtin scenarios pass and write artifacts; reports are reproducible") {
    auto dir = std::filesystem::temp_directory_path() / "wkb_harness_test";
    std::filesystem::remove_all(dir);
    Report r = run_scenario(builtin_scenario("n2-exact-vs-ode"), dir.string());
    CHECK(r.pass());
    CHECK(r.checks.size() == 4);
    CHECK(std::filesystem::exists(dir / "report.json"));
    CHECK(std::filesystem::exists(dir / "mainconj.csv"));
    Report m = run_scenario(builtin_scenario("mainconj-caterpillar-n3"));
    CHECK(m.pass());

    Scenario s;
    s.name = "anchors";
    s.samples = 5;
    s.seed = 3;
    s.checks = {"period-anchors", "inequalities"};
    nlohmann::json a = run_scenario(s).to_json(), b = run_scenario(s).to_json();
    CHECK(a.dump() == b.dump());
    CHECK(a["pass"] == true);
    std::filesystem::remove_all(dir);
}
