#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "wkb/curve.hpp"

using namespace wkb;

namespace {

HermitianInput n3_example(double u3 = 1.0) { return {{0.0, 0.25, u3}, fixtures::a3(), 0.5}; }

CMat diag3() {
    CMat d = CMat::Zero(3, 3);
    d(0, 0) = 0.0;
    d(1, 1) = 3.0;
    d(2, 2) = 4.0;
    return d;
}

// contour integral of mu over a counterclockwise circle, sheet chosen on the positive real axis
cplx circle_integral(const CurveModel& m, cplx c, double r, int sheet, const std::vector<cplx>& nu0) {
    Segment arc = Segment::arc(c, r, 0.0, 2 * kPi);
    TrackedSegment tr = track_segment(m, arc, nu0);
    CHECK(std::abs(tr.nu.back()[sheet] - nu0[sheet]) < 1e-8 * (1 + std::abs(nu0[sheet])));
    auto g = [&](double s) { return kI * tr.at(m, s)[sheet] * arc.deriv(s); };
    return integrate_unit(g, 1e-11).value;
}

}  // namespace

TEST_CASE("n=2 branch points and cut") {
    CurveModel m = build_curve(fixtures::n2());
    REQUIRE(m.branch_points.size() == 2);
    cplx want(-1 / kPi, 1 / kPi);
    bool hit_up = false, hit_down = false;
    for (auto& b : m.branch_points) {
        hit_up |= std::abs(b.z - want) < 1e-12;
        hit_down |= std::abs(b.z - std::conj(want)) < 1e-12;
        CHECK(b.i == 0);
        CHECK(b.j == 1);
    }
    CHECK(hit_up);
    CHECK(hit_down);
    REQUIRE(m.cuts.size() == 1);
    CHECK(m.cuts[0].family == 2);
    CHECK(std::abs(m.cuts[0].re() + 1 / kPi) < 1e-12);

    // the quadratic mu^2 - i(u1+u2+(t1+t2)/2piz) mu - ... at the cut midpoint
    auto nu = SheetTracker(m).roots(cplx(-1 / kPi, 0));
    CHECK(std::abs(nu[0] - nu[1]) > 0.5);
}

TEST_CASE("n=2 branch points collapse as the coupling vanishes") {
    double prev = 1e9;
    for (double a : {0.3, 0.1, 0.03, 0.01}) {
        HermitianInput in = fixtures::n2();
        in.A(0, 1) = in.A(1, 0) = a;
        CurveModel m = build_curve(in);
        double d = 0;
        for (auto& b : m.branch_points) d = std::max(d, std::abs(b.z + 1 / kPi));
        CHECK(d < prev);
        prev = d;
    }
    CHECK(prev < 0.01);
}

TEST_CASE("diagonal A: nodes at z_ij and explicit sheets") {
    HermitianInput in{{0.0, 0.25, 1.0}, diag3(), 0.5};
    CurveModel m = build_curve(in);
    REQUIRE(m.cuts.size() == 3);
    for (auto& c : m.cuts) {
        cplx want = diagonal_node(in.t(c.i), in.t(c.j), in.u[c.i], in.u[c.j]);
        CHECK(std::abs(c.upper - want) < 1e-6 * std::abs(want));
        CHECK(std::abs(c.upper - c.lower) < 1e-6);
    }
    for (cplx z : {cplx(0.3, 0.7), cplx(-2.0, 0.1), cplx(-0.5, -0.4), cplx(5.0, 0.0)}) {
        auto mu = sheets_at(m, z);
        for (int i = 0; i < 3; ++i) CHECK(std::abs(mu[i] - kI * (in.u[i] + in.t(i) / (2 * kPi * z))) < 1e-10);
    }
    auto far = sheets_at(m, cplx(1e6, 1e5));
    for (int i = 0; i < 3; ++i) CHECK(std::abs(far[i] - kI * in.u[i]) < 1e-5);
}

TEST_CASE("sheet reality symmetry and product of sheets") {
    CurveModel m = build_curve(n3_example());
    CHECK(m.branch_points.size() == 6);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(-3, 3);
    int checked = 0;
    while (checked < 100) {
        cplx z(U(rng), U(rng));
        bool near = std::abs(z) < 0.05;
        for (auto& b : m.branch_points) near |= std::abs(z - b.z) < 0.02;
        for (auto& c : m.cuts) near |= std::abs(z.real() - c.re()) < 1e-3;
        if (near) continue;
        auto a = sheets_at(m, z), b = sheets_at(m, std::conj(z));
        for (int i = 0; i < 3; ++i) CHECK(std::abs(b[i] + std::conj(a[i])) < 1e-8 * (1 + std::abs(a[i])));
        CMat H = CMat::Zero(3, 3);
        for (int i = 0; i < 3; ++i) H(i, i) = kI * m.input.u[i];
        H += m.input.A / (2 * kPi * kI * z) * -1.0;
        cplx det = H.determinant();
        cplx prod = a[0] * a[1] * a[2];
        CHECK(std::abs(prod - det) < 1e-10 * std::max(1.0, std::abs(det)));
        ++checked;
    }
    for (auto& b : m.branch_points) CHECK(std::abs(b.z.imag()) > 1e-3);
}

TEST_CASE("puncture residues") {
    CurveModel m = build_curve(fixtures::n2());
    PunctureResidues r = puncture_residues(m);
    const cplx c = 2 * kPi * kI;
    CHECK(std::abs(r.at_zero[0] + (1 - std::sqrt(2.0)) / c) < 1e-14);
    CHECK(std::abs(r.at_zero[1] + (1 + std::sqrt(2.0)) / c) < 1e-14);
    CHECK(std::abs(r.at_infinity[1] - 2.0 / c) < 1e-14);
    cplx total = 0;
    for (int i = 0; i < 2; ++i) total += r.at_zero[i] + r.at_infinity[i];
    CHECK(std::abs(total) < 1e-14);

    // contour integrals: ccw circle around 0 gives 2 pi i times the residue at 0, and minus that for infinity
    for (double rr : {0.05, 10.0}) {
        auto nu0 = SheetTracker(m).global(rr);
        for (int i = 0; i < 2; ++i) {
            cplx got = circle_integral(m, 0.0, rr, i, nu0);
            cplx want = rr < 1 ? c * r.at_zero[i] : -c * r.at_infinity[i];
            CHECK(std::abs(got - want) < 1e-9);
        }
    }
    HermitianInput bad = fixtures::n2();
    bad.A = CMat::Identity(2, 2);
    CHECK_THROWS_AS(puncture_residues(build_curve(bad)), NumError);
}

TEST_CASE("loop around a node cut: second-order splitting") {
    // i times the difference of the two sheet periods around the short cut B_12, against 2i|A_12|^2/(t_1 - t_2)
    std::vector<double> ratio;
    std::vector<double> deltas = {0.04, 0.02, 0.01};
    for (double d : deltas) {
        HermitianInput in{{0.0, 1.0}, fixtures::a2(), 0.5};
        in.A(0, 1) = in.A(1, 0) = d;
        CurveModel m = build_curve(in);
        cplx z12 = diagonal_node(0.0, 2.0, 0.0, 1.0);
        double r = 0.5 * std::abs(z12);
        auto nu0 = SheetTracker(m).global(z12 + r);
        cplx p = kI * (circle_integral(m, z12, r, 0, nu0) - circle_integral(m, z12, r, 1, nu0));
        cplx want = 2.0 * kI * d * d / (0.0 - 2.0);
        ratio.push_back(std::abs(p - want) / std::abs(want));
    }
    // the relative deviation is a higher-order term: it shrinks at least linearly as delta halves
    CHECK(ratio[2] < 0.6 * ratio[1]);
    CHECK(ratio[1] < 0.6 * ratio[0]);
    CHECK(ratio[2] < 1e-2);
    MESSAGE("relative deviations ", ratio[0], " ", ratio[1], " ", ratio[2]);
}

TEST_CASE("cut ordering near the caterpillar line") {
    CurveModel m = build_curve(n3_example(100.0));
    CHECK(m.lambda_ratio == doctest::Approx(4.0));
    CHECK(m.ordering_hypothesis);
    REQUIRE(m.cuts.size() == 3);
    CHECK(m.cuts[0].family == 2);
    CHECK((m.cuts[0].i == 0 && m.cuts[0].j == 1));
    CHECK((m.cuts[1].i == 0 && m.cuts[1].j == 2));
    CHECK((m.cuts[2].i == 1 && m.cuts[2].j == 2));
    CHECK(m.cuts[0].re() < m.cuts[1].re());
    CHECK(m.cuts[1].re() < m.cuts[2].re());
    for (auto& c : m.cuts) CHECK(c.re() < 0);
    CHECK_FALSE(build_curve(n3_example(1.0)).ordering_hypothesis);
}

TEST_CASE("caterpillar components and genericity") {
    CMat A = fixtures::a3();
    CaterpillarComponent c3 = caterpillar_component(A, 3);
    RVec l3 = herm_eigs(A);
    const cplx tpi = 2 * kPi * kI;
    for (int j = 0; j < 3; ++j) CHECK(std::abs(c3.residues_zero[j] + l3(j) / tpi) < 1e-14);
    CHECK(c3.branch_points.size() == 4);
    CHECK(c3.generic);

    CaterpillarComponent c2 = caterpillar_component(A, 2);
    RVec l2 = corner_eigs(A, 2);
    CHECK(std::abs(c2.residues_zero[0] + l2(0) / tpi) < 1e-14);
    CHECK(std::abs(c2.residues_infinity[0] - 0.0) < 1e-14);
    CHECK(std::abs(c2.residues_infinity[1] - 3.0 / tpi) < 1e-14);

    CaterpillarComponent cd = caterpillar_component(diag3(), 3);
    CHECK(std::abs(cd.residues_zero[2] + 4.0 / tpi) < 1e-14);
    CHECK_FALSE(cd.generic);

    CHECK(genericity_check(A).generic);
    CHECK_FALSE(genericity_check(diag3()).generic);
    CHECK(genericity_check(fixtures::a2()).generic);
    CHECK_THROWS_AS(caterpillar_component(A, 4), NumError);
}

TEST_CASE("curve JSON document") {
    auto j = to_json(build_curve(fixtures::n2()));
    CHECK(j["schema"] == "wkb.curve/1");
    CHECK(j["cuts"].size() == 1);
    CHECK(j["cuts"][0]["pair"][1] == 2);
    CHECK(j["residues"]["zero"].size() == 2);
}
