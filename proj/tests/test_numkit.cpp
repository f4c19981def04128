#include <doctest.h>

#include <cmath>
#include <random>

#include "wkb/numkit.hpp"

using namespace wkb;

TEST_CASE("log_gamma at simple points") {
    CHECK(std::abs(log_gamma(1.0)) < 1e-14);
    CHECK(std::abs(log_gamma(2.0)) < 1e-14);
    CHECK(std::abs(log_gamma(0.5) - 0.5 * std::log(kPi)) < 1e-14);
    // |Gamma(1+iy)|^2 = pi y / sinh(pi y)
    double y = 2.0;
    double lhs = 2.0 * log_gamma(cplx(1.0, y)).real();
    CHECK(std::abs(lhs - std::log(kPi * y / std::sinh(kPi * y))) < 1e-12);
    CHECK(std::abs(log_gamma(11.0) - std::log(3628800.0)) < 1e-12);
}

TEST_CASE("log_gamma rejects poles") {
    CHECK_THROWS_AS(log_gamma(0.0), NumError);
    CHECK_THROWS_AS(log_gamma(-3.0), NumError);
    CHECK_NOTHROW(log_gamma(-2.5));
}

TEST_CASE("log_gamma recurrence on a grid of the cut plane") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> re(-40.0, 40.0), im(-40.0, 40.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        cplx z(re(rng), im(rng));
        if (std::abs(z.imag()) < 1e-3) z += cplx(0.0, 0.5);
        cplx d = log_gamma(z + 1.0) - log_gamma(z) - std::log(z);
        worst = std::max(worst, std::abs(d));
    }
    CHECK(worst <= 1e-11);
}

TEST_CASE("log_gamma reflection and duplication") {
    for (cplx z : {cplx(0.3, 0.7), cplx(-2.4, 0.3), cplx(4.2, -3.1), cplx(-0.6, -12.0)}) {
        cplx refl = std::exp(log_gamma(z) + log_gamma(1.0 - z)) * std::sin(kPi * z);
        CHECK(std::abs(refl - kPi) < 1e-10 * kPi);
        cplx dup = log_gamma(z) + log_gamma(z + 0.5) - log_gamma(2.0 * z);
        cplx want = 0.5 * std::log(4.0 * kPi) - 2.0 * z * std::log(2.0);
        cplx diff = std::exp(dup - want);
        CHECK(std::abs(diff - 1.0) < 1e-11);
    }
}

TEST_CASE("log_gamma is continuous across Re z = 1/2") {
    for (double y : {-25.0, -3.0, 0.2, 5.0, 30.0}) {
        cplx a = log_gamma(cplx(0.5 - 1e-9, y)), b = log_gamma(cplx(0.5 + 1e-9, y));
        CHECK(std::abs(a - b) < 1e-7);
    }
    for (double x : {-3.3, -0.2, 0.4}) {
        cplx a = log_gamma(cplx(x, 20.0 - 1e-9)), b = log_gamma(cplx(x, 20.0 + 1e-9));
        CHECK(std::abs(a - b) < 1e-7);
    }
}

TEST_CASE("herm_eigs examples") {
    CMat d = CMat::Zero(3, 3);
    d(0, 0) = 3;
    d(1, 1) = -1;
    d(2, 2) = 7;
    RVec e = herm_eigs(d);
    CHECK(e(0) == doctest::Approx(-1));
    CHECK(e(1) == doctest::Approx(3));
    CHECK(e(2) == doctest::Approx(7));

    CMat m(2, 2);
    m << 0, 1, 1, 2;
    e = herm_eigs(m);
    CHECK(std::abs(e(0) - (1 - std::sqrt(2.0))) < 1e-14);
    CHECK(std::abs(e(1) - (1 + std::sqrt(2.0))) < 1e-14);

    m << 0, 1.0 / 6, 1.0 / 6, 3;
    e = herm_eigs(m);
    double r = std::sqrt(9 + 1.0 / 9);
    CHECK(std::abs(e(0) - (3 - r) / 2) < 1e-14);
    CHECK(std::abs(e(1) - (3 + r) / 2) < 1e-14);
}

TEST_CASE("herm_eigs rejects non-Hermitian input") {
    CMat m(2, 2);
    m << 0, 1, 2, 0;
    CHECK_THROWS_AS(herm_eigs(m), NumError);
}

TEST_CASE("herm_eigs residuals, ordering and trace on random matrices") {
    std::mt19937 rng(3);
    std::normal_distribution<double> g;
    for (int n = 1; n <= 12; ++n) {
        CMat x(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) x(i, j) = cplx(g(rng), g(rng));
        CMat m = x + x.adjoint();
        auto r = herm_eig_full(m);
        double nm = m.norm();
        for (int i = 0; i < n; ++i) {
            CHECK((m * r.vectors.col(i) - r.values(i) * r.vectors.col(i)).norm() <= 1e-12 * nm);
            if (i > 0) CHECK(r.values(i - 1) <= r.values(i));
        }
        CHECK(std::abs(r.values.sum() - m.trace().real()) <= 1e-12 * nm);
    }
}

TEST_CASE("poly_roots examples") {
    auto r = poly_roots({1.0, 0.0, 1.0});
    REQUIRE(r.size() == 2);
    bool plus = std::abs(r[0] - kI) < 1e-14 || std::abs(r[1] - kI) < 1e-14;
    bool minus = std::abs(r[0] + kI) < 1e-14 || std::abs(r[1] + kI) < 1e-14;
    CHECK(plus);
    CHECK(minus);
    cplx c(0.3, -2.0);
    auto one = poly_roots({-c, 1.0});
    CHECK(std::abs(one[0] - c) < 1e-15);
    CHECK_THROWS_AS(poly_roots({1.0, 2.0, 0.0}), NumError);
}

TEST_CASE("poly_roots residuals and symmetric functions") {
    std::mt19937 rng(11);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 20; ++trial) {
        int d = 2 + trial % 11;
        std::vector<cplx> c(d + 1);
        for (auto& x : c) x = cplx(g(rng), g(rng));
        auto roots = poly_roots(c);
        REQUIRE(int(roots.size()) == d);
        for (auto z : roots) CHECK(std::abs(poly_eval(c, z)) <= 1e-10 * poly_scale(c, z));
        // rebuild the monic polynomial from the roots
        std::vector<cplx> p{1.0};
        for (auto z : roots) {
            std::vector<cplx> q(p.size() + 1, 0.0);
            for (size_t k = 0; k < p.size(); ++k) {
                q[k + 1] += p[k];
                q[k] -= z * p[k];
            }
            p = q;
        }
        double ref = 0.0;
        for (auto x : c) ref = std::max(ref, std::abs(x / c.back()));
        for (int k = 0; k <= d; ++k) CHECK(std::abs(p[k] - c[k] / c.back()) <= 1e-9 * ref);
    }
}

TEST_CASE("poly_roots reports clustered multiplicities") {
    // (z-1)^2 (z+2)
    auto r = poly_roots({2.0, -3.0, 0.0, 1.0});
    auto m = root_multiplicities(r, 1e-6);
    std::sort(m.begin(), m.end());
    REQUIRE(m.size() == 2);
    CHECK(m[0] == 1);
    CHECK(m[1] == 2);
}

TEST_CASE("integrate_path residues") {
    PathSpec circle({Segment::arc(0.0, 1.0, 0.0, 2 * kPi)});
    auto a = integrate_path([](cplx z) { return 1.0 / z; }, circle, 1e-12);
    CHECK(std::abs(a.value - 2.0 * kPi * kI) < 1e-12);
    auto b = integrate_path([](cplx z) { return z; }, circle, 1e-12);
    CHECK(std::abs(b.value) < 1e-12);
    PathSpec big({Segment::arc(0.0, 2.0, 0.0, 2 * kPi)});
    auto c = integrate_path([](cplx z) { return 1.0 / (z - 1.0); }, big, 1e-11);
    CHECK(std::abs(c.value - 2.0 * kPi * kI) < 1e-11);
}

TEST_CASE("integrate_path is additive under concatenation") {
    auto f = [](cplx z) { return std::exp(z) / (z - cplx(0.2, 3.0)); };
    Segment s1 = Segment::line(0.0, cplx(1.0, 1.0));
    Segment s2 = Segment::arc(0.0, std::sqrt(2.0), kPi / 4, kPi);
    double tol = 1e-11;
    auto whole = integrate_path(f, PathSpec({s1, s2}), tol);
    auto p1 = integrate_path(f, PathSpec({s1}), tol);
    auto p2 = integrate_path(f, PathSpec({s2}), tol);
    CHECK(std::abs(whole.value - p1.value - p2.value) <= 3 * tol);
}

TEST_CASE("ode_propagate scalar and commuting cases") {
    cplx c(0.3, 1.7);
    CMat f0 = CMat::Identity(1, 1);
    double len = 2.5;
    PathSpec line({Segment::line(1.0, 1.0 + len)});
    CMat f = ode_propagate([&](cplx) -> CMat { return CMat::Constant(1, 1, c); }, line, f0, 1e-11);
    CHECK(std::abs(f(0, 0) - std::exp(c * len)) < 1e-9 * std::abs(std::exp(c * len)));

    // diagonal field d/z around the unit circle picks up exp(2 pi i d)
    CVec dvals(2);
    dvals << cplx(0.4, 0.1), cplx(-1.2, 0.0);
    PathSpec loop({Segment::arc(0.0, 1.0, 0.0, 2 * kPi)});
    CMat g = ode_propagate([&](cplx z) -> CMat { return CMat(dvals.asDiagonal()) / z; }, loop, CMat::Identity(2, 2), 1e-11);
    for (int i = 0; i < 2; ++i) CHECK(std::abs(g(i, i) - std::exp(2.0 * kPi * kI * dvals(i))) < 1e-8);
    CHECK(std::abs(g(0, 1)) < 1e-12);
}

TEST_CASE("ode_propagate satisfies the Abel identity and composes") {
    CMat b(2, 2);
    b << cplx(0.1, 0.2), cplx(0.5, -0.3), cplx(-0.7, 0.1), cplx(0.2, 0.0);
    CMat u = CMat::Zero(2, 2);
    u(1, 1) = kI;
    auto rhs = [&](cplx z) -> CMat { return u + b / z; };
    PathSpec loop({Segment::arc(0.0, 1.0, 0.0, 2 * kPi)});
    double tol = 1e-10;
    CMat f0 = CMat::Identity(2, 2);
    CMat f = ode_propagate(rhs, loop, f0, tol);
    cplx want = std::exp(2.0 * kPi * kI * b.trace());  // the u part integrates to zero around the loop
    CHECK(std::abs(f.determinant() / f0.determinant() - want) < 1e-8 * std::abs(want));

    PathSpec p({Segment::line(1.0, cplx(1.0, 1.0))}), q({Segment::arc(0.0, std::sqrt(2.0), kPi / 4, kPi)});
    PathSpec pq({p.segments[0], q.segments[0]});
    CMat stepwise = ode_propagate(rhs, q, ode_propagate(rhs, p, f0, tol), tol);
    CMat direct = ode_propagate(rhs, pq, f0, tol);
    CHECK((stepwise - direct).norm() <= 10 * tol * std::max(1.0, direct.norm()));
}
