#include <doctest.h>

#include <chrono>
#include <cmath>

#include "fixtures.hpp"
#include "wkb/odeflow.hpp"

using namespace wkb;

TEST_CASE("canonical frame for A = 0 is the pure exponential") {
    HermitianInput in{{0.0, 1.0}, CMat::Zero(2, 2), 0.5};
    PolarPoint p{0.7, -1.1};
    CMat f = canonical_frame(in, Sector::Plus, 0.0, p).frame;
    for (int k = 0; k < 2; ++k) CHECK(std::abs(f(k, k) - std::exp(kI * in.u[k] * p.z() / in.eps)) < 1e-8);
    CHECK(std::abs(f(0, 1)) < 1e-10);
}

TEST_CASE("canonical frame for diagonal A carries z^{-t/(2 pi i eps)}") {
    CMat A = CMat::Zero(2, 2);
    A(0, 0) = 0.7;
    A(1, 1) = -0.4;
    HermitianInput in{{0.0, 1.0}, A, 0.5};
    for (Sector s : {Sector::Plus, Sector::Minus}) {
        PolarPoint p{0.8, s == Sector::Plus ? -0.6 : -2.4};
        CMat f = canonical_frame(in, s, 0.0, p).frame;
        cplx logz(std::log(p.r), p.arg);
        for (int k = 0; k < 2; ++k) {
            cplx want = std::exp(kI * in.u[k] * p.z() / in.eps - in.t(k) / (2.0 * kPi * kI * in.eps) * logz);
            CHECK(std::abs(f(k, k) - want) < 1e-8 * std::abs(want));
        }
    }
}

TEST_CASE("canonical frame is stable under anchor doubling") {
    HermitianInput in = fixtures::n2();
    PolarPoint p{0.5, -kPi / 2};
    CMat a = canonical_frame(in, Sector::Plus, 40.0, p).frame;
    CMat b = canonical_frame(in, Sector::Plus, 80.0, p).frame;
    CHECK((a - b).norm() < 1e-6 * a.norm());
    CHECK_THROWS_AS(canonical_frame(in, Sector::Plus, 0.0, {1.0, 2.0}), NumError);
}

TEST_CASE("numerical Stokes matrices for A = 0 are the identity") {
    HermitianInput in{{0.0, 1.0, 2.5}, CMat::Zero(3, 3), 0.5};
    StokesPair s = stokes_numeric(in);
    CHECK((s.S_plus - CMat::Identity(3, 3)).norm() < 1e-8);
}

TEST_CASE("numerical Stokes matrices match the n=2 closed form") {
    for (double eps : {0.5, 0.3}) {
        HermitianInput in = fixtures::n2(eps);
        StokesReport r = stokes_numeric_report(in);
        StokesPair exact = stokes_n2_exact(in);
        for (int i = 0; i < 2; ++i)
            for (int j = i; j < 2; ++j) {
                cplx e = exact.S_plus(i, j);
                CHECK(std::abs(r.pair.S_plus(i, j) - e) <= 1e-5 * std::abs(e));
            }
        CHECK(r.off_triangle <= 1e-6);
        CHECK(r.duality <= 1e-6);
        for (int i = 0; i < 2; ++i)
            CHECK(std::abs(r.pair.S_plus(i, i) - std::exp(in.t(i) / (2 * eps))) <= 1e-6 * std::abs(r.pair.S_plus(i, i)));
    }
}

TEST_CASE("Stokes matrices do not depend on the matching point") {
    HermitianInput in{{0.0, 1.0, 2.2}, fixtures::a3() * 0.4, 0.5};
    StokesOptions o;
    CMat ref;
    for (double phi : {-kPi / 2, -kPi / 3, -5 * kPi / 12}) {
        o.match_arg = phi;
        StokesReport r = stokes_numeric_report(in, o);
        CHECK(r.off_triangle < 1e-6);
        CHECK(r.duality < 1e-6);
        if (ref.size() == 0) ref = r.pair.S_plus;
        else CHECK((r.pair.S_plus - ref).norm() < 1e-6 * ref.norm());
    }
}

TEST_CASE("monodromy around the origin") {
    HermitianInput zero{{0.0, 1.0}, CMat::Zero(2, 2), 0.5};
    CHECK((monodromy0(zero) - CMat::Identity(2, 2)).norm() < 1e-9);

    CMat A = CMat::Zero(2, 2);
    A(0, 0) = 0.6;
    A(1, 1) = -0.3;
    HermitianInput diag{{0.0, 1.0}, A, 0.5};
    CMat m = monodromy0(diag);
    for (int k = 0; k < 2; ++k) CHECK(std::abs(m(k, k) - std::exp(-A(k, k).real() / 0.5)) < 1e-8);

    HermitianInput in = fixtures::n2();
    cplx det = monodromy0(in).determinant();
    double want = std::exp(-in.A.trace().real() / in.eps);
    CHECK(std::abs(det - want) < 1e-8 * want);
}

TEST_CASE("regularized numerical pair approaches the caterpillar formula") {
    CMat A = fixtures::a3();
    const double eps = 0.5;
    StokesPair limit = stokes_cat_n3(A, 1.0, eps);
    double prev = 1e300, first = 0.0;
    for (double d : {4.0, 16.0, 64.0}) {
        HermitianInput in{{0.0, 1.0, 1.0 + d}, A, eps};
        StokesPair reg = regularize(stokes_numeric(in), in.u, eps);
        double err = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = i; j < 3; ++j)
                err = std::max(err, std::abs(std::abs(reg.S_plus(i, j)) - std::abs(limit.S_plus(i, j))) /
                                        std::abs(limit.S_plus(i, j)));
        MESSAGE("d=" << d << " modulus error " << err);
        CHECK(err < prev);
        if (first == 0.0) first = err;
        prev = err;
    }
    CHECK(prev < 0.5 * first);
}
