#pragma once

#include <vector>

#include "wkb/input.hpp"
#include "wkb/numkit.hpp"

namespace wkb {

// complex number stored as its logarithm; zero is tracked separately
struct LogC {
    cplx lg{0.0, 0.0};
    bool zero = true;

    static LogC of(cplx v);
    static LogC from_log(cplx lg) { return {lg, false}; }
    cplx value() const { return zero ? cplx(0.0) : std::exp(lg); }
    double log_abs() const;
    LogC operator*(const LogC& o) const;
    LogC operator+(const LogC& o) const;
    LogC operator-() const;
};

struct StokesPair {
    CMat S_plus;

    int n() const { return int(S_plus.rows()); }
    CMat S_minus() const { return S_plus.adjoint(); }
    CMat S() const { return S_plus.adjoint() * S_plus; }
};

// upper-triangular entries in log form; entry(i,j) with i <= j, 0-based
struct LogStokes {
    int n = 0;
    std::vector<LogC> entries;

    explicit LogStokes(int size = 0) : n(size), entries(size_t(size) * size) {}
    LogC& at(int i, int j) { return entries[size_t(i) * n + j]; }
    const LogC& at(int i, int j) const { return entries[size_t(i) * n + j]; }
    StokesPair exponentiate() const;
};

// d(k,i): k = 1..n, i = 1..k
struct MinorTable {
    int n = 0;
    std::vector<cplx> values;

    explicit MinorTable(int size = 0) : n(size), values(size_t(size) * size) {}
    cplx& d(int k, int i) { return values[size_t(k - 1) * n + (i - 1)]; }
    cplx d(int k, int i) const { return values[size_t(k - 1) * n + (i - 1)]; }
};

struct LogMinorTable {
    int n = 0;
    std::vector<LogC> values;

    explicit LogMinorTable(int size = 0) : n(size), values(size_t(size) * size) {}
    LogC& d(int k, int i) { return values[size_t(k - 1) * n + (i - 1)]; }
    const LogC& d(int k, int i) const { return values[size_t(k - 1) * n + (i - 1)]; }
};

StokesPair stokes_n2_exact(const HermitianInput& in);
LogC stokes_n2_offdiag_log(double du, const CMat& A, double eps);

// (S+reg)_{k,k+1} at u_cat(t), k = 1..n-1
cplx stokes_cat_superdiag(const CMat& A, double t, double eps, int k);
LogC stokes_cat_superdiag_log(const CMat& A, double t, double eps, int k);

struct CatN3Parts {
    LogC s23_first, s23_second;
    LogC s13_first, s13_second;
    LogC delta32_simplified;
};

LogStokes stokes_cat_n3_log(const CMat& A, double t, double eps, CatN3Parts* parts = nullptr);
StokesPair stokes_cat_n3(const CMat& A, double t, double eps);

// generalized minor: rows 1..i, columns k-i+1..k
cplx minor(const CMat& S_plus, int k, int i);
MinorTable minors(const StokesPair& S);

// all minors at u_cat(t) in log form (n = 2 or 3); Delta^(3)_2 uses the cancellation-free form
LogMinorTable caterpillar_minors_log(const CMat& A, double t, double eps);

StokesPair regularize(const StokesPair& S, const std::vector<double>& u, double eps);

// logs of ascending eigenvalues of S^(k), k = 1..n
std::vector<std::vector<double>> gt_eigs_of_S(const StokesPair& S);

struct GammaAsym {
    cplx exact;
    cplx expansion;
    double residual = 0.0;
};
GammaAsym gamma_asym(double r, double eps);

struct WkbSweep {
    std::vector<double> eps;  // strictly decreasing
    std::vector<LogMinorTable> tables;
};

struct WkbFit {
    double leading = 0.0;  // coefficient of 1/eps in log|X|
    double error = 0.0;    // one standard error
    double next = 0.0;     // eps-independent term
    double rms = 0.0;
};

struct WkbBreakdown : NumError {
    using NumError::NumError;
};

// fits eps*log|X| = leading + next*eps
WkbFit wkb_fit(const std::vector<double>& eps, const std::vector<double>& log_abs);
WkbFit wkb_fit(const WkbSweep& sweep, int k, int i);

// halving grid starting at eps_max
std::vector<double> halving_grid(double eps_max, int count);

// rhombus inequalities on l(k,i) tables (k = 1..n, i = 1..k); returns violated (k,i,family) with margins
struct RhombusViolation {
    int k, i, family;
    double margin;
};
using LTable = std::vector<std::vector<double>>;  // l[k-1][i-1]
std::vector<RhombusViolation> rhombus_violations(const LTable& l, double strict_margin = 0.0);

// exact caterpillar exponents 1/2 sum of the top i corner eigenvalues
LTable caterpillar_exponents(const CMat& A);

}  // namespace wkb
