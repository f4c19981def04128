#include "wkb/stokes.hpp"

#include <cmath>
#include <limits>

namespace wkb {

LogC LogC::of(cplx v) {
    if (v == 0.0) return {};
    return {std::log(v), false};
}

double LogC::log_abs() const { return zero ? -std::numeric_limits<double>::infinity() : lg.real(); }

LogC LogC::operator*(const LogC& o) const {
    if (zero || o.zero) return {};
    return {lg + o.lg, false};
}

LogC LogC::operator+(const LogC& o) const {
    if (zero) return o;
    if (o.zero) return *this;
    const LogC& big = lg.real() >= o.lg.real() ? *this : o;
    const LogC& small = lg.real() >= o.lg.real() ? o : *this;
    cplx s = 1.0 + std::exp(small.lg - big.lg);
    if (s == 0.0) return {};
    return {big.lg + std::log(s), false};
}

LogC LogC::operator-() const {
    if (zero) return *this;
    return {lg + cplx(0.0, kPi), false};
}

StokesPair LogStokes::exponentiate() const {
    StokesPair s{CMat::Zero(n, n)};
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) s.S_plus(i, j) = at(i, j).value();
    return s;
}

namespace {

cplx twopi_i_eps(double eps) { return cplx(0.0, 2.0 * kPi * eps); }

void guard_pole(cplx arg) {
    if (std::abs(arg) < 1e-6) throw NumError("stokes: parameters within the Gamma pole guard band");
}

// log Gamma(x/c) with the pole guard
cplx lg_ratio(double x, cplx c) {
    cplx z = x / c;
    guard_pole(z);
    return log_gamma(z);
}

cplx lg_one_plus(double x, cplx c) { return log_gamma(1.0 + x / c); }

void require_strict_interlacing(const RVec& lo, const RVec& hi) {
    // lo has size k, hi has size k+1
    double scale = std::max(1.0, hi.cwiseAbs().maxCoeff());
    for (Eigen::Index j = 0; j < lo.size(); ++j)
        if (!(hi(j) < lo(j) - 1e-12 * scale && lo(j) < hi(j + 1) - 1e-12 * scale))
            throw NumError("stokes: interlacing of corner eigenvalues is not strict");
}

}  // namespace

LogC stokes_n2_offdiag_log(double du, const CMat& A, double eps) {
    cplx a = A(0, 1);
    if (a == 0.0) return {};
    const cplx c = twopi_i_eps(eps);
    const double t1 = A(0, 0).real(), t2 = A(1, 1).real();
    RVec lam = herm_eigs(A.topLeftCorner(2, 2));
    cplx lg = std::log(a / eps) + (t1 + t2) / (4.0 * eps) + ((t2 - t1) / c) * std::log(du / eps) -
              lg_one_plus(lam(0) - t1, c) - lg_one_plus(lam(1) - t1, c);
    return LogC::from_log(lg);
}

StokesPair stokes_n2_exact(const HermitianInput& in) {
    in.validate();
    if (in.n() != 2) throw NumError("stokes_n2_exact: n must be 2");
    StokesPair s{CMat::Zero(2, 2)};
    s.S_plus(0, 0) = std::exp(in.t(0) / (2.0 * in.eps));
    s.S_plus(1, 1) = std::exp(in.t(1) / (2.0 * in.eps));
    s.S_plus(0, 1) = stokes_n2_offdiag_log(in.u[1] - in.u[0], in.A, in.eps).value();
    return s;
}

LogC stokes_cat_superdiag_log(const CMat& A, double t, double eps, int k) {
    const int n = int(A.rows());
    if (k < 1 || k >= n) throw NumError("stokes_cat_superdiag: k out of range");
    if (!(t > 0) || !(eps > 0)) throw NumError("stokes_cat_superdiag: t and eps must be positive");
    const cplx c = twopi_i_eps(eps);
    RVec lk = corner_eigs(A, k), lk1 = corner_eigs(A, k + 1);
    RVec lkm1 = k > 1 ? corner_eigs(A, k - 1) : RVec();
    const double akk = A(k - 1, k - 1).real(), ak1 = A(k, k).real();
    cplx pre = std::log(cplx(0.0, 2.0 * kPi)) + ((ak1 - akk) / c) * std::log(t / eps) + (akk + ak1) / (4.0 * eps);

    LogC sum;
    for (int i = 0; i < k; ++i) {
        const double li = lk(i);
        CMat m = (A - li * CMat::Identity(n, n)) / c;
        CMat sub(k, k);
        for (int r = 0; r < k; ++r) {
            for (int col = 0; col < k - 1; ++col) sub(r, col) = m(r, col);
            sub(r, k - 1) = m(r, k);
        }
        cplx det = sub.determinant();
        if (det == 0.0) continue;
        cplx lg = std::log(det);
        for (int l = 0; l < k; ++l) {
            if (l == i) continue;
            lg += lg_one_plus(lk(l) - li, c) + lg_ratio(lk(l) - li, c);
        }
        for (int l = 0; l < k + 1; ++l) lg -= lg_one_plus(lk1(l) - li, c);
        for (int l = 0; l < k - 1; ++l) lg -= lg_one_plus(lkm1(l) - li, c);
        sum = sum + LogC::from_log(lg);
    }
    if (sum.zero) return sum;
    return LogC::from_log(pre) * sum;
}

cplx stokes_cat_superdiag(const CMat& A, double t, double eps, int k) {
    return stokes_cat_superdiag_log(A, t, eps, k).value();
}

LogStokes stokes_cat_n3_log(const CMat& A, double t, double eps, CatN3Parts* parts) {
    if (A.rows() != 3 || A.cols() != 3) throw NumError("stokes_cat_n3: A must be 3 x 3");
    if ((A - A.adjoint()).norm() > 1e-12 * std::max(1.0, A.norm())) throw NumError("stokes_cat_n3: A must be Hermitian");
    if (!(t > 0) || !(eps > 0)) throw NumError("stokes_cat_n3: t and eps must be positive");
    const cplx c = twopi_i_eps(eps);
    const double t1 = A(0, 0).real(), t2 = A(1, 1).real(), t3 = A(2, 2).real();
    const double l1 = t1;
    RVec l2 = corner_eigs(A, 2), l3 = corner_eigs(A, 3);
    RVec l1v(1);
    l1v << l1;
    require_strict_interlacing(l1v, l2);
    require_strict_interlacing(l2, l3);

    LogStokes out(3);
    out.at(0, 0) = LogC::from_log(t1 / (2.0 * eps));
    out.at(1, 1) = LogC::from_log(t2 / (2.0 * eps));
    out.at(2, 2) = LogC::from_log(t3 / (2.0 * eps));
    out.at(0, 1) = stokes_n2_offdiag_log(t, A.topLeftCorner(2, 2), eps);

    const cplx log2pii = std::log(cplx(0.0, 2.0 * kPi));
    const cplx a12 = A(0, 1);
    LogC s23[2], s13[2], d32[2];
    for (int i = 0; i < 2; ++i) {
        const double li = l2(i), lo = l2(1 - i);
        CMat m = (A - li * CMat::Identity(3, 3)) / c;
        cplx minor13 = m(0, 0) * m(1, 2) - m(0, 2) * m(1, 0);
        if (minor13 == 0.0) continue;
        cplx common = lg_one_plus(lo - li, c) + lg_ratio(lo - li, c) + std::log(minor13);
        for (int j = 0; j < 3; ++j) common -= lg_one_plus(l3(j) - li, c);
        s23[i] = LogC::from_log(log2pii + ((t3 - t2) / c) * std::log(t / eps) + (t2 + t3) / (4.0 * eps) + common -
                                lg_one_plus(l1 - li, c));
        if (a12 == 0.0) continue;
        cplx tail = common - lg_one_plus(lo - l1, c) + std::log(a12 / (l1 - li)) + log2pii +
                    ((t3 - t1) / c) * std::log(t / eps);
        s13[i] = -LogC::from_log(tail + (-l1 + 2.0 * li + t3) / (4.0 * eps));
        d32[i] = LogC::from_log(tail + (3.0 * t1 + 2.0 * t2 + t3 - 2.0 * li) / (4.0 * eps));
    }
    out.at(1, 2) = s23[0] + s23[1];
    out.at(0, 2) = s13[0] + s13[1];
    if (parts) {
        parts->s23_first = s23[0];
        parts->s23_second = s23[1];
        parts->s13_first = s13[0];
        parts->s13_second = s13[1];
        parts->delta32_simplified = d32[0] + d32[1];
    }
    return out;
}

StokesPair stokes_cat_n3(const CMat& A, double t, double eps) { return stokes_cat_n3_log(A, t, eps).exponentiate(); }

cplx minor(const CMat& S_plus, int k, int i) {
    if (k < 1 || k > S_plus.rows() || i < 1 || i > k) throw NumError("minor: index out of range");
    return S_plus.block(0, k - i, i, i).determinant();
}

MinorTable minors(const StokesPair& S) {
    MinorTable t(S.n());
    for (int k = 1; k <= S.n(); ++k)
        for (int i = 1; i <= k; ++i) t.d(k, i) = minor(S.S_plus, k, i);
    return t;
}

LogMinorTable caterpillar_minors_log(const CMat& A, double t, double eps) {
    const int n = int(A.rows());
    LogMinorTable out(n);
    if (n == 2) {
        out.d(1, 1) = LogC::from_log(A(0, 0).real() / (2.0 * eps));
        out.d(2, 1) = stokes_n2_offdiag_log(t, A, eps);
        out.d(2, 2) = LogC::from_log((A(0, 0).real() + A(1, 1).real()) / (2.0 * eps));
        return out;
    }
    if (n != 3) throw NumError("caterpillar_minors_log: n must be 2 or 3");
    CatN3Parts parts;
    LogStokes s = stokes_cat_n3_log(A, t, eps, &parts);
    out.d(1, 1) = s.at(0, 0);
    out.d(2, 1) = s.at(0, 1);
    out.d(2, 2) = s.at(0, 0) * s.at(1, 1);
    out.d(3, 1) = s.at(0, 2);
    out.d(3, 2) = parts.delta32_simplified;
    out.d(3, 3) = s.at(0, 0) * s.at(1, 1) * s.at(2, 2);
    return out;
}

StokesPair regularize(const StokesPair& S, const std::vector<double>& u, double eps) {
    const int n = S.n();
    if (int(u.size()) != n) throw NumError("regularize: size mismatch");
    for (int i = 1; i < n; ++i)
        if (!(u[i] > u[i - 1])) throw NumError("regularize: u must be strictly increasing");
    CMat V = CMat::Identity(n, n);
    for (int k = 2; k <= n - 1; ++k) {
        CMat dk = CMat::Zero(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if ((i < k && j < k) || i == j) dk(i, j) = S.S_plus(i, j);
        CMat P = dk.adjoint() * dk;
        P = 0.5 * (P + P.adjoint());
        auto e = herm_eig_full(P);
        double logx = std::log((u[k - 1] - u[k - 2]) / (u[k] - u[k - 1]));
        CVec phase(n);
        for (int j = 0; j < n; ++j) {
            if (!(e.values(j) > 0)) throw NumError("regularize: block is not positive definite");
            phase(j) = std::exp(logx * std::log(e.values(j)) / twopi_i_eps(eps));
        }
        V = V * (e.vectors * phase.asDiagonal() * e.vectors.adjoint());
    }
    CMat Sreg = V * S.S() * V.adjoint();
    Sreg = 0.5 * (Sreg + Sreg.adjoint());
    Eigen::LLT<CMat> llt(Sreg);
    if (llt.info() != Eigen::Success) throw NumError("regularize: factorization failed");
    CMat L = llt.matrixL();
    return StokesPair{L.adjoint()};
}

std::vector<std::vector<double>> gt_eigs_of_S(const StokesPair& S) {
    CMat full = S.S();
    full = 0.5 * (full + full.adjoint());
    std::vector<std::vector<double>> out;
    for (int k = 1; k <= S.n(); ++k) {
        RVec ev = herm_eigs(full.topLeftCorner(k, k));
        std::vector<double> row;
        for (Eigen::Index j = 0; j < ev.size(); ++j) {
            if (!(ev(j) > 0)) throw NumError("gt_eigs_of_S: non-positive eigenvalue");
            row.push_back(std::log(ev(j)));
        }
        out.push_back(row);
    }
    return out;
}

GammaAsym gamma_asym(double r, double eps) {
    if (r == 0.0 || !(eps > 0)) throw NumError("gamma_asym: need r != 0 and eps > 0");
    const cplx w = r / twopi_i_eps(eps);
    GammaAsym g;
    g.exact = log_gamma(1.0 + w);
    g.expansion = -w * std::log(eps) + w * std::log(std::abs(r) / (2.0 * kPi)) - std::abs(r) / (4.0 * eps) - w +
                  0.5 * std::log(r / cplx(0.0, eps));
    g.residual = std::abs(g.exact - g.expansion);
    return g;
}

WkbFit wkb_fit(const std::vector<double>& eps, const std::vector<double>& log_abs) {
    const size_t m = eps.size();
    if (m < 4 || log_abs.size() != m) throw NumError("wkb_fit: need at least 4 grid points");
    for (size_t j = 1; j < m; ++j)
        if (!(eps[j] < eps[j - 1])) throw NumError("wkb_fit: grid must be strictly decreasing");
    Eigen::MatrixXd X(m, 2);
    Eigen::VectorXd y(m);
    for (size_t j = 0; j < m; ++j) {
        if (!std::isfinite(log_abs[j])) throw WkbBreakdown("wkb_fit: zero or non-finite value on the grid");
        X(j, 0) = 1.0;
        X(j, 1) = eps[j];
        y(j) = eps[j] * log_abs[j];
    }
    Eigen::Matrix2d xtx = X.transpose() * X;
    Eigen::Vector2d coef = xtx.ldlt().solve(X.transpose() * y);
    Eigen::VectorXd res = y - X * coef;
    double rss = res.squaredNorm();
    WkbFit f;
    f.leading = coef(0);
    f.next = coef(1);
    f.rms = std::sqrt(rss / double(m));
    double sigma2 = rss / double(m - 2);
    f.error = std::sqrt(std::max(0.0, sigma2 * xtx.inverse()(0, 0)));
    return f;
}

WkbFit wkb_fit(const WkbSweep& sweep, int k, int i) {
    if (sweep.tables.size() != sweep.eps.size()) throw NumError("wkb_fit: sweep tables do not match the grid");
    std::vector<double> vals;
    for (const auto& t : sweep.tables) vals.push_back(t.d(k, i).log_abs());
    return wkb_fit(sweep.eps, vals);
}

std::vector<double> halving_grid(double eps_max, int count) {
    std::vector<double> g;
    for (int j = 0; j < count; ++j) g.push_back(eps_max * std::ldexp(1.0, -j));
    return g;
}

std::vector<RhombusViolation> rhombus_violations(const LTable& l, double strict_margin) {
    auto L = [&](int k, int i) { return i == 0 ? 0.0 : l[size_t(k - 1)][size_t(i - 1)]; };
    std::vector<RhombusViolation> out;
    const int n = int(l.size());
    for (int k = 1; k < n; ++k) {
        for (int i = 1; i <= k; ++i) {
            double first = L(k + 1, i) + L(k, i - 1) - L(k + 1, i - 1) - L(k, i);
            double second = L(k + 1, i) + L(k, i) - L(k + 1, i + 1) - L(k, i - 1);
            if (first <= strict_margin) out.push_back({k, i, 1, first});
            if (second <= strict_margin) out.push_back({k, i, 2, second});
        }
    }
    return out;
}

LTable caterpillar_exponents(const CMat& A) {
    const int n = int(A.rows());
    LTable l(n);
    for (int k = 1; k <= n; ++k) {
        RVec ev = corner_eigs(A, k);
        double acc = 0.0;
        for (int i = 1; i <= k; ++i) {
            acc += ev(k - i);
            l[k - 1].push_back(0.5 * acc);
        }
    }
    return l;
}

}  // namespace wkb
