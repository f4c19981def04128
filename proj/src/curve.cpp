#include "wkb/curve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace wkb {

namespace {

CMat sheet_matrix(const std::vector<double>& u, const CMat& A, cplx s) {
    const int n = int(u.size());
    CMat H = A * (s / (2.0 * kPi));
    for (int i = 0; i < n; ++i) H(i, i) += u[i];
    return H;
}

// zero of discriminant(s) at s = 0 coming from repeated entries of u
int zero_order_at_origin(const std::vector<double>& u) {
    double scale = 0.0;
    for (double x : u) scale = std::max(scale, std::abs(x));
    std::vector<double> s = u;
    std::sort(s.begin(), s.end());
    int order = 0;
    for (size_t a = 0; a < s.size();) {
        size_t b = a;
        while (b + 1 < s.size() && std::abs(s[b + 1] - s[a]) <= 1e-14 * std::max(1.0, scale)) ++b;
        int c = int(b - a + 1);
        order += c * (c - 1);
        a = b + 1;
    }
    return order;
}

cplx disc_at(const std::vector<double>& u, const CMat& A, cplx s, int m0) {
    cplx d = discriminant(charpoly(sheet_matrix(u, A, s)));
    return m0 == 0 ? d : d / std::pow(s, m0);
}

double min_pair_distance(const std::vector<cplx>& v) {
    double g = std::numeric_limits<double>::infinity();
    for (size_t a = 0; a < v.size(); ++a)
        for (size_t b = a + 1; b < v.size(); ++b) g = std::min(g, std::abs(v[a] - v[b]));
    return g;
}

double dist_to_branch(const CurveModel& m, cplx z) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& b : m.branch_points) d = std::min(d, std::abs(z - b.z));
    return d;
}

std::vector<cplx> sorted_real_sheets(const CurveModel& m, double x) {
    RVec ev = herm_eigs(sheet_matrix(m.input.u, m.input.A, 1.0 / x));
    std::vector<cplx> out(ev.size());
    for (Eigen::Index i = 0; i < ev.size(); ++i) out[i] = ev(i);
    return out;
}

}  // namespace

std::vector<cplx> charpoly(const CMat& M) {
    const int n = int(M.rows());
    std::vector<cplx> c(n + 1);
    c[n] = 1.0;
    CMat Mk = CMat::Zero(n, n);
    const CMat I = CMat::Identity(n, n);
    for (int k = 1; k <= n; ++k) {
        Mk = M * Mk + c[n - k + 1] * I;
        c[n - k] = -(M * Mk).trace() / double(k);
    }
    return c;
}

cplx discriminant(const std::vector<cplx>& p) {
    const int n = int(p.size()) - 1;
    if (n <= 1) return 1.0;
    std::vector<cplx> dp(n);
    for (int k = 1; k <= n; ++k) dp[k - 1] = double(k) * p[k];
    const int N = 2 * n - 1;
    CMat S = CMat::Zero(N, N);
    for (int r = 0; r < n - 1; ++r)
        for (int k = 0; k <= n; ++k) S(r, r + k) = p[n - k];
    for (int r = 0; r < n; ++r)
        for (int k = 0; k <= n - 1; ++k) S(n - 1 + r, r + k) = dp[n - 1 - k];
    cplx det = S.partialPivLu().determinant();
    return ((n * (n - 1) / 2) % 2 ? -det : det) / p[n];
}

std::vector<cplx> discriminant_zeros(const std::vector<double>& u, const CMat& A) {
    const int n = int(u.size());
    const int D = n * (n - 1);
    const int m0 = zero_order_at_origin(u);
    int deg = D - m0;
    if (deg <= 0) return {};
    const int N = 2 * D + 8;

    auto coefficients = [&](double rho) {
        std::vector<cplx> vals(N);
        for (int k = 0; k < N; ++k) vals[k] = disc_at(u, A, std::polar(rho, 2.0 * kPi * k / N), m0);
        std::vector<cplx> b(deg + 1);
        for (int m = 0; m <= deg; ++m) {
            cplx acc = 0.0;
            for (int k = 0; k < N; ++k) acc += vals[k] * std::polar(1.0, -2.0 * kPi * double(k) * m / N);
            b[m] = acc / double(N);
        }
        return b;
    };

    double rho = 1.0;
    std::vector<cplx> b;
    for (int pass = 0; pass < 3; ++pass) {
        b = coefficients(rho);
        double top = 0.0;
        for (auto& x : b) top = std::max(top, std::abs(x));
        if (top == 0.0 || !std::isfinite(top)) throw NumError("discriminant_zeros: discriminant vanishes identically");
        int d = deg;
        while (d > 0 && std::abs(b[d]) < 1e-11 * top) --d;
        if (d == 0 || std::abs(b[0]) < 1e-300) break;
        double next = rho * std::pow(std::abs(b[0]) / std::abs(b[d]), 1.0 / d);
        if (std::abs(std::log(next / rho)) < 0.05) break;
        rho = next;
    }
    double top = 0.0;
    for (auto& x : b) top = std::max(top, std::abs(x));
    while (deg > 0 && std::abs(b[deg]) < 1e-11 * top) --deg;  // those roots sit at z = 0
    if (deg == 0) return {};
    b.resize(deg + 1);

    std::vector<cplx> s = poly_roots(b);
    for (auto& r : s) {
        r *= rho;
        cplx f = disc_at(u, A, r, m0);
        for (int it = 0; it < 40; ++it) {
            double h = 1e-6 * std::abs(r);
            cplx df = (disc_at(u, A, r + h, m0) - disc_at(u, A, r - h, m0)) / (2.0 * h);
            if (df == 0.0) break;
            cplx next = r - f / df;
            cplx fn = disc_at(u, A, next, m0);
            if (!(std::abs(fn) < std::abs(f))) break;
            bool done = std::abs(next - r) < 1e-15 * std::abs(r);
            r = next;
            f = fn;
            if (done) break;
        }
    }
    std::vector<cplx> z;
    for (auto& r : s) z.push_back(1.0 / r);
    return z;
}

std::vector<cplx> sheet_roots(const std::vector<double>& u, const CMat& A, cplx z) {
    Eigen::ComplexEigenSolver<CMat> es(sheet_matrix(u, A, 1.0 / z), false);
    const auto& ev = es.eigenvalues();
    return std::vector<cplx>(ev.data(), ev.data() + ev.size());
}

std::vector<cplx> match_roots(const std::vector<cplx>& prev, const std::vector<cplx>& roots) {
    const size_t n = prev.size();
    const double radius = min_pair_distance(prev) / 3.0;
    std::vector<cplx> out(n);
    std::vector<bool> used(n, false);
    for (size_t i = 0; i < n; ++i) {
        size_t best = n;
        double bd = std::numeric_limits<double>::infinity();
        for (size_t k = 0; k < n; ++k) {
            double d = std::abs(roots[k] - prev[i]);
            if (d < bd) {
                bd = d;
                best = k;
            }
        }
        if (best == n || used[best] || !(bd < radius)) return {};
        used[best] = true;
        out[i] = roots[best];
    }
    return out;
}

std::vector<cplx> SheetTracker::roots(cplx z) const { return sheet_roots(model_.input.u, model_.input.A, z); }

std::vector<cplx> SheetTracker::continue_segment(const Segment& seg, double s0, double s1, std::vector<cplx> nu,
                                                 TrackedSegment* record) const {
    double s = s0;
    const double hmax = std::abs(s1 - s0) / 32.0;
    double h = (s1 - s0) / 32.0;
    const double len = std::max(seg.length(), 1e-300);
    while (s != s1) {
        double limit = 0.5 * dist_to_branch(model_, seg.at(s)) / len;
        if (std::abs(h) > limit) h = std::copysign(limit, h);
        if (std::abs(h) < 1e-14) throw NumError("sheets: continuation ambiguous near a branch point");
        double sn = (s1 - s) / h < 1.0 + 1e-12 ? s1 : s + h;
        auto next = match_roots(nu, roots(seg.at(sn)));
        if (next.empty()) {
            h *= 0.5;
            continue;
        }
        nu = std::move(next);
        s = sn;
        if (record) {
            record->s.push_back(s);
            record->nu.push_back(nu);
        }
        h = std::copysign(std::min(2.0 * std::abs(h), hmax), h);
    }
    return nu;
}

std::vector<cplx> SheetTracker::continue_line(cplx from, const std::vector<cplx>& nu, cplx to) const {
    if (from == to) return nu;
    return continue_segment(Segment::line(from, to), 0.0, 1.0, nu);
}

std::vector<cplx> SheetTracker::global(cplx z) const {
    if (z == 0.0) throw NumError("sheets: z = 0 is a puncture");
    if (z.imag() == 0.0 && z.real() > 0) return sorted_real_sheets(model_, z.real());
    const double R0 = std::max(model_.anchor_radius, std::abs(z));
    auto nu = sorted_real_sheets(model_, R0);
    const double sgn = z.imag() < 0 ? -1.0 : 1.0;
    if (std::abs(z) >= R0) {
        double th = std::arg(z);
        if (z.imag() == 0.0) th = kPi;
        return continue_segment(Segment::arc(0.0, R0, 0.0, th), 0.0, 1.0, nu);
    }
    cplx q(z.real(), sgn * std::sqrt(R0 * R0 - z.real() * z.real()));
    nu = continue_segment(Segment::arc(0.0, R0, 0.0, std::arg(q)), 0.0, 1.0, nu);
    return continue_line(q, nu, z);
}

std::vector<cplx> TrackedSegment::at(const CurveModel& m, double sv) const {
    auto it = std::upper_bound(s.begin(), s.end(), sv);
    size_t k = it == s.begin() ? 0 : size_t(it - s.begin()) - 1;
    if (k + 1 < s.size() && std::abs(s[k + 1] - sv) < std::abs(s[k] - sv)) ++k;
    SheetTracker tr(m);
    auto got = match_roots(nu[k], tr.roots(seg.at(sv)));
    if (!got.empty()) return got;
    return tr.continue_segment(seg, s[k], sv, nu[k]);
}

TrackedSegment track_segment(const CurveModel& m, const Segment& seg, const std::vector<cplx>& nu_start) {
    TrackedSegment out{seg, {0.0}, {nu_start}};
    SheetTracker(m).continue_segment(seg, 0.0, 1.0, nu_start, &out);
    return out;
}

std::vector<cplx> sheets_at(const CurveModel& m, cplx z) {
    auto nu = SheetTracker(m).global(z);
    for (auto& v : nu) v *= kI;
    return nu;
}

std::vector<cplx> sheets_at(const CurveModel& m, cplx z, cplx hint_z, const std::vector<cplx>& hint_mu) {
    std::vector<cplx> nu(hint_mu.size());
    for (size_t i = 0; i < nu.size(); ++i) nu[i] = -kI * hint_mu[i];
    nu = SheetTracker(m).continue_line(hint_z, nu, z);
    for (auto& v : nu) v *= kI;
    return nu;
}

CurveModel build_curve(const HermitianInput& in) {
    in.validate();
    CurveModel m;
    m.input = in;
    const int n = in.n();

    auto zs = discriminant_zeros(in.u, in.A);
    double scale = 0.0;
    for (auto& z : zs) scale = std::max(scale, std::abs(z));

    // conjugate pairing; near-real zeros are nodes (pairs of coincident zeros)
    std::vector<cplx> upper, lower, real;
    std::vector<bool> node(zs.size(), false);
    for (size_t a = 0; a < zs.size(); ++a)
        for (size_t b = a + 1; b < zs.size(); ++b)
            if (!node[a] && !node[b] && std::abs(zs[a] - zs[b]) <= 1e-6 * std::abs(zs[a])) {
                node[a] = node[b] = true;
                real.push_back(0.5 * (zs[a] + zs[b]).real());
                real.push_back(0.5 * (zs[a] + zs[b]).real());
            }
    for (size_t a = 0; a < zs.size(); ++a) {
        if (node[a]) continue;
        const cplx z = zs[a];
        if (std::abs(z.imag()) <= 1e-7 * std::abs(z)) real.push_back(z.real());
        else (z.imag() > 0 ? upper : lower).push_back(z);
    }
    if (upper.size() != lower.size()) throw NumError("branch_points: conjugate pairing failed");
    std::vector<bool> taken(lower.size(), false);
    std::vector<std::pair<cplx, cplx>> pairs;  // (upper, lower)
    for (auto& b : upper) {
        size_t best = lower.size();
        double bd = std::numeric_limits<double>::infinity();
        for (size_t k = 0; k < lower.size(); ++k)
            if (!taken[k] && std::abs(lower[k] - std::conj(b)) < bd) {
                bd = std::abs(lower[k] - std::conj(b));
                best = k;
            }
        if (bd > 1e-8 * std::max(1.0, std::abs(b))) throw NumError("branch_points: conjugate symmetry violated");
        taken[best] = true;
        cplx avg = 0.5 * (b + std::conj(lower[best]));
        pairs.push_back({avg, std::conj(avg)});
    }
    std::sort(real.begin(), real.end(), [](cplx a, cplx b) { return a.real() < b.real(); });
    for (size_t k = 0; k < real.size(); k += 2) {
        cplx c = k + 1 < real.size() ? 0.5 * (real[k] + real[k + 1]) : real[k];
        c = c.real();
        pairs.push_back({c, c});
    }

    for (auto& p : pairs) {
        m.branch_points.push_back({p.first});
        if (p.second != p.first) m.branch_points.push_back({p.second});
    }

    double umax = 0.0, du = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) umax = std::max(umax, std::abs(in.u[i]));
    for (int i = 1; i < n; ++i) du = std::min(du, in.u[i] - in.u[i - 1]);
    RVec ev = herm_eigs(in.A);
    double anorm = std::max(std::abs(ev(0)), std::abs(ev(n - 1)));
    m.anchor_radius = std::max({10.0 * umax, 10.0 * scale, 4.0 * anorm / (2.0 * kPi * du), 1.0});

    SheetTracker tr(m);
    for (auto& p : pairs) {
        double other = std::numeric_limits<double>::infinity();
        for (auto& q : pairs)
            if (&q != &p) other = std::min(other, std::abs(q.first - p.first));
        double delta = 1e-3 * std::min({std::max(p.first.imag(), 1e-3 * std::abs(p.first)), other, std::abs(p.first)});
        auto nu = tr.global(p.first + kI * delta);
        int bi = 0, bj = 1;
        double bd = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (std::abs(nu[i] - nu[j]) < bd) {
                    bd = std::abs(nu[i] - nu[j]);
                    bi = i;
                    bj = j;
                }
        for (auto& b : m.branch_points)
            if (b.z == p.first || b.z == p.second) {
                b.i = bi;
                b.j = bj;
            }
        m.cuts.push_back({p.second, p.first, bi, bj, bj + 1});
    }
    std::sort(m.cuts.begin(), m.cuts.end(), [](const Cut& a, const Cut& b) {
        return a.family != b.family ? a.family < b.family : a.re() < b.re();
    });

    double dmax = 0.0, dmin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double d = std::abs(in.t(i) - in.t(j));
            dmax = std::max(dmax, d);
            dmin = std::min(dmin, d);
        }
    m.lambda_ratio = dmin > 0 ? dmax / dmin : std::numeric_limits<double>::infinity();
    m.ordering_hypothesis = true;
    for (int i = 1; i + 1 < n; ++i)
        if (!((in.u[i + 1] - in.u[i]) / (in.u[i] - in.u[i - 1]) > m.lambda_ratio)) m.ordering_hypothesis = false;
    return m;
}

const std::vector<BranchPoint>& branch_points(const CurveModel& m) { return m.branch_points; }
const std::vector<Cut>& branch_cuts(const CurveModel& m) { return m.cuts; }

PunctureResidues puncture_residues(const CurveModel& m) {
    const int n = m.input.n();
    RVec lam = herm_eigs(m.input.A);
    if (min_gap(lam) <= 1e-10 * std::max(1.0, lam.cwiseAbs().maxCoeff()))
        throw NumError("puncture_residues: repeated eigenvalues of A");
    PunctureResidues r;
    const cplx c = 2.0 * kPi * kI;
    for (int i = 0; i < n; ++i) {
        r.at_zero.push_back(-lam(i) / c);
        r.at_infinity.push_back(m.input.t(i) / c);
    }
    return r;
}

CaterpillarComponent caterpillar_component(const CMat& A, int k) {
    const int n = int(A.rows());
    if (k < 2 || k > n) throw NumError("caterpillar_component: k out of range");
    CaterpillarComponent c;
    c.k = k;
    c.e_k.assign(k, 0.0);
    c.e_k[k - 1] = 1.0;
    c.A_k = A.topLeftCorner(k, k);
    RVec lk = corner_eigs(A, k), lk1 = corner_eigs(A, k - 1);
    auto tol = [](const RVec& v) { return 1e-10 * std::max(1.0, v.cwiseAbs().maxCoeff()); };
    if (min_gap(lk) <= tol(lk) || min_gap(lk1) <= tol(lk1))
        throw NumError("caterpillar_component: repeated eigenvalues in a corner");
    const cplx tpi = 2.0 * kPi * kI;
    for (int j = 0; j < k; ++j) c.residues_zero.push_back(-lk(j) / tpi);
    for (int i = 0; i < k - 1; ++i) c.residues_infinity.push_back(lk1(i) / tpi);
    c.residues_infinity.push_back(A(k - 1, k - 1).real() / tpi);
    c.branch_points = discriminant_zeros(c.e_k, c.A_k);
    double sep = std::numeric_limits<double>::infinity();
    for (size_t a = 0; a < c.branch_points.size(); ++a)
        for (size_t b = a + 1; b < c.branch_points.size(); ++b)
            sep = std::min(sep, std::abs(c.branch_points[a] - c.branch_points[b]) /
                                    std::max(std::abs(c.branch_points[a]), std::abs(c.branch_points[b])));
    c.generic = int(c.branch_points.size()) == 2 * (k - 1) && sep > 1e-5;
    return c;
}

GenericityReport genericity_check(const CMat& A) {
    const int n = int(A.rows());
    GenericityReport r;
    r.generic = true;
    for (int k = 2; k <= n; ++k) {
        r.k.push_back(k);
        RVec lk = corner_eigs(A, k);
        bool simple_eigs = min_gap(lk) > 1e-8 * std::max(1.0, lk.cwiseAbs().maxCoeff());
        bool simple_disc = false;
        try {
            std::vector<double> e(k, 0.0);
            e[k - 1] = 1.0;
            auto zs = discriminant_zeros(e, A.topLeftCorner(k, k));
            double sep = std::numeric_limits<double>::infinity();
            for (size_t a = 0; a < zs.size(); ++a)
                for (size_t b = a + 1; b < zs.size(); ++b)
                    sep = std::min(sep, std::abs(zs[a] - zs[b]) / std::max(std::abs(zs[a]), std::abs(zs[b])));
            simple_disc = int(zs.size()) == 2 * (k - 1) && sep > 1e-5;
        } catch (const NumError&) {
            simple_disc = false;
        }
        r.simple_discriminant.push_back(simple_disc);
        r.simple_eigenvalues.push_back(simple_eigs);
        r.generic = r.generic && simple_disc && simple_eigs;
    }
    return r;
}

nlohmann::json to_json(const CurveModel& m) {
    using nlohmann::json;
    auto cj = [](cplx z) { return json{{"re", z.real()}, {"im", z.imag()}}; };
    const int n = m.input.n();
    json A_re = json::array(), A_im = json::array();
    for (int i = 0; i < n; ++i) {
        json rr = json::array(), ri = json::array();
        for (int j = 0; j < n; ++j) {
            rr.push_back(m.input.A(i, j).real());
            ri.push_back(m.input.A(i, j).imag());
        }
        A_re.push_back(rr);
        A_im.push_back(ri);
    }
    json bps = json::array();
    for (auto& b : m.branch_points) {
        json e = cj(b.z);
        e["pair"] = {b.i + 1, b.j + 1};
        bps.push_back(e);
    }
    json cuts = json::array();
    for (auto& c : m.cuts)
        cuts.push_back({{"lower", cj(c.lower)}, {"upper", cj(c.upper)}, {"pair", {c.i + 1, c.j + 1}}, {"family", c.family}});
    json res;
    try {
        auto r = puncture_residues(m);
        json z0 = json::array(), zi = json::array();
        for (auto& v : r.at_zero) z0.push_back(cj(v));
        for (auto& v : r.at_infinity) zi.push_back(cj(v));
        res = {{"zero", z0}, {"infinity", zi}};
    } catch (const NumError&) {
        res = nullptr;
    }
    return {{"schema", "wkb.curve/1"},
            {"n", n},
            {"u", m.input.u},
            {"eps", m.input.eps},
            {"A", {{"re", A_re}, {"im", A_im}}},
            {"anchor_radius", m.anchor_radius},
            {"branch_points", bps},
            {"cuts", cuts},
            {"residues", res},
            {"lambda_ratio", m.lambda_ratio},
            {"ordering_hypothesis", m.ordering_hypothesis}};
}

}  // namespace wkb
