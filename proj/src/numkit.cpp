#include "wkb/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <random>

namespace wkb {

namespace {

constexpr double kLanczosG = 7.0;
constexpr double kLanczos[9] = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};

cplx lanczos_log_gamma(cplx z) {
    cplx w = z - 1.0;
    cplx sum = kLanczos[0];
    for (int k = 1; k < 9; ++k) sum += kLanczos[k] / (w + double(k));
    cplx t = w + kLanczosG + 0.5;
    return 0.5 * std::log(2.0 * kPi) + (w + 0.5) * std::log(t) - t + std::log(sum);
}

}  // namespace

cplx log_gamma(cplx z) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
        throw NumError("log_gamma: non-finite argument");
    if (z.imag() == 0.0 && z.real() <= 0.0 && z.real() == std::floor(z.real()))
        throw NumError("log_gamma: pole at nonpositive integer");
    if (z.real() >= 0.5) return lanczos_log_gamma(z);
    if (std::abs(z.imag()) < 20.0) {
        double turn = std::copysign(2.0 * kPi, z.imag()) * std::floor(0.5 * z.real() + 0.25);
        return std::log(kPi) - std::log(std::sin(kPi * z)) - lanczos_log_gamma(1.0 - z) + kI * turn;
    }
    // far from the real axis: shift right, sin(pi z) would overflow
    int m = int(std::ceil(0.5 - z.real()));
    cplx acc = lanczos_log_gamma(z + double(m));
    for (int k = 0; k < m; ++k) acc -= std::log(z + double(k));
    return acc;
}

EigResult herm_eig_full(const CMat& m, double herm_tol) {
    const Eigen::Index n = m.rows();
    if (n == 0 || m.cols() != n) throw NumError("herm_eigs: matrix must be square and nonempty");
    double scale = std::max(1.0, m.norm());
    if ((m - m.adjoint()).norm() > herm_tol * scale) throw NumError("herm_eigs: input is not Hermitian");

    CMat a = 0.5 * (m + m.adjoint());
    CMat v = CMat::Identity(n, n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q) off += std::norm(a(p, q));
        if (std::sqrt(off) <= 1e-17 * a.norm() || off == 0.0) break;
        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                double b = std::abs(a(p, q));
                if (b == 0.0) continue;
                cplx phase = a(p, q) / b;
                double app = a(p, p).real(), aqq = a(q, q).real();
                double theta = (aqq - app) / (2.0 * b);
                double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                // G = diag(1, conj(phase)) * [[c, s], [-s, c]] on the (p,q) plane
                cplx gpp = c, gpq = s, gqp = -s * std::conj(phase), gqq = c * std::conj(phase);
                for (Eigen::Index k = 0; k < n; ++k) {
                    cplx xp = a(k, p), xq = a(k, q);
                    a(k, p) = xp * gpp + xq * gqp;
                    a(k, q) = xp * gpq + xq * gqq;
                    cplx vp = v(k, p), vq = v(k, q);
                    v(k, p) = vp * gpp + vq * gqp;
                    v(k, q) = vp * gpq + vq * gqq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    cplx xp = a(p, k), xq = a(q, k);
                    a(p, k) = std::conj(gpp) * xp + std::conj(gqp) * xq;
                    a(q, k) = std::conj(gpq) * xp + std::conj(gqq) * xq;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
            }
        }
    }
    std::vector<Eigen::Index> order(n);
    for (Eigen::Index i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index x, Eigen::Index y) { return a(x, x).real() < a(y, y).real(); });
    EigResult out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.values(i) = a(order[i], order[i]).real();
        out.vectors.col(i) = v.col(order[i]);
    }
    return out;
}

RVec herm_eigs(const CMat& m, double herm_tol) { return herm_eig_full(m, herm_tol).values; }

cplx poly_eval(const std::vector<cplx>& c, cplx z) {
    cplx acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * z + *it;
    return acc;
}

double poly_scale(const std::vector<cplx>& c, cplx z) {
    double acc = 0.0, az = std::abs(z);
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * az + std::abs(*it);
    return acc;
}

std::vector<cplx> poly_roots(const std::vector<cplx>& coeffs, unsigned seed) {
    if (coeffs.empty()) throw NumError("poly_roots: empty coefficient list");
    const int d = int(coeffs.size()) - 1;
    if (d < 1) throw NumError("poly_roots: degree must be at least 1");
    if (coeffs.back() == 0.0) throw NumError("poly_roots: zero leading coefficient");
    if (d > 12) throw NumError("poly_roots: degree above 12");

    std::vector<cplx> c(coeffs.size());
    for (int k = 0; k <= d; ++k) c[k] = coeffs[k] / coeffs.back();
    if (d == 1) return {-c[0]};

    std::vector<cplx> dc(d);
    for (int k = 1; k <= d; ++k) dc[k - 1] = double(k) * c[k];

    // Fujiwara-type bound for the initial circle
    double bound = 0.0;
    for (int k = 0; k < d; ++k)
        bound = std::max(bound, std::pow(std::abs(c[k]), 1.0 / double(d - k)));
    double rad = std::max(bound, 1e-3);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> jitter(0.0, 2.0 * kPi);
    double phase0 = jitter(rng);
    std::vector<cplx> z(d);
    for (int k = 0; k < d; ++k) z[k] = std::polar(rad, phase0 + 2.0 * kPi * k / d);

    for (int iter = 0; iter < 800; ++iter) {
        double move = 0.0;
        for (int k = 0; k < d; ++k) {
            cplx p = poly_eval(c, z[k]);
            if (p == 0.0) continue;
            cplx ratio = p / poly_eval(dc, z[k]);
            cplx repel = 0.0;
            for (int j = 0; j < d; ++j)
                if (j != k) repel += 1.0 / (z[k] - z[j]);
            cplx w = ratio / (1.0 - ratio * repel);
            if (!std::isfinite(w.real()) || !std::isfinite(w.imag())) continue;
            z[k] -= w;
            move = std::max(move, std::abs(w) / std::max(1.0, std::abs(z[k])));
        }
        if (move < 1e-16) break;
    }
    // Newton polish, kept only when it lowers the residual
    for (auto& r : z) {
        for (int it = 0; it < 3; ++it) {
            cplx p = poly_eval(c, r), dp = poly_eval(dc, r);
            if (dp == 0.0) break;
            cplx cand = r - p / dp;
            if (std::abs(poly_eval(c, cand)) < std::abs(p)) r = cand;
            else break;
        }
    }
    return z;
}

std::vector<int> root_multiplicities(const std::vector<cplx>& roots, double radius) {
    std::vector<int> label(roots.size(), -1), sizes;
    for (size_t i = 0; i < roots.size(); ++i) {
        if (label[i] >= 0) continue;
        label[i] = int(sizes.size());
        int count = 1;
        for (size_t j = i + 1; j < roots.size(); ++j) {
            if (label[j] < 0 && std::abs(roots[i] - roots[j]) <= radius * std::max(1.0, std::abs(roots[i]))) {
                label[j] = label[i];
                ++count;
            }
        }
        sizes.push_back(count);
    }
    return sizes;
}

Segment Segment::line(cplx from, cplx to) {
    Segment s;
    s.kind = Kind::Line;
    s.a = from;
    s.b = to;
    return s;
}

Segment Segment::arc(cplx c, double r, double t0, double t1) {
    Segment s;
    s.kind = Kind::Arc;
    s.center = c;
    s.radius = r;
    s.theta0 = t0;
    s.theta1 = t1;
    return s;
}

cplx Segment::at(double s) const {
    if (kind == Kind::Line) return a + s * (b - a);
    return center + std::polar(radius, theta0 + s * (theta1 - theta0));
}

cplx Segment::deriv(double s) const {
    if (kind == Kind::Line) return b - a;
    double th = theta0 + s * (theta1 - theta0);
    return kI * (theta1 - theta0) * std::polar(radius, th);
}

double Segment::length() const {
    if (kind == Kind::Line) return std::abs(b - a);
    return radius * std::abs(theta1 - theta0);
}

Segment Segment::reversed() const {
    if (kind == Kind::Line) return line(b, a);
    return arc(center, radius, theta1, theta0);
}

double PathSpec::length() const {
    double acc = 0.0;
    for (const auto& s : segments) acc += s.length();
    return acc;
}

bool PathSpec::connected(double tol) const {
    for (size_t i = 1; i < segments.size(); ++i)
        if (std::abs(segments[i].start() - segments[i - 1].end()) > tol) return false;
    return true;
}

namespace {

constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                            0.207784955007898467600689403773245, 0.0};
constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                           0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Piece {
    double lo, hi;
    cplx value;
    double err;
    bool operator<(const Piece& o) const { return err < o.err; }
};

Piece gk15(const std::function<cplx(double)>& g, double lo, double hi) {
    double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    cplx fc = g(mid);
    cplx kron = kWgk[7] * fc, gauss = kWg[3] * fc;
    double absum = kWgk[7] * std::abs(fc);
    for (int j = 0; j < 7; ++j) {
        cplx f1 = g(mid - half * kXgk[j]), f2 = g(mid + half * kXgk[j]);
        kron += kWgk[j] * (f1 + f2);
        absum += kWgk[j] * (std::abs(f1) + std::abs(f2));
        if (j % 2 == 1) gauss += kWg[j / 2] * (f1 + f2);
    }
    Piece p{lo, hi, kron * half, std::abs((kron - gauss) * half)};
    double floor = 50.0 * std::numeric_limits<double>::epsilon() * absum * std::abs(half);
    if (!std::isfinite(p.value.real()) || !std::isfinite(p.value.imag()))
        throw NumError("integrate: non-finite integrand");
    p.err = std::max(p.err, floor);
    return p;
}

}  // namespace

QuadResult integrate_unit(const std::function<cplx(double)>& g, double tol, int max_intervals) {
    if (!(tol > 0)) throw NumError("integrate: tolerance must be positive");
    std::priority_queue<Piece> heap;
    Piece first = gk15(g, 0.0, 1.0);
    heap.push(first);
    cplx total = first.value;
    double err = first.err;
    int count = 1;
    while (err > tol) {
        Piece worst = heap.top();
        if (worst.hi - worst.lo < 1e-13) break;
        heap.pop();
        double mid = 0.5 * (worst.lo + worst.hi);
        Piece l = gk15(g, worst.lo, mid), r = gk15(g, mid, worst.hi);
        total += l.value + r.value - worst.value;
        err += l.err + r.err - worst.err;
        heap.push(l);
        heap.push(r);
        if (++count > max_intervals) throw NumError("integrate: no convergence within refinement budget");
    }
    // rebuild sums to drop accumulated drift
    total = 0.0;
    err = 0.0;
    while (!heap.empty()) {
        total += heap.top().value;
        err += heap.top().err;
        heap.pop();
    }
    if (err > tol) throw NumError("integrate: tolerance not reached");
    return {total, err, count * 15};
}

QuadResult integrate_segment(const std::function<cplx(cplx)>& f, const Segment& seg, double tol) {
    return integrate_unit([&](double s) { return f(seg.at(s)) * seg.deriv(s); }, tol);
}

QuadResult integrate_path(const std::function<cplx(cplx)>& f, const PathSpec& path, double tol) {
    QuadResult out{0.0, 0.0, 0};
    double total_len = std::max(path.length(), 1e-300);
    for (const auto& seg : path.segments) {
        double share = tol * std::max(seg.length() / total_len, 1e-3);
        auto r = integrate_segment(f, seg, share);
        out.value += r.value;
        out.error += r.error;
        out.evaluations += r.evaluations;
    }
    return out;
}

namespace {

// Dormand-Prince 5(4)
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

double column_error(const CMat& err, const CMat& y) {
    double worst = 0.0;
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
        double scale = std::max(y.col(j).norm(), 1e-300);
        worst = std::max(worst, err.col(j).norm() / scale);
    }
    return worst;
}

}  // namespace

CMat ode_propagate_segment(const MatrixField& rhs, const Segment& seg, const CMat& f0, double tol, OdeStats* stats) {
    if (!(tol > 0)) throw NumError("ode_propagate: tolerance must be positive");
    const double len = seg.length();
    if (len == 0.0) return f0;
    auto field = [&](double s, const CMat& y) -> CMat { return rhs(seg.at(s)) * (seg.deriv(s) * y); };

    CMat y = f0;
    double s = 0.0;
    CMat k1 = field(0.0, y);
    double h = std::min(0.05, 0.1 / std::max(1.0, k1.norm() / std::max(y.norm(), 1e-300)));
    while (s < 1.0) {
        if (s + h > 1.0) h = 1.0 - s;
        if (h < 1e-14) throw NumError("ode_propagate: step size underflow");
        CMat k2 = field(s + c2 * h, y + h * (a21 * k1));
        CMat k3 = field(s + c3 * h, y + h * (a31 * k1 + a32 * k2));
        CMat k4 = field(s + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
        CMat k5 = field(s + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        CMat k6 = field(s + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        CMat ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        CMat k7 = field(s + h, ynew);
        CMat err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        double allowed = tol * std::max(h * len, 1e-3 * tol);
        double ratio = column_error(err, ynew) / allowed;
        if (!std::isfinite(ratio)) ratio = 1e10;
        if (ratio <= 1.0) {
            s += h;
            y = ynew;
            k1 = k7;
            if (stats) ++stats->accepted;
        } else if (stats) {
            ++stats->rejected;
        }
        double grow = ratio == 0.0 ? 5.0 : 0.9 * std::pow(ratio, -0.2);
        h *= std::clamp(grow, 0.2, 5.0);
    }
    return y;
}

CMat ode_propagate(const MatrixField& rhs, const PathSpec& path, const CMat& f0, double tol, OdeStats* stats) {
    CMat y = f0;
    for (const auto& seg : path.segments) y = ode_propagate_segment(rhs, seg, y, tol, stats);
    return y;
}

}  // namespace wkb
