#include "wkb/periods.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>

namespace wkb {

namespace {

double data_scale(const CurveModel& m) {
    RVec ev = herm_eigs(m.input.A);
    return 1.0 + ev.cwiseAbs().maxCoeff();
}

std::string cycle_name(const std::string& head, int a, int b) {
    return head + "_" + std::to_string(a) + std::to_string(b);
}

// distance from the circle |z| = r to a vertical cut
double circle_clearance(const Cut& c, double r) {
    double near = std::abs(c.re()), far = std::abs(c.upper);
    if (near > r) return near - r;
    if (far < r) return r - far;
    return 0.0;
}

cplx chain_integral(const CurveModel& m, const Chain& ch, double tol) {
    if (ch.segments.empty()) return 0.0;
    SheetTracker tr(m);
    std::vector<cplx> nu = tr.global(ch.segments.front().seg.start());
    const std::vector<cplx> nu0 = nu;
    double total_len = 0.0;
    for (auto& cs : ch.segments) total_len += cs.seg.length();
    cplx sum = 0.0;
    for (auto& cs : ch.segments) {
        TrackedSegment ts = track_segment(m, cs.seg, nu);
        const int sh = cs.sheet;
        auto g = [&](double s) { return kI * ts.at(m, s)[sh] * cs.seg.deriv(s); };
        sum += integrate_unit(g, tol * std::max(cs.seg.length() / total_len, 1e-3)).value;
        nu = ts.nu.back();
    }
    const auto& first = ch.segments.front();
    const auto& last = ch.segments.back();
    if (std::abs(last.seg.end() - first.seg.start()) <= 1e-12 * (1 + std::abs(first.seg.start()))) {
        cplx a = nu0[first.sheet], b = nu[last.sheet];
        if (std::abs(a - b) > 1e-6 * (1 + std::abs(a))) throw NumError("period: cycle does not close on its sheet");
    }
    return sum;
}

// P(z_k) near infinity on a real ray; the log combination is real there
cplx counterterm(const HermitianInput& in, int k, double x) {
    const cplx z = x;
    cplx logs = 0.5 * (branch_log(z) + branch_log(-z)) + kI * kPi / 2.0;
    return kI * in.u[k] * z - in.t(k) / (2 * kPi * kI) * logs;
}

}  // namespace

cplx branch_log(cplx z) {
    double arg = std::arg(z);
    if (arg >= kPi / 2) arg -= 2 * kPi;
    return {std::log(std::abs(z)), arg};
}

Cycle& Cycle::add(const Cycle& other, double coeff) {
    for (auto ch : other.terms) {
        ch.coeff *= coeff;
        terms.push_back(ch);
    }
    return *this;
}

double vanishing_radius(const CurveModel& m, int k) {
    const int n = m.input.n();
    if (k < 1 || k > n) throw NumError("vanishing_cycle: k out of range");
    double inner = 0.0, outer = std::numeric_limits<double>::infinity();
    for (auto& c : m.cuts) {
        if (c.family > k) inner = std::max(inner, std::abs(c.upper));
        else outer = std::min(outer, std::abs(c.re()));
    }
    double r;
    if (k == 1) r = 2.0 * inner;
    else if (k == n) r = 0.5 * outer;
    else {
        if (!(inner < outer)) throw NumError("vanishing_cycle: cut families overlap radially, no admissible radius");
        r = std::sqrt(inner * outer);
    }
    if (!(r > 0) || !std::isfinite(r)) throw NumError("vanishing_cycle: no admissible radius");
    for (auto& c : m.cuts)
        if (circle_clearance(c, r) < 1e-2 * r) throw NumError("vanishing_cycle: circle passes too close to a cut");
    return r;
}

Cycle vanishing_cycle(const CurveModel& m, int k, int j) {
    if (j < 1 || j > m.input.n()) throw NumError("vanishing_cycle: sheet out of range");
    double r = vanishing_radius(m, k);
    Cycle c;
    c.tag = "V^(" + std::to_string(k) + ")_" + std::to_string(j);
    c.terms.push_back({1.0, {{Segment::arc(0.0, r, 0.0, 2 * kPi), j - 1}}});
    return c;
}

Cycle distinguished_cycle(const CurveModel& m, int k, int i) {
    if (i < 1 || i > k) throw NumError("distinguished_cycle: i out of range");
    Cycle c;
    c.tag = "C^(" + std::to_string(k) + ")_" + std::to_string(i);
    for (int j = k - i + 1; j <= k; ++j) c.add(vanishing_cycle(m, k, j));
    return c;
}

HPair h_cycles(const CurveModel& m, int i, int j) {
    const int n = m.input.n();
    if (!(1 <= i && i < j && j <= n)) throw NumError("h_cycles: need 1 <= i < j <= n");
    const Cut* cut = nullptr;
    for (auto& c : m.cuts)
        if (c.i == i - 1 && c.j == j - 1) cut = &c;
    if (!cut) throw NumError("h_cycles: cut not resolved");
    const double x = cut->re();
    double w = std::abs(x);
    for (auto& c : m.cuts)
        if (&c != cut) w = std::min(w, std::abs(c.re() - x));
    w *= 0.5;
    if (!(w > 0)) throw NumError("h_cycles: cuts overlap in Re");
    const double top = cut->half_height() + w;
    cplx T(x, top), TL(x - w, top), BL(x - w, -top), BR(x + w, -top), TR(x + w, top);
    HPair out;
    out.h.tag = cycle_name("h", i, j);
    Chain ch;
    for (auto [a, b] : {std::pair{T, TL}, {TL, BL}, {BL, BR}, {BR, TR}, {TR, T}}) ch.segments.push_back({Segment::line(a, b), i - 1});
    out.h.terms.push_back(ch);
    out.h_tilde.tag = cycle_name("ht", i, j);
    out.h_tilde.add(vanishing_cycle(m, j, i + 1)).add(vanishing_cycle(m, j - 1, i), -1.0);
    return out;
}

Cycle h_formal(const CurveModel& m, int i, int j) {
    Cycle c;
    c.tag = cycle_name("h", i, j);
    c.add(vanishing_cycle(m, j - 1, i)).add(vanishing_cycle(m, j, i), -1.0);
    return c;
}

cplx period(const CurveModel& m, const Cycle& c, double tol) {
    const double atol = tol * data_scale(m);
    cplx z = 0.0;
    for (auto& ch : c.terms) z += ch.coeff * chain_integral(m, ch, atol / double(c.terms.size()));
    return z;
}

XiTable xi_table(const CurveModel& m, double tol) {
    const int n = m.input.n();
    XiTable t;
    t.n = n;
    t.xi.assign(n, std::vector<double>(n, std::numeric_limits<double>::quiet_NaN()));
    for (int j = 1; j <= n; ++j) {
        for (int i = 1; i <= j; ++i) {
            cplx Z = period(m, vanishing_cycle(m, j, i), tol);
            t.max_imag = std::max(t.max_imag, std::abs(Z.imag()) / (1 + std::abs(Z)));
            if (std::abs(Z.imag()) > 1e-8 * (1 + std::abs(Z)))
                throw NumError("xi_table: vanishing period is not real (" + std::to_string(Z.imag()) + ")");
            t.xi[j - 1][i - 1] = -Z.real();
        }
        if (m.ordering_hypothesis)
            for (int i = j + 1; i <= n; ++i) t.xi[j - 1][i - 1] = m.input.t(i - 1);
    }
    return t;
}

cplx a21_closed_form(const HermitianInput& in) {
    RVec lam = herm_eigs(in.A);
    const double t1 = in.t(0), t2 = in.t(1), du = in.u[1] - in.u[0], a = std::abs(in.A(0, 1));
    const double l1 = lam(0), l2 = lam(1);
    double bracket = (t2 - t1) * std::log(2 * kPi * std::exp(1.0) * du / a) +
                     0.5 * (l2 - l1) * (std::log(t1 - l1) - std::log(l2 - t1));
    return l2 / 2 - kI / (2 * kPi) * bracket;
}

cplx open_period_n2(const CurveModel& m, const std::string& name, double tol) {
    const HermitianInput& in = m.input;
    if (in.n() != 2) throw NumError("open_period_n2: n must be 2");
    if (std::abs(in.A(0, 1)) == 0.0) throw NumError("open_period_n2: off-diagonal entry must be nonzero");
    const double u1 = in.u[0], u2 = in.u[1], t1 = in.t(0), t2 = in.t(1);
    // sheet value minus its large-z behaviour i(u + t/2 pi z)
    auto tail = [&](const std::vector<cplx>& nu, int k, cplx z) { return kI * (nu[k] - in.u[k] - in.t(k) / (2 * kPi * z)); };
    SheetTracker tr(m);
    const double atol = tol * data_scale(m);

    auto arc_part = [&](double R, double th0, double th1, const std::vector<cplx>& nu0, int k, std::vector<cplx>* nu_end) {
        Segment arc = Segment::arc(0.0, R, th0, th1);
        TrackedSegment ts = track_segment(m, arc, nu0);
        auto g = [&](double s) {
            auto nu = ts.at(m, s);
            return tail(nu, k, arc.at(s)) * arc.deriv(s);
        };
        if (nu_end) *nu_end = ts.nu.back();
        return integrate_unit(g, atol).value;
    };

    std::function<cplx(double)> at_radius;
    if (name == "c1" || name == "c2") {
        const int k = name == "c1" ? 0 : 1;
        // u terms cancel against the counterterms; i t/(2 pi z) over the lower half circle gives t/2
        at_radius = [&, k](double R) {
            return in.t(k) / 2 + arc_part(R, 0.0, -kPi, tr.global(R), k, nullptr);
        };
    } else if (name == "a21") {
        const Cut& cut = m.cuts.at(0);
        const cplx b = cut.lower;
        at_radius = [&, b](double R) {
            const double x = b.real();
            const cplx q(x, -std::sqrt(R * R - x * x));
            std::vector<cplx> nu_q;
            cplx z = arc_part(R, 0.0, std::arg(q), tr.global(R), 1, &nu_q);
            z += arc_part(R, std::arg(q), -kPi, nu_q, 0, nullptr);

            // vertical leg q -> b on sheet 2 and back on sheet 1; z(s) = b + (q - b) s^2 keeps the integrand smooth
            auto delta = [&](cplx w) {
                CMat H = in.A / (2 * kPi * w);
                H(0, 0) += u1;
                H(1, 1) += u2;
                cplx tr_ = H.trace();
                return tr_ * tr_ - 4.0 * H.determinant();
            };
            const int nodes = 4000;
            std::vector<cplx> branch(nodes + 1);
            cplx ref = nu_q[1] - nu_q[0];
            for (int p = nodes; p >= 0; --p) {
                double s = double(p) / nodes;
                cplx w = b + (q - b) * s * s;
                cplx r = p == 0 ? std::sqrt(delta(b + (q - b) * 1e-12) / 1e-12) : std::sqrt(delta(w)) / s;
                cplx prev = p == nodes ? ref : branch[p + 1];
                branch[p] = std::abs(r - prev) <= std::abs(r + prev) ? r : -r;
            }
            auto g = [&](double s) {
                if (s == 0.0) return cplx(0.0);
                cplx w = b + (q - b) * s * s;
                cplx r = std::sqrt(delta(w)) / s;
                int p = std::clamp(int(std::lround(s * nodes)), 0, nodes);
                if (std::abs(r - branch[p]) > std::abs(r + branch[p])) r = -r;
                cplx diff = s * r;  // nu_2 - nu_1
                cplx tail_ = kI * (diff - (u2 - u1) - (t2 - t1) / (2 * kPi * w));
                return -tail_ * 2.0 * s * (q - b);
            };
            z += integrate_unit(g, atol).value;

            // closed-form pieces of i(u + t/2 pi z) on the three legs, then the counterterms P
            const double lr = std::log(R);
            const cplx lq = std::log(q), lb = std::log(b);
            z += kI * (u2 - u1) * b - kI * (u1 + u2) * R;
            z += kI * t2 / (2 * kPi) * (lq - lr) + kI * (t2 - t1) / (2 * kPi) * (lb - lq) +
                 kI * t1 / (2 * kPi) * (lr - kI * kPi - lq);
            z += counterterm(in, 1, R) - counterterm(in, 0, -R);
            return z;
        };
    } else {
        throw NumError("open_period_n2: unknown path " + name);
    }

    double R = 8.0 * std::max(m.anchor_radius, 1.0);
    cplx z1 = at_radius(R), z2 = at_radius(2 * R), z4 = at_radius(4 * R);
    cplx est = (8.0 * z4 - 6.0 * z2 + z1) / 3.0;
    if (std::abs(est - z4) > 1e-3 * (1 + std::abs(est))) throw NumError("open_period_n2: endpoint limit not converging");
    return est;
}

double real_part_by_involution(const CurveModel& m, const std::string& name, double tol) {
    const int n = m.input.n();
    if (n == 2 && name == "a21") return -0.5 * period(m, vanishing_cycle(m, 2, 2), tol).real();
    if (n == 2 && (name == "c1" || name == "c2")) return -0.5 * period(m, vanishing_cycle(m, 1, name == "c1" ? 1 : 2), tol).real();
    if (n == 3 && name == "a32-c2+a21") return -0.5 * period(m, vanishing_cycle(m, 3, 3), tol).real();
    throw NumError("real_part_by_involution: no involution image known for " + name);
}

std::vector<PeriodRow> period_rows(const CurveModel& m, double tol) {
    const int n = m.input.n();
    std::vector<PeriodRow> rows;
    std::vector<std::vector<cplx>> V(n + 1, std::vector<cplx>(n + 1));
    for (int k = 1; k <= n; ++k)
        for (int j = 1; j <= n; ++j) {
            V[k][j] = period(m, vanishing_cycle(m, k, j), tol);
            rows.push_back({"V^(" + std::to_string(k) + ")_" + std::to_string(j), k, j, V[k][j], tol});
        }
    for (int k = 1; k <= n; ++k)
        for (int i = 1; i <= k; ++i) {
            cplx z = 0.0;
            for (int j = k - i + 1; j <= k; ++j) z += V[k][j];
            rows.push_back({"C^(" + std::to_string(k) + ")_" + std::to_string(i), k, i, z, tol});
        }
    for (int i = 1; i <= n; ++i)
        for (int j = i + 1; j <= n; ++j) {
            HPair hp = h_cycles(m, i, j);
            rows.push_back({hp.h.tag, i, j, period(m, hp.h, tol), tol});
            rows.push_back({hp.h_tilde.tag, i, j, V[j][i + 1] - V[j - 1][i], tol});
        }
    return rows;
}

void write_period_csv(std::ostream& os, const std::vector<PeriodRow>& rows) {
    os << "tag,k,i,re,im,tol\n" << std::setprecision(17);
    for (auto& r : rows) os << r.tag << ',' << r.k << ',' << r.i << ',' << r.Z.real() << ',' << r.Z.imag() << ',' << r.tol << '\n';
}

nlohmann::json period_json(const std::vector<PeriodRow>& rows) {
    nlohmann::json out = nlohmann::json::array();
    for (auto& r : rows)
        out.push_back({{"tag", r.tag}, {"k", r.k}, {"i", r.i}, {"re", r.Z.real()}, {"im", r.Z.imag()}, {"tol", r.tol}});
    return out;
}

}  // namespace wkb
