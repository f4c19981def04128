#include "wkb/network.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <map>
#include <sstream>

#include "wkb/periods.hpp"

namespace wkb {

namespace {

struct Pair {
    cplx a, b;
    bool ok = false;
};

double outer_scale(const std::vector<BranchPoint>& bps) {
    double s = 0.0;
    for (auto& b : bps) s = std::max(s, std::abs(b.z));
    return s;
}

double dist_to_points(const std::vector<BranchPoint>& bps, cplx z) {
    double d = std::numeric_limits<double>::infinity();
    for (auto& b : bps) d = std::min(d, std::abs(z - b.z));
    return d;
}

// nearest roots to (a, b), each clearly closer than any competitor
Pair follow_pair(const std::vector<cplx>& roots, cplx a, cplx b) {
    auto pick = [&](cplx v, int skip, int& idx) {
        double d1 = std::numeric_limits<double>::infinity(), d2 = d1;
        idx = -1;
        for (int k = 0; k < int(roots.size()); ++k) {
            if (k == skip) continue;
            double d = std::abs(roots[k] - v);
            if (d < d1) {
                d2 = d1;
                d1 = d;
                idx = k;
            } else if (d < d2) {
                d2 = d;
            }
        }
        return d1 * 3.0 < d2 || d2 == std::numeric_limits<double>::infinity();
    };
    Pair p;
    int ia = -1, ib = -1;
    if (!pick(a, -1, ia)) return p;
    if (!pick(b, ia, ib)) return p;
    // b must not prefer the root taken by a
    double self = std::abs(roots[ia] - b);
    if (self < std::abs(roots[ib] - b)) return p;
    p.a = roots[ia];
    p.b = roots[ib];
    p.ok = true;
    return p;
}

int nearest_index(const std::vector<cplx>& v, cplx x) {
    int best = 0;
    for (int k = 1; k < int(v.size()); ++k)
        if (std::abs(v[k] - x) < std::abs(v[best] - x)) best = k;
    return best;
}

struct Tracer {
    const CurveModel& m;
    double theta;
    const NetworkOptions& opts;
    double scale, hit, escape, hmax;
    cplx rot;

    cplx direction(const Pair& p) const {
        cplx dmu = kI * (p.a - p.b);
        double g = std::abs(dmu);
        if (g == 0.0) return 0.0;
        return -rot * std::conj(dmu) / g;
    }

    // advance one RK4 step of length h; false when the pair cannot be followed
    bool step(cplx z, const Pair& p, double h, cplx& zn, Pair& pn, double& dmass) const {
        auto eval = [&](cplx zz, const Pair& ref, Pair& out) {
            out = follow_pair(sheet_roots(m.input.u, m.input.A, zz), ref.a, ref.b);
            return out.ok;
        };
        Pair p2, p3, p4;
        cplx k1 = direction(p);
        if (!eval(z + 0.5 * h * k1, p, p2)) return false;
        cplx k2 = direction(p2);
        if (!eval(z + 0.5 * h * k2, p2, p3)) return false;
        cplx k3 = direction(p3);
        if (!eval(z + h * k3, p3, p4)) return false;
        cplx k4 = direction(p4);
        zn = z + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!eval(zn, p4, pn)) return false;
        auto g = [](const Pair& q) { return std::abs(q.a - q.b); };
        dmass = h / 6.0 * (g(p) + 2.0 * g(p2) + 2.0 * g(p3) + g(pn));
        return true;
    }

    bool same_pair(const BranchPoint& bp, const Pair& p, cplx z) const {
        auto r = sheet_roots(m.input.u, m.input.A, z);
        // the two roots closest to each other must be the tracked pair
        double best = std::numeric_limits<double>::infinity();
        int bi = 0, bj = 1;
        for (int i = 0; i < int(r.size()); ++i)
            for (int j = i + 1; j < int(r.size()); ++j)
                if (std::abs(r[i] - r[j]) < best) {
                    best = std::abs(r[i] - r[j]);
                    bi = i;
                    bj = j;
                }
        (void)bp;
        int ia = nearest_index(r, p.a), ib = nearest_index(r, p.b);
        return (ia == bi && ib == bj) || (ia == bj && ib == bi);
    }

    void run(Wall& w, Pair p, cplx mass0) const {
        cplx z = w.points.back();
        w.nu_a.push_back(p.a);
        w.nu_b.push_back(p.b);
        w.mass.push_back(mass0);
        w.arclength.push_back(0.0);
        cplx mass = mass0;
        double turns = 0.0;
        bool away = w.origin_branch < 0;
        const auto& bps = m.branch_points;
        for (int it = 0; it < opts.max_steps; ++it) {
            double local = std::min(std::abs(z), dist_to_points(bps, z));
            double h = std::clamp(opts.step * local, 0.25 * hit, hmax);
            cplx zn;
            Pair pn;
            double dm = 0.0;
            bool ok = false;
            for (int tries = 0; tries < 30; ++tries) {
                if (step(z, p, h, zn, pn, dm)) {
                    ok = true;
                    break;
                }
                h *= 0.5;
                if (h < 1e-6 * hit) break;
            }
            if (!ok) {
                w.end = WallEnd::Ambiguous;
                return;
            }
            turns += std::arg(zn / z) / (2.0 * kPi);
            mass += -rot * dm;
            z = zn;
            p = pn;
            w.points.push_back(z);
            w.nu_a.push_back(p.a);
            w.nu_b.push_back(p.b);
            w.mass.push_back(mass);
            w.arclength.push_back(w.arclength.back() + h);
            if (std::abs(z) > escape) {
                w.end = WallEnd::Infinity;
                return;
            }
            if (std::abs(z) < 1e-6 * scale) {
                w.end = WallEnd::Origin;
                return;
            }
            if (std::abs(turns) > opts.max_turns) {
                w.end = WallEnd::Spiral;
                return;
            }
            if (!away && std::abs(z - bps[w.origin_branch].z) > 0.05 * scale) away = true;
            for (int k = 0; k < int(bps.size()); ++k) {
                double d = std::abs(z - bps[k].z);
                if (k == w.origin_branch && !away) continue;
                if (d > 0.05 * scale) continue;
                if (!same_pair(bps[k], p, z)) continue;
                w.closest_miss = std::min(w.closest_miss, d);
                if (d < hit) {
                    w.end = WallEnd::BranchPoint;
                    w.end_branch = k;
                    return;
                }
            }
        }
        w.end = WallEnd::Length;
    }

    void label(Wall& w) const {
        SheetTracker tr(m);
        const auto& bps = m.branch_points;
        size_t k0 = 0;
        double want = 0.05 * scale;
        while (k0 + 1 < w.points.size() && dist_to_points(bps, w.points[k0]) < want) ++k0;
        auto g = tr.global(w.points[k0]);
        w.a = nearest_index(g, w.nu_a[k0]);
        w.b = nearest_index(g, w.nu_b[k0]);
        size_t k1 = w.points.size() - 1;
        while (k1 > 0 && dist_to_points(bps, w.points[k1]) < want) --k1;
        auto ge = tr.global(w.points[k1]);
        w.a_end = nearest_index(ge, w.nu_a[k1]);
        w.b_end = nearest_index(ge, w.nu_b[k1]);
    }
};

struct Hit {
    double s1, s2;  // fractional polyline parameters
    cplx x;
};

bool seg_intersect(cplx p0, cplx p1, cplx q0, cplx q1, double& t, double& u) {
    cplx r = p1 - p0, s = q1 - q0, qp = q0 - p0;
    double den = r.real() * s.imag() - r.imag() * s.real();
    if (den == 0.0) return false;
    t = (qp.real() * s.imag() - qp.imag() * s.real()) / den;
    u = (qp.real() * r.imag() - qp.imag() * r.real()) / den;
    return t >= 0 && t < 1 && u >= 0 && u < 1;
}

struct Box {
    double x0, x1, y0, y1;
};

std::vector<Box> chunk_boxes(const std::vector<cplx>& pts, size_t chunk) {
    std::vector<Box> out;
    for (size_t i = 0; i + 1 < pts.size(); i += chunk) {
        Box b{1e300, -1e300, 1e300, -1e300};
        for (size_t k = i; k <= std::min(i + chunk, pts.size() - 1); ++k) {
            b.x0 = std::min(b.x0, pts[k].real());
            b.x1 = std::max(b.x1, pts[k].real());
            b.y0 = std::min(b.y0, pts[k].imag());
            b.y1 = std::max(b.y1, pts[k].imag());
        }
        out.push_back(b);
    }
    return out;
}

std::vector<Hit> polyline_hits(const std::vector<cplx>& P, const std::vector<cplx>& Q) {
    constexpr size_t C = 32;
    auto bp = chunk_boxes(P, C), bq = chunk_boxes(Q, C);
    std::vector<Hit> out;
    for (size_t i = 0; i < bp.size(); ++i)
        for (size_t j = 0; j < bq.size(); ++j) {
            const Box &a = bp[i], &b = bq[j];
            if (a.x1 < b.x0 || b.x1 < a.x0 || a.y1 < b.y0 || b.y1 < a.y0) continue;
            for (size_t k = i * C; k < std::min((i + 1) * C, P.size() - 1); ++k)
                for (size_t l = j * C; l < std::min((j + 1) * C, Q.size() - 1); ++l) {
                    double t, u;
                    if (seg_intersect(P[k], P[k + 1], Q[l], Q[l + 1], t, u))
                        out.push_back({double(k) + t, double(l) + u, P[k] + t * (P[k + 1] - P[k])});
                }
        }
    return out;
}

template <class T>
T lerp(const std::vector<T>& v, double s) {
    size_t k = std::min(size_t(s), v.size() - 2);
    double f = s - double(k);
    return v[k] + f * (v[k + 1] - v[k]);
}

// cubic Hermite position and mass on step k of a wall, tau in [0, 1]
struct WallCurve {
    const Wall& w;
    cplx rot;

    cplx tangent(size_t k) const {
        cplx dmu = kI * (w.nu_a[k] - w.nu_b[k]);
        return -rot * std::conj(dmu) / std::abs(dmu);
    }
    double step(size_t k) const { return w.arclength[k + 1] - w.arclength[k]; }
    static void basis(double t, double& h00, double& h10, double& h01, double& h11) {
        h00 = (1 + 2 * t) * (1 - t) * (1 - t);
        h10 = t * (1 - t) * (1 - t);
        h01 = t * t * (3 - 2 * t);
        h11 = t * t * (t - 1);
    }
    cplx at(size_t k, double t) const {
        double a, b, c, d;
        basis(t, a, b, c, d);
        double h = step(k);
        return a * w.points[k] + b * h * tangent(k) + c * w.points[k + 1] + d * h * tangent(k + 1);
    }
    cplx deriv(size_t k, double t) const {
        double h = step(k);
        double a = 6 * t * t - 6 * t, b = 3 * t * t - 4 * t + 1, c = -a, d = 3 * t * t - 2 * t;
        return a * w.points[k] + b * h * tangent(k) + c * w.points[k + 1] + d * h * tangent(k + 1);
    }
    cplx mass_s(double s) const {
        size_t k = std::min(size_t(s), w.points.size() - 2);
        return mass_at(k, s - double(k));
    }
    cplx mass_at(size_t k, double t) const {
        double a, b, c, d;
        basis(t, a, b, c, d);
        double h = step(k);
        auto dm = [&](size_t j) { return -rot * std::abs(w.nu_a[j] - w.nu_b[j]); };
        return a * w.mass[k] + b * h * dm(k) + c * w.mass[k + 1] + d * h * dm(k + 1);
    }
};

// Newton refinement of a polyline crossing onto the Hermite curves
cplx refine_crossing(const WallCurve& c1, const WallCurve& c2, double& s1, double& s2) {
    size_t k = std::min(size_t(s1), c1.w.points.size() - 2), l = std::min(size_t(s2), c2.w.points.size() - 2);
    double t = s1 - double(k), u = s2 - double(l);
    for (int it = 0; it < 8; ++it) {
        cplx F = c1.at(k, t) - c2.at(l, u);
        cplx J1 = c1.deriv(k, t), J2 = -c2.deriv(l, u);
        double det = J1.real() * J2.imag() - J1.imag() * J2.real();
        if (det == 0.0) break;
        double dt = (F.real() * J2.imag() - F.imag() * J2.real()) / det;
        double du = (J1.real() * F.imag() - J1.imag() * F.real()) / det;
        t -= dt;
        u -= du;
        if (std::abs(dt) + std::abs(du) < 1e-14) break;
    }
    t = std::clamp(t, 0.0, 1.0);
    u = std::clamp(u, 0.0, 1.0);
    s1 = double(k) + t;
    s2 = double(l) + u;
    return c1.at(k, t);
}

}  // namespace

const char* wall_end_name(WallEnd e) {
    switch (e) {
        case WallEnd::Infinity: return "infinity";
        case WallEnd::Origin: return "origin";
        case WallEnd::BranchPoint: return "branch_point";
        case WallEnd::Spiral: return "spiral";
        case WallEnd::Length: return "length";
        case WallEnd::Ambiguous: return "ambiguous";
    }
    return "?";
}

Network trace_network(const CurveModel& m, double theta, const NetworkOptions& opts) {
    const int n = m.input.n();
    const auto& bps = m.branch_points;
    if (int(bps.size()) != n * (n - 1)) throw NumError("trace_network: branch points are not simple (degenerate curve)");
    const double scale = outer_scale(bps);
    for (size_t i = 0; i < bps.size(); ++i)
        for (size_t j = i + 1; j < bps.size(); ++j)
            if (std::abs(bps[i].z - bps[j].z) < 1e-6 * scale)
                throw NumError("trace_network: coincident branch points (degenerate curve)");

    Network net;
    net.theta = theta;
    net.branch_points = bps;
    net.cuts = m.cuts;
    net.escape_radius = opts.escape_factor * scale;
    net.hit_radius = opts.hit_radius > 0 ? opts.hit_radius : 1e-4 * scale;
    Tracer tr{m, theta, opts, scale, net.hit_radius, net.escape_radius, 0.05 * net.escape_radius, std::polar(1.0, theta)};

    struct Seed {
        Wall w;
        Pair p;
        cplx mass;
    };
    std::vector<Seed> seeds;
    for (int k = 0; k < int(bps.size()); ++k) {
        const cplx b = bps[k].z;
        double local = std::abs(b);
        for (int l = 0; l < int(bps.size()); ++l)
            if (l != k) local = std::min(local, std::abs(bps[l].z - b));
        const double rs = 1e-3 * local;
        auto closest = [&](cplx z) {
            auto r = sheet_roots(m.input.u, m.input.A, z);
            Pair p;
            double best = std::numeric_limits<double>::infinity();
            for (size_t i = 0; i < r.size(); ++i)
                for (size_t j = i + 1; j < r.size(); ++j)
                    if (std::abs(r[i] - r[j]) < best) {
                        best = std::abs(r[i] - r[j]);
                        p = {r[i], r[j], true};
                    }
            return p;
        };
        Pair probe = closest(b + rs);
        cplx dmu = kI * (probe.a - probe.b);
        cplx K = dmu * dmu / rs;
        cplx sqrtK = std::sqrt(K);
        // w(phi) = integral of the colliding-pair difference along the ray from b, with r = rs t^2
        auto ray_mass = [&](double phi, Pair* end) {
            cplx e = std::polar(1.0, phi);
            cplx lead = sqrtK * std::sqrt(e * rs);
            auto f = [&](double t) -> cplx {
                if (t == 0.0) return 0.0;
                Pair p = closest(b + rs * t * t * e);
                cplx d = kI * (p.a - p.b);
                if (std::abs(d - lead * t) > std::abs(d + lead * t)) d = -d;
                return d * e * 2.0 * rs * t;
            };
            if (end) {
                Pair p = closest(b + rs * e);
                if (std::abs(kI * (p.a - p.b) - lead) > std::abs(kI * (p.a - p.b) + lead)) std::swap(p.a, p.b);
                *end = p;
            }
            return integrate_unit(f, 1e-11 * std::abs(lead) * rs).value;
        };
        for (int j = 0; j < 3; ++j) {
            double phi = (2.0 / 3.0) * (theta - std::arg(sqrtK) + j * kPi);
            auto F = [&](double ph) { return (std::conj(tr.rot) * ray_mass(ph, nullptr)).imag(); };
            double p0 = phi, p1 = phi + 1e-4, f0 = F(p0), f1 = F(p1);
            for (int it = 0; it < 20 && f1 != f0; ++it) {
                double p2 = p1 - f1 * (p1 - p0) / (f1 - f0);
                p0 = p1;
                f0 = f1;
                p1 = p2;
                f1 = F(p1);
                if (std::abs(p1 - p0) < 1e-13) break;
            }
            phi = p1;
            Pair p;
            cplx w0 = ray_mass(phi, &p);
            if ((std::conj(tr.rot) * w0).real() > 0) {
                std::swap(p.a, p.b);
                w0 = -w0;
            }
            cplx z0 = b + std::polar(rs, phi);
            Seed s;
            s.w.origin_branch = k;
            s.w.points.push_back(z0);
            s.p = p;
            s.mass = w0;
            seeds.push_back(std::move(s));
        }
    }

    auto trace_all = [&](std::vector<Seed>& batch) {
        std::vector<std::future<Wall>> jobs;
        for (auto& s : batch)
            jobs.push_back(std::async(std::launch::async, [&tr, s]() mutable {
                tr.run(s.w, s.p, s.mass);
                tr.label(s.w);
                return s.w;
            }));
        for (auto& j : jobs) {
            Wall w = j.get();
            w.id = int(net.walls.size());
            net.walls.push_back(std::move(w));
        }
    };
    trace_all(seeds);

    std::vector<std::pair<cplx, std::pair<cplx, cplx>>> spawned;
    size_t checked = 0;
    for (int gen = 1; gen <= opts.max_generation; ++gen) {
        std::vector<Seed> batch;
        const size_t total = net.walls.size();
        // joints past one full turn around z = 0 repeat earlier ones shifted by a puncture loop
        std::vector<std::vector<double>> winding(total);
        for (size_t i = 0; i < total; ++i) {
            auto& p = net.walls[i].points;
            winding[i].assign(p.size(), 0.0);
            for (size_t k = 1; k < p.size(); ++k) winding[i][k] = winding[i][k - 1] + std::arg(p[k] / p[k - 1]);
        }
        auto wound = [&](size_t i, double s) { return std::abs(winding[i][std::min(size_t(s), winding[i].size() - 1)]) > 2.0 * kPi; };
        for (size_t i = 0; i < total; ++i)
            for (size_t j = 0; j < total; ++j) {
                if (i == j || (i < checked && j < checked)) continue;
                const Wall &w1 = net.walls[i], &w2 = net.walls[j];
                for (auto& hit : polyline_hits(w1.points, w2.points)) {
                    if (dist_to_points(bps, hit.x) < 10.0 * net.hit_radius) continue;
                    if (std::abs(hit.x - w1.points.front()) < 10.0 * net.hit_radius ||
                        std::abs(hit.x - w2.points.front()) < 10.0 * net.hit_radius)
                        continue;
                    if (wound(i, hit.s1) || wound(j, hit.s2)) continue;
                    WallCurve c1{w1, tr.rot}, c2{w2, tr.rot};
                    hit.x = refine_crossing(c1, c2, hit.s1, hit.s2);
                    auto r = sheet_roots(m.input.u, m.input.A, hit.x);
                    cplx A = r[nearest_index(r, lerp(w1.nu_a, hit.s1))];
                    cplx B = r[nearest_index(r, lerp(w1.nu_b, hit.s1))];
                    cplx C = r[nearest_index(r, lerp(w2.nu_a, hit.s2))];
                    cplx D = r[nearest_index(r, lerp(w2.nu_b, hit.s2))];
                    if (A == B || C == D) throw NumError("trace_network: unresolved label at a joint");
                    if (!(B == C) || A == D) continue;
                    bool dup = false;
                    for (auto& sp : spawned)
                        if (std::abs(sp.first - hit.x) < 10.0 * net.hit_radius && sp.second.first == A && sp.second.second == D)
                            dup = true;
                    if (dup) continue;
                    spawned.push_back({hit.x, {A, D}});
                    Seed s;
                    s.w.parents[0] = int(i);
                    s.w.parents[1] = int(j);
                    s.w.generation = std::max(w1.generation, w2.generation) + 1;
                    s.w.points.push_back(hit.x);
                    s.p = {A, D, true};
                    s.mass = c1.mass_s(hit.s1) + c2.mass_s(hit.s2);
                    batch.push_back(std::move(s));
                    if (int(net.walls.size() + batch.size()) >= opts.max_walls) break;
                }
            }
        checked = total;
        if (batch.empty()) break;
        if (int(net.walls.size()) >= opts.max_walls) break;
        trace_all(batch);
    }
    return net;
}

std::vector<FiniteWeb> detect_finite_webs(const CurveModel& m, const Network& net, double delta) {
    const int n = m.input.n();
    if (delta <= 0) delta = net.hit_radius;
    struct Candidate {
        std::string tag;
        std::vector<std::pair<std::string, int>> v;
        cplx Z;
    };
    std::vector<Candidate> classes;
    auto vname = [](int k, int j) { return "V^(" + std::to_string(k) + ")_" + std::to_string(j); };
    for (int i = 1; i <= n; ++i)
        for (int j = i + 1; j <= n; ++j) {
            auto hp = h_cycles(m, i, j);
            classes.push_back({hp.h.tag, {{vname(j - 1, i), 1}, {vname(j, i), -1}}, period(m, hp.h, 1e-10)});
            classes.push_back({hp.h_tilde.tag, {{vname(j, i + 1), 1}, {vname(j - 1, i), -1}}, period(m, hp.h_tilde, 1e-10)});
        }
    // composite charges, as seen on degenerate saddles
    const size_t named = classes.size();
    for (size_t a = 0; a < named; ++a)
        for (size_t b = a + 1; b < named; ++b) {
            Candidate c{classes[a].tag + "+" + classes[b].tag, classes[a].v, classes[a].Z + classes[b].Z};
            c.v.insert(c.v.end(), classes[b].v.begin(), classes[b].v.end());
            classes.push_back(c);
        }

    std::vector<FiniteWeb> out;
    for (auto& w : net.walls) {
        if (w.end != WallEnd::BranchPoint) continue;
        if (std::abs(w.points.back() - net.branch_points[w.end_branch].z) > delta) continue;
        FiniteWeb web;
        web.type = w.primary() ? FiniteWeb::Type::Saddle : FiniteWeb::Type::Tree;
        std::vector<int> stack{w.id};
        while (!stack.empty()) {
            int id = stack.back();
            stack.pop_back();
            web.walls.push_back(id);
            for (int p : net.walls[id].parents)
                if (p >= 0) stack.push_back(p);
        }
        std::sort(web.walls.begin(), web.walls.end());
        web.strings = int(web.walls.size());
        web.mass = w.mass.back();
        bool dup = false;
        for (auto& o : out)
            if (std::abs(o.mass - web.mass) < 1e-4 * (1.0 + std::abs(web.mass))) dup = true;
        if (dup) continue;
        double best = std::numeric_limits<double>::infinity();
        for (auto& c : classes) {
            double d = std::abs(c.Z - web.mass);
            if (d < best && d < 1e-4 * (1.0 + std::abs(c.Z))) {
                best = d;
                web.charge = c.tag;
                web.charge_v = c.v;
                web.Z = c.Z;
            }
        }
        out.push_back(std::move(web));
    }
    return out;
}

double web_phase_check(const FiniteWeb& web, double theta) {
    if (web.charge.empty()) throw NumError("web_phase_check: charge outside the V-basis span");
    double d = std::arg(-web.Z) - theta;
    d = std::remainder(d, 2.0 * kPi);
    return std::abs(d);
}

double refine_theta(const CurveModel& m, double theta0, double width, const NetworkOptions& opts, int iterations) {
    NetworkOptions o = opts;
    o.max_generation = 0;
    const double scale = outer_scale(m.branch_points);
    auto misses = [&](double th) {
        auto net = trace_network(m, th, o);
        std::vector<double> v;
        for (auto& w : net.walls) v.push_back(w.end == WallEnd::BranchPoint ? 0.0 : w.closest_miss);
        std::sort(v.begin(), v.end());
        return v;
    };
    auto base = misses(theta0);
    size_t K = 0;
    while (K < base.size() && base[K] < 1e-2 * scale) ++K;
    K = std::max<size_t>(K, 1);
    auto f = [&](double th) {
        auto v = misses(th);
        double s = 0.0;
        for (size_t k = 0; k < std::min(K, v.size()); ++k) s += std::min(v[k], scale);
        return s;
    };
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = theta0 - width, b = theta0 + width;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < iterations; ++it) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    double best = 0.5 * (a + b);
    // webs sit exactly at arg(-Z) of their charge; snap to the nearest such phase in the window
    const int n = m.input.n();
    double snapped = best, gap = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= n; ++i)
        for (int j = i + 1; j <= n; ++j) {
            auto hp = h_cycles(m, i, j);
            for (auto* c : {&hp.h, &hp.h_tilde}) {
                double ph = std::arg(-period(m, *c, 1e-10));
                ph = theta0 + std::remainder(ph - theta0, 2.0 * kPi);
                if (std::abs(ph - theta0) <= width && std::abs(ph - best) < gap) {
                    gap = std::abs(ph - best);
                    snapped = ph;
                }
            }
        }
    return snapped;
}

LiftedPathSum lift_path(const CurveModel& m, const Network& net, const PathSpec& path) {
    const int n = m.input.n();
    SheetTracker tr(m);
    std::vector<cplx> pts;
    std::vector<std::vector<cplx>> nus;
    std::vector<cplx> nu = tr.global(path.segments.front().at(0.0));
    for (auto& seg : path.segments) {
        auto ts = track_segment(m, seg, nu);
        for (size_t k = 0; k < ts.s.size(); ++k) {
            if (!pts.empty() && k == 0) continue;
            pts.push_back(seg.at(ts.s[k]));
            nus.push_back(ts.nu[k]);
        }
        nu = ts.nu.back();
    }
    struct Crossing {
        double s;
        int wall;
        int from, to;
    };
    std::vector<Crossing> xs;
    for (auto& w : net.walls) {
        for (auto& hit : polyline_hits(pts, w.points)) {
            if (!w.primary()) throw NumError("lift_path: path crosses a non-primary wall");
            auto r = tr.roots(hit.x);
            size_t k = std::min(size_t(hit.s1), nus.size() - 2);
            auto lab = match_roots(nus[k], r);
            if (lab.empty()) lab = tr.continue_line(pts[k], nus[k], hit.x);
            cplx a = r[nearest_index(r, lerp(w.nu_a, hit.s2))];
            cplx b = r[nearest_index(r, lerp(w.nu_b, hit.s2))];
            xs.push_back({hit.s1, w.id, nearest_index(lab, b), nearest_index(lab, a)});
        }
    }
    std::sort(xs.begin(), xs.end(), [](auto& x, auto& y) { return x.s < y.s; });
    for (size_t i = 0; i + 1 < xs.size(); ++i)
        if (std::abs(xs[i].s - xs[i + 1].s) < 1e-9) {
            auto &p = xs[i], &q = xs[i + 1];
            if (p.from == q.to && p.to == q.from) throw NumError("lift_path: path crosses a two-way wall");
        }

    LiftedPathSum out;
    for (int i = 0; i < n; ++i) out.terms.push_back({i, i, {}, 1.0});
    for (auto& x : xs) {
        out.crossings.push_back(x.wall);
        std::vector<LiftTerm> add;
        for (auto& t : out.terms)
            if (t.end == x.from) {
                LiftTerm d = t;
                d.end = x.to;
                d.detours.push_back(x.wall);
                add.push_back(d);
            }
        out.terms.insert(out.terms.end(), add.begin(), add.end());
    }
    return out;
}

LiftedPathSum compose(const LiftedPathSum& first, const LiftedPathSum& second) {
    LiftedPathSum out;
    for (auto& a : first.terms)
        for (auto& b : second.terms) {
            if (a.end != b.start) continue;
            LiftTerm t{a.start, b.end, a.detours, a.coeff * b.coeff};
            t.detours.insert(t.detours.end(), b.detours.begin(), b.detours.end());
            out.terms.push_back(t);
        }
    out.crossings = first.crossings;
    out.crossings.insert(out.crossings.end(), second.crossings.begin(), second.crossings.end());
    return out;
}

std::string network_svg(const Network& net, const std::vector<FiniteWeb>& webs, double view_radius) {
    double R = view_radius > 0 ? view_radius : 1.5 * outer_scale(net.branch_points);
    const double W = 800.0;
    auto X = [&](cplx z) { return W / 2 + z.real() / R * W / 2; };
    auto Y = [&](cplx z) { return W / 2 - z.imag() / R * W / 2; };
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
    std::vector<bool> in_web(net.walls.size(), false);
    for (auto& web : webs)
        for (int id : web.walls) in_web[id] = true;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << W << "\" viewBox=\"0 0 " << W << ' ' << W
       << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (auto& c : net.cuts)
        os << "<line x1=\"" << X(c.lower) << "\" y1=\"" << Y(c.lower) << "\" x2=\"" << X(c.upper) << "\" y2=\"" << Y(c.upper)
           << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
    for (auto& w : net.walls) {
        int n = int(net.branch_points.size());
        const char* col = palette[(w.a * 7 + w.b * 3 + n) % 8];
        os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"" << (in_web[w.id] ? 3 : 1) << "\" points=\"";
        for (auto& z : w.points)
            if (std::abs(z) < 4 * R) os << X(z) << ',' << Y(z) << ' ';
        os << "\"><title>" << w.a + 1 << "&lt;" << w.b + 1 << "</title></polyline>\n";
    }
    for (auto& b : net.branch_points) os << "<circle cx=\"" << X(b.z) << "\" cy=\"" << Y(b.z) << "\" r=\"3\" fill=\"black\"/>\n";
    os << "<path d=\"M " << X(0.0) - 5 << ' ' << Y(0.0) - 5 << " L " << X(0.0) + 5 << ' ' << Y(0.0) + 5 << " M " << X(0.0) - 5 << ' '
       << Y(0.0) + 5 << " L " << X(0.0) + 5 << ' ' << Y(0.0) - 5 << "\" stroke=\"black\"/>\n</svg>\n";
    return os.str();
}

nlohmann::json to_json(const Network& net, const std::vector<FiniteWeb>& webs) {
    using nlohmann::json;
    json j;
    j["schema"] = "wkb.network/1";
    j["theta"] = net.theta;
    j["escape_radius"] = net.escape_radius;
    j["hit_radius"] = net.hit_radius;
    j["branch_points"] = json::array();
    for (auto& b : net.branch_points) j["branch_points"].push_back({{"re", b.z.real()}, {"im", b.z.imag()}, {"pair", {b.i + 1, b.j + 1}}});
    j["walls"] = json::array();
    for (auto& w : net.walls) {
        json o;
        o["id"] = w.id;
        o["label"] = {w.a + 1, w.b + 1};
        o["label_end"] = {w.a_end + 1, w.b_end + 1};
        if (w.primary())
            o["origin"] = {{"branch_point", w.origin_branch}};
        else
            o["origin"] = {{"joint", {w.parents[0], w.parents[1]}}};
        o["generation"] = w.generation;
        o["end"] = wall_end_name(w.end);
        if (w.end_branch >= 0) o["end_branch_point"] = w.end_branch;
        json pts = json::array();
        for (auto& z : w.points) pts.push_back({z.real(), z.imag()});
        o["points"] = pts;
        o["mass"] = {w.mass.back().real(), w.mass.back().imag()};
        j["walls"].push_back(o);
    }
    j["webs"] = json::array();
    for (auto& web : webs) {
        json o;
        o["type"] = web.type == FiniteWeb::Type::Saddle ? "saddle" : "tree";
        o["walls"] = web.walls;
        o["strings"] = web.strings;
        o["charge"] = web.charge;
        json v = json::array();
        for (auto& [name, c] : web.charge_v) v.push_back({{"cycle", name}, {"coeff", c}});
        o["charge_basis"] = v;
        o["Z"] = {web.Z.real(), web.Z.imag()};
        o["mass"] = {web.mass.real(), web.mass.imag()};
        j["webs"].push_back(o);
    }
    return j;
}

}  // namespace wkb
