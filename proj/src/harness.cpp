#include "wkb/harness.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <set>
#include <sstream>

#include "wkb/curve.hpp"
#include "wkb/network.hpp"
#include "wkb/odeflow.hpp"

namespace wkb {

using nlohmann::json;

namespace {

const std::map<std::string, std::string>& invariants() {
    static const std::map<std::string, std::string> m = {
        {"ode-vs-exact", "odeflow: numerical Stokes matrices agree with the n=2 closed form"},
        {"mainconj", "harness: fitted WKB exponents of minors equal -1/2 Z(C^(k)_i)"},
        {"gt-identity", "stokes: eps log eigenvalues of S^(k) equal corner eigenvalues of A on the caterpillar line"},
        {"period-anchors", "periods: Z(V^(n)_i) = -lambda_i, Z(V^(1)_i) = -t_i and vanishing periods are real"},
        {"caterpillar-convergence", "periods: Z(C^(k)_i) tends to minus the top-i corner eigenvalue sum along the caterpillar sweep"},
        {"inequalities", "stokes/periods: strict rhombus for fitted l, strict interlacing for xi, h and h~ periods real and negative"},
        {"networks", "network: finite webs at the real phase carry the h and h~ charges; walls at infinity carry every label"},
        {"gamma-asymptotics", "stokes: Gamma-ratio expansion remainder is O(eps)"},
        {"poisson", "harness: A -> S+ is Poisson from KKS to eps^-1 times the SU(2)* bracket"},
    };
    return m;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

CMat matrix_from_json(const json& j) {
    auto rows_of = [](const json& a) {
        if (!a.is_array() || a.empty()) throw ConfigError("A: expected a non-empty array of rows");
        return a.size();
    };
    json re = j, im;
    if (j.is_object()) {
        if (!j.contains("re")) throw ConfigError("A: object form needs \"re\"");
        re = j.at("re");
        if (j.contains("im")) im = j.at("im");
    }
    const size_t n = rows_of(re);
    CMat A = CMat::Zero(Eigen::Index(n), Eigen::Index(n));
    for (size_t r = 0; r < n; ++r) {
        if (!re[r].is_array() || re[r].size() != n) throw ConfigError("A: rows must have length n");
        for (size_t c = 0; c < n; ++c) {
            if (!re[r][c].is_number()) throw ConfigError("A: entries must be numbers");
            double v = re[r][c].get<double>(), w = 0.0;
            if (!im.is_null()) {
                if (!im.is_array() || im.size() != n || !im[r].is_array() || im[r].size() != n || !im[r][c].is_number())
                    throw ConfigError("A: \"im\" must match the shape of \"re\"");
                w = im[r][c].get<double>();
            }
            A(Eigen::Index(r), Eigen::Index(c)) = cplx(v, w);
        }
    }
    return A;
}

template <class T>
T get_or(const json& j, const char* key, T def) {
    if (!j.contains(key)) return def;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string(key) + ": " + e.what());
    }
}

// ---- individual checks -------------------------------------------------

struct Artifacts {
    std::filesystem::path dir;
    bool on() const { return !dir.empty(); }
    void write(const std::string& name, const std::string& text) const {
        if (!on()) return;
        std::ofstream f(dir / name);
        f << text;
    }
};

CheckResult make(const std::string& name, const std::string& key) {
    CheckResult r;
    r.name = name;
    r.invariant = invariants().at(key);
    return r;
}

double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

std::vector<double> grid_for(const Scenario& s, const HermitianInput& in) {
    return s.eps_grid.empty() ? gap_scaled_grid(in.A) : s.eps_grid;
}

CheckResult ode_vs_exact(const HermitianInput& in, const Tolerances& tol, const std::string& tag) {
    CheckResult r = make("ode-vs-exact" + tag, "ode-vs-exact");
    r.tol = tol.ode;
    if (in.n() != 2) {
        r.pass = true;
        r.detail = "skipped: no closed form for n != 2";
        return r;
    }
    StokesReport rep = stokes_numeric_report(in);
    StokesPair ex = stokes_n2_exact(in);
    for (int i = 0; i < 2; ++i)
        for (int j = i; j < 2; ++j) r.value = std::max(r.value, rel(rep.pair.S_plus(i, j), ex.S_plus(i, j)));
    r.pass = r.value <= tol.ode;
    r.detail = "duality " + fmt(rep.duality) + ", off-triangle " + fmt(rep.off_triangle);
    return r;
}

CheckResult mainconj(const HermitianInput& in, const std::vector<double>& grid, const Tolerances& tol,
                     const std::string& tag, const Artifacts& art) {
    CheckResult r = make("mainconj" + tag, "mainconj");
    r.tol = tol.slope;
    try {
        auto rows = check_mainconj(in, grid, tol);
        std::ostringstream csv, det;
        csv << "k,i,fitted,error,predicted,pass\n";
        csv.precision(12);
        r.pass = true;
        for (auto& row : rows) {
            csv << row.k << ',' << row.i << ',' << row.fitted << ',' << row.error << ',' << row.predicted << ','
                << (row.pass ? 1 : 0) << '\n';
            double dev = std::abs(row.fitted - row.predicted);
            r.value = std::max(r.value, std::abs(row.predicted) > tol.identity ? dev / std::abs(row.predicted) : dev);
            if (!row.pass) {
                r.pass = false;
                det << "(" << row.k << "," << row.i << ") fitted " << fmt(row.fitted) << " vs " << fmt(row.predicted) << "; ";
            }
        }
        r.detail = det.str().empty() ? std::to_string(rows.size()) + " minors agree" : det.str();
        art.write("mainconj" + tag + ".csv", csv.str());
    } catch (const std::exception& e) {
        r.pass = false;
        r.detail = e.what();
    }
    return r;
}

std::vector<CheckResult> gt_identity(const HermitianInput& in, const Tolerances& tol, const std::string& tag) {
    std::vector<CheckResult> out;
    CheckResult r = make("gt-identity" + tag, "gt-identity");
    r.tol = tol.gt;
    const int n = in.n();
    if (n > 3) {
        r.pass = true;
        r.detail = "skipped: caterpillar formulas exist for n <= 3";
        return {r};
    }
    const double t = in.u[1] - in.u[0];
    StokesPair s = n == 2 ? stokes_n2_exact(in) : stokes_cat_n3(in.A, t, in.eps);
    auto logs = gt_eigs_of_S(s);
    for (int k = 1; k <= n; ++k) {
        RVec lam = corner_eigs(in.A, k);
        for (int i = 0; i < k; ++i) r.value = std::max(r.value, std::abs(in.eps * logs[size_t(k - 1)][size_t(i)] - lam(i)));
    }
    r.pass = r.value <= tol.gt;
    out.push_back(r);
    if (n == 3) {
        CheckResult m = make("gt-identity" + tag + "/minor-32", "gt-identity");
        m.tol = tol.identity;
        CatN3Parts parts;
        StokesPair p = stokes_cat_n3_log(in.A, t, in.eps, &parts).exponentiate();
        cplx direct = minor(p.S_plus, 3, 2), simplified = parts.delta32_simplified.value();
        m.value = rel(direct, simplified);
        m.pass = m.value <= tol.identity;
        m.detail = "Delta(3,2) against the two-term expression";
        out.push_back(m);
    }
    return out;
}

CheckResult period_anchors(const HermitianInput& in, const Tolerances& tol, const std::string& tag, const Artifacts& art) {
    CheckResult r = make("period-anchors" + tag, "period-anchors");
    r.tol = tol.reality;
    try {
        CurveModel m = build_curve(in);
        const int n = in.n();
        RVec lam = herm_eigs(in.A);
        const double scale = std::max(lam.cwiseAbs().maxCoeff(), 1e-300);
        double imag = 0.0;
        for (int i = 1; i <= n; ++i) {
            r.value = std::max(r.value, std::abs(period(m, vanishing_cycle(m, n, i), 1e-11) + lam(i - 1)) / scale);
            r.value = std::max(r.value, std::abs(period(m, vanishing_cycle(m, 1, i), 1e-11) + in.t(i - 1)) / scale);
        }
        for (int k = 1; k <= n; ++k)
            for (int j = 1; j <= k; ++j) {
                cplx Z = period(m, vanishing_cycle(m, k, j), 1e-11);
                imag = std::max(imag, std::abs(Z.imag()) / (1 + std::abs(Z)));
            }
        r.value = std::max(r.value, imag);
        r.pass = r.value <= tol.reality;
        r.detail = "max relative imaginary part " + fmt(imag);
        if (art.on()) {
            auto rows = period_rows(m);
            std::ostringstream csv;
            write_period_csv(csv, rows);
            art.write("periods" + tag + ".csv", csv.str());
            art.write("periods" + tag + ".json", period_json(rows).dump(2));
            art.write("curve" + tag + ".json", to_json(m).dump(2));
        }
    } catch (const std::exception& e) {
        r.pass = false;
        r.detail = e.what();
    }
    return r;
}

std::vector<CheckResult> convergence(const HermitianInput& in, const std::vector<CaterpillarParams>& grid,
                                     const std::string& tag, const Artifacts& art) {
    CheckResult r = make("caterpillar-convergence" + tag, "caterpillar-convergence");
    r.tol = 0.05;
    if (grid.empty()) {
        r.pass = true;
        r.detail = "empty sweep";
        return {r};
    }
    // order the sweep by the size of its first ratio
    std::vector<CaterpillarParams> g = grid;
    std::stable_sort(g.begin(), g.end(), [](const CaterpillarParams& a, const CaterpillarParams& b) {
        return a.d.empty() || (!b.d.empty() && a.d.front() < b.d.front());
    });
    auto rows = caterpillar_sweep(g, in.A);
    std::ostringstream csv, det;
    csv.precision(12);
    csv << "t,d,k,i,Z,target,error,failure\n";
    std::map<std::pair<int, int>, std::vector<const SweepRow*>> by;
    for (auto& row : rows) {
        csv << row.params.t << ',';
        for (size_t q = 0; q < row.params.d.size(); ++q) csv << (q ? ";" : "") << row.params.d[q];
        csv << ',' << row.k << ',' << row.i << ',' << row.Z << ',' << row.target << ',' << row.error << ',' << row.failure
            << '\n';
        if (!row.failure.empty()) {
            det << "failure at d=" << fmt(row.params.d.empty() ? 0.0 : row.params.d.front()) << ": " << row.failure << "; ";
            continue;
        }
        by[{row.k, row.i}].push_back(&row);
    }
    art.write("caterpillar" + tag + ".csv", csv.str());
    r.pass = det.str().empty();
    const double floor = 1e-9;
    for (auto& [key, seq] : by) {
        for (size_t q = 1; q < seq.size(); ++q)
            if (seq[q]->error > floor && !(seq[q]->error < seq[q - 1]->error)) {
                r.pass = false;
                det << "(" << key.first << "," << key.second << ") error grows at d=" << fmt(seq[q]->params.d.front()) << "; ";
            }
        const SweepRow& last = *seq.back();
        double v = last.error / std::max(std::abs(last.target), 1e-300);
        if (last.error <= floor) v = 0.0;
        r.value = std::max(r.value, v);
        if (v > r.tol) {
            r.pass = false;
            det << "(" << key.first << "," << key.second << ") final relative error " << fmt(v) << "; ";
        }
    }
    r.detail = det.str().empty() ? std::to_string(by.size()) + " distinguished periods converge" : det.str();

    // xi^(k)_i approaches lambda^(k)_i at the last sweep point
    CheckResult x = make("caterpillar-convergence" + tag + "/xi", "caterpillar-convergence");
    x.tol = 0.05;
    x.pass = true;
    for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
        if (!it->failure.empty() || it->xi.empty()) continue;
        if (it->params.d != g.back().d || it->params.t != g.back().t) break;
        RVec lam = corner_eigs(in.A, it->k);
        double scale = std::max(lam.cwiseAbs().maxCoeff(), 1e-300);
        for (int i = 0; i < it->k; ++i) x.value = std::max(x.value, std::abs(it->xi[size_t(i)] - lam(i)) / scale);
    }
    x.pass = x.value <= x.tol;
    x.detail = "xi against corner eigenvalues at the largest ratio";
    return {r, x};
}

struct SampleOutcome {
    int rhombus = 0, interlacing = 0, reality = 0, sign = 0;
    double worst_imag = 0.0, worst_fit = 0.0;
    std::string failure;
};

SampleOutcome inequalities_one(const HermitianInput& in, const std::vector<double>& fixed_grid, const Tolerances& tol) {
    SampleOutcome o;
    try {
        const double t = in.u[1] - in.u[0];
        std::vector<double> grid = fixed_grid.empty() ? gap_scaled_grid(in.A) : fixed_grid;
        WkbSweep sweep;
        sweep.eps = grid;
        for (double e : grid) sweep.tables.push_back(caterpillar_minors_log(in.A, t, e));
        const int n = in.n();
        LTable l(static_cast<size_t>(n));
        for (int k = 1; k <= n; ++k)
            for (int i = 1; i <= k; ++i) {
                WkbFit f = wkb_fit(sweep, k, i);
                l[size_t(k - 1)].push_back(f.leading);
                o.worst_fit = std::max(o.worst_fit, f.error);
            }
        CurveModel m = build_curve(in);
        XiTable xi = xi_table(m);
        RhombusReport rep = check_rhombus(l, &xi);
        o.rhombus = int(rep.rhombus.size());
        o.interlacing = int(rep.interlacing.size());
        for (int i = 1; i <= n; ++i)
            for (int j = i + 1; j <= n; ++j) {
                HPair hp = h_cycles(m, i, j);
                for (const Cycle* c : {&hp.h, &hp.h_tilde}) {
                    cplx Z = period(m, *c);
                    double im = std::abs(Z.imag()) / (1 + std::abs(Z));
                    o.worst_imag = std::max(o.worst_imag, im);
                    if (im > tol.reality) ++o.reality;
                    if (!(Z.real() < 0)) ++o.sign;
                }
            }
    } catch (const std::exception& e) {
        o.failure = e.what();
    }
    return o;
}

CheckResult inequalities(const std::vector<HermitianInput>& items, const Scenario& s, const Artifacts& art) {
    CheckResult r = make("inequalities", "inequalities");
    r.tol = s.tol.reality;
    std::vector<std::future<SampleOutcome>> jobs;
    for (auto& in : items) jobs.push_back(std::async(std::launch::async, inequalities_one, in, s.eps_grid, s.tol));
    int bad = 0, rh = 0, il = 0, re = 0, sg = 0;
    std::ostringstream csv, det;
    csv.precision(12);
    csv << "sample,rhombus,interlacing,nonreal,nonnegative,max_imag,failure\n";
    for (size_t q = 0; q < jobs.size(); ++q) {
        SampleOutcome o = jobs[q].get();
        csv << q << ',' << o.rhombus << ',' << o.interlacing << ',' << o.reality << ',' << o.sign << ',' << o.worst_imag
            << ',' << o.failure << '\n';
        rh += o.rhombus;
        il += o.interlacing;
        re += o.reality;
        sg += o.sign;
        r.value = std::max(r.value, o.worst_imag);
        if (!o.failure.empty()) {
            ++bad;
            if (bad <= 3) det << "sample " << q << ": " << o.failure << "; ";
        }
    }
    art.write("inequalities.csv", csv.str());
    r.pass = bad == 0 && rh == 0 && il == 0 && re == 0 && sg == 0;
    det << items.size() << " samples: " << rh << " rhombus, " << il << " interlacing, " << re << " non-real, " << sg
        << " non-negative";
    r.detail = det.str();
    return r;
}

std::vector<CheckResult> networks(const HermitianInput& in, const std::string& tag, const Artifacts& art) {
    CheckResult r = make("networks" + tag, "networks");
    CheckResult topo = make("networks" + tag + "/topology", "networks");
    try {
        CurveModel m = build_curve(in);
        const int n = in.n();
        NetworkOptions opts;
        double theta = refine_theta(m, 0.003, 0.01, opts);
        Network net = trace_network(m, theta, opts);
        auto webs = detect_finite_webs(m, net);
        r.tol = 1e-6;
        std::set<std::string> found;
        std::ostringstream det;
        int trees5 = 0;
        r.pass = true;
        for (auto& w : webs) {
            if (w.charge.empty()) {
                r.pass = false;
                det << "unmatched web of mass " << fmt(w.mass.real()) << "; ";
                continue;
            }
            found.insert(w.charge);
            r.value = std::max(r.value, web_phase_check(w, theta));
            if (!(w.Z.real() < 0)) {
                r.pass = false;
                det << w.charge << " has non-negative period; ";
            }
            if (w.type == FiniteWeb::Type::Tree && w.charge == "ht_13" && w.strings == 5) ++trees5;
        }
        if (r.value > r.tol) r.pass = false;
        for (int i = 1; i <= n; ++i)
            for (int j = i + 1; j <= n; ++j)
                for (std::string name : {"h_", "ht_"}) {
                    std::string c = name + std::to_string(i) + std::to_string(j);
                    if (!found.count(c)) {
                        r.pass = false;
                        det << "missing " << c << "; ";
                    }
                }
        if (n == 2 && webs.size() != 2) {
            r.pass = false;
            det << webs.size() << " webs instead of 2; ";
        }
        if (n == 3 && trees5 == 0) {
            r.pass = false;
            det << "no 5-string tree with charge ht_13; ";
        }
        det << webs.size() << " webs at theta " << fmt(theta);
        r.detail = det.str();
        art.write("network" + tag + ".json", to_json(net, webs).dump(1));
        art.write("network" + tag + ".svg", network_svg(net, webs));

        // labels at infinity at a nearby generic phase
        Network gen = trace_network(m, 0.0005, opts);
        std::set<std::pair<int, int>> labels;
        int scattered = 0;
        for (auto& w : gen.walls) {
            if (w.end == WallEnd::Infinity) labels.insert({w.a_end, w.b_end});
            if (!w.primary()) ++scattered;
        }
        topo.tol = 0.0;
        topo.pass = int(labels.size()) == n * (n - 1) && (n == 2 || scattered > 0);
        topo.value = double(n * (n - 1) - int(labels.size()));
        topo.detail = std::to_string(labels.size()) + " labels at infinity, " + std::to_string(scattered) + " scattered walls of " +
                      std::to_string(gen.walls.size());
        art.write("network" + tag + "-generic.svg", network_svg(gen, {}));
    } catch (const std::exception& e) {
        r.pass = false;
        r.detail = e.what();
        topo.pass = false;
        topo.detail = e.what();
    }
    return {r, topo};
}

CheckResult gamma_check() {
    CheckResult r = make("gamma-asymptotics", "gamma-asymptotics");
    r.tol = 2.0;
    for (double rr : {1.0, -1.0, 3.0, -3.0}) {
        double lo = 1e300, hi = 0.0;
        for (double e : {0.2, 0.1, 0.05, 0.025}) {
            double q = gamma_asym(rr, e).residual / e;
            lo = std::min(lo, q);
            hi = std::max(hi, q);
        }
        r.value = std::max(r.value, hi / lo);
    }
    r.pass = r.value < r.tol;
    r.detail = "largest spread of residual/eps over eps in {0.2, 0.1, 0.05, 0.025}, r in {+-1, +-3}";
    return r;
}

CheckResult poisson(const HermitianInput& in, const Tolerances& tol, const std::string& tag) {
    CheckResult r = make("poisson" + tag, "poisson");
    r.tol = tol.bracket;
    if (in.n() != 2) {
        r.pass = true;
        r.detail = "skipped: n != 2";
        return r;
    }
    try {
        PoissonResult p = poisson_check_n2(in.u, in.eps, in.A);
        r.value = std::max(p.residual, p.residual_conj);
        r.pass = r.value <= tol.bracket;
        r.detail = "first " + fmt(p.residual) + ", conjugate " + fmt(p.residual_conj) + ", step " + fmt(p.step);
    } catch (const std::exception& e) {
        r.pass = false;
        r.detail = e.what();
    }
    return r;
}

json tol_json(const Tolerances& t) {
    return {{"slope", t.slope}, {"reality", t.reality}, {"identity", t.identity},
            {"ode", t.ode},     {"bracket", t.bracket}, {"gt", t.gt}};
}

}  // namespace

// ---- types -------------------------------------------------------------

void CaterpillarParams::validate() const {
    if (!(t > 0) || !std::isfinite(t)) throw ConfigError("caterpillar: t must be positive");
    for (double v : d)
        if (!(v > 1) || !std::isfinite(v)) throw ConfigError("caterpillar: ratios must exceed 1");
}

std::vector<double> CaterpillarParams::u() const {
    validate();
    std::vector<double> out = {0.0, t};
    for (double v : d) {
        size_t q = out.size();
        out.push_back(out[q - 1] + v * (out[q - 1] - out[q - 2]));
    }
    return out;
}

bool Report::pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

json Report::to_json() const {
    json cs = json::array();
    for (auto& c : checks)
        cs.push_back({{"name", c.name},
                      {"invariant", c.invariant},
                      {"pass", c.pass},
                      {"value", c.value},
                      {"tol", c.tol},
                      {"detail", c.detail}});
    return {{"schema", "wkb.report/1"}, {"scenario", scenario}, {"pass", pass()}, {"checks", cs}};
}

// ---- Herm0 helpers -----------------------------------------------------

double interlacing_gap(const CMat& A) {
    const int n = int(A.rows());
    double g = std::numeric_limits<double>::infinity();
    for (int k = 1; k < n; ++k) {
        RVec lo = corner_eigs(A, k), hi = corner_eigs(A, k + 1);
        for (int i = 0; i < k; ++i) g = std::min({g, lo(i) - hi(i), hi(i + 1) - lo(i)});
    }
    return g;
}

bool in_herm0(const CMat& A, double rel_gap) {
    if (A.rows() < 2) return false;
    double scale = std::max(1.0, herm_eigs(A).cwiseAbs().maxCoeff());
    return interlacing_gap(A) > rel_gap * scale;
}

std::vector<double> gap_scaled_grid(const CMat& A, int count, double fraction) {
    double g = interlacing_gap(A);
    if (!(g > 0)) throw NumError("gap_scaled_grid: interlacing is not strict");
    return halving_grid(fraction * g, count);
}

HermitianInput Herm0Sampler::next() {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        CMat A = CMat::Zero(n, n);
        double offset = 2.0 * U(rng) - 1.0;
        for (int i = 0; i < n; ++i) A(i, i) = offset + i;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                double rad = radius * std::sqrt(U(rng)), ph = 2.0 * kPi * U(rng);
                A(i, j) = std::polar(rad, ph);
                A(j, i) = std::conj(A(i, j));
            }
        CaterpillarParams p;
        for (int j = 2; j < n; ++j) p.d.push_back(d_min * std::pow(d_max / d_min, U(rng)));
        if (genericity_check(A).generic && in_herm0(A)) return {p.u(), A, 0.5};
    }
    throw NumError("Herm0Sampler: no generic sample in 1000 draws");
}

// ---- conjecture and inequality checks ----------------------------------

std::vector<MainconjRow> check_mainconj(const HermitianInput& in, const std::vector<double>& eps_grid,
                                        const Tolerances& tol) {
    in.validate();
    const int n = in.n();
    if (n > 3) throw NumError("check_mainconj: exact Stokes data available for n <= 3 only");
    if (!in_herm0(in.A)) throw NumError("check_mainconj: A is not in Herm0 (interlacing not strict)");
    const double t = in.u[1] - in.u[0];
    WkbSweep sweep;
    sweep.eps = eps_grid;
    for (double e : eps_grid) {
        if (n == 3) {
            sweep.tables.push_back(caterpillar_minors_log(in.A, t, e));
            continue;
        }
        LogMinorTable tab(2);
        tab.d(1, 1) = LogC::from_log(in.t(0) / (2 * e));
        tab.d(2, 1) = stokes_n2_offdiag_log(t, in.A, e);
        tab.d(2, 2) = LogC::from_log((in.t(0) + in.t(1)) / (2 * e));
        sweep.tables.push_back(tab);
    }
    CurveModel m = build_curve(in);
    std::vector<MainconjRow> rows;
    for (int k = 1; k <= n; ++k)
        for (int i = 1; i <= k; ++i) {
            MainconjRow row;
            row.k = k;
            row.i = i;
            WkbFit f = wkb_fit(sweep, k, i);
            row.fitted = f.leading;
            row.error = f.error;
            row.predicted = -0.5 * period(m, distinguished_cycle(m, k, i), 1e-11).real();
            row.pass = std::abs(row.fitted - row.predicted) <= tol.slope * std::abs(row.predicted) + tol.identity;
            rows.push_back(row);
        }
    return rows;
}

RhombusReport check_rhombus(const LTable& l, const XiTable* xi, double margin) {
    RhombusReport r;
    r.rhombus = rhombus_violations(l, margin);
    if (xi) {
        for (int j = 1; j < xi->n; ++j)
            for (int i = 1; i <= j; ++i) {
                double lo = xi->at(j + 1, i), mid = xi->at(j, i), hi = xi->at(j + 1, i + 1);
                if (!(lo + margin < mid && mid + margin < hi)) {
                    std::ostringstream os;
                    os << "xi(" << j + 1 << "," << i << ")=" << lo << " <= xi(" << j << "," << i << ")=" << mid
                       << " <= xi(" << j + 1 << "," << i + 1 << ")=" << hi;
                    r.interlacing.push_back(os.str());
                }
            }
    }
    return r;
}

PoissonResult poisson_check_n2(const std::vector<double>& u, double eps, const CMat& A0, double step) {
    if (u.size() != 2 || A0.rows() != 2) throw NumError("poisson_check_n2: n must be 2");
    const double du = u[1] - u[0];
    CMat A = A0;
    double shift = 0.5 * (A(0, 0) + A(1, 1)).real();
    A(0, 0) -= shift;
    A(1, 1) -= shift;
    HermitianInput base{u, A, eps};
    base.validate();

    // chart x = (t1, t2, Re a, Im a)
    auto build = [&](const double* x) {
        CMat B(2, 2);
        B(0, 0) = x[0];
        B(1, 1) = x[1];
        B(0, 1) = cplx(x[2], x[3]);
        B(1, 0) = cplx(x[2], -x[3]);
        return B;
    };
    const double x0[4] = {A(0, 0).real(), A(1, 1).real(), A(0, 1).real(), A(0, 1).imag()};
    auto d11 = [&](const CMat& B) { return cplx(std::exp(B(0, 0).real() / (2 * eps))); };
    auto d21 = [&](const CMat& B) { return stokes_n2_offdiag_log(du, B, eps).value(); };

    auto central = [&](auto&& f, int c, double h) {
        double xp[4], xm[4];
        std::copy(x0, x0 + 4, xp);
        std::copy(x0, x0 + 4, xm);
        xp[c] += h;
        xm[c] -= h;
        return (f(build(xp)) - f(build(xm))) / (2 * h);
    };
    auto richardson = [&](auto&& f, int c, double h) { return (4.0 * central(f, c, h / 2) - central(f, c, h)) / 3.0; };

    auto gradient = [&](auto&& f, double h) {
        std::array<cplx, 4> g;
        for (int c = 0; c < 4; ++c) g[size_t(c)] = richardson(f, c, h);
        return g;
    };
    // Wirtinger derivatives d/dA_ij from the real chart
    auto wirt = [](const std::array<cplx, 4>& g) {
        CMat W(2, 2);
        W(0, 0) = g[0];
        W(1, 1) = g[1];
        W(0, 1) = 0.5 * (g[2] - kI * g[3]);
        W(1, 0) = 0.5 * (g[2] + kI * g[3]);
        return W;
    };
    // {A_ij, A_kl} = -i (delta_jk A_il - delta_il A_kj)
    auto bracket = [&](const CMat& F, const CMat& G) {
        cplx s = 0.0;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int k = 0; k < 2; ++k)
                    for (int l = 0; l < 2; ++l) {
                        cplx b = (j == k ? A(i, l) : cplx(0.0)) - (i == l ? A(k, j) : cplx(0.0));
                        s += F(i, j) * G(k, l) * (-kI * b);
                    }
        return s;
    };
    auto evaluate = [&](double h, cplx& first, cplx& second) {
        auto g11 = gradient(d11, h), g21 = gradient(d21, h);
        std::array<cplx, 4> g21c;
        for (int c = 0; c < 4; ++c) g21c[size_t(c)] = std::conj(g21[size_t(c)]);
        first = bracket(wirt(g11), wirt(g21));
        second = bracket(wirt(g21), wirt(g21c));
    };

    PoissonResult p;
    const cplx D11 = d11(A), D21 = d21(A);
    p.rhs = -kI / (2 * eps) * D11 * D21;
    p.rhs_conj = kI / eps * (1.0 / (D11 * D11) - D11 * D11);
    if (step > 0) {
        evaluate(step, p.lhs, p.lhs_conj);
        p.step = step;
    } else {
        // pick the consecutive pair of step sizes whose Richardson values agree best
        double best = std::numeric_limits<double>::infinity();
        cplx prev1, prev2;
        for (int k = 0; k < 12; ++k) {
            double h = 0.1 * eps * std::pow(0.5, k);
            cplx a, b;
            evaluate(h, a, b);
            if (k > 0) {
                double agree = std::abs(a - prev1) / std::max(std::abs(a), 1e-300) +
                               std::abs(b - prev2) / std::max(std::abs(b), 1e-300);
                if (agree < best) {
                    best = agree;
                    p.lhs = a;
                    p.lhs_conj = b;
                    p.step = h;
                }
            }
            prev1 = a;
            prev2 = b;
        }
    }
    p.residual = rel(p.lhs, p.rhs);
    p.residual_conj = rel(p.lhs_conj, p.rhs_conj);
    return p;
}

std::vector<SweepRow> caterpillar_sweep(const std::vector<CaterpillarParams>& grid, const CMat& A) {
    const int n = int(A.rows());
    auto one = [&A, n](CaterpillarParams p) {
        std::vector<SweepRow> rows;
        auto fail = [&](const std::string& why) {
            for (int k = 2; k <= n; ++k)
                for (int i = 1; i <= k; ++i) {
                    SweepRow r;
                    r.params = p;
                    r.k = k;
                    r.i = i;
                    r.failure = why;
                    rows.push_back(r);
                }
            return rows;
        };
        try {
            std::vector<double> u = p.u();
            if (int(u.size()) != n) return fail("ratio count does not match n");
            CurveModel m = build_curve({u, A, 0.5});
            XiTable xi = xi_table(m, 1e-11);
            for (int k = 2; k <= n; ++k) {
                RVec lam = corner_eigs(A, k);
                for (int i = 1; i <= k; ++i) {
                    SweepRow r;
                    r.params = p;
                    r.k = k;
                    r.i = i;
                    r.Z = period(m, distinguished_cycle(m, k, i), 1e-11).real();
                    r.target = -lam.tail(i).sum();
                    r.error = std::abs(r.Z - r.target);
                    r.xi.assign(xi.xi[size_t(k - 1)].begin(), xi.xi[size_t(k - 1)].begin() + k);
                    rows.push_back(r);
                }
            }
        } catch (const std::exception& e) {
            rows.clear();
            return fail(e.what());
        }
        return rows;
    };
    std::vector<std::future<std::vector<SweepRow>>> jobs;
    for (auto& p : grid) jobs.push_back(std::async(std::launch::async, one, p));
    std::vector<SweepRow> out;
    for (auto& j : jobs) {
        auto rows = j.get();
        out.insert(out.end(), rows.begin(), rows.end());
    }
    return out;
}

// ---- scenarios ---------------------------------------------------------

std::vector<std::string> check_names() {
    return {"ode-vs-exact", "mainconj", "gt-identity", "period-anchors", "caterpillar-convergence",
            "inequalities", "networks", "gamma-asymptotics", "poisson"};
}

std::vector<std::string> builtin_names() {
    return {"n2-exact-vs-ode", "mainconj-caterpillar-n3", "inequalities-n3", "networks", "poisson-n2"};
}

Scenario builtin_scenario(const std::string& name) {
    CMat a2(2, 2);
    a2 << 0, 1, 1, 2;
    CMat a3(3, 3);
    a3 << 0, 1.0 / 6, 1, 1.0 / 6, 3, 1.0 / 3, 1, 1.0 / 3, 4;
    Scenario s;
    s.name = name;
    if (name == "n2-exact-vs-ode") {
        s.inputs = {{{0.0, 1.0}, a2, 0.5}};
        s.eps_grid = halving_grid(0.2, 5);
        s.checks = {"ode-vs-exact", "mainconj", "gt-identity", "poisson"};
    } else if (name == "mainconj-caterpillar-n3") {
        s.inputs = {{{0.0, 1.0, 1000.0}, a3, 0.5}};
        s.caterpillar = {{1.0, {9.0}}, {1.0, {99.0}}, {1.0, {999.0}}};
        s.checks = {"mainconj", "gt-identity", "caterpillar-convergence"};
    } else if (name == "inequalities-n3") {
        s.samples = 100;
        s.seed = 1;
        s.checks = {"inequalities"};
    } else if (name == "networks") {
        s.inputs = {{{0.0, 1.0}, a2, 0.5}, {{0.0, 0.25, 1.0}, a3, 0.5}};
        s.checks = {"networks"};
    } else if (name == "poisson-n2") {
        s.inputs = {{{0.0, 1.0}, a2, 0.5}, {{0.0, 1.0}, a2, 0.3}};
        s.checks = {"poisson", "gamma-asymptotics"};
    } else {
        throw ConfigError("unknown builtin scenario: " + name);
    }
    return s;
}

HermitianInput input_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("input: expected an object");
    for (auto& [k, v] : j.items())
        if (k != "u" && k != "A" && k != "eps") throw ConfigError("input: unknown key " + k);
    if (!j.contains("u") || !j.contains("A")) throw ConfigError("input: \"u\" and \"A\" are required");
    HermitianInput in;
    in.u = get_or<std::vector<double>>(j, "u", {});
    in.A = matrix_from_json(j.at("A"));
    in.eps = get_or<double>(j, "eps", 0.5);
    try {
        in.validate();
    } catch (const NumError& e) {
        throw ConfigError(e.what());
    }
    return in;
}

json to_json(const HermitianInput& in) {
    json re = json::array(), im = json::array();
    for (int r = 0; r < in.A.rows(); ++r) {
        json a = json::array(), b = json::array();
        for (int c = 0; c < in.A.cols(); ++c) {
            a.push_back(in.A(r, c).real());
            b.push_back(in.A(r, c).imag());
        }
        re.push_back(a);
        im.push_back(b);
    }
    return {{"u", in.u}, {"A", {{"re", re}, {"im", im}}}, {"eps", in.eps}};
}

Scenario scenario_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("scenario: expected a JSON object");
    static const std::set<std::string> keys = {"schema", "name",  "inputs", "eps_grid",  "caterpillar",
                                               "samples", "seed", "checks", "tolerances"};
    for (auto& [k, v] : j.items())
        if (!keys.count(k)) throw ConfigError("scenario: unknown key " + k);
    if (get_or<std::string>(j, "schema", "") != "wkb.scenario/1") throw ConfigError("scenario: schema must be wkb.scenario/1");
    Scenario s;
    s.name = get_or<std::string>(j, "name", "");
    if (s.name.empty()) throw ConfigError("scenario: name is required");
    if (j.contains("inputs")) {
        if (!j.at("inputs").is_array()) throw ConfigError("inputs: expected an array");
        for (auto& e : j.at("inputs")) s.inputs.push_back(input_from_json(e));
    }
    s.eps_grid = get_or<std::vector<double>>(j, "eps_grid", {});
    for (double e : s.eps_grid)
        if (!(e > 0)) throw ConfigError("eps_grid: entries must be positive");
    if (j.contains("caterpillar")) {
        if (!j.at("caterpillar").is_array()) throw ConfigError("caterpillar: expected an array");
        for (auto& e : j.at("caterpillar")) {
            if (!e.is_object()) throw ConfigError("caterpillar: expected objects");
            CaterpillarParams p;
            p.t = get_or<double>(e, "t", 1.0);
            p.d = get_or<std::vector<double>>(e, "d", {});
            p.validate();
            s.caterpillar.push_back(p);
        }
    }
    s.samples = get_or<int>(j, "samples", 0);
    if (s.samples < 0) throw ConfigError("samples: must be non-negative");
    s.seed = get_or<std::uint64_t>(j, "seed", 1);
    s.checks = get_or<std::vector<std::string>>(j, "checks", {});
    auto known = check_names();
    for (auto& c : s.checks)
        if (std::find(known.begin(), known.end(), c) == known.end()) throw ConfigError("checks: unknown check " + c);
    if (j.contains("tolerances")) {
        const json& t = j.at("tolerances");
        if (!t.is_object()) throw ConfigError("tolerances: expected an object");
        for (auto& [k, v] : t.items()) {
            if (!v.is_number() || !(v.get<double>() > 0)) throw ConfigError("tolerances: " + k + " must be a positive number");
            double x = v.get<double>();
            if (k == "slope") s.tol.slope = x;
            else if (k == "reality") s.tol.reality = x;
            else if (k == "identity") s.tol.identity = x;
            else if (k == "ode") s.tol.ode = x;
            else if (k == "bracket") s.tol.bracket = x;
            else if (k == "gt") s.tol.gt = x;
            else throw ConfigError("tolerances: unknown key " + k);
        }
    }
    return s;
}

json to_json(const Scenario& s) {
    json inputs = json::array(), cat = json::array();
    for (auto& in : s.inputs) inputs.push_back(to_json(in));
    for (auto& p : s.caterpillar) cat.push_back({{"t", p.t}, {"d", p.d}});
    return {{"schema", "wkb.scenario/1"}, {"name", s.name},         {"inputs", inputs},
            {"eps_grid", s.eps_grid},     {"caterpillar", cat},     {"samples", s.samples},
            {"seed", s.seed},             {"checks", s.checks},     {"tolerances", tol_json(s.tol)}};
}

Report run_scenario(const Scenario& s, const std::string& out_dir) {
    for (auto& in : s.inputs) in.validate();
    for (auto& p : s.caterpillar) p.validate();
    auto known = check_names();
    for (auto& c : s.checks)
        if (std::find(known.begin(), known.end(), c) == known.end()) throw ConfigError("unknown check " + c);

    Artifacts art;
    if (!out_dir.empty()) {
        art.dir = out_dir;
        std::filesystem::create_directories(art.dir);
    }
    Report rep;
    rep.scenario = s.name;
    auto tag = [&](size_t q) { return s.inputs.size() > 1 ? "[" + std::to_string(q) + "]" : std::string(); };
    auto add = [&](std::vector<CheckResult> v) { rep.checks.insert(rep.checks.end(), v.begin(), v.end()); };

    std::vector<HermitianInput> sampled;
    if (s.samples > 0) {
        Herm0Sampler gen(s.seed);
        for (int q = 0; q < s.samples; ++q) sampled.push_back(gen.next());
    }
    for (auto& c : s.checks) {
        if (c == "gamma-asymptotics") {
            add({gamma_check()});
            continue;
        }
        if (c == "inequalities") {
            std::vector<HermitianInput> items = s.inputs;
            items.insert(items.end(), sampled.begin(), sampled.end());
            add({inequalities(items, s, art)});
            continue;
        }
        const auto& items = c == "period-anchors" && s.inputs.empty() ? sampled : s.inputs;
        for (size_t q = 0; q < items.size(); ++q) {
            const HermitianInput& in = items[q];
            std::string t = items.size() > 1 ? "[" + std::to_string(q) + "]" : tag(q);
            if (c == "ode-vs-exact") add({ode_vs_exact(in, s.tol, t)});
            else if (c == "mainconj") add({mainconj(in, grid_for(s, in), s.tol, t, art)});
            else if (c == "gt-identity") add(gt_identity(in, s.tol, t));
            else if (c == "period-anchors") add({period_anchors(in, s.tol, t, art)});
            else if (c == "caterpillar-convergence") add(convergence(in, s.caterpillar, t, art));
            else if (c == "networks") add(networks(in, t, art));
            else if (c == "poisson") add({poisson(in, s.tol, t)});
        }
    }
    if (art.on()) {
        json doc = rep.to_json();
        doc["config"] = to_json(s);
        art.write("report.json", doc.dump(2));
    }
    return rep;
}

}  // namespace wkb
