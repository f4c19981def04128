#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "wkb/curve.hpp"
#include "wkb/harness.hpp"
#include "wkb/network.hpp"
#include "wkb/odeflow.hpp"
#include "wkb/periods.hpp"
#include "wkb/stokes.hpp"

using namespace wkb;
using nlohmann::json;

namespace {

struct Options {
    std::string config;
    std::string out = "out";
    std::string example = "n2";
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string eps_grid;
    bool svg = false;
    Tolerances tol;
    std::vector<std::string> tol_set;

    // network
    double theta = 0.0;
    double refine = 0.0;
    double delta = 0.0;
    NetworkOptions net;

    // verify
    std::vector<std::string> scenarios;
};

json read_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open " + path);
    try {
        return json::parse(f);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            size_t used = 0;
            double v = std::stod(item, &used);
            if (used != item.size() || !(v > 0)) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw ConfigError("--eps-grid: bad value '" + item + "'");
        }
    }
    return out;
}

HermitianInput example_input(const std::string& name) {
    Scenario s = builtin_scenario(name == "n3" ? "networks" : "n2-exact-vs-ode");
    return name == "n3" ? s.inputs.at(1) : s.inputs.at(0);
}

// an input object, or a scenario whose first input is used
HermitianInput load_input(const Options& o) {
    if (o.config.empty()) {
        if (o.example != "n2" && o.example != "n3") throw ConfigError("--example must be n2 or n3");
        return example_input(o.example);
    }
    json j = read_json(o.config);
    if (j.contains("schema")) {
        Scenario s = scenario_from_json(j);
        if (s.inputs.empty()) throw ConfigError("scenario has no inputs");
        return s.inputs.front();
    }
    return input_from_json(j);
}

std::filesystem::path out_dir(const Options& o) {
    std::filesystem::path p(o.out);
    std::filesystem::create_directories(p);
    return p;
}

void write(const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p);
    f << text;
    std::cout << "wrote " << p.string() << "\n";
}

json matrix_json(const CMat& M) {
    json rows = json::array();
    for (int r = 0; r < M.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < M.cols(); ++c) row.push_back({M(r, c).real(), M(r, c).imag()});
        rows.push_back(row);
    }
    return rows;
}

int cmd_curve(const Options& o) {
    CurveModel m = build_curve(load_input(o));
    auto dir = out_dir(o);
    write(dir / "curve.json", to_json(m).dump(2));
    std::cout << m.branch_points.size() << " branch points, " << m.cuts.size() << " cuts, ordering hypothesis "
              << (m.ordering_hypothesis ? "holds" : "fails") << "\n";
    return 0;
}

int cmd_periods(const Options& o) {
    CurveModel m = build_curve(load_input(o));
    auto rows = period_rows(m);
    auto dir = out_dir(o);
    std::ostringstream csv;
    write_period_csv(csv, rows);
    write(dir / "periods.csv", csv.str());
    json doc = {{"periods", period_json(rows)}};
    try {
        XiTable xi = xi_table(m);
        doc["xi"] = xi.xi;
    } catch (const NumError& e) {
        std::cerr << "xi table unavailable: " << e.what() << "\n";
    }
    write(dir / "periods.json", doc.dump(2));
    for (auto& r : rows) std::cout << r.tag << "  " << r.Z.real() << " " << r.Z.imag() << "\n";
    return 0;
}

int cmd_stokes_cat(const Options& o) {
    HermitianInput in = load_input(o);
    const int n = in.n();
    if (n != 2 && n != 3) throw ConfigError("stokes-cat: n must be 2 or 3");
    const double t = in.u[1] - in.u[0];
    std::vector<double> grid = o.eps_grid.empty() ? std::vector<double>{in.eps} : parse_grid(o.eps_grid);
    json doc = {{"n", n}, {"t", t}, {"points", json::array()}};
    WkbSweep sweep;
    for (double e : grid) {
        StokesPair s = n == 2 ? stokes_n2_exact({{0.0, t}, in.A, e}) : stokes_cat_n3(in.A, t, e);
        LogMinorTable lm = caterpillar_minors_log(in.A, t, e);
        json minors = json::array();
        for (int k = 1; k <= n; ++k)
            for (int i = 1; i <= k; ++i) minors.push_back({{"k", k}, {"i", i}, {"log_abs", lm.d(k, i).log_abs()}});
        doc["points"].push_back({{"eps", e}, {"S_plus", matrix_json(s.S_plus)}, {"minors", minors}});
        sweep.eps.push_back(e);
        sweep.tables.push_back(lm);
    }
    if (grid.size() >= 3) {
        LTable want = caterpillar_exponents(in.A);
        json fits = json::array();
        for (int k = 1; k <= n; ++k)
            for (int i = 1; i <= k; ++i) {
                WkbFit f = wkb_fit(sweep, k, i);
                fits.push_back({{"k", k}, {"i", i}, {"leading", f.leading}, {"error", f.error},
                                {"exponent", want[size_t(k - 1)][size_t(i - 1)]}});
                std::cout << "l(" << k << "," << i << ") = " << f.leading << " +- " << f.error << "  exponent "
                          << want[size_t(k - 1)][size_t(i - 1)] << "\n";
            }
        doc["fits"] = fits;
    }
    write(out_dir(o) / "stokes_cat.json", doc.dump(2));
    return 0;
}

int cmd_stokes_ode(const Options& o) {
    HermitianInput in = load_input(o);
    std::vector<double> grid = o.eps_grid.empty() ? std::vector<double>{in.eps} : parse_grid(o.eps_grid);
    json doc = json::array();
    for (double e : grid) {
        in.eps = e;
        StokesReport r = stokes_numeric_report(in);
        json item = {{"eps", e},
                     {"S_plus", matrix_json(r.pair.S_plus)},
                     {"off_triangle", r.off_triangle},
                     {"diag_imag", r.diag_imag},
                     {"duality", r.duality},
                     {"condition", r.condition}};
        if (in.n() == 2) {
            StokesPair ex = stokes_n2_exact(in);
            item["closed_form_deviation"] = (r.pair.S_plus - ex.S_plus).norm() / ex.S_plus.norm();
        }
        std::cout << "eps " << e << ": duality " << r.duality << ", off-triangle " << r.off_triangle << "\n";
        doc.push_back(item);
    }
    write(out_dir(o) / "stokes_ode.json", doc.dump(2));
    return 0;
}

int cmd_network(const Options& o) {
    CurveModel m = build_curve(load_input(o));
    double theta = o.theta;
    if (o.refine > 0) {
        theta = refine_theta(m, o.theta, o.refine, o.net);
        std::cout << "refined phase " << theta << "\n";
    }
    Network net = trace_network(m, theta, o.net);
    auto webs = detect_finite_webs(m, net, o.delta);
    auto dir = out_dir(o);
    write(dir / "network.json", to_json(net, webs).dump(1));
    if (o.svg) write(dir / "network.svg", network_svg(net, webs));
    std::cout << net.walls.size() << " walls, " << webs.size() << " finite webs\n";
    for (auto& w : webs)
        std::cout << "  " << (w.type == FiniteWeb::Type::Saddle ? "saddle " : "tree   ") << (w.charge.empty() ? "?" : w.charge)
                  << "  Z = " << w.Z.real() << "  strings " << w.strings << "\n";
    return 0;
}

int cmd_verify(const Options& o) {
    std::vector<Scenario> list;
    if (!o.config.empty()) list.push_back(scenario_from_json(read_json(o.config)));
    for (auto& name : o.scenarios) {
        if (name == "all")
            for (auto& b : builtin_names()) list.push_back(builtin_scenario(b));
        else
            list.push_back(builtin_scenario(name));
    }
    if (list.empty())
        for (auto& b : builtin_names()) list.push_back(builtin_scenario(b));
    bool all = true;
    for (auto& s : list) {
        if (o.seed_set) s.seed = o.seed;
        if (!o.eps_grid.empty()) s.eps_grid = parse_grid(o.eps_grid);
        for (auto& key : o.tol_set) {
            if (key == "slope") s.tol.slope = o.tol.slope;
            if (key == "reality") s.tol.reality = o.tol.reality;
            if (key == "identity") s.tol.identity = o.tol.identity;
            if (key == "ode") s.tol.ode = o.tol.ode;
            if (key == "bracket") s.tol.bracket = o.tol.bracket;
            if (key == "gt") s.tol.gt = o.tol.gt;
        }
        std::string dir = (std::filesystem::path(o.out) / s.name).string();
        Report r = run_scenario(s, dir);
        std::cout << "scenario " << s.name << ": " << (r.pass() ? "PASS" : "FAIL") << "\n";
        for (auto& c : r.checks)
            std::cout << "  " << (c.pass ? "PASS " : "FAIL ") << c.name << "  value " << c.value << "  tol " << c.tol << "  "
                      << c.detail << "\n";
        all = all && r.pass();
    }
    return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"WKB Stokes data, spectral curves and spectral networks"};
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    app.add_option("--config", o.config, "JSON input or scenario file");
    app.add_option("--out", o.out, "output directory")->capture_default_str();
    app.add_option("--example", o.example, "built-in input when no --config is given (n2 or n3)")->capture_default_str();
    auto* seed = app.add_option("--seed", o.seed, "seed for the random Herm0 sampler");
    app.add_option("--eps-grid", o.eps_grid, "comma-separated eps values");
    app.add_flag("--svg", o.svg, "also write SVG pictures");
    struct TolFlag {
        const char* key;
        double* slot;
    };
    for (TolFlag f : {TolFlag{"slope", &o.tol.slope}, TolFlag{"reality", &o.tol.reality}, TolFlag{"identity", &o.tol.identity},
                      TolFlag{"ode", &o.tol.ode}, TolFlag{"bracket", &o.tol.bracket}, TolFlag{"gt", &o.tol.gt}}) {
        std::string key = f.key;
        app.add_option_function<double>(
               "--tol-" + key,
               [&o, key, slot = f.slot](double v) {
                   if (!(v > 0)) throw CLI::ValidationError("--tol-" + key, "must be positive");
                   *slot = v;
                   o.tol_set.push_back(key);
               },
               "tolerance override: " + key);
    }

    auto* curve = app.add_subcommand("curve", "branch points and cuts of the spectral curve");
    auto* periods = app.add_subcommand("periods", "vanishing, distinguished and h periods");
    auto* cat = app.add_subcommand("stokes-cat", "caterpillar-line Stokes matrices and minor slopes");
    auto* ode = app.add_subcommand("stokes-ode", "Stokes matrices from the ODE");
    auto* network = app.add_subcommand("network", "spectral network at a phase");
    network->add_option("--theta", o.theta, "phase")->capture_default_str();
    network->add_option("--refine", o.refine, "refine the phase within this half-width");
    network->add_option("--step", o.net.step, "step as a fraction of the local length scale")->capture_default_str();
    network->add_option("--delta", o.delta, "web detection radius (0: hit radius)")->capture_default_str();
    network->add_option("--max-generation", o.net.max_generation, "generation cap for scattered walls")->capture_default_str();
    network->add_option("--escape-factor", o.net.escape_factor, "escape radius over the outermost branch point")
        ->capture_default_str();
    network->add_option("--max-walls", o.net.max_walls, "wall budget")->capture_default_str();
    auto* verify = app.add_subcommand("verify", "run scenarios; exit status 0 iff every check passes");
    verify->add_option("--scenario", o.scenarios, "built-in scenario name or 'all'");

    CLI11_PARSE(app, argc, argv);
    o.seed_set = seed->count() > 0;

    try {
        if (*curve) return cmd_curve(o);
        if (*periods) return cmd_periods(o);
        if (*cat) return cmd_stokes_cat(o);
        if (*ode) return cmd_stokes_ode(o);
        if (*network) return cmd_network(o);
        if (*verify) return cmd_verify(o);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
