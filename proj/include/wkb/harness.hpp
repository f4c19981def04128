#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "wkb/input.hpp"
#include "wkb/periods.hpp"
#include "wkb/stokes.hpp"

namespace wkb {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// u_1 = 0, u_2 = t, (u_{j+1} - u_j) = d_j (u_j - u_{j-1}) for j >= 2
struct CaterpillarParams {
    double t = 1.0;
    std::vector<double> d;

    void validate() const;
    std::vector<double> u() const;
};

struct Tolerances {
    double slope = 0.02;       // relative, fitted WKB slopes
    double reality = 1e-8;     // relative imaginary parts of periods
    double identity = 1e-10;   // exact identities
    double ode = 1e-5;         // numerical vs closed-form Stokes data
    double bracket = 1e-4;     // finite-difference Poisson brackets
    double gt = 1e-8;          // eps log of Stokes corner spectra vs corner spectra of A
};

struct CheckResult {
    std::string name;
    std::string invariant;  // the property the check exercises
    bool pass = false;
    double value = 0.0;     // worst observed deviation
    double tol = 0.0;
    std::string detail;
};

struct Report {
    std::string scenario;
    std::vector<CheckResult> checks;

    bool pass() const;
    nlohmann::json to_json() const;
};

struct Scenario {
    std::string name;
    std::vector<HermitianInput> inputs;
    std::vector<double> eps_grid;               // empty: per-check default
    std::vector<CaterpillarParams> caterpillar; // sweep points
    int samples = 0;                            // random Herm0 draws
    std::uint64_t seed = 1;
    std::vector<std::string> checks;
    Tolerances tol;
};

// names: "n2-exact-vs-ode", "mainconj-caterpillar-n3", "inequalities-n3", "networks", "poisson-n2"
Scenario builtin_scenario(const std::string& name);
std::vector<std::string> builtin_names();
Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Scenario& s);
HermitianInput input_from_json(const nlohmann::json& j);
nlohmann::json to_json(const HermitianInput& in);

// check names: ode-vs-exact, mainconj, gt-identity, period-anchors, caterpillar-convergence,
// inequalities, networks, gamma-asymptotics, poisson
std::vector<std::string> check_names();
Report run_scenario(const Scenario& s, const std::string& out_dir = "");

// strict interlacing of corner spectra, required of every input to the conjecture checks
bool in_herm0(const CMat& A, double rel_gap = 1e-8);
// smallest gap between consecutive corner spectra
double interlacing_gap(const CMat& A);
// log-uniform halving grid below the interlacing gap
std::vector<double> gap_scaled_grid(const CMat& A, int count = 4, double fraction = 0.2);

struct MainconjRow {
    int k = 0, i = 0;
    double fitted = 0.0, error = 0.0;
    double predicted = 0.0;  // -1/2 Z(C^(k)_i)
    bool pass = false;
};
// n = 2: closed-form Stokes data at in.u; n = 3: caterpillar-line data with periods at the given u
std::vector<MainconjRow> check_mainconj(const HermitianInput& in, const std::vector<double>& eps_grid,
                                        const Tolerances& tol = {});

struct RhombusReport {
    std::vector<RhombusViolation> rhombus;
    std::vector<std::string> interlacing;  // descriptions of non-strict xi triples
    bool strict() const { return rhombus.empty() && interlacing.empty(); }
};
RhombusReport check_rhombus(const LTable& l, const XiTable* xi = nullptr, double margin = 0.0);

struct PoissonResult {
    cplx lhs, rhs;                // {D11, D21} by finite differences, and -(i / 2 eps) D11 D21
    cplx lhs_conj, rhs_conj;      // {D21, conj D21} and (i / eps)(D11^-2 - D11^2)
    double residual = 0.0, residual_conj = 0.0;
    double step = 0.0;
};
// A is shifted to trace zero first so that Delta^(2)_2 = 1
PoissonResult poisson_check_n2(const std::vector<double>& u, double eps, const CMat& A, double step = 0.0);

struct SweepRow {
    CaterpillarParams params;
    int k = 0, i = 0;
    double Z = 0.0, target = 0.0, error = 0.0;  // Z(C^(k)_i) vs -sum of the top i eigenvalues of A^(k)
    std::vector<double> xi;                      // xi^(k)
    std::string failure;
};
std::vector<SweepRow> caterpillar_sweep(const std::vector<CaterpillarParams>& grid, const CMat& A);

// t = offset + (0, 1, ..., n-1), off-diagonals uniform in a disc, u = (0, 1, 1 + d, ...) with d log-uniform
struct Herm0Sampler {
    std::mt19937_64 rng;
    int n = 3;
    double radius = 0.3;
    double d_min = 8.0, d_max = 64.0;

    explicit Herm0Sampler(std::uint64_t seed, int size = 3) : rng(seed), n(size) {}
    HermitianInput next();
};

}  // namespace wkb
