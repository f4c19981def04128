#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wkb/curve.hpp"

namespace wkb {

// sheet is 0-based; labels are carried by continuation from the first segment of a chain
struct CycleSegment {
    Segment seg;
    int sheet = 0;
};

struct Chain {
    double coeff = 1.0;
    std::vector<CycleSegment> segments;
};

struct Cycle {
    std::string tag;
    std::vector<Chain> terms;

    Cycle& add(const Cycle& other, double coeff = 1.0);
};

// radius of the circle V^(k), k in 1..n
double vanishing_radius(const CurveModel& m, int k);

// 1-based indices throughout, as in V^(k)_j, C^(k)_i, h_ij
Cycle vanishing_cycle(const CurveModel& m, int k, int j);
Cycle distinguished_cycle(const CurveModel& m, int k, int i);

struct HPair {
    Cycle h;        // loop around B_ij on sheet i
    Cycle h_tilde;  // V^(j)_{i+1} - V^(j-1)_i
};
HPair h_cycles(const CurveModel& m, int i, int j);
// h_ij as the formal difference V^(j-1)_i - V^(j)_i
Cycle h_formal(const CurveModel& m, int i, int j);

cplx period(const CurveModel& m, const Cycle& c, double tol = 1e-9);

struct XiTable {
    int n = 0;
    std::vector<std::vector<double>> xi;  // xi[j-1][i-1]; i > j filled with t_i when near the caterpillar line
    double max_imag = 0.0;
    double at(int j, int i) const { return xi[j - 1][i - 1]; }
};
XiTable xi_table(const CurveModel& m, double tol = 1e-9);

// log with its cut along the nonnegative imaginary axis, real on the positive axis
cplx branch_log(cplx z);

// regularized open periods for n = 2: "c1", "c2", "a21"
cplx open_period_n2(const CurveModel& m, const std::string& name, double tol = 1e-10);
cplx a21_closed_form(const HermitianInput& in);

// Re Z of an open path from the closed cycle (gamma - iota(gamma)) / 2:
// "a21", "c1", "c2" for n = 2 and "a32-c2+a21" for n = 3
double real_part_by_involution(const CurveModel& m, const std::string& name, double tol = 1e-9);

struct PeriodRow {
    std::string tag;
    int k = 0, i = 0;
    cplx Z;
    double tol = 0.0;
};
std::vector<PeriodRow> period_rows(const CurveModel& m, double tol = 1e-9);
void write_period_csv(std::ostream& os, const std::vector<PeriodRow>& rows);
nlohmann::json period_json(const std::vector<PeriodRow>& rows);

}  // namespace wkb
