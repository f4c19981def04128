#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "wkb/input.hpp"
#include "wkb/numkit.hpp"

namespace wkb {

// sheet indices are 0-based in code; pair (i, j) always has i < j
struct BranchPoint {
    cplx z;
    int i = -1, j = -1;
};

struct Cut {
    cplx lower, upper;  // conjugate endpoints, Im(upper) > 0
    int i = -1, j = -1;
    int family = 0;     // j + 1, in 2..n; family 2 lies farthest from the origin in-regime
    double re() const { return upper.real(); }
    double half_height() const { return upper.imag(); }
};

struct CurveModel {
    HermitianInput input;
    double anchor_radius = 0.0;
    std::vector<BranchPoint> branch_points;
    std::vector<Cut> cuts;  // by family, then by Re ascending
    double lambda_ratio = 0.0;          // max |t_j - t_k| / min |t_j' - t_k'|
    bool ordering_hypothesis = false;   // gap ratios of u exceed lambda_ratio
};

CurveModel build_curve(const HermitianInput& in);

// characteristic polynomial of M, ascending, monic
std::vector<cplx> charpoly(const CMat& M);
cplx discriminant(const std::vector<cplx>& monic);

// nonzero z where two eigenvalues of diag(u) + A/(2 pi z) collide (u may repeat)
std::vector<cplx> discriminant_zeros(const std::vector<double>& u, const CMat& A);

// unlabeled eigenvalues nu of diag(u) + A/(2 pi z); sheet values are mu = i nu
std::vector<cplx> sheet_roots(const std::vector<double>& u, const CMat& A, cplx z);

// nearest-match continuation; empty result when the match is ambiguous
std::vector<cplx> match_roots(const std::vector<cplx>& prev, const std::vector<cplx>& roots);

struct TrackedSegment;

class SheetTracker {
public:
    explicit SheetTracker(const CurveModel& m) : model_(m) {}

    std::vector<cplx> roots(cplx z) const;
    // labeled nu at z via the far-field anchor and a vertical approach
    std::vector<cplx> global(cplx z) const;
    // accepted nodes are appended to record when given
    std::vector<cplx> continue_segment(const Segment& seg, double s0, double s1, std::vector<cplx> nu,
                                       TrackedSegment* record = nullptr) const;
    std::vector<cplx> continue_line(cplx from, const std::vector<cplx>& nu, cplx to) const;

private:
    const CurveModel& model_;
};

// labeled sheet values along one segment
struct TrackedSegment {
    Segment seg;
    std::vector<double> s;
    std::vector<std::vector<cplx>> nu;

    std::vector<cplx> at(const CurveModel& m, double sv) const;
};
TrackedSegment track_segment(const CurveModel& m, const Segment& seg, const std::vector<cplx>& nu_start);

// labeled mu values; with a hint (z_prev, mu_prev) the values are continued from there
std::vector<cplx> sheets_at(const CurveModel& m, cplx z);
std::vector<cplx> sheets_at(const CurveModel& m, cplx z, cplx hint_z, const std::vector<cplx>& hint_mu);

const std::vector<BranchPoint>& branch_points(const CurveModel& m);
const std::vector<Cut>& branch_cuts(const CurveModel& m);

struct PunctureResidues {
    std::vector<cplx> at_zero;      // per sheet near 0, ascending eigenvalue order
    std::vector<cplx> at_infinity;  // per sheet label
};
PunctureResidues puncture_residues(const CurveModel& m);

struct CaterpillarComponent {
    int k = 0;
    std::vector<double> e_k;  // (0, ..., 0, 1)
    CMat A_k;
    std::vector<cplx> residues_zero;
    std::vector<cplx> residues_infinity;  // lambda^(k-1) part then t_k
    std::vector<cplx> branch_points;
    bool generic = false;
};
CaterpillarComponent caterpillar_component(const CMat& A, int k);

struct GenericityReport {
    std::vector<int> k;
    std::vector<bool> simple_discriminant;
    std::vector<bool> simple_eigenvalues;
    bool generic = false;
};
GenericityReport genericity_check(const CMat& A);

// branch points of diag(u) + A/(2 pi z) for diagonal A
inline cplx diagonal_node(double ti, double tj, double ui, double uj) { return -(ti - tj) / (2.0 * kPi * (ui - uj)); }

nlohmann::json to_json(const CurveModel& m);

}  // namespace wkb
