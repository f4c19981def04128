#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "wkb/curve.hpp"

namespace wkb {

struct NetworkOptions {
    double step = 0.02;          // step as a fraction of the local length scale
    double hit_radius = 0.0;     // <= 0: 1e-4 times the outermost branch-point modulus
    int max_generation = 4;
    double escape_factor = 10.0; // escape radius over the outermost branch-point modulus
    int max_steps = 40000;
    double max_turns = 3.0;      // turns around z = 0 before a wall counts as falling into it
    int max_walls = 120;
};

enum class WallEnd { Infinity, Origin, BranchPoint, Spiral, Length, Ambiguous };
const char* wall_end_name(WallEnd e);

// label (a, b) is written a<b in pictures: solitons start on sheet b and end on sheet a
struct Wall {
    int id = 0;
    int a = 0, b = 0;          // sheets at the start point, global labeling
    int a_end = -1, b_end = -1; // sheets at the last point, global labeling
    int origin_branch = -1;    // primary walls
    int parents[2] = {-1, -1}; // walls born at a joint
    int generation = 0;
    std::vector<cplx> points;
    std::vector<cplx> nu_a, nu_b;  // tracked eigenvalues of the two sheets
    std::vector<cplx> mass;        // integral of (mu_a - mu_b) dz from the origin, parents included
    std::vector<double> arclength;
    WallEnd end = WallEnd::Length;
    int end_branch = -1;
    double closest_miss = 1e300;   // nearest approach to a branch point of the same sheet pair
    bool primary() const { return parents[0] < 0; }
};

struct Network {
    double theta = 0.0;
    double escape_radius = 0.0;
    double hit_radius = 0.0;
    std::vector<BranchPoint> branch_points;
    std::vector<Cut> cuts;
    std::vector<Wall> walls;
};

Network trace_network(const CurveModel& m, double theta, const NetworkOptions& opts = {});

struct FiniteWeb {
    enum class Type { Saddle, Tree } type = Type::Saddle;
    std::vector<int> walls;  // every wall contributing a string
    int strings = 0;
    cplx mass;               // traced period of the web
    std::string charge;      // h_ij or ht_ij; empty when no class matched
    std::vector<std::pair<std::string, int>> charge_v;  // V-basis expansion
    cplx Z;                  // period of the matched class
};

// delta <= 0 uses the tracing hit radius
std::vector<FiniteWeb> detect_finite_webs(const CurveModel& m, const Network& net, double delta = 0.0);

// |arg(-Z) - theta| for the matched charge
double web_phase_check(const FiniteWeb& web, double theta);

// theta in [theta0 - width, theta0 + width] minimizing the near-miss distances of primary walls,
// then moved to the nearest arg(-Z) of an h or h~ class inside the window
double refine_theta(const CurveModel& m, double theta0, double width, const NetworkOptions& opts = {}, int iterations = 10);

struct LiftTerm {
    int start = 0, end = 0;        // sheets, 0-based
    std::vector<int> detours;      // wall ids, in crossing order
    double coeff = 1.0;
};
struct LiftedPathSum {
    std::vector<LiftTerm> terms;
    std::vector<int> crossings;    // wall ids crossed, in order
};
LiftedPathSum lift_path(const CurveModel& m, const Network& net, const PathSpec& path);
LiftedPathSum compose(const LiftedPathSum& first, const LiftedPathSum& second);

std::string network_svg(const Network& net, const std::vector<FiniteWeb>& webs, double view_radius = 0.0);
nlohmann::json to_json(const Network& net, const std::vector<FiniteWeb>& webs);

}  // namespace wkb
