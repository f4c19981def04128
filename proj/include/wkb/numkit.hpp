#pragma once

#include <complex>
#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace wkb {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;
inline const cplx kI{0.0, 1.0};

struct NumError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// log Gamma on the principal branch
cplx log_gamma(cplx z);

struct EigResult {
    RVec values;  // ascending
    CMat vectors; // columns
};

EigResult herm_eig_full(const CMat& m, double herm_tol = 1e-10);
RVec herm_eigs(const CMat& m, double herm_tol = 1e-10);

// coeffs[k] multiplies z^k
std::vector<cplx> poly_roots(const std::vector<cplx>& coeffs, unsigned seed = 12345);
cplx poly_eval(const std::vector<cplx>& coeffs, cplx z);
double poly_scale(const std::vector<cplx>& coeffs, cplx z);
// cluster sizes, in the order of first appearance
std::vector<int> root_multiplicities(const std::vector<cplx>& roots, double radius = 1e-8);

struct Segment {
    enum class Kind { Line, Arc };
    Kind kind = Kind::Line;
    cplx a, b;            // line endpoints
    cplx center;          // arc
    double radius = 0.0;
    double theta0 = 0.0, theta1 = 0.0;

    static Segment line(cplx from, cplx to);
    static Segment arc(cplx center, double radius, double theta0, double theta1);

    cplx at(double s) const;
    cplx deriv(double s) const;  // dz/ds on s in [0,1]
    cplx start() const { return at(0.0); }
    cplx end() const { return at(1.0); }
    double length() const;
    Segment reversed() const;
};

struct PathSpec {
    std::vector<Segment> segments;

    PathSpec() = default;
    explicit PathSpec(std::vector<Segment> segs) : segments(std::move(segs)) {}
    PathSpec& add(const Segment& s) {
        segments.push_back(s);
        return *this;
    }
    double length() const;
    bool connected(double tol = 1e-9) const;
};

struct QuadResult {
    cplx value;
    double error = 0.0;
    int evaluations = 0;
};

// integrates g(s) over [0,1]
QuadResult integrate_unit(const std::function<cplx(double)>& g, double tol, int max_intervals = 20000);
QuadResult integrate_segment(const std::function<cplx(cplx)>& f, const Segment& seg, double tol);
QuadResult integrate_path(const std::function<cplx(cplx)>& f, const PathSpec& path, double tol);

using MatrixField = std::function<CMat(cplx)>;

struct OdeStats {
    int accepted = 0;
    int rejected = 0;
};

// dF/dz = rhs(z) F along the path
CMat ode_propagate(const MatrixField& rhs, const PathSpec& path, const CMat& f0, double tol,
                   OdeStats* stats = nullptr);
CMat ode_propagate_segment(const MatrixField& rhs, const Segment& seg, const CMat& f0, double tol,
                           OdeStats* stats = nullptr);

}  // namespace wkb
