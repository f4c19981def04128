#include "wkb/input.hpp"

#include <cmath>
#include <limits>

namespace wkb {

void HermitianInput::validate() const {
    if (n() < 2) throw NumError("input: n must be at least 2");
    if (A.rows() != n() || A.cols() != n()) throw NumError("input: A must be n x n");
    for (int i = 1; i < n(); ++i)
        if (!(u[i] > u[i - 1])) throw NumError("input: u must be strictly increasing");
    if (!(eps > 0)) throw NumError("input: eps must be positive");
    if ((A - A.adjoint()).norm() > 1e-12 * std::max(1.0, A.norm())) throw NumError("input: A must be Hermitian");
}

RVec corner_eigs(const CMat& A, int k) { return herm_eigs(A.topLeftCorner(k, k)); }

double min_gap(const RVec& v) {
    double g = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 1; i < v.size(); ++i) g = std::min(g, std::abs(v(i) - v(i - 1)));
    return g;
}

}  // namespace wkb
