#pragma once

#include <vector>

#include "wkb/numkit.hpp"

namespace wkb {

struct HermitianInput {
    std::vector<double> u;
    CMat A;
    double eps = 0.5;

    int n() const { return int(u.size()); }
    double t(int i) const { return A(i, i).real(); }
    // throws NumError when u is not strictly increasing, A is not Hermitian, or eps <= 0
    void validate() const;
};

// eigenvalues of the leading k x k corner, ascending
RVec corner_eigs(const CMat& A, int k);

// dimensionless relative gap, used to guard against repeated eigenvalues
double min_gap(const RVec& v);

}  // namespace wkb
