#pragma once

#include "wkb/input.hpp"

namespace fixtures {

inline wkb::CMat a2() {
    wkb::CMat m(2, 2);
    m << 0, 1, 1, 2;
    return m;
}

// the 3x3 matrix used for the n=3 network picture
inline wkb::CMat a3() {
    wkb::CMat m(3, 3);
    m << 0, 1.0 / 6, 1, 1.0 / 6, 3, 1.0 / 3, 1, 1.0 / 3, 4;
    return m;
}

inline wkb::HermitianInput n2(double eps = 0.5) { return {{0.0, 1.0}, a2(), eps}; }

}  // namespace fixtures
