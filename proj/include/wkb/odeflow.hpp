#pragma once

#include "wkb/input.hpp"
#include "wkb/numkit.hpp"
#include "wkb/stokes.hpp"

namespace wkb {

enum class Sector { Plus, Minus };

// point with an explicit branch of arg z
struct PolarPoint {
    double r = 1.0;
    double arg = 0.0;
    cplx z() const { return std::polar(r, arg); }
};

struct CanonicalFrame {
    Sector sector = Sector::Plus;
    PolarPoint base;
    CMat frame;
    double anchor_radius = 0.0;
    double anchor_remainder = 0.0;  // smallest retained formal-series term at the anchor
};

struct FrameOptions {
    double anchor_tol = 1e-13;
    double max_radius = 4096.0;
    double ode_tol = 1e-11;
};

// truncated formal solution Y(z) diag(e^{iu z/eps} z^{-t/(2 pi i eps)}) with log z supplied
CMat formal_frame(const HermitianInput& in, cplx z, cplx log_z, double* remainder = nullptr);

// R <= 0 selects the anchor radius adaptively
CanonicalFrame canonical_frame(const HermitianInput& in, Sector sector, double R, PolarPoint target,
                               const FrameOptions& opts = {});

struct StokesOptions {
    double match_arg = -kPi / 2;  // lower half plane; the upper match uses -match_arg
    double radius = 0.0;          // <= 0: min(1, eps / (u_n - u_1))
    FrameOptions frame;
};

struct StokesReport {
    StokesPair pair;
    CMat raw_plus;            // before triangular projection
    CMat raw_minus;
    double off_triangle = 0.0;  // relative mass removed from the wrong triangle of S+
    double diag_imag = 0.0;     // relative imaginary part removed from the diagonal
    double duality = 0.0;       // |S- - S+^dagger| / |S+|
    double condition = 0.0;     // condition number of the lower matching frame
};

StokesReport stokes_numeric_report(const HermitianInput& in, const StokesOptions& opts = {});
StokesPair stokes_numeric(const HermitianInput& in);

// transport around the counterclockwise circle |z| = r0 starting at z = r0
CMat monodromy0(const HermitianInput& in, double r0 = 1.0, double tol = 1e-11);

}  // namespace wkb
