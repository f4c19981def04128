#include "wkb/odeflow.hpp"

#include <cmath>

namespace wkb {

namespace {

CMat residue_matrix(const HermitianInput& in) { return kI * in.A / (2.0 * kPi); }

MatrixField connection(const HermitianInput& in) {
    const int n = in.n();
    CMat iu = CMat::Zero(n, n);
    for (int k = 0; k < n; ++k) iu(k, k) = kI * in.u[k];
    CMat b = residue_matrix(in);
    double eps = in.eps;
    return [iu, b, eps](cplx z) -> CMat { return (iu + b / z) / eps; };
}

}  // namespace

CMat formal_frame(const HermitianInput& in, cplx z, cplx log_z, double* remainder) {
    const int n = in.n();
    const double eps = in.eps;
    CMat b = residue_matrix(in);
    CVec bd = b.diagonal();
    CMat y = CMat::Identity(n, n), sum = CMat::Identity(n, n);
    cplx zinv = 1.0 / z;
    cplx zpow = 1.0;
    double prev = 1.0, smallest = 1.0;
    for (int m = 0; m < 400; ++m) {
        CMat r = -double(m) * eps * y - b * y + y * bd.asDiagonal();
        CMat next = CMat::Zero(n, n);
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                if (j != k) next(j, k) = r(j, k) / (kI * (in.u[j] - in.u[k]));
        for (int j = 0; j < n; ++j) {
            cplx acc = 0.0;
            for (int l = 0; l < n; ++l)
                if (l != j) acc += b(j, l) * next(l, j);
            next(j, j) = -acc / (double(m + 1) * eps);
        }
        zpow *= zinv;
        double term = next.norm() * std::abs(zpow);
        if (term > prev && m > 0) break;
        sum += next * zpow;
        y = next;
        prev = term;
        smallest = std::min(smallest, term);
        if (term < 1e-18) break;
    }
    if (remainder) *remainder = smallest;
    CVec phase(n);
    for (int k = 0; k < n; ++k)
        phase(k) = std::exp(kI * in.u[k] * z / eps - (in.t(k) / (2.0 * kPi * kI * eps)) * log_z);
    return sum * phase.asDiagonal();
}

CanonicalFrame canonical_frame(const HermitianInput& in, Sector sector, double R, PolarPoint target,
                               const FrameOptions& opts) {
    in.validate();
    if (!(target.r > 0)) throw NumError("canonical_frame: target must avoid z = 0");
    double lo = sector == Sector::Plus ? -1.5 * kPi : -2.0 * kPi;
    double hi = sector == Sector::Plus ? 0.5 * kPi : 0.0;
    if (target.arg < lo - 1e-12 || target.arg > hi + 1e-12)
        throw NumError("canonical_frame: target requires crossing the log cut");
    const double base_arg = sector == Sector::Plus ? 0.0 : -kPi;

    double radius = R;
    double rem = 0.0;
    CMat seed;
    auto seed_at = [&](double rr) {
        cplx z = std::polar(rr, base_arg);
        cplx lz(std::log(rr), base_arg);
        return formal_frame(in, z, lz, &rem);
    };
    if (radius > 0) {
        seed = seed_at(radius);
    } else {
        double gap = 1e300;
        for (int k = 1; k < in.n(); ++k) gap = std::min(gap, in.u[k] - in.u[k - 1]);
        radius = std::max({8.0, 2.0 * target.r, 10.0 * in.eps / gap});
        seed = seed_at(radius);
        while (rem > opts.anchor_tol) {
            radius *= 2.0;
            if (radius > opts.max_radius) throw NumError("canonical_frame: anchor tolerance unreachable");
            seed = seed_at(radius);
        }
    }

    PathSpec path;
    cplx start = std::polar(radius, base_arg), corner = std::polar(target.r, base_arg);
    path.add(Segment::line(start, corner));
    if (target.arg != base_arg) path.add(Segment::arc(0.0, target.r, base_arg, target.arg));

    CanonicalFrame out;
    out.sector = sector;
    out.base = target;
    out.anchor_radius = radius;
    out.anchor_remainder = rem;
    out.frame = ode_propagate(connection(in), path, seed, opts.ode_tol);
    return out;
}

StokesReport stokes_numeric_report(const HermitianInput& in, const StokesOptions& opts) {
    in.validate();
    const int n = in.n();
    double rho = opts.radius;
    if (!(rho > 0)) rho = std::min(1.0, in.eps / (in.u.back() - in.u.front()));
    const double phi = opts.match_arg;
    if (!(phi > -kPi && phi < 0)) throw NumError("stokes_numeric: matching argument must lie in (-pi, 0)");

    CVec half(n), half_inv(n);
    for (int k = 0; k < n; ++k) {
        half(k) = std::exp(in.t(k) / (2.0 * in.eps));
        half_inv(k) = 1.0 / half(k);
    }

    CMat fp_low = canonical_frame(in, Sector::Plus, 0.0, {rho, phi}, opts.frame).frame;
    CMat fm_low = canonical_frame(in, Sector::Minus, 0.0, {rho, phi}, opts.frame).frame;
    CMat fp_up = canonical_frame(in, Sector::Plus, 0.0, {rho, -phi}, opts.frame).frame;
    CMat fm_up = canonical_frame(in, Sector::Minus, 0.0, {rho, -phi - 2.0 * kPi}, opts.frame).frame;

    StokesReport rep;
    Eigen::JacobiSVD<CMat> svd(fm_low);
    rep.condition = svd.singularValues()(0) / svd.singularValues()(n - 1);
    rep.raw_plus = half.asDiagonal() * fm_low.colPivHouseholderQr().solve(fp_low);
    rep.raw_minus = fp_up.colPivHouseholderQr().solve(fm_up) * half_inv.asDiagonal();

    CMat sp = rep.raw_plus;
    double scale = sp.norm();
    double lower = 0.0, imag = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < i; ++j) {
            lower += std::norm(sp(i, j));
            sp(i, j) = 0.0;
        }
        imag = std::max(imag, std::abs(sp(i, i).imag()) / std::abs(sp(i, i)));
        sp(i, i) = sp(i, i).real();
    }
    rep.off_triangle = std::sqrt(lower) / scale;
    rep.diag_imag = imag;
    rep.duality = (rep.raw_minus - rep.raw_plus.adjoint()).norm() / scale;
    rep.pair = StokesPair{sp};
    for (int i = 0; i < n; ++i)
        if (!(sp(i, i).real() > 0)) throw NumError("stokes_numeric: non-positive diagonal entry");
    return rep;
}

StokesPair stokes_numeric(const HermitianInput& in) {
    StokesReport r = stokes_numeric_report(in);
    if (r.off_triangle > 1e-6) throw NumError("stokes_numeric: off-triangle residue above tolerance");
    return r.pair;
}

CMat monodromy0(const HermitianInput& in, double r0, double tol) {
    in.validate();
    PathSpec loop({Segment::arc(0.0, r0, 0.0, 2.0 * kPi)});
    return ode_propagate(connection(in), loop, CMat::Identity(in.n(), in.n()), tol);
}

}  // namespace wkb
