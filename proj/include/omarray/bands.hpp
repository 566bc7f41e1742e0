#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <vector>

#include "scattering.hpp"

namespace omarray
{

// One sample of the infinite-array dispersion with the energy split of the
// right-moving Bloch mode between waveguide, optical cavity and mechanics.
struct DispersionPoint
{
    double delta = 0.0;
    cplx bloch_kd{0.0};
    double f_waveguide = 0.0;
    double f_optical = 0.0;
    double f_mechanical = 0.0;
    bool band_edge = false;  // occupations undefined (degenerate Bloch modes)
};

struct BandEdges
{
    double inner = 0.0;  // slow band spans (-inner, inner)
    double outer = 0.0;  // gaps span inner < |delta| < outer
    double inner_approx = 0.0;  // 2 Omega^2 / kappa
    double outer_approx = 0.0;  // kappa_ex / 2
    bool strong_driving = false;
};

// cos(K d) = cos(kd) - i beta sin(kd)
inline cplx cos_bloch(double delta, const SystemParams &p)
{
    const double kd = free_phase(delta, p);
    return std::cos(kd) - kI * beta(delta, p) * std::sin(kd);
}

namespace detail
{
// Shift the real part by multiples of 2 pi into (reference - pi, reference + pi].
inline cplx wrap_near(cplx kd, double reference)
{
    double re = kd.real();
    const double turns = std::round((re - reference) / kTwoPi);
    re -= turns * kTwoPi;
    if (re <= reference - kPi)
        re += kTwoPi;
    return {re, kd.imag()};
}

inline cplx bloch_from_cos(cplx c, double reference)
{
    cplx kd = std::acos(c);
    if (kd.imag() < 0.0)
        kd = -kd;
    return wrap_near(kd, reference);
}
} // namespace detail

// Bloch phase per cell K d on the branch with Im(Kd) >= 0 (the mode that
// carries energy to the right and decays in that direction). In a lossless
// propagating band this is the branch with positive group velocity.
inline cplx bloch_wavevector(double delta, const SystemParams &p)
{
    return detail::bloch_from_cos(cos_bloch(delta, p), p.phase_per_cell);
}

// Right side of the lossless simplified dispersion at quarter-wave phasing:
//   cos(K d) = -kappa_ex delta / (2 (Omega^2 - delta^2))
inline double simplified_cos_bloch(double delta, const SystemParams &p)
{
    const double om2 = p.omega_drive * p.omega_drive;
    return -p.kappa_ex * delta / (2.0 * (om2 - delta * delta));
}

namespace detail
{
inline double bisect(const std::function<double(double)> &f, double lo, double hi)
{
    double flo = f(lo);
    for (int i = 0; i < 200 && hi - lo > 1e-15 * std::abs(hi); ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fmid = f(mid);
        if ((fmid < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}
} // namespace detail

inline BandEdges band_edges(const SystemParams &p)
{
    require_valid(p);
    if (!(p.omega_drive > 0.0))
        throw ValidationError("band_edges requires omega_drive > 0");
    const double om = p.omega_drive;
    BandEdges e;
    // Inner edge: simplified cos(Kd) reaches -1 on (0, Omega).
    e.inner = detail::bisect([&](double d) { return simplified_cos_bloch(d, p) + 1.0; }, 0.0, om);
    // Outer edge: cos(Kd) falls back to +1 on (Omega, inf); it is below 1 past kappa_ex + Omega.
    const double hi = p.kappa_ex + 2.0 * om;
    e.outer = detail::bisect([&](double d) { return simplified_cos_bloch(d, p) - 1.0; },
                             om * (1.0 + 1e-12), hi);
    e.inner_approx = 2.0 * om * om / p.kappa();
    e.outer_approx = 0.5 * p.kappa_ex;
    e.strong_driving = om > p.kappa_ex;
    return e;
}

struct Occupations
{
    double f_waveguide = 0.0;
    double f_optical = 0.0;
    double f_mechanical = 0.0;
    double n_waveguide = 0.0;
    double n_optical = 0.0;
    double n_mechanical = 0.0;
};

// Index of the eigenvalue of M_block that belongs to the Bloch phase kd.
inline int bloch_mode_index(const EigenPair2 &e, cplx kd)
{
    const cplx target = std::exp(kI * kd);
    return std::abs(e.values[0] - target) <= std::abs(e.values[1] - target) ? 0 : 1;
}

// Excitation numbers per unit Bloch amplitude (unit-norm eigenvector of M_block),
// normalized into fractions.
inline Occupations occupations(double delta, const SystemParams &p)
{
    const auto eig = eigen_decompose(block_matrix(delta, p));
    if (eig.degenerate)
        throw NumericalError("occupations undefined at a band edge (degenerate Bloch modes)");
    const cplx kd = bloch_wavevector(delta, p);
    const auto &s = eig.vectors[bloch_mode_index(eig, kd)];
    const double sum_sq = std::norm(s[0] + s[1]);

    Occupations o;
    o.n_waveguide = p.cell_transit * (std::norm(s[0]) + std::norm(s[1]));
    o.n_optical = 2.0 * std::norm(beta(delta, p)) / p.kappa_ex * sum_sq;
    if (p.omega_drive > 0.0) {
        // Omega^2/(delta^2 + gamma^2/4) |beta|^2 simplifies to a regular expression at delta = 0.
        const double om2 = p.omega_drive * p.omega_drive;
        const cplx den = detail::driven_denominator(delta, p.kappa_in, p);
        o.n_mechanical = om2 * 0.5 * p.kappa_ex / std::norm(den) * sum_sq;
    }
    const double total = o.n_waveguide + o.n_optical + o.n_mechanical;
    if (!(total > 0.0))
        throw NumericalError("occupations undefined: zero total excitation");
    o.f_waveguide = o.n_waveguide / total;
    o.f_optical = o.n_optical / total;
    o.f_mechanical = o.n_mechanical / total;
    return o;
}

// Dispersion over a grid, with Re(Kd) made continuous starting from the
// sample nearest delta = 0.
inline std::vector<DispersionPoint> dispersion(const SystemParams &p, const std::vector<double> &grid)
{
    require_valid(p);
    std::vector<DispersionPoint> out(grid.size());
    if (grid.empty())
        return out;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        auto &pt = out[i];
        pt.delta = grid[i];
        pt.bloch_kd = bloch_wavevector(grid[i], p);
        try {
            const auto o = occupations(grid[i], p);
            pt.f_waveguide = o.f_waveguide;
            pt.f_optical = o.f_optical;
            pt.f_mechanical = o.f_mechanical;
        } catch (const NumericalError &) {
            pt.band_edge = true;
            pt.f_waveguide = pt.f_optical = pt.f_mechanical = std::numeric_limits<double>::quiet_NaN();
        }
    }

    auto closest_abs = std::min_element(grid.begin(), grid.end(),
                                        [](double a, double b) { return std::abs(a) < std::abs(b); });
    const std::size_t origin = static_cast<std::size_t>(closest_abs - grid.begin());
    auto follow = [&](std::size_t from, std::size_t to) {
        const double prev = out[from].bloch_kd.real();
        cplx best = detail::wrap_near(out[to].bloch_kd, prev);
        // A real Bloch phase may be mirrored without breaking Im >= 0.
        if (std::abs(out[to].bloch_kd.imag()) < 1e-12) {
            const cplx mirrored = detail::wrap_near(std::conj(-out[to].bloch_kd), prev);
            if (std::abs(mirrored.real() - prev) < std::abs(best.real() - prev))
                best = mirrored;
        }
        out[to].bloch_kd = best;
    };
    for (std::size_t i = origin + 1; i < out.size(); ++i)
        follow(i - 1, i);
    for (std::size_t i = origin; i-- > 0;)
        follow(i + 1, i);
    return out;
}

struct GroupVelocity
{
    double group_velocity_cells = 0.0;  // cells per second
    double delay_per_cell = 0.0;        // d Re(Kd) / d delta
    double step = 0.0;
    bool near_band_edge = false;
};

// Central difference of Re(Kd). The default step is 1e-3 of the slow-band half width.
inline GroupVelocity group_velocity_numeric(double delta, const SystemParams &p, double step = 0.0)
{
    require_valid(p);
    if (!(p.omega_drive > 0.0))
        throw ValidationError("group velocity requires omega_drive > 0");
    const double half_band = 2.0 * p.omega_drive * p.omega_drive / p.kappa_ex;
    GroupVelocity g;
    g.step = step > 0.0 ? step : 1e-3 * half_band;
    const cplx lo = bloch_wavevector(delta - g.step, p);
    const cplx hi = bloch_wavevector(delta + g.step, p);
    double diff = hi.real() - lo.real();
    diff -= kTwoPi * std::round(diff / kTwoPi);
    g.delay_per_cell = diff / (2.0 * g.step);
    g.group_velocity_cells = 1.0 / g.delay_per_cell;
    const double c_lo = std::abs(cos_bloch(delta - 2.0 * g.step, p));
    const double c_hi = std::abs(cos_bloch(delta + 2.0 * g.step, p));
    g.near_band_edge = c_lo >= 1.0 || c_hi >= 1.0;
    return g;
}

} // namespace omarray
