#pragma once

#include <cmath>
#include <complex>

#include "model.hpp"
#include "two_port.hpp"

namespace omarray
{

// Single-element scattering for a right-incident field at detuning delta from
// the cavity resonance. With mechanical loss the cavity sees an effective
// denominator  -i delta + kappa/2 + Omega^2 / (-i delta + gamma_m/2), which
// reduces to the lossless-mechanics reflection for gamma_m = 0.
//
// Both r and beta are evaluated in polynomial form so that the driven,
// lossless-mechanics point delta = 0 gives r = beta = 0 without dividing by
// zero. With Omega = 0 the mechanics decouple and the bare-cavity forms are
// used; kappa_in = 0, Omega = 0, delta = 0 is a genuine pole of beta.

namespace detail
{
// (kappa_x/2 - i delta)(gamma_m/2 - i delta) + Omega^2
inline cplx driven_denominator(double delta, double kappa_x, const SystemParams &p)
{
    return cplx{0.5 * kappa_x, -delta} * cplx{0.5 * p.gamma_m, -delta} + p.omega_drive * p.omega_drive;
}
} // namespace detail

inline cplx beta(double delta, const SystemParams &p)
{
    if (p.omega_drive == 0.0) {
        const cplx den{0.5 * p.kappa_in, -delta};
        if (den == cplx{0.0})
            throw NumericalError("beta is singular: undriven lossless cavity exactly on resonance");
        return 0.5 * p.kappa_ex / den;
    }
    const cplx den = detail::driven_denominator(delta, p.kappa_in, p);
    if (den == cplx{0.0})
        throw NumericalError("beta is singular: lossless element at delta = +-omega_drive");
    return 0.5 * p.kappa_ex * cplx{0.5 * p.gamma_m, -delta} / den;
}

inline cplx reflection(double delta, const SystemParams &p)
{
    if (p.omega_drive == 0.0)
        return -0.5 * p.kappa_ex / cplx{0.5 * p.kappa(), -delta};
    const cplx den = detail::driven_denominator(delta, p.kappa(), p);
    return -0.5 * p.kappa_ex * cplx{0.5 * p.gamma_m, -delta} / den;
}

inline cplx transmission(double delta, const SystemParams &p) { return 1.0 + reflection(delta, p); }

// Transfer matrix across one element built from (r, t):
//   M = (1/t) [[t^2 - r^2, r], [-r, 1]]
inline TwoPortMatrix element_matrix(double delta, const SystemParams &p)
{
    const cplx r = reflection(delta, p);
    const cplx t = 1.0 + r;
    if (std::abs(t) < tolerance::underflow_guard)
        throw NumericalError("element transfer matrix is singular (t = 0)");
    const cplx inv_t = 1.0 / t;
    return {(t * t - r * r) * inv_t, r * inv_t, -r * inv_t, inv_t};
}

// Same matrix through beta: [[1 - beta, -beta], [beta, 1 + beta]].
inline TwoPortMatrix element_matrix_from_beta(double delta, const SystemParams &p)
{
    const cplx b = beta(delta, p);
    return {1.0 - b, -b, b, 1.0 + b};
}

inline double free_phase(double delta, const SystemParams &p)
{
    return p.phase_per_cell + delta * p.cell_transit;
}

inline TwoPortMatrix free_matrix(double delta, const SystemParams &p)
{
    const double kd = free_phase(delta, p);
    return TwoPortMatrix::diagonal(std::polar(1.0, kd), std::polar(1.0, -kd));
}

// One element followed by free propagation to the next element.
inline TwoPortMatrix block_matrix(double delta, const SystemParams &p)
{
    return free_matrix(delta, p) * element_matrix(delta, p);
}

} // namespace omarray
