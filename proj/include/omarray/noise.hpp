#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "bands.hpp"
#include "model.hpp"
#include "scattering.hpp"

namespace omarray
{

// Bose occupation at the mechanical frequency.
inline double thermal_occupation(double omega_m, double temperature)
{
    if (temperature < 0.0)
        throw ValidationError("temperature must be non-negative");
    if (temperature == 0.0)
        return 0.0;
    const double x = physical::hbar * omega_m / (physical::k_boltzmann * temperature);
    return 1.0 / std::expm1(x);
}

// Bath temperature including pump-absorption heating, T0 + chi (Omega/h)^2.
inline double bath_temperature(const SystemParams &p)
{
    require_valid(p);
    const double ratio = p.omega_drive / p.h_coupling;
    return p.t_base + p.chi * ratio * ratio;
}

struct SidebandRates
{
    double cooling = 0.0;  // anti-Stokes
    double heating = 0.0;  // Stokes
};

// kappa Omega^2 / ((delta_L -+ omega_m)^2 + (kappa/2)^2); delta_L is the
// tuning-cavity detuning omega_2 - omega_1.
inline SidebandRates cooling_rates(double delta_l, const SystemParams &p)
{
    require_valid(p);
    const double k = p.kappa();
    const double om2 = p.omega_drive * p.omega_drive;
    const double q = 0.25 * k * k;
    SidebandRates r;
    r.cooling = k * om2 / ((delta_l + p.omega_m) * (delta_l + p.omega_m) + q);
    r.heating = k * om2 / ((delta_l - p.omega_m) * (delta_l - p.omega_m) + q);
    return r;
}

inline double optical_damping(const SystemParams &p)
{
    return 4.0 * p.omega_drive * p.omega_drive / p.kappa();
}

// Stokes suppression factor kappa^2 / (kappa^2 + 16 omega_m^2).
inline double stokes_fraction(const SystemParams &p)
{
    const double k = p.kappa();
    return k * k / (k * k + 16.0 * p.omega_m * p.omega_m);
}

// Linear energy balance dE/dt = -rate E + source for a single element.
struct MechanicalEnergyModel
{
    double rate = 0.0;    // gamma_m + Gamma_opt - Gamma_+
    double source = 0.0;  // gamma_m hbar omega_m n_th + Gamma_+ hbar omega_m
    double n_thermal = 0.0;

    double steady_state() const { return source / rate; }

    // Exact solution from E(0) = e0.
    double at(double t, double e0) const
    {
        const double ess = steady_state();
        return ess + (e0 - ess) * std::exp(-rate * t);
    }

    double derivative(double e) const { return -rate * e + source; }
};

inline MechanicalEnergyModel mech_energy_model(const SystemParams &p, double bath_t)
{
    require_valid(p);
    const double g_opt = optical_damping(p);
    const double g_plus = g_opt * stokes_fraction(p);
    const double quantum = physical::hbar * p.omega_m;
    MechanicalEnergyModel m;
    m.n_thermal = thermal_occupation(p.omega_m, bath_t);
    m.rate = p.gamma_m + g_opt - g_plus;
    m.source = p.gamma_m * quantum * m.n_thermal + g_plus * quantum;
    if (!(m.rate > 0.0))
        throw NumericalError("mechanical energy is unstable: Stokes heating exceeds total damping");
    return m;
}

inline double mech_energy_steady(const SystemParams &p, double bath_t)
{
    return mech_energy_model(p, bath_t).steady_state();
}

inline double mech_energy(const SystemParams &p, double bath_t, double t, double e0 = 0.0)
{
    return mech_energy_model(p, bath_t).at(t, e0);
}

struct NoisePower
{
    double approximate = 0.0;  // weak-damping closed form
    double bound = 0.0;        // 1/2 Gamma_opt E_ss N (omega1/omega_m)(kappa_ex/kappa)
    double thermal_term = 0.0;
    double stokes_term = 0.0;
};

// Output noise at one end of an n-element array. With stokes_filtered = false the
// Stokes-sideband power is included (twice the Stokes term in the closed form).
inline NoisePower noise_power(const SystemParams &p, int n, double bath_t, bool stokes_filtered = true)
{
    require_valid(p);
    const double k = p.kappa();
    const double coupling = p.kappa_ex / k;
    const double g_opt = optical_damping(p);
    const double n_th = thermal_occupation(p.omega_m, bath_t);
    const double prefactor = n * physical::hbar * p.omega1 / 2.0 * coupling;
    const double side = k / (4.0 * p.omega_m);

    NoisePower out;
    out.thermal_term = prefactor * p.gamma_m * n_th;
    out.stokes_term = prefactor * g_opt * side * side * (stokes_filtered ? 1.0 : 2.0);
    out.approximate = out.thermal_term + out.stokes_term;

    if (g_opt > 0.0 || p.gamma_m > 0.0) {
        const auto model = mech_energy_model(p, bath_t);
        const double ess = model.steady_state();
        double leaked = g_opt * ess;
        if (!stokes_filtered)
            leaked += g_opt * stokes_fraction(p) * (ess + physical::hbar * p.omega_m);
        out.bound = 0.5 * leaked * n * (p.omega1 / p.omega_m) * coupling;
    }
    return out;
}

struct PhotonPulsePower
{
    double p_photon = 0.0;
    double p_noise = 0.0;
    double ratio = 0.0;
};

inline double photon_pulse_power(const SystemParams &p, double bandwidth)
{
    if (!(bandwidth > 0.0))
        throw ValidationError("pulse bandwidth must be positive");
    return physical::hbar * p.omega1 * bandwidth;
}

// Single-photon pulse power against the closed-form noise for the array at its bath temperature.
inline PhotonPulsePower photon_to_noise(const SystemParams &p, double bandwidth)
{
    PhotonPulsePower r;
    r.p_photon = photon_pulse_power(p, bandwidth);
    r.p_noise = noise_power(p, p.n_elements, bath_temperature(p)).approximate;
    r.ratio = r.p_noise > 0.0 ? r.p_photon / r.p_noise : std::numeric_limits<double>::infinity();
    return r;
}

struct NoiseReport
{
    double n_thermal = 0.0;
    double bath_temperature = 0.0;
    double gamma_opt = 0.0;
    double gamma_plus = 0.0;
    double steady_energy = 0.0;
    double p_noise = 0.0;        // closed form
    double p_noise_bound = 0.0;  // steady-energy bound
    double p_photon = 0.0;
    double ratio = 0.0;          // p_photon / p_noise
};

inline NoiseReport noise_report(const SystemParams &p, double bandwidth, bool stokes_filtered = true)
{
    NoiseReport r;
    r.bath_temperature = bath_temperature(p);
    r.n_thermal = thermal_occupation(p.omega_m, r.bath_temperature);
    r.gamma_opt = optical_damping(p);
    r.gamma_plus = r.gamma_opt * stokes_fraction(p);
    r.steady_energy = mech_energy_steady(p, r.bath_temperature);
    const auto np = noise_power(p, p.n_elements, r.bath_temperature, stokes_filtered);
    r.p_noise = np.approximate;
    r.p_noise_bound = np.bound;
    r.p_photon = photon_pulse_power(p, bandwidth);
    r.ratio = r.p_noise > 0.0 ? r.p_photon / r.p_noise : std::numeric_limits<double>::infinity();
    return r;
}

// -------------------------------------------------------------------------
// Pump delivery through the array. The pump sees the tuning cavities as bare
// side-coupled resonators, beta_1 = (-i kappa_ex / 2) / (-i kappa_in / 2 - delta_p).

struct PumpGap
{
    double lower = 0.0;
    double upper = 0.0;
    bool exists = false;
};

// Lossless bare-cavity gap: |cos(phi) + kappa_ex sin(phi) / (2 delta)| > 1.
inline PumpGap pump_gap(const SystemParams &p)
{
    const double c = std::cos(p.phase_per_cell), s = std::sin(p.phase_per_cell);
    PumpGap g;
    if (std::abs(s) < 1e-12)
        return g;
    const double a = 0.5 * p.kappa_ex * s;
    // Edges where the right side equals +1 and -1.
    const double e1 = a / (1.0 - c), e2 = a / (-1.0 - c);
    g.lower = std::min(e1, e2);
    g.upper = std::max(e1, e2);
    g.exists = true;
    return g;
}

inline SystemParams bare_pump_params(const SystemParams &p)
{
    SystemParams q = p;
    q.omega_drive = 0.0;
    return q;
}

inline cplx pump_beta(double delta_p, const SystemParams &p)
{
    return cplx{0.0, -0.5 * p.kappa_ex} / cplx{-delta_p, -0.5 * p.kappa_in};
}

struct PumpReport
{
    double delta_p = 0.0;
    double photon_flux = 0.0;  // photons / s
    double input_power = 0.0;  // W
    double attenuation = 0.0;  // Im(K) d
    double attenuation_approx = 0.0;  // kappa_ex kappa_in / (4 delta_p^2)
};

inline PumpReport pump_requirements(double delta_p, double pump_photons, const SystemParams &p)
{
    require_valid(p);
    if (pump_photons < 0.0)
        throw ValidationError("pump photon number must be non-negative");
    const auto gap = pump_gap(p);
    if (gap.exists && delta_p > gap.lower && delta_p < gap.upper)
        throw ValidationError("pump detuning lies inside the pump band gap (" + std::to_string(gap.lower) +
                              ", " + std::to_string(gap.upper) + ") rad/s");
    const SystemParams bare = bare_pump_params(p);
    const cplx b1 = pump_beta(delta_p, p);
    const double kd = free_phase(delta_p, bare);
    const cplx cos_kd = std::cos(kd) - kI * b1 * std::sin(kd);
    const cplx bloch = detail::bloch_from_cos(cos_kd, p.phase_per_cell);

    const TwoPortMatrix block = free_matrix(delta_p, bare) * TwoPortMatrix{1.0 - b1, -b1, b1, 1.0 + b1};
    const auto eig = eigen_decompose(block);
    if (eig.degenerate)
        throw NumericalError("pump detuning sits on a band edge");
    const auto &s = eig.vectors[bloch_mode_index(eig, bloch)];

    PumpReport r;
    r.delta_p = delta_p;
    r.attenuation = bloch.imag();
    r.attenuation_approx = p.kappa_ex * p.kappa_in / (4.0 * delta_p * delta_p);
    const double flux_per_photon = p.kappa_ex / (2.0 * std::norm(b1)) *
                                   (std::norm(s[0]) - std::norm(s[1])) / std::norm(s[0] + s[1]);
    r.photon_flux = flux_per_photon * pump_photons;
    r.input_power = physical::hbar * p.omega1 * r.photon_flux;
    return r;
}

} // namespace omarray
