#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "constants.hpp"
#include "errors.hpp"

namespace omarray
{

// Physical description of one array element plus the array geometry and the
// bath-heating model. All rates and frequencies are angular (rad/s).
struct SystemParams
{
    double omega1 = 0.0;       // active optical resonance
    double omega_m = 0.0;      // mechanical resonance
    double kappa_ex = 0.0;     // waveguide-induced optical decay
    double kappa_in = 0.0;     // intrinsic optical decay
    double gamma_m = 0.0;      // mechanical decay
    double omega_drive = 0.0;  // optomechanical driving amplitude
    double h_coupling = 0.0;   // cross-coupling rate per pump photon amplitude
    int n_elements = 1;
    double phase_per_cell = kPi / 2.0;  // k0 d
    double cell_transit = 0.0;          // d / c in seconds
    double t_base = 0.0;                // K
    double chi = 0.0;                   // K per pump photon

    double kappa() const { return kappa_ex + kappa_in; }
};

inline double gamma_from_quality(double omega_m, double q_m) { return omega_m / q_m; }
inline double kappa_in_from_quality(double omega1, double q1) { return omega1 / q1; }

struct ValidationReport
{
    bool ok = true;
    std::vector<std::string> errors;
    std::vector<std::string> warnings;
};

// Distance of a phase from the nearest odd multiple of pi/2.
inline double distance_from_quarter_wave(double phase)
{
    const double shifted = phase - kPi / 2.0;
    const double nearest = std::round(shifted / kPi) * kPi;
    return std::abs(shifted - nearest);
}

inline ValidationReport validate_params(const SystemParams &p)
{
    ValidationReport report;
    auto fail = [&](std::string msg) {
        report.ok = false;
        report.errors.push_back(std::move(msg));
    };
    auto require_positive = [&](double v, const char *name) {
        if (!std::isfinite(v) || !(v > 0.0))
            fail(std::string(name) + " must be finite and strictly positive");
    };
    auto require_non_negative = [&](double v, const char *name) {
        if (!std::isfinite(v) || v < 0.0)
            fail(std::string(name) + " must be finite and non-negative");
    };

    require_positive(p.omega1, "omega1");
    require_positive(p.omega_m, "omega_m");
    require_positive(p.kappa_ex, "kappa_ex");
    require_positive(p.h_coupling, "h_coupling");
    require_non_negative(p.kappa_in, "kappa_in");
    require_non_negative(p.gamma_m, "gamma_m");
    require_non_negative(p.omega_drive, "omega_drive");
    require_non_negative(p.cell_transit, "cell_transit");
    require_non_negative(p.t_base, "t_base");
    require_non_negative(p.chi, "chi");
    if (!std::isfinite(p.phase_per_cell) || !(p.phase_per_cell > 0.0))
        fail("phase_per_cell must be strictly positive");
    if (p.n_elements < 0)
        fail("n_elements must be non-negative");
    if (!report.ok)
        return report;

    if (p.n_elements == 0)
        report.warnings.push_back("n_elements = 0: the array is a bare waveguide");
    if (p.omega_drive > p.kappa())
        report.warnings.push_back("weak-driving regime violated (omega_drive > kappa); "
                                  "noise model is outside its validity range");
    if (p.kappa() / p.omega_m > 1.0)
        report.warnings.push_back("poor sideband resolution (kappa / omega_m > 1)");
    if (distance_from_quarter_wave(p.phase_per_cell) > 1e-2)
        report.warnings.push_back("phase_per_cell is not an odd multiple of pi/2; "
                                  "reflections will not cancel between cells");
    return report;
}

inline void require_valid(const SystemParams &p)
{
    const auto report = validate_params(p);
    if (!report.ok)
        throw ValidationError(report.errors.front());
}

struct DerivedRates
{
    double kappa = 0.0;
    double gamma_opt = 0.0;        // 4 Omega^2 / kappa
    double delay_per_cell = 0.0;   // kappa_ex / (2 Omega^2), infinite when undriven
    double total_delay = 0.0;      // N * delay_per_cell
    double group_velocity_cells = 0.0;  // cells per second
    double slow_band_width = 0.0;  // 4 Omega^2 / kappa_ex
    double pump_photons = 0.0;     // (Omega / h)^2
    double sideband_ratio = 0.0;   // kappa / omega_m
    double driving_ratio = 0.0;    // Omega / kappa
};

inline DerivedRates derived_rates(const SystemParams &p)
{
    require_valid(p);
    DerivedRates d;
    const double om2 = p.omega_drive * p.omega_drive;
    d.kappa = p.kappa();
    d.gamma_opt = 4.0 * om2 / d.kappa;
    if (om2 > 0.0) {
        d.delay_per_cell = p.kappa_ex / (2.0 * om2);
        d.total_delay = p.n_elements * d.delay_per_cell;
        d.group_velocity_cells = 2.0 * om2 / p.kappa_ex;
    } else {
        d.delay_per_cell = std::numeric_limits<double>::infinity();
        d.total_delay = p.n_elements > 0 ? d.delay_per_cell : 0.0;
        d.group_velocity_cells = 0.0;
    }
    d.slow_band_width = 4.0 * om2 / p.kappa_ex;
    d.pump_photons = om2 / (p.h_coupling * p.h_coupling);
    d.sideband_ratio = d.kappa / p.omega_m;
    d.driving_ratio = p.omega_drive / d.kappa;
    return d;
}

namespace presets
{

// Single element used for the reflectance/transmittance window:
// kappa_in = 0.1 kappa_ex, Omega = kappa_ex / 10, no mechanical loss.
inline SystemParams fig1()
{
    SystemParams p;
    p.omega1 = hz_to_angular(200e12);
    p.omega_m = hz_to_angular(10e9);
    p.kappa_ex = hz_to_angular(1e9);
    p.kappa_in = 0.1 * p.kappa_ex;
    p.gamma_m = 0.0;
    p.omega_drive = p.kappa_ex / 10.0;
    p.h_coupling = hz_to_angular(0.35e6);
    p.n_elements = 1;
    p.phase_per_cell = kPi / 2.0;
    p.cell_transit = 2e-14;
    p.t_base = 0.1;
    p.chi = 2e-6;
    return p;
}

// Typical device numbers, low-temperature mechanical quality.
inline SystemParams paper_device(double q_m = 1e5, double temperature = 0.1)
{
    SystemParams p;
    p.omega1 = hz_to_angular(200e12);
    p.omega_m = hz_to_angular(10e9);
    p.kappa_ex = hz_to_angular(1.1e9);
    p.kappa_in = kappa_in_from_quality(p.omega1, 3e6);
    p.gamma_m = gamma_from_quality(p.omega_m, q_m);
    p.omega_drive = hz_to_angular(130e6);
    p.h_coupling = hz_to_angular(0.35e6);
    p.n_elements = 275;
    p.phase_per_cell = kPi / 2.0;
    p.cell_transit = 2e-14;
    p.t_base = temperature;
    p.chi = 0.0;
    return p;
}

// Room-temperature variant, Q_m = 1e3.
inline SystemParams paper_device_room_temperature() { return paper_device(1e3, 300.0); }

// Single-photon memory optimum with pump heating.
inline SystemParams optimum()
{
    SystemParams p;
    p.omega1 = hz_to_angular(200e12);
    p.omega_m = hz_to_angular(10e9);
    p.kappa_ex = hz_to_angular(1.1e9);
    p.kappa_in = kappa_in_from_quality(p.omega1, 3e6);
    p.gamma_m = gamma_from_quality(p.omega_m, 1e5);
    p.omega_drive = hz_to_angular(130e6);
    p.h_coupling = hz_to_angular(0.346e6);
    p.n_elements = 275;
    p.phase_per_cell = kPi / 2.0;
    p.cell_transit = 2e-14;
    p.t_base = 0.1;
    p.chi = 2e-6;
    return p;
}

inline const std::vector<std::string> &names()
{
    static const std::vector<std::string> n{"FIG1", "PAPER_DEVICE", "PAPER_DEVICE_RT", "OPTIMUM"};
    return n;
}

inline std::optional<SystemParams> by_name(std::string_view name)
{
    if (name == "FIG1")
        return fig1();
    if (name == "PAPER_DEVICE")
        return paper_device();
    if (name == "PAPER_DEVICE_RT")
        return paper_device_room_temperature();
    if (name == "OPTIMUM")
        return optimum();
    return std::nullopt;
}

} // namespace presets

} // namespace omarray
