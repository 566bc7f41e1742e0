#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "model.hpp"
#include "noise.hpp"

namespace omarray
{

struct DesignThresholds
{
    double min_photon_to_noise = 1.0;  // P_ph / P_noise must exceed this
    double max_gamma_tau = 1.0;        // gamma_m tau must stay below this
};

// One point of the design space (N, kappa_ex, Omega) with everything derived from it.
struct DesignCandidate
{
    double n = 0.0;
    double kappa_ex = 0.0;
    double omega_drive = 0.0;

    double bandwidth = 0.0;  // usable, min of the absorption and dispersion limits
    double delay = 0.0;
    double product = 0.0;
    bool absorption_binding = false;
    double bath_temperature = 0.0;
    double p_noise = 0.0;
    double p_photon = 0.0;
    double photon_to_noise = 0.0;
    double gamma_tau = 0.0;

    // Non-negative when satisfied. The bandwidth constraint holds by construction.
    double margin_bandwidth = 0.0;
    double margin_noise = 0.0;
    double margin_decay = 0.0;
    bool ok_bandwidth = true;
    bool ok_noise = false;
    bool ok_decay = false;

    bool feasible() const { return ok_bandwidth && ok_noise && ok_decay; }
    double worst_margin() const { return std::min({margin_bandwidth, margin_noise, margin_decay}); }
    std::string binding_constraint() const
    {
        if (margin_noise <= margin_decay && margin_noise <= margin_bandwidth)
            return "photon_to_noise";
        if (margin_decay <= margin_bandwidth)
            return "gamma_tau";
        return "bandwidth";
    }
};

inline DesignCandidate evaluate(double n, double kappa_ex, double omega_drive, const SystemParams &base,
                                const DesignThresholds &limits = {})
{
    if (!(n > 0.0) || !(kappa_ex > 0.0) || !(omega_drive > 0.0))
        throw ValidationError("design candidate values must be positive");
    SystemParams q = base;
    q.kappa_ex = kappa_ex;
    q.omega_drive = omega_drive;
    q.n_elements = 1;
    require_valid(q);

    DesignCandidate c;
    c.n = n;
    c.kappa_ex = kappa_ex;
    c.omega_drive = omega_drive;
    const double om2 = omega_drive * omega_drive;
    const double absorption = q.kappa_in > 0.0 ? 2.0 * std::sqrt(2.0) * om2 / std::sqrt(n * kappa_ex * q.kappa_in)
                                               : std::numeric_limits<double>::infinity();
    const double dispersion = 2.0 * std::cbrt(6.0 * kPi) * om2 / (kappa_ex * std::cbrt(n));
    c.absorption_binding = absorption < dispersion;
    c.bandwidth = std::min(absorption, dispersion);
    c.delay = n * kappa_ex / (2.0 * om2);
    c.product = c.bandwidth * c.delay;

    c.bath_temperature = bath_temperature(q);
    c.p_noise = n * noise_power(q, 1, c.bath_temperature).approximate;
    c.p_photon = photon_pulse_power(q, c.bandwidth);
    c.photon_to_noise = c.p_noise > 0.0 ? c.p_photon / c.p_noise : std::numeric_limits<double>::infinity();
    c.gamma_tau = q.gamma_m * c.delay;

    c.margin_bandwidth = 0.0;
    c.margin_noise = c.photon_to_noise / limits.min_photon_to_noise - 1.0;
    c.margin_decay = 1.0 - c.gamma_tau / limits.max_gamma_tau;
    c.ok_bandwidth = c.margin_bandwidth >= 0.0;
    c.ok_noise = c.margin_noise >= 0.0;
    c.ok_decay = c.margin_decay >= 0.0;
    return c;
}

inline DesignCandidate evaluate(const SystemParams &p, const DesignThresholds &limits = {})
{
    return evaluate(static_cast<double>(p.n_elements), p.kappa_ex, p.omega_drive, p, limits);
}

struct DesignBounds
{
    double n_min = 1.0;
    double n_max = 1e4;
    double kappa_ex_min = hz_to_angular(10e6);
    double kappa_ex_max = hz_to_angular(100e9);
    double omega_min = hz_to_angular(1e6);
    double omega_max = hz_to_angular(10e9);
};

struct OptimizerOptions
{
    DesignBounds bounds;
    DesignThresholds thresholds;
    int points_per_decade = 20;
    // Explicit axis sizes; zero means derive from points_per_decade.
    int n_count = 0;
    int kappa_count = 0;
    int omega_count = 0;
    bool refine = true;
    double tolerance = 1e-3;
    bool keep_grid = false;
};

struct OptimizeResult
{
    bool feasible = false;
    DesignCandidate best;
    DesignCandidate grid_best;
    std::string binding_constraint;  // most binding constraint when infeasible
    std::vector<DesignCandidate> grid;
    long evaluations = 0;
    int refinement_steps = 0;
    DesignBounds bounds;
};

// lo * (hi/lo)^(i/(count-1)); integer axes are rounded and deduplicated.
inline std::vector<double> log_axis(double lo, double hi, int count, bool integer = false)
{
    if (!(lo > 0.0) || !(hi >= lo) || count < 1)
        throw ValidationError("log axis needs 0 < lo <= hi and count >= 1");
    std::vector<double> v;
    for (int i = 0; i < count; ++i) {
        double x = count == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1));
        if (i == count - 1)
            x = hi;
        if (integer)
            x = std::round(x);
        if (v.empty() || x != v.back())
            v.push_back(x);
    }
    return v;
}

// Larger product wins; ties go to smaller N, then smaller Omega, then smaller kappa_ex.
inline bool better_design(const DesignCandidate &a, const DesignCandidate &b)
{
    if (a.product != b.product)
        return a.product > b.product;
    if (a.n != b.n)
        return a.n < b.n;
    if (a.omega_drive != b.omega_drive)
        return a.omega_drive < b.omega_drive;
    return a.kappa_ex < b.kappa_ex;
}

namespace detail
{
inline int axis_count(double lo, double hi, int explicit_count, int per_decade)
{
    if (explicit_count > 0)
        return explicit_count;
    const double decades = std::log10(hi / lo);
    return std::max(2, static_cast<int>(std::ceil(decades * per_decade - 1e-9)) + 1);
}

inline void check_bounds(const DesignBounds &b)
{
    auto ok = [](double lo, double hi) { return std::isfinite(lo) && std::isfinite(hi) && lo > 0.0 && hi >= lo; };
    if (!ok(b.n_min, b.n_max) || !ok(b.kappa_ex_min, b.kappa_ex_max) || !ok(b.omega_min, b.omega_max))
        throw ValidationError("optimizer bounds must be finite, positive and ordered");
    if (b.n_min < 1.0)
        throw ValidationError("optimizer needs n_min >= 1");
}
} // namespace detail

// Coarse log grid followed by a pattern search in log space over the 26
// neighbouring directions, halving the step whenever no neighbour improves.
inline OptimizeResult optimize(const SystemParams &base, const OptimizerOptions &opt = {})
{
    const auto &b = opt.bounds;
    detail::check_bounds(b);
    if (opt.points_per_decade < 1)
        throw ValidationError("points_per_decade must be >= 1");

    const auto ns = log_axis(b.n_min, b.n_max, detail::axis_count(b.n_min, b.n_max, opt.n_count, opt.points_per_decade), true);
    const auto ks = log_axis(b.kappa_ex_min, b.kappa_ex_max,
                             detail::axis_count(b.kappa_ex_min, b.kappa_ex_max, opt.kappa_count, opt.points_per_decade));
    const auto os = log_axis(b.omega_min, b.omega_max,
                             detail::axis_count(b.omega_min, b.omega_max, opt.omega_count, opt.points_per_decade));

    OptimizeResult res;
    res.bounds = b;
    bool have_best = false;
    DesignCandidate least_bad;
    bool have_least_bad = false;
    for (double n : ns)
        for (double k : ks)
            for (double o : os) {
                const auto c = evaluate(n, k, o, base, opt.thresholds);
                ++res.evaluations;
                if (opt.keep_grid)
                    res.grid.push_back(c);
                if (c.feasible()) {
                    if (!have_best || better_design(c, res.best)) {
                        res.best = c;
                        have_best = true;
                    }
                } else if (!have_least_bad || c.worst_margin() > least_bad.worst_margin()) {
                    least_bad = c;
                    have_least_bad = true;
                }
            }

    if (!have_best) {
        res.feasible = false;
        res.best = least_bad;
        res.grid_best = least_bad;
        res.binding_constraint = least_bad.binding_constraint();
        return res;
    }
    res.feasible = true;
    res.grid_best = res.best;
    if (!opt.refine)
        return res;

    // Pattern search on (log N, log kappa_ex, log Omega) with N continuous.
    const std::array<double, 3> lo{std::log(b.n_min), std::log(b.kappa_ex_min), std::log(b.omega_min)};
    const std::array<double, 3> hi{std::log(b.n_max), std::log(b.kappa_ex_max), std::log(b.omega_max)};
    auto spacing = [](const std::vector<double> &ax, double l, double h) {
        return ax.size() > 1 ? (h - l) / static_cast<double>(ax.size() - 1) : 0.1;
    };
    std::array<double, 3> step{spacing(ns, lo[0], hi[0]), spacing(ks, lo[1], hi[1]), spacing(os, lo[2], hi[2])};
    std::array<double, 3> x{std::log(res.best.n), std::log(res.best.kappa_ex), std::log(res.best.omega_drive)};
    DesignCandidate cur = res.best;
    double value_at_last_halving = cur.product;
    for (int iter = 0; iter < 10000; ++iter) {
        DesignCandidate best_nb = cur;
        std::array<double, 3> best_x = x;
        bool moved = false;
        for (int dn = -1; dn <= 1; ++dn)
            for (int dk = -1; dk <= 1; ++dk)
                for (int dom = -1; dom <= 1; ++dom) {
                    if (dn == 0 && dk == 0 && dom == 0)
                        continue;
                    std::array<double, 3> y{x[0] + dn * step[0], x[1] + dk * step[1], x[2] + dom * step[2]};
                    for (int i = 0; i < 3; ++i)
                        y[i] = std::clamp(y[i], lo[i], hi[i]);
                    const auto c = evaluate(std::exp(y[0]), std::exp(y[1]), std::exp(y[2]), base, opt.thresholds);
                    ++res.evaluations;
                    if (c.feasible() && c.product > best_nb.product) {
                        best_nb = c;
                        best_x = y;
                        moved = true;
                    }
                }
        ++res.refinement_steps;
        if (moved) {
            cur = best_nb;
            x = best_x;
            continue;
        }
        for (double &s : step)
            s *= 0.5;
        const double rel = (cur.product - value_at_last_halving) / value_at_last_halving;
        value_at_last_halving = cur.product;
        if (rel < opt.tolerance && step[0] < 1e-3 && step[1] < 1e-3 && step[2] < 1e-3)
            break;
    }

    // Report an integer N. Fewer elements only loosen both constraints, so the
    // floor is feasible whenever the continuous optimum is.
    DesignCandidate rounded;
    bool have_rounded = false;
    for (double n : {std::floor(cur.n), std::ceil(cur.n)}) {
        n = std::clamp(n, std::ceil(b.n_min), std::floor(b.n_max));
        const auto c = evaluate(n, cur.kappa_ex, cur.omega_drive, base, opt.thresholds);
        ++res.evaluations;
        if (c.feasible() && (!have_rounded || better_design(c, rounded))) {
            rounded = c;
            have_rounded = true;
        }
    }
    if (have_rounded && better_design(rounded, res.grid_best))
        res.best = rounded;
    return res;
}

// Base parameters for the single-photon memory optimum: T0 = 100 mK,
// Q_m = 1e5, chi = 2 uK per pump photon, kappa_in from Q1 = 3e6.
inline SystemParams reference_design_base() { return presets::optimum(); }

} // namespace omarray
