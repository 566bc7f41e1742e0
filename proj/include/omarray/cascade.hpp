#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include "bands.hpp"
#include "scattering.hpp"

namespace omarray
{

enum class PowerMethod
{
    direct,          // n = 1
    eigen,           // S D^n S^-1
    repeated_squaring
};

inline const char *to_string(PowerMethod m)
{
    switch (m) {
    case PowerMethod::direct: return "direct";
    case PowerMethod::eigen: return "eigen";
    case PowerMethod::repeated_squaring: return "repeated_squaring";
    }
    return "?";
}

// M^n stored as exp(log_scale) * scaled so that gap-deep powers do not overflow.
struct CascadeResult
{
    TwoPortMatrix scaled;
    double log_scale = 0.0;
    PowerMethod method = PowerMethod::direct;
    bool fallback = false;  // eigen path was requested but the block was not diagonalizable

    TwoPortMatrix matrix() const { return scaled.scaled(std::exp(log_scale)); }
};

namespace detail
{
inline void renormalize(TwoPortMatrix &m, double &log_scale)
{
    const double big = m.max_abs();
    if (big > tolerance::overflow_entry) {
        m = m.scaled(1.0 / big);
        log_scale += std::log(big);
    }
}
} // namespace detail

inline CascadeResult power_by_squaring(const TwoPortMatrix &m, int n)
{
    if (n < 1)
        throw ValidationError("matrix power requires n >= 1");
    CascadeResult r;
    r.method = PowerMethod::repeated_squaring;
    TwoPortMatrix base = m;
    double base_log = 0.0;
    TwoPortMatrix acc = TwoPortMatrix::identity();
    double acc_log = 0.0;
    for (int e = n; e > 0; e >>= 1) {
        if (e & 1) {
            acc = acc * base;
            acc_log += base_log;
            detail::renormalize(acc, acc_log);
        }
        if (e > 1) {
            base = base * base;
            base_log *= 2.0;
            detail::renormalize(base, base_log);
        }
    }
    r.scaled = acc;
    r.log_scale = acc_log;
    return r;
}

// Returns false if the matrix is too close to defective for S D^n S^-1.
inline bool power_by_eigen(const TwoPortMatrix &m, int n, CascadeResult &out)
{
    if (n < 1)
        throw ValidationError("matrix power requires n >= 1");
    const auto e = eigen_decompose(m);
    if (e.degenerate)
        return false;
    const double lmax = std::max(std::abs(e.values[0]), std::abs(e.values[1]));
    if (!(lmax > 0.0))
        return false;
    const double log_lmax = std::log(lmax);
    std::array<cplx, 2> mu;
    for (int k = 0; k < 2; ++k)
        mu[k] = std::exp(static_cast<double>(n) * (std::log(e.values[k]) - log_lmax));
    const auto &s0 = e.vectors[0];
    const auto &s1 = e.vectors[1];
    const cplx det_s = s0[0] * s1[1] - s1[0] * s0[1];
    // S = [[s0x, s1x], [s0y, s1y]],  S^-1 = (1/det) [[s1y, -s1x], [-s0y, s0x]]
    const cplx a = mu[0] / det_s, b = mu[1] / det_s;
    TwoPortMatrix r;
    r.m11 = a * s0[0] * s1[1] - b * s1[0] * s0[1];
    r.m12 = -a * s0[0] * s1[0] + b * s1[0] * s0[0];
    r.m21 = a * s0[1] * s1[1] - b * s1[1] * s0[1];
    r.m22 = -a * s0[1] * s1[0] + b * s1[1] * s0[0];
    out.scaled = r;
    out.log_scale = static_cast<double>(n) * log_lmax;
    out.method = PowerMethod::eigen;
    out.fallback = false;
    detail::renormalize(out.scaled, out.log_scale);
    return true;
}

// M_block^n, by eigen-decomposition when diagonalizable, otherwise by squaring.
inline CascadeResult cascade_matrix(double delta, const SystemParams &p, int n,
                                    PowerMethod preferred = PowerMethod::eigen)
{
    if (n < 1)
        throw ValidationError("cascade_matrix requires n >= 1");
    const TwoPortMatrix block = block_matrix(delta, p);
    if (n == 1) {
        CascadeResult r;
        r.scaled = block;
        r.method = PowerMethod::direct;
        return r;
    }
    if (preferred == PowerMethod::repeated_squaring)
        return power_by_squaring(block, n);
    CascadeResult r;
    if (power_by_eigen(block, n, r))
        return r;
    r = power_by_squaring(block, n);
    r.fallback = true;
    return r;
}

// -------------------------------------------------------------------------
// Finite-array spectra. An N-element array is element, (gap, element) x (N-1):
//   M_array = M_om (M_f M_om)^(N-1) = M_f^-1 M_block^N
// which is mirror symmetric, so M(1,2)/M(2,2) equals -M(2,1)/M(2,2).

struct SpectrumRow
{
    double delta = 0.0;
    cplx r{0.0};
    cplx t{0.0};
    double reflectance = 0.0;
    double transmittance = 0.0;
    double phase = 0.0;        // unwrapped arg t
    double group_delay = 0.0;  // d phase / d delta
};

using SpectrumTable = std::vector<SpectrumRow>;

struct ArrayCoefficients
{
    cplx r{0.0};
    cplx t{0.0};
};

inline ArrayCoefficients array_coefficients(double delta, const SystemParams &p, int n)
{
    if (n < 1)
        throw ValidationError("array requires n >= 1");
    const auto power = cascade_matrix(delta, p, n);
    const double kd = free_phase(delta, p);
    const TwoPortMatrix m = TwoPortMatrix::diagonal(std::polar(1.0, -kd), std::polar(1.0, kd)) * power.scaled;
    if (std::abs(m.m22) < tolerance::underflow_guard * std::max(1.0, m.max_abs()))
        throw NumericalError("array transfer matrix has vanishing M(2,2)");
    ArrayCoefficients c;
    c.r = m.m12 / m.m22;
    c.t = std::exp(-power.log_scale) / m.m22;
    return c;
}

namespace detail
{
inline void require_increasing(const std::vector<double> &grid)
{
    if (grid.empty())
        throw ValidationError("detuning grid is empty");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw ValidationError("detuning grid must be strictly increasing");
}

inline std::size_t index_nearest_zero(const std::vector<double> &grid)
{
    auto it = std::min_element(grid.begin(), grid.end(),
                               [](double a, double b) { return std::abs(a) < std::abs(b); });
    return static_cast<std::size_t>(it - grid.begin());
}

// Unwraps phases outward from index origin so neighbours differ by less than pi.
inline void unwrap_from(std::vector<double> &phase, std::size_t origin)
{
    auto fix = [&](std::size_t prev, std::size_t cur) {
        double d = phase[cur] - phase[prev];
        d -= kTwoPi * std::round(d / kTwoPi);
        phase[cur] = phase[prev] + d;
    };
    for (std::size_t i = origin + 1; i < phase.size(); ++i)
        fix(i - 1, i);
    for (std::size_t i = origin; i-- > 0;)
        fix(i + 1, i);
}

// Derivative on a non-uniform grid (three-point, one-sided at the ends).
inline std::vector<double> derivative(const std::vector<double> &x, const std::vector<double> &y)
{
    const std::size_t n = x.size();
    std::vector<double> d(n, 0.0);
    if (n < 2)
        return d;
    d[0] = (y[1] - y[0]) / (x[1] - x[0]);
    d[n - 1] = (y[n - 1] - y[n - 2]) / (x[n - 1] - x[n - 2]);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double h0 = x[i] - x[i - 1], h1 = x[i + 1] - x[i];
        d[i] = (-h1 / (h0 * (h0 + h1))) * y[i - 1] + ((h1 - h0) / (h0 * h1)) * y[i] +
               (h0 / (h1 * (h0 + h1))) * y[i + 1];
    }
    return d;
}
} // namespace detail

inline SpectrumTable array_spectrum(const SystemParams &p, int n, const std::vector<double> &grid)
{
    require_valid(p);
    detail::require_increasing(grid);
    SpectrumTable table(grid.size());
    std::vector<double> phase(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto c = array_coefficients(grid[i], p, n);
        auto &row = table[i];
        row.delta = grid[i];
        row.r = c.r;
        row.t = c.t;
        row.reflectance = std::norm(c.r);
        row.transmittance = std::norm(c.t);
        phase[i] = std::arg(c.t);
    }
    detail::unwrap_from(phase, detail::index_nearest_zero(grid));
    const auto delay = detail::derivative(grid, phase);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        table[i].phase = phase[i];
        table[i].group_delay = delay[i];
    }
    return table;
}

inline std::vector<double> linear_grid(double lo, double hi, int count)
{
    if (count < 2 || !(hi > lo))
        throw ValidationError("linear_grid needs count >= 2 and hi > lo");
    std::vector<double> g(static_cast<std::size_t>(count));
    const int half = (count - 1) / 2;
    const double step = (hi - lo) / (count - 1);
    for (int i = 0; i < count; ++i)
        g[static_cast<std::size_t>(i)] = lo + step * i;
    // Keep an exact zero for symmetric grids with odd count.
    if (count % 2 == 1 && lo == -hi)
        g[static_cast<std::size_t>(half)] = 0.0;
    return g;
}

// 2001 uniform points across +-kappa_ex with log-spaced refinement on both sides
// of each band edge.
inline std::vector<double> default_grid(const SystemParams &p, int count = 2001, int refine_per_edge = 40)
{
    std::vector<double> g = linear_grid(-p.kappa_ex, p.kappa_ex, count);
    if (p.omega_drive > 0.0 && refine_per_edge > 0) {
        const auto edges = band_edges(p);
        const double step = 2.0 * p.kappa_ex / (count - 1);
        for (double edge : {edges.inner, edges.outer}) {
            for (int k = 0; k < refine_per_edge; ++k) {
                const double offset = step * std::pow(10.0, -4.0 + 4.0 * k / refine_per_edge);
                for (double sgn : {-1.0, 1.0})
                    for (double side : {-1.0, 1.0}) {
                        const double d = sgn * edge + side * offset;
                        if (std::abs(d) < p.kappa_ex)
                            g.push_back(d);
                    }
            }
        }
        std::sort(g.begin(), g.end());
        g.erase(std::unique(g.begin(), g.end()), g.end());
    }
    return g;
}

// -------------------------------------------------------------------------
// Perturbative effective wavevector per cell,
//   k_eff d = phase + c1 delta + c2 delta^2 + c3 delta^3.

struct KeffSeries
{
    double c0 = 0.0;
    double c1 = 0.0;   // kappa_ex / (2 Omega^2)
    cplx c2{0.0};      // i kappa_ex kappa_in / (4 Omega^4)
    double c3 = 0.0;   // (2 kappa_ex^3 - 3 kappa_ex kappa_in^2 + 12 kappa_ex Omega^2) / (24 Omega^6)

    cplx operator()(double delta) const { return c0 + delta * (c1 + delta * (c2 + delta * c3)); }
};

inline KeffSeries keff_series(const SystemParams &p)
{
    require_valid(p);
    if (!(p.omega_drive > 0.0))
        throw ValidationError("k_eff series is undefined for omega_drive = 0");
    const double ke = p.kappa_ex, ki = p.kappa_in;
    const double om2 = p.omega_drive * p.omega_drive;
    KeffSeries s;
    s.c0 = p.phase_per_cell;
    s.c1 = ke / (2.0 * om2);
    s.c2 = cplx{0.0, ke * ki / (4.0 * om2 * om2)};
    s.c3 = (2.0 * ke * ke * ke - 3.0 * ke * ki * ki + 12.0 * ke * om2) / (24.0 * om2 * om2 * om2);
    return s;
}

// Effective wavevector per cell from the two-block transmission t_2 = 1/M_2(2,2),
// defined through t_2 = exp(2 i k_eff d).
inline cplx two_block_keff(double delta, const SystemParams &p)
{
    const auto m2 = cascade_matrix(delta, p, 2, PowerMethod::repeated_squaring).matrix();
    const cplx t2 = 1.0 / m2.m22;
    cplx kd = -kI * std::log(t2) / 2.0;
    const double turns = std::round((kd.real() - p.phase_per_cell) / kPi);
    return {kd.real() - turns * kPi, kd.imag()};
}

// -------------------------------------------------------------------------
// Closed-form bandwidth limits.

struct BandwidthLimits
{
    double absorption = 0.0;  // 2 sqrt2 Omega^2 / sqrt(N kappa_ex kappa_in)
    double dispersion = 0.0;  // 2 (6 pi)^(1/3) Omega^2 / (kappa_ex N^(1/3))
    double usable = 0.0;      // min of the two
    double full_band = 0.0;   // 4 Omega^2 / kappa
    bool absorption_binding = false;
};

inline BandwidthLimits bandwidth_limits(const SystemParams &p, int n)
{
    require_valid(p);
    if (n < 1)
        throw ValidationError("bandwidth_limits requires n >= 1");
    const double om2 = p.omega_drive * p.omega_drive;
    BandwidthLimits b;
    b.absorption = p.kappa_in > 0.0
                       ? 2.0 * std::sqrt(2.0) * om2 / std::sqrt(n * p.kappa_ex * p.kappa_in)
                       : std::numeric_limits<double>::infinity();
    b.dispersion = 2.0 * std::cbrt(6.0 * kPi) * om2 / (p.kappa_ex * std::cbrt(static_cast<double>(n)));
    b.absorption_binding = b.absorption < b.dispersion;
    b.usable = std::min(b.absorption, b.dispersion);
    b.full_band = 4.0 * om2 / p.kappa();
    return b;
}

struct BandwidthDelay
{
    double absorption_arm = 0.0;  // sqrt(2 N kappa_ex / kappa_in)
    double dispersion_arm = 0.0;  // (6 pi N^2)^(1/3)
    double product = 0.0;         // min of the arms
    bool absorption_binding = false;
    // Half the full polariton band times the delay, N kappa_ex / kappa.
    double distortion_tolerant = 0.0;
};

inline BandwidthDelay bandwidth_delay_product(const SystemParams &p, int n)
{
    require_valid(p);
    if (n < 1)
        throw ValidationError("bandwidth_delay_product requires n >= 1");
    const double nn = static_cast<double>(n);
    BandwidthDelay b;
    b.absorption_arm = p.kappa_in > 0.0 ? std::sqrt(2.0 * nn * p.kappa_ex / p.kappa_in)
                                        : std::numeric_limits<double>::infinity();
    b.dispersion_arm = std::cbrt(6.0 * kPi * nn * nn);
    b.absorption_binding = b.absorption_arm < b.dispersion_arm;
    b.product = std::min(b.absorption_arm, b.dispersion_arm);
    b.distortion_tolerant = nn * p.kappa_ex / p.kappa();
    return b;
}

// N at which both arms are equal: 2 N ke/ki = (6 pi N^2)^(2/3)  =>  N = (2 ke/ki)^3 / (6 pi)^2.
inline double arm_crossover(double kappa_ex, double kappa_in)
{
    const double ratio = 2.0 * kappa_ex / kappa_in;
    return ratio * ratio * ratio / (36.0 * kPi * kPi);
}

// -------------------------------------------------------------------------
// Bandwidth-delay product measured from the finite-array transmission:
// delay = d arg t_N / d delta at delta = 0, bandwidth = width of the contiguous
// window around delta = 0 where |t_N|^2 >= threshold.

struct MeasuredWindow
{
    double delay = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double bandwidth = 0.0;
    double product = 0.0;
};

inline MeasuredWindow measure_window(const SystemParams &p, int n, double threshold = 0.5)
{
    require_valid(p);
    if (!(p.omega_drive > 0.0))
        throw ValidationError("measure_window requires omega_drive > 0");
    const double om2 = p.omega_drive * p.omega_drive;
    const double tau_est = std::max(1.0, static_cast<double>(n)) * p.kappa_ex / (2.0 * om2);
    const double h = 1e-4 / tau_est;
    auto t_of = [&](double d) { return array_coefficients(d, p, n).t; };
    MeasuredWindow w;
    w.delay = std::arg(t_of(h) / t_of(-h)) / (2.0 * h);
    const double scale = std::max(w.delay, tau_est);
    const double step = 1.0 / (50.0 * scale);
    const double limit = p.kappa_ex + p.kappa();
    auto edge = [&](double sign) {
        double inside = 0.0;
        if (std::norm(t_of(0.0)) < threshold)
            return 0.0;
        double d = step;
        while (d < limit && std::norm(t_of(sign * d)) >= threshold) {
            inside = d;
            d += step;
        }
        if (d >= limit)
            return sign * limit;
        double lo = inside, hi = d;
        for (int i = 0; i < 60; ++i) {
            const double mid = 0.5 * (lo + hi);
            (std::norm(t_of(sign * mid)) >= threshold ? lo : hi) = mid;
        }
        return sign * 0.5 * (lo + hi);
    };
    w.lower = edge(-1.0);
    w.upper = edge(1.0);
    w.bandwidth = w.upper - w.lower;
    w.product = w.bandwidth * w.delay;
    return w;
}

} // namespace omarray
