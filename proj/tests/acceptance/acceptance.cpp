// One PASS/FAIL line per acceptance criterion. Tolerances are fixed here;
// the exit status is the number of failed criteria.

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <omarray/omarray.hpp>

#include "oracles.hpp"
#include "scenarios.hpp"

using namespace omarray;

namespace
{

struct Outcome
{
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string &what)
    {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

struct Criterion
{
    int id;
    const char *name;
    double budget_s;
    std::function<void(Outcome &)> body;
};

SystemParams lossless_fig1()
{
    auto p = presets::fig1();
    p.kappa_in = 0.0;
    p.gamma_m = 0.0;
    return p;
}

void single_element(Outcome &o)
{
    const auto p = presets::fig1();
    const double t0 = std::norm(transmission(0.0, p));
    const double half = 0.5 * measure_window(p, 1).bandwidth;
    const double predicted = 2.0 * p.omega_drive * p.omega_drive / p.kappa_ex;
    o.detail << "|t(0)|^2-1=" << t0 - 1.0 << " half-width/(2W^2/ke)=" << half / predicted;
    o.require(std::abs(t0 - 1.0) <= 1e-9, "|t(0)|^2 = 1 within 1e-9");
    o.require(std::abs(half / predicted - 1.0) <= 0.25, "window half-width within 25%");
}

void unitarity(Outcome &o)
{
    auto p = lossless_fig1();
    // The grid hits the lossless pole at delta = +-Omega where t = 0 and the
    // matrices blow up; rounding in det is then of order eps |M|^2, so the
    // determinant error is measured relative to max(1, |M|^2).
    double flux = 0.0, det_raw = 0.0, det = 0.0;
    for (double d : linear_grid(-2.0 * p.kappa_ex, 2.0 * p.kappa_ex, 2001)) {
        flux = std::max(flux, std::abs(std::norm(reflection(d, p)) + std::norm(transmission(d, p)) - 1.0));
        for (const auto &m : {element_matrix(d, p), free_matrix(d, p), block_matrix(d, p)}) {
            const double err = std::abs(m.det() - 1.0);
            det_raw = std::max(det_raw, err);
            det = std::max(det, err / std::max(1.0, m.max_abs() * m.max_abs()));
        }
    }
    o.detail << "max flux error=" << flux << " max |det-1|/max(1,|M|^2)=" << det << " (unscaled " << det_raw << ")";
    o.require(flux <= 1e-12, "|r|^2+|t|^2 = 1 within 1e-12");
    o.require(det <= 1e-12, "det = 1 within 1e-12 of |M|^2");
}

void edges(Outcome &o)
{
    double worst = 0.0;
    for (double ratio : {0.01, 0.03, 0.05, 0.1}) {
        auto p = lossless_fig1();
        p.omega_drive = ratio * p.kappa_ex;
        const auto e = band_edges(p);
        worst = std::max({worst, std::abs(e.inner / e.inner_approx - 1.0), std::abs(e.outer / e.outer_approx - 1.0)});
        // The numerical edges are where the Bloch phase leaves the real axis.
        const double in_band = bloch_wavevector(0.999 * e.inner, p).imag();
        const double in_gap = bloch_wavevector(1.001 * e.inner, p).imag();
        o.require(std::abs(in_band) < 1e-9 && in_gap > 0.0, "Im Kd switches on at the inner edge");
    }
    o.detail << "worst relative edge error=" << worst;
    o.require(worst <= 0.1, "edges within 10%");
}

void keff(Outcome &o)
{
    auto p = lossless_fig1();
    p.kappa_in = presets::fig1().kappa_in;
    p.cell_transit = 0.0;
    const auto s = keff_series(p);
    const double scale = p.omega_drive * p.omega_drive / p.kappa_ex;
    std::vector<double> xs, bloch_err, block_err;
    for (double x = 1e-1; x >= 0.99e-3; x /= std::sqrt(10.0)) {
        const double d = x * scale;
        xs.push_back(d);
        bloch_err.push_back(std::abs(bloch_wavevector(d, p) - s(d)));
        block_err.push_back(std::abs(two_block_keff(d, p) - s(d)));
    }
    const double bloch_order = oracle::fitted_order(xs, bloch_err);
    const double block_order = oracle::fitted_order(xs, block_err);

    auto q = presets::optimum();
    const double tau = q.n_elements * q.kappa_ex / (2.0 * q.omega_drive * q.omega_drive);
    const double measured = measure_window(q, q.n_elements).delay;
    o.detail << "Bloch Kd residual order=" << bloch_order << " (two-block k_eff order=" << block_order
             << ") delay/(N ke/2W^2)=" << measured / tau;
    o.require(bloch_order >= 3.7, "Bloch Kd minus series is O(delta^4)");
    o.require(std::abs(measured / tau - 1.0) <= 0.01, "group delay within 1%");
}

void crossover(Outcome &o)
{
    auto p = presets::fig1();
    p.kappa_in = p.kappa_ex / 36.0;
    const double predicted = arm_crossover(p.kappa_ex, p.kappa_in);
    int switched = -1;
    for (int n = 1; n <= 10000; ++n)
        if (bandwidth_delay_product(p, n).absorption_binding) {
            switched = n;
            break;
        }
    o.detail << "predicted N=" << predicted << " first absorption-bound N=" << switched;
    o.require(switched > 0 && std::abs(switched - predicted) <= 1.0, "switch within one integer step");
}

void phasing(Outcome &o)
{
    auto p = lossless_fig1();
    p.cell_transit = 0.0;
    std::vector<double> quarter, half;
    for (int n : {4, 16, 64}) {
        quarter.push_back(measure_window(p, n).product);
        auto q = p;
        q.phase_per_cell = kPi;
        half.push_back(measure_window(q, n).product);
    }
    const auto [lo, hi] = std::minmax_element(half.begin(), half.end());
    o.detail << "quarter-wave " << quarter[0] << "," << quarter[1] << "," << quarter[2] << " half-wave " << half[0]
             << "," << half[1] << "," << half[2];
    o.require(quarter[0] < quarter[1] && quarter[1] < quarter[2], "quarter-wave product grows with N");
    o.require(*hi / *lo <= 2.0, "half-wave product within a factor 2");
}

void storage(Outcome &o)
{
    const auto m = storage_metrics(scenario::run(scenario::storage(scenario::storage_array(), 100.0)));
    o.detail << "efficiency=" << m.efficiency << " fidelity=" << m.fidelity;
    o.require(m.efficiency >= 0.95, "efficiency >= 0.95");
    o.require(m.fidelity >= 0.95, "fidelity >= 0.95");

    auto p = scenario::storage_array();
    p.gamma_m = 0.002 * p.kappa();
    const double base = storage_metrics(scenario::run(scenario::storage(p, 0.0))).efficiency;
    double worst = 0.0;
    for (double hold : {50.0, 150.0, 500.0}) {
        const double eff = storage_metrics(scenario::run(scenario::storage(p, hold))).efficiency;
        worst = std::max(worst, std::abs(eff / base / std::exp(-p.gamma_m * hold / p.kappa()) - 1.0));
    }
    o.detail << " worst decay deviation=" << worst;
    o.require(worst <= 0.1, "decay follows exp(-gamma T) within 10%");
}

void ledger(Outcome &o)
{
    const auto s = scenario::storage(scenario::storage_array(), 100.0);
    const auto run = scenario::run(s);
    auto fine = s;
    fine.dt *= 0.5;
    const auto m1 = storage_metrics(run);
    const auto m2 = storage_metrics(scenario::run(fine));
    const double change = std::max({std::abs(m2.efficiency / m1.efficiency - 1.0),
                                    std::abs(m2.fidelity / m1.fidelity - 1.0),
                                    std::abs(m2.achieved_delay / m1.achieved_delay - 1.0)});
    o.detail << "max imbalance=" << run.max_imbalance() << " dt-halving change=" << change;
    o.require(run.max_imbalance() <= 1e-6, "ledger within 1e-6");
    o.require(change < 1e-4, "dt halving changes metrics < 1e-4");
}

void noise(Outcome &o)
{
    const auto p = presets::paper_device();
    const double tb = bath_temperature(p);
    const double rate = mech_energy_model(p, tb).rate;
    double worst = 0.0;
    for (double x : {0.1, 1.0, 5.0}) {
        const double t = x / rate;
        worst = std::max(worst, std::abs(mech_energy(p, tb, t) / oracle::energy_rk4(p, tb, t, 0.0, 100000) - 1.0));
    }
    const double ess_gap = std::abs(oracle::energy_rk4(p, tb, 60.0 / rate, 0.0, 200000) / mech_energy_steady(p, tb) - 1.0);
    const double per_element = noise_power(presets::paper_device_room_temperature(), 1, 300.0).approximate;
    o.detail << "transient error=" << worst << " steady error=" << ess_gap << " room-temperature noise per element="
             << per_element * 1e9 << " nW (quoted ~0.4 nW)";
    o.require(worst <= 1e-9 && ess_gap <= 1e-9, "closed form matches integration to 1e-9");
    o.require(per_element >= 0.04e-9 && per_element <= 4e-9, "within one order of magnitude of 0.4 nW");
}

void design(Outcome &o)
{
    const auto r = optimize(reference_design_base());
    const auto &c = r.best;
    o.detail << "product=" << c.product << " N=" << c.n << " kappa_ex/2pi=" << angular_to_hz(c.kappa_ex) * 1e-9
             << " GHz Omega/2pi=" << angular_to_hz(c.omega_drive) * 1e-6 << " MHz";
    auto within2 = [](double v, double ref) { return v >= ref / 2.0 && v <= ref * 2.0; };
    o.require(r.feasible && c.feasible(), "feasible");
    o.require(std::abs(c.product / 110.0 - 1.0) <= 0.25, "product 110 +- 25%");
    o.require(within2(c.n, 275.0), "N within factor 2 of 275");
    o.require(within2(angular_to_hz(c.kappa_ex), 1.1e9), "kappa_ex within factor 2 of 1.1 GHz");
    o.require(within2(angular_to_hz(c.omega_drive), 130e6), "Omega within factor 2 of 130 MHz");

    OptimizerOptions coarse;
    coarse.n_count = coarse.kappa_count = coarse.omega_count = 10;
    coarse.refine = false;
    coarse.keep_grid = true;
    const auto g = optimize(reference_design_base(), coarse);
    double best = -1.0;
    const DesignCandidate *arg = nullptr;
    for (const auto &cand : g.grid)
        if (cand.feasible() && cand.product > best) {
            best = cand.product;
            arg = &cand;
        }
    const bool same = arg && arg->n == g.best.n && arg->kappa_ex == g.best.kappa_ex &&
                      arg->omega_drive == g.best.omega_drive;
    o.detail << " coarse argmax product=" << best;
    o.require(same, "coarse grid argmax equals brute force");
}

void pump(Outcome &o)
{
    const auto p = presets::paper_device();
    const auto gap = pump_gap(p);
    // Smallest scanned detuning beyond which alpha / alpha_hat stays within 10%.
    double threshold = NAN;
    std::vector<double> ds, alpha, power;
    for (int i = 0; i < 400; ++i) {
        const double d = gap.upper * 1.01 * std::pow(50.0 / 1.01, i / 399.0);
        const auto r = pump_requirements(d, 1e3, p);
        ds.push_back(d);
        alpha.push_back(r.attenuation);
        power.push_back(r.input_power);
    }
    for (std::size_t i = ds.size(); i-- > 0;) {
        const auto r = pump_requirements(ds[i], 1e3, p);
        if (std::abs(r.attenuation / r.attenuation_approx - 1.0) > 0.1)
            break;
        threshold = ds[i];
    }
    bool opposite = true;
    for (std::size_t i = 1; i < ds.size(); ++i)
        opposite = opposite && alpha[i] < alpha[i - 1] && power[i] > power[i - 1];
    const auto far = pump_requirements(20.0 * p.kappa_ex, 1e3, p);
    o.detail << "within 10% beyond delta_p/kappa_ex=" << threshold / p.kappa_ex
             << " ratio at 20 kappa_ex=" << far.attenuation / far.attenuation_approx;
    o.require(threshold <= 3.0 * p.kappa_ex, "alpha/alpha_hat within 10% beyond 3 kappa_ex");
    o.require(std::abs(far.attenuation / far.attenuation_approx - 1.0) < 0.01, "ratio tends to 1");
    o.require(opposite, "input power and attenuation move in opposite directions");
}

} // namespace

int main()
{
    const std::vector<Criterion> list{
        {1, "single-element transparency", 1.0, single_element},
        {2, "flux unitarity", 1.0, unitarity},
        {3, "band edges", 1.0, edges},
        {4, "k_eff series and group delay", 5.0, keff},
        {5, "bandwidth-delay arm crossover", 1.0, crossover},
        {6, "phasing contrast", 30.0, phasing},
        {7, "storage round trip", 120.0, storage},
        {8, "energy ledger", 120.0, ledger},
        {9, "noise model", 1.0, noise},
        {10, "design optimum", 600.0, design},
        {11, "pump trade-off", 5.0, pump},
    };
    int failed = 0;
    for (const auto &c : list) {
        Outcome o;
        const auto start = std::chrono::steady_clock::now();
        try {
            c.body(o);
        } catch (const std::exception &e) {
            o.pass = false;
            o.detail << " [exception: " << e.what() << "]";
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (secs > c.budget_s)
            o.require(false, "runtime budget " + std::to_string(c.budget_s) + " s");
        failed += !o.pass;
        std::printf("%s %2d %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.str().c_str(), secs);
        std::fflush(stdout);
    }
    return failed;
}
