#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bands.hpp"
#include "cascade.hpp"
#include "designopt.hpp"
#include "dynamics.hpp"
#include "io/config.hpp"
#include "io/csv.hpp"
#include "io/svg.hpp"
#include "model.hpp"
#include "noise.hpp"

namespace omarray::cli
{

enum ExitCode : int
{
    exit_ok = 0,
    exit_usage = 1,
    exit_validation = 2,
    exit_numerical = 3,
};

struct CommonOptions
{
    std::string preset;
    std::string config;
    std::string out;
    std::string format = "csv";
};

struct GridOptions
{
    std::optional<double> min_hz, max_hz;
    std::optional<int> points;
};

struct Artifact
{
    std::string name;
    std::string csv;
    std::string svg;
};

struct CommandResult
{
    std::vector<Artifact> artifacts;
    std::vector<std::pair<std::string, std::string>> summary;
    int code = exit_ok;

    void add(const std::string &key, double v) { summary.emplace_back(key, io::format_double(v)); }
    void add(const std::string &key, const std::string &v) { summary.emplace_back(key, v); }

    std::string summary_text() const
    {
        std::string s;
        for (const auto &[k, v] : summary)
            s += k + "=" + v + "\n";
        return s;
    }
};

struct Context
{
    SystemParams params;
    std::string preset;
    std::optional<io::ConfigTable> config;
    std::string out_dir;
    bool want_csv = true;
    bool want_svg = false;

    std::optional<double> number(const std::string &key) const
    {
        return config ? config->number(key) : std::nullopt;
    }
    std::optional<bool> boolean(const std::string &key) const
    {
        return config ? config->boolean(key) : std::nullopt;
    }
};

namespace detail
{
class UsageError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

inline void parse_format(const std::string &fmt, Context &ctx)
{
    ctx.want_csv = ctx.want_svg = false;
    std::stringstream ss(fmt);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok == "csv")
            ctx.want_csv = true;
        else if (tok == "svg")
            ctx.want_svg = true;
        else
            throw UsageError("unknown output format '" + tok + "' (expected csv, svg or csv,svg)");
    }
    if (!ctx.want_csv && !ctx.want_svg)
        throw UsageError("--format needs at least one of csv, svg");
    if (ctx.want_svg && ctx.out_dir.empty())
        throw UsageError("--format svg needs --out <dir>");
}

inline Context make_context(const CommonOptions &o, bool need_params = true)
{
    Context ctx;
    ctx.out_dir = o.out;
    parse_format(o.format, ctx);
    if (!o.config.empty())
        ctx.config = io::ConfigTable::load(o.config);
    const bool config_has_params = ctx.config && (ctx.config->has("preset") || ctx.config->has_section("params"));
    if (!o.preset.empty() && config_has_params)
        throw UsageError("give parameters either with --preset or in the config file, not both");
    if (!o.preset.empty()) {
        auto p = presets::by_name(o.preset);
        if (!p)
            throw UsageError("unknown preset '" + o.preset + "'");
        ctx.params = *p;
        ctx.preset = o.preset;
    } else if (config_has_params) {
        ctx.params = io::resolve_params(*ctx.config, &ctx.preset);
    } else if (need_params) {
        throw UsageError("no parameters: use --preset NAME or --config FILE");
    }
    return ctx;
}

inline std::vector<double> grid_from(const Context &ctx, const GridOptions &g, double default_half_width,
                                     int default_points)
{
    const double lo = g.min_hz ? hz_to_angular(*g.min_hz)
                               : ctx.number("grid.min_hz") ? hz_to_angular(*ctx.number("grid.min_hz"))
                                                           : -default_half_width;
    const double hi = g.max_hz ? hz_to_angular(*g.max_hz)
                               : ctx.number("grid.max_hz") ? hz_to_angular(*ctx.number("grid.max_hz"))
                                                           : default_half_width;
    const double pts = g.points ? *g.points : ctx.number("grid.points").value_or(default_points);
    if (!(hi > lo))
        throw ValidationError("grid needs min < max");
    if (pts < 2 || pts != std::floor(pts))
        throw ValidationError("grid needs an integer number of points >= 2");
    return linear_grid(lo, hi, static_cast<int>(pts));
}

inline bool explicit_grid(const Context &ctx, const GridOptions &g)
{
    return g.min_hz || g.max_hz || g.points || ctx.number("grid.min_hz") || ctx.number("grid.max_hz") ||
           ctx.number("grid.points");
}

inline std::string utc_timestamp()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline nlohmann::json params_json(const SystemParams &p)
{
    return {{"omega1_hz", angular_to_hz(p.omega1)},
            {"omega_m_hz", angular_to_hz(p.omega_m)},
            {"kappa_ex_hz", angular_to_hz(p.kappa_ex)},
            {"kappa_in_hz", angular_to_hz(p.kappa_in)},
            {"gamma_m_hz", angular_to_hz(p.gamma_m)},
            {"omega_drive_hz", angular_to_hz(p.omega_drive)},
            {"h_hz", angular_to_hz(p.h_coupling)},
            {"n", p.n_elements},
            {"phase_per_cell", p.phase_per_cell},
            {"cell_transit_s", p.cell_transit},
            {"t_base_k", p.t_base},
            {"chi_k", p.chi}};
}

// Data files go to --out; everything time-dependent goes to the sidecar.
inline void write_outputs(const Context &ctx, const std::string &command, const CommandResult &res,
                          const std::vector<std::string> &argv, std::ostream &out)
{
    if (ctx.out_dir.empty()) {
        if (!res.summary.empty())
            out << res.summary_text();
        else if (!res.artifacts.empty() && ctx.want_csv)
            out << res.artifacts.front().csv;
        return;
    }
    std::filesystem::create_directories(ctx.out_dir);
    const std::filesystem::path dir(ctx.out_dir);
    nlohmann::json files = nlohmann::json::array();
    for (const auto &a : res.artifacts) {
        if (ctx.want_csv && !a.csv.empty()) {
            io::write_text_file((dir / (a.name + ".csv")).string(), a.csv);
            files.push_back(a.name + ".csv");
        }
        if (ctx.want_svg && !a.svg.empty()) {
            io::write_text_file((dir / (a.name + ".svg")).string(), a.svg);
            files.push_back(a.name + ".svg");
        }
    }
    if (!res.summary.empty()) {
        io::write_text_file((dir / (command + "_summary.txt")).string(), res.summary_text());
        files.push_back(command + "_summary.txt");
        out << res.summary_text();
    }
    nlohmann::json meta{{"tool", "omarray"},
                        {"command", command},
                        {"arguments", argv},
                        {"preset", ctx.preset},
                        {"parameters", params_json(ctx.params)},
                        {"outputs", files},
                        {"created_utc", utc_timestamp()}};
    io::write_text_file((dir / (command + ".meta.json")).string(), meta.dump(2) + "\n");
}

// ---------------------------------------------------------------------------

inline CommandResult run_spectrum(Context &ctx, std::optional<int> n_flag, const GridOptions &g)
{
    SystemParams &p = ctx.params;
    if (n_flag)
        p.n_elements = *n_flag;
    require_valid(p);
    const int n = p.n_elements;
    std::vector<double> grid;
    if (explicit_grid(ctx, g)) {
        grid = grid_from(ctx, g, p.kappa_ex + 2.0 * p.omega_drive, 2001);
    } else {
        grid = default_grid(p);
    }
    const auto table = array_spectrum(p, n, grid);

    io::CsvTable csv({"detuning_hz", "r_re", "r_im", "t_re", "t_im", "reflectance", "transmittance", "phase_rad",
                      "group_delay_s"});
    io::PlotSeries rs{"|r|^2", {}, {}, {}}, ts{"|t|^2", {}, {}, {}};
    for (const auto &row : table) {
        csv.add_row({angular_to_hz(row.delta), row.r.real(), row.r.imag(), row.t.real(), row.t.imag(),
                     row.reflectance, row.transmittance, row.phase, row.group_delay});
        const double mhz = angular_to_hz(row.delta) / 1e6;
        rs.x.push_back(mhz);
        rs.y.push_back(row.reflectance);
        ts.x.push_back(mhz);
        ts.y.push_back(row.transmittance);
    }
    CommandResult res;
    Artifact a{"spectrum", csv.str(), ""};
    if (ctx.want_svg)
        a.svg = io::emit_plot({"Reflectance and transmittance, N = " + std::to_string(n), "detuning / 2pi (MHz)",
                               "power fraction", 640, 420, {rs, ts}});
    res.artifacts.push_back(std::move(a));
    return res;
}

inline CommandResult run_bands(Context &ctx, const GridOptions &g)
{
    SystemParams &p = ctx.params;
    require_valid(p);
    const auto grid = grid_from(ctx, g, 1.5 * (0.5 * p.kappa_ex + p.omega_drive), 2001);
    const auto pts = dispersion(p, grid);

    io::CsvTable csv({"detuning_hz", "re_kd", "im_kd", "f_waveguide", "f_optical", "f_mechanical", "band_edge"});
    io::PlotSeries re{"Re Kd", {}, {}, {}}, im{"Im Kd", {}, {}, {}};
    for (const auto &pt : pts) {
        csv.add_row({angular_to_hz(pt.delta), pt.bloch_kd.real(), pt.bloch_kd.imag(), pt.f_waveguide, pt.f_optical,
                     pt.f_mechanical, static_cast<long long>(pt.band_edge)});
        const double mhz = angular_to_hz(pt.delta) / 1e6;
        re.x.push_back(mhz);
        re.y.push_back(pt.bloch_kd.real());
        re.colors.push_back({pt.f_waveguide, pt.f_optical, pt.f_mechanical});
        im.x.push_back(mhz);
        im.y.push_back(pt.bloch_kd.imag());
    }
    CommandResult res;
    Artifact a{"bands", csv.str(), ""};
    if (ctx.want_svg)
        a.svg = io::emit_plot({"Bloch phase per cell (colour: waveguide, optical, mechanical)",
                               "detuning / 2pi (MHz)", "Kd (rad)", 640, 420, {re, im}});
    res.artifacts.push_back(std::move(a));
    if (p.omega_drive > 0.0) {
        const auto e = band_edges(p);
        res.add("inner_edge_hz", angular_to_hz(e.inner));
        res.add("outer_edge_hz", angular_to_hz(e.outer));
        res.add("inner_edge_approx_hz", angular_to_hz(e.inner_approx));
        res.add("outer_edge_approx_hz", angular_to_hz(e.outer_approx));
    }
    // The table is the primary output on stdout; edges go to the summary file only.
    if (ctx.out_dir.empty())
        res.summary.clear();
    return res;
}

struct StoreFlags
{
    std::optional<int> n;
    std::optional<double> hold_s, ramp_s, half_width_s, dt_s, omega0_hz;
    std::optional<int> snapshots;
};

inline CommandResult run_store(Context &ctx, const StoreFlags &f)
{
    SystemParams &p = ctx.params;
    if (f.n)
        p.n_elements = *f.n;
    require_valid(p);
    const double k = p.kappa();
    auto pick = [&](const std::optional<double> &flag, const char *key, double fallback) {
        if (flag)
            return *flag;
        return ctx.number(key).value_or(fallback);
    };
    const double omega0 = hz_to_angular(pick(f.omega0_hz, "schedule.omega0_hz", angular_to_hz(p.omega_drive)));
    if (!(omega0 > 0.0))
        throw ValidationError("store needs a positive drive amplitude (omega_drive_hz or schedule.omega0_hz)");
    const double cell_delay = p.kappa_ex / (2.0 * omega0 * omega0);
    const double tau = p.n_elements * cell_delay;

    PulseSpec pulse;
    pulse.half_width = pick(f.half_width_s, "pulse.half_width_s", 7.0 * cell_delay);
    pulse.detuning = hz_to_angular(ctx.number("pulse.detuning_hz").value_or(0.0));
    pulse.amplitude = ctx.number("pulse.amplitude").value_or(1.0);
    pulse.launch_time = ctx.number("pulse.launch_s").value_or(3.0 * pulse.half_width);

    StorageProtocol proto;
    proto.omega0 = omega0;
    proto.ramp = pick(f.ramp_s, "schedule.ramp_s", 20.0 / k);
    proto.hold = pick(f.hold_s, "schedule.hold_s", 100.0 / k);
    proto.entry = ctx.number("schedule.entry_s").value_or(centred_entry(p, omega0, pulse.launch_time, proto.ramp));
    proto.tail = ctx.number("schedule.tail_s").value_or(tau + 6.0 * pulse.half_width);
    if (!(proto.entry > 0.0))
        throw ValidationError("storage entry hold is not positive; shorten the ramp or delay the pulse");
    const auto schedule = make_storage_schedule(proto);

    SimulationOptions opt;
    opt.dt = pick(f.dt_s, "run.dt_s", 0.5 * max_stable_step(p));
    opt.t_end = ctx.number("run.t_end_s").value_or(schedule.end());
    const long steps = static_cast<long>(std::ceil(opt.t_end / opt.dt));
    opt.record_stride = static_cast<int>(ctx.number("run.record_stride").value_or(std::max(1L, steps / 20000)));
    opt.element_snapshots = f.snapshots ? *f.snapshots : static_cast<int>(ctx.number("run.snapshots").value_or(0));
    const auto run = simulate(p, schedule, pulse, opt);
    const auto m = storage_metrics(run);
    const auto adiabatic = adiabaticity_margin(p, schedule);

    io::CsvTable csv({"time_s", "drive_hz", "in_re", "in_im", "out_re", "out_im", "refl_re", "refl_im", "e_input",
                      "e_transmitted", "e_reflected", "e_optical", "e_mechanical", "e_loss_optical",
                      "e_loss_mechanical"});
    io::PlotSeries in_s{"input", {}, {}, {}}, out_s{"output", {}, {}, {}};
    for (std::size_t i = 0; i < run.times.size(); ++i) {
        const auto &l = run.ledger[i];
        csv.add_row({run.times[i], angular_to_hz(run.drive[i]), run.input[i].real(), run.input[i].imag(),
                     run.transmitted[i].real(), run.transmitted[i].imag(), run.reflected[i].real(),
                     run.reflected[i].imag(), l.input, l.transmitted, l.reflected, l.optical, l.mechanical,
                     l.dissipated_optical, l.dissipated_mechanical});
        in_s.x.push_back(run.times[i] * 1e9);
        in_s.y.push_back(std::norm(run.input[i]));
        out_s.x.push_back(run.times[i] * 1e9);
        out_s.y.push_back(std::norm(run.transmitted[i]));
    }
    CommandResult res;
    Artifact a{"store", csv.str(), ""};
    if (ctx.want_svg)
        a.svg = io::emit_plot({"Capture, hold and release", "time (ns)", "photon flux (arb.)", 640, 420, {in_s, out_s}});
    res.artifacts.push_back(std::move(a));
    if (!run.elements.empty()) {
        std::vector<std::string> header{"time_s", "element", "a_re", "a_im", "b_re", "b_im"};
        io::CsvTable el(header);
        for (const auto &s : run.elements)
            for (std::size_t j = 0; j < s.optical.size(); ++j)
                el.add_row({s.time, static_cast<long long>(j), s.optical[j].real(), s.optical[j].imag(),
                            s.mechanical[j].real(), s.mechanical[j].imag()});
        res.artifacts.push_back({"store_elements", el.str(), ""});
    }
    res.add("n", static_cast<double>(p.n_elements));
    res.add("omega0_hz", angular_to_hz(omega0));
    res.add("pulse_half_width_s", pulse.half_width);
    res.add("ramp_s", proto.ramp);
    res.add("hold_s", proto.hold);
    res.add("dt_s", opt.dt);
    res.add("efficiency", m.efficiency);
    res.add("fidelity", m.fidelity);
    res.add("achieved_delay_s", m.achieved_delay);
    res.add("max_ledger_imbalance", run.max_imbalance());
    res.add("max_adiabaticity_ratio", adiabatic.max_ratio);
    for (const auto &w : run.warnings)
        res.add("warning", w);
    return res;
}

inline CommandResult run_noise(Context &ctx, std::optional<double> bandwidth_hz, std::optional<double> bath_k,
                               bool unfiltered)
{
    SystemParams &p = ctx.params;
    require_valid(p);
    double bw;
    if (bandwidth_hz)
        bw = hz_to_angular(*bandwidth_hz);
    else if (ctx.number("noise.bandwidth_hz"))
        bw = hz_to_angular(*ctx.number("noise.bandwidth_hz"));
    else {
        if (!(p.omega_drive > 0.0) || p.n_elements < 1)
            throw ValidationError("noise needs --bandwidth-hz when the array is undriven or empty");
        bw = bandwidth_limits(p, p.n_elements).usable;
    }
    const bool filtered = !(unfiltered || !ctx.boolean("noise.stokes_filtered").value_or(true));
    auto r = noise_report(p, bw, filtered);
    if (bath_k || ctx.number("noise.bath_k")) {
        const double t = bath_k ? *bath_k : *ctx.number("noise.bath_k");
        r.bath_temperature = t;
        r.n_thermal = thermal_occupation(p.omega_m, t);
        r.steady_energy = mech_energy_steady(p, t);
        const auto np = noise_power(p, p.n_elements, t, filtered);
        r.p_noise = np.approximate;
        r.p_noise_bound = np.bound;
        r.ratio = r.p_noise > 0.0 ? r.p_photon / r.p_noise : std::numeric_limits<double>::infinity();
    }
    const double per_element = p.n_elements > 0 ? r.p_noise / p.n_elements : 0.0;

    io::CsvTable csv({"bath_temperature_k", "n_thermal", "gamma_opt_hz", "gamma_plus_hz", "steady_energy_j",
                      "p_noise_w", "p_noise_per_element_w", "p_noise_bound_w", "bandwidth_hz", "p_photon_w",
                      "photon_to_noise"});
    csv.add_row({r.bath_temperature, r.n_thermal, angular_to_hz(r.gamma_opt), angular_to_hz(r.gamma_plus),
                 r.steady_energy, r.p_noise, per_element, r.p_noise_bound, angular_to_hz(bw), r.p_photon, r.ratio});
    CommandResult res;
    res.artifacts.push_back({"noise", csv.str(), ""});
    res.add("bath_temperature_k", r.bath_temperature);
    res.add("n_thermal", r.n_thermal);
    res.add("gamma_opt_hz", angular_to_hz(r.gamma_opt));
    res.add("steady_energy_j", r.steady_energy);
    res.add("p_noise_w", r.p_noise);
    res.add("p_noise_per_element_w", per_element);
    res.add("p_noise_bound_w", r.p_noise_bound);
    res.add("bandwidth_hz", angular_to_hz(bw));
    res.add("p_photon_w", r.p_photon);
    res.add("photon_to_noise", r.ratio);
    res.add("stokes_filtered", filtered ? "true" : "false");
    return res;
}

inline CommandResult run_pump(Context &ctx, const GridOptions &g, std::optional<double> photons_flag)
{
    SystemParams &p = ctx.params;
    require_valid(p);
    const auto gap = pump_gap(p);
    const double photons = photons_flag ? *photons_flag
                                        : ctx.number("pump.photons").value_or(derived_rates(p).pump_photons);
    // Default scan: upper pump branch from just above the gap edge out to 20 kappa_ex, log spaced.
    const double lo = g.min_hz ? hz_to_angular(*g.min_hz)
                               : ctx.number("pump.min_hz") ? hz_to_angular(*ctx.number("pump.min_hz"))
                                                           : (gap.exists ? gap.upper * 1.02 : 0.05 * p.kappa_ex);
    const double hi = g.max_hz ? hz_to_angular(*g.max_hz)
                               : ctx.number("pump.max_hz") ? hz_to_angular(*ctx.number("pump.max_hz"))
                                                           : 20.0 * p.kappa_ex;
    const double pts = g.points ? *g.points : ctx.number("pump.points").value_or(200);
    if (!(lo > 0.0) || !(hi > lo) || pts < 2)
        throw ValidationError("pump scan needs 0 < min < max and at least 2 points");
    const auto grid = log_axis(lo, hi, static_cast<int>(pts));

    io::CsvTable csv({"detuning_hz", "attenuation", "attenuation_approx", "attenuation_ratio", "photon_flux",
                      "input_power_w"});
    io::PlotSeries s{"input power vs attenuation", {}, {}, {}};
    for (double d : grid) {
        const auto r = pump_requirements(d, photons, p);
        csv.add_row({angular_to_hz(d), r.attenuation, r.attenuation_approx, r.attenuation / r.attenuation_approx,
                     r.photon_flux, r.input_power});
        s.x.push_back(r.attenuation);
        s.y.push_back(r.input_power * 1e3);
    }
    CommandResult res;
    Artifact a{"pump", csv.str(), ""};
    if (ctx.want_svg)
        a.svg = io::emit_plot({"Pump power against attenuation per cell", "Im(Kd)", "input power (mW)", 640, 420, {s}});
    res.artifacts.push_back(std::move(a));
    return res;
}

struct OptimizeFlags
{
    bool reference = false;
    bool no_refine = false;
    bool grid = false;
    std::optional<int> points_per_decade;
};

inline CommandResult run_optimize(Context &ctx, const OptimizeFlags &f)
{
    OptimizerOptions opt;
    SystemParams base;
    if (f.reference) {
        base = reference_design_base();
        ctx.params = base;
        ctx.preset = "OPTIMUM";
    } else {
        base = ctx.params;
    }
    require_valid(base);
    auto &b = opt.bounds;
    b.n_min = ctx.number("optimizer.n_min").value_or(b.n_min);
    b.n_max = ctx.number("optimizer.n_max").value_or(b.n_max);
    if (auto v = ctx.number("optimizer.kappa_ex_min_hz"))
        b.kappa_ex_min = hz_to_angular(*v);
    if (auto v = ctx.number("optimizer.kappa_ex_max_hz"))
        b.kappa_ex_max = hz_to_angular(*v);
    if (auto v = ctx.number("optimizer.omega_min_hz"))
        b.omega_min = hz_to_angular(*v);
    if (auto v = ctx.number("optimizer.omega_max_hz"))
        b.omega_max = hz_to_angular(*v);
    opt.thresholds.min_photon_to_noise =
        ctx.number("optimizer.min_photon_to_noise").value_or(opt.thresholds.min_photon_to_noise);
    opt.thresholds.max_gamma_tau = ctx.number("optimizer.max_gamma_tau").value_or(opt.thresholds.max_gamma_tau);
    opt.points_per_decade = f.points_per_decade
                                ? *f.points_per_decade
                                : static_cast<int>(ctx.number("optimizer.points_per_decade").value_or(20));
    opt.refine = !f.no_refine && ctx.boolean("optimizer.refine").value_or(true);
    opt.keep_grid = f.grid && !ctx.out_dir.empty();

    const auto r = optimize(base, opt);
    const auto &c = r.best;
    std::vector<std::string> header{"n", "kappa_ex_hz", "omega_drive_hz", "bandwidth_hz", "delay_s", "product",
                                    "bath_temperature_k", "p_noise_w", "p_photon_w", "photon_to_noise", "gamma_tau",
                                    "feasible"};
    auto row = [](const DesignCandidate &d) -> std::vector<io::CsvCell> {
        return {d.n, angular_to_hz(d.kappa_ex), angular_to_hz(d.omega_drive), angular_to_hz(d.bandwidth), d.delay,
                d.product, d.bath_temperature, d.p_noise, d.p_photon, d.photon_to_noise, d.gamma_tau,
                static_cast<long long>(d.feasible())};
    };
    CommandResult res;
    io::CsvTable best(header);
    best.add_row(row(c));
    res.artifacts.push_back({"optimize", best.str(), ""});
    if (opt.keep_grid) {
        io::CsvTable grid(header);
        for (const auto &d : r.grid)
            grid.add_row(row(d));
        res.artifacts.push_back({"optimize_grid", grid.str(), ""});
    }
    res.add("feasible", r.feasible ? "true" : "false");
    if (!r.feasible)
        res.add("binding_constraint", r.binding_constraint);
    res.add("product", c.product);
    res.add("n", c.n);
    res.add("kappa_ex_hz", angular_to_hz(c.kappa_ex));
    res.add("omega_drive_hz", angular_to_hz(c.omega_drive));
    res.add("bandwidth_hz", angular_to_hz(c.bandwidth));
    res.add("delay_s", c.delay);
    res.add("bath_temperature_k", c.bath_temperature);
    res.add("p_noise_w", c.p_noise);
    res.add("p_photon_w", c.p_photon);
    res.add("photon_to_noise", c.photon_to_noise);
    res.add("gamma_tau", c.gamma_tau);
    res.add("absorption_binding", c.absorption_binding ? "true" : "false");
    res.add("evaluations", static_cast<double>(r.evaluations));
    res.add("bounds_n", io::format_double(b.n_min) + ".." + io::format_double(b.n_max));
    res.add("bounds_kappa_ex_hz",
            io::format_double(angular_to_hz(b.kappa_ex_min)) + ".." + io::format_double(angular_to_hz(b.kappa_ex_max)));
    res.add("bounds_omega_drive_hz",
            io::format_double(angular_to_hz(b.omega_min)) + ".." + io::format_double(angular_to_hz(b.omega_max)));
    return res;
}

inline CommandResult run_validate(Context &ctx)
{
    const auto rep = validate_params(ctx.params);
    CommandResult res;
    res.add("status", rep.ok ? "ok" : "invalid");
    for (const auto &e : rep.errors)
        res.add("error", e);
    for (const auto &w : rep.warnings)
        res.add("warning", w);
    if (rep.ok) {
        const auto d = derived_rates(ctx.params);
        res.add("kappa_hz", angular_to_hz(d.kappa));
        res.add("gamma_opt_hz", angular_to_hz(d.gamma_opt));
        res.add("delay_per_cell_s", d.delay_per_cell);
        res.add("total_delay_s", d.total_delay);
        res.add("slow_band_width_hz", angular_to_hz(d.slow_band_width));
        res.add("pump_photons", d.pump_photons);
        res.add("sideband_ratio", d.sideband_ratio);
    }
    res.code = rep.ok ? exit_ok : exit_validation;
    return res;
}
} // namespace detail

// Parse and run one subcommand. Usage text and errors go to `err`.
inline int dispatch(const std::vector<std::string> &args, std::ostream &out, std::ostream &err)
{
    CLI::App app{"Slow light and storage in driven optomechanical arrays", "omarray"};
    app.require_subcommand(1);
    app.fallthrough(false);

    CommonOptions common;
    auto add_common = [&](CLI::App *sub, bool with_params = true) {
        if (with_params) {
            sub->add_option("--preset", common.preset, "Named parameter set (FIG1, PAPER_DEVICE, PAPER_DEVICE_RT, OPTIMUM)");
        }
        sub->add_option("--config", common.config, "Config file (key = value, [section] tables)");
        sub->add_option("--out", common.out, "Output directory; without it results go to stdout");
        sub->add_option("--format", common.format, "Output formats: csv, svg or csv,svg")->default_val("csv");
    };
    GridOptions grid;
    auto add_grid = [&](CLI::App *sub) {
        sub->add_option("--min-hz", grid.min_hz, "Lowest detuning / 2pi");
        sub->add_option("--max-hz", grid.max_hz, "Highest detuning / 2pi");
        sub->add_option("--points", grid.points, "Number of grid points");
    };

    auto *spectrum = app.add_subcommand("spectrum", "Reflection and transmission of N elements");
    add_common(spectrum);
    add_grid(spectrum);
    std::optional<int> n_flag;
    spectrum->add_option("--n", n_flag, "Number of elements (overrides the parameter set)");

    auto *bands = app.add_subcommand("bands", "Infinite-array dispersion and energy fractions");
    add_common(bands);
    add_grid(bands);

    auto *store = app.add_subcommand("store", "Time-domain capture, hold and release of a pulse");
    add_common(store);
    detail::StoreFlags sf;
    store->add_option("--n", sf.n, "Number of elements");
    store->add_option("--omega0-hz", sf.omega0_hz, "Drive amplitude / 2pi while the pulse propagates");
    store->add_option("--hold-s", sf.hold_s, "Storage time at zero drive");
    store->add_option("--ramp-s", sf.ramp_s, "Duration of each raised-cosine ramp");
    store->add_option("--half-width-s", sf.half_width_s, "Gaussian pulse 1/e amplitude half-width");
    store->add_option("--dt-s", sf.dt_s, "Integration step (at most 0.02 / kappa)");
    store->add_option("--snapshots", sf.snapshots, "Number of per-element snapshots to write");

    auto *noise = app.add_subcommand("noise", "Mechanical noise and single-photon power budget");
    add_common(noise);
    std::optional<double> bw_flag, bath_flag;
    bool unfiltered = false;
    noise->add_option("--bandwidth-hz", bw_flag, "Signal bandwidth / 2pi (default: usable array bandwidth)");
    noise->add_option("--bath-k", bath_flag, "Override the bath temperature");
    noise->add_flag("--unfiltered", unfiltered, "Include the Stokes sideband in the output noise");

    auto *pump = app.add_subcommand("pump", "Pump attenuation and input power across detuning");
    add_common(pump);
    add_grid(pump);
    std::optional<double> photons_flag;
    pump->add_option("--photons", photons_flag, "Pump photons per tuning cavity (default (Omega/h)^2)");

    auto *optimize_cmd = app.add_subcommand("optimize", "Maximize the bandwidth-delay product under noise and decay limits");
    add_common(optimize_cmd);
    detail::OptimizeFlags of;
    optimize_cmd->add_flag("--reference,--paper-333", of.reference,
                           "Use the reference base (T0 = 100 mK, Q_m = 1e5, chi = 2 uK, Q1 = 3e6)");
    optimize_cmd->add_flag("--no-refine", of.no_refine, "Report the best grid point without local refinement");
    optimize_cmd->add_flag("--grid", of.grid, "Also write every evaluated grid point (needs --out)");
    optimize_cmd->add_option("--points-per-decade", of.points_per_decade, "Grid density per axis");

    auto *validate = app.add_subcommand("validate", "Check a parameter set and print derived rates");
    add_common(validate);

    std::vector<std::string> argv_copy = args;
    std::vector<char *> argv;
    static char prog[] = "omarray";
    argv.push_back(prog);
    for (auto &a : argv_copy)
        argv.push_back(a.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp &) {
        auto subs = app.get_subcommands();
        out << (subs.empty() ? app.help() : subs.front()->help());
        return exit_ok;
    } catch (const CLI::CallForAllHelp &) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::ParseError &e) {
        err << "error: " << e.what() << "\n\n";
        auto subs = app.get_subcommands();
        err << (subs.empty() ? app.help() : subs.front()->help());
        return exit_usage;
    }

    CLI::App *chosen = app.get_subcommands().front();
    const std::string name = chosen->get_name();
    try {
        const bool needs_params = !(name == "optimize" && of.reference);
        Context ctx = detail::make_context(common, needs_params);
        CommandResult res;
        if (name == "spectrum")
            res = detail::run_spectrum(ctx, n_flag, grid);
        else if (name == "bands")
            res = detail::run_bands(ctx, grid);
        else if (name == "store")
            res = detail::run_store(ctx, sf);
        else if (name == "noise")
            res = detail::run_noise(ctx, bw_flag, bath_flag, unfiltered);
        else if (name == "pump")
            res = detail::run_pump(ctx, grid, photons_flag);
        else if (name == "optimize")
            res = detail::run_optimize(ctx, of);
        else
            res = detail::run_validate(ctx);
        if (ctx.config)
            for (const auto &k : ctx.config->unused_keys())
                err << "warning: config key '" << k << "' was not used by '" << name << "'\n";
        detail::write_outputs(ctx, name, res, args, out);
        return res.code;
    } catch (const detail::UsageError &e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const io::ConfigError &e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const ValidationError &e) {
        err << "validation error: " << e.what() << "\n";
        return exit_validation;
    } catch (const NumericalError &e) {
        err << "numerical error: " << e.what() << "\n";
        return exit_numerical;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << "\n";
        return exit_numerical;
    }
}

inline int dispatch(int argc, char **argv, std::ostream &out = std::cout, std::ostream &err = std::cerr)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return dispatch(args, out, err);
}

} // namespace omarray::cli
