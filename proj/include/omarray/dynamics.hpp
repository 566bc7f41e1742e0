#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include "model.hpp"
#include "two_port.hpp"

namespace omarray
{

// Piecewise drive amplitude Omega(t): holds, linear ramps and raised-cosine
// ramps laid end to end from t = 0. Past the last segment the final value holds.
class DriveSchedule
{
public:
    enum class Shape
    {
        hold,
        linear,
        raised_cosine
    };

    struct Segment
    {
        Shape shape = Shape::hold;
        double start = 0.0;
        double duration = 0.0;
        double from = 0.0;
        double to = 0.0;
    };

    DriveSchedule() = default;
    explicit DriveSchedule(double initial) : initial_(initial) { check_value(initial); }

    static DriveSchedule constant(double omega) { return DriveSchedule(omega); }

    DriveSchedule &hold(double duration)
    {
        return push(Shape::hold, duration, final_value());
    }
    DriveSchedule &ramp_linear(double to, double duration) { return push(Shape::linear, duration, to); }
    DriveSchedule &ramp_cosine(double to, double duration) { return push(Shape::raised_cosine, duration, to); }

    double end() const { return segments_.empty() ? 0.0 : segments_.back().start + segments_.back().duration; }
    double final_value() const { return segments_.empty() ? initial_ : segments_.back().to; }
    const std::vector<Segment> &segments() const { return segments_; }

    double value(double t) const
    {
        const Segment *s = find(t);
        if (!s)
            return t < 0.0 || segments_.empty() ? initial_ : final_value();
        const double x = (t - s->start) / s->duration;
        switch (s->shape) {
        case Shape::hold: return s->from;
        case Shape::linear: return s->from + (s->to - s->from) * x;
        case Shape::raised_cosine: return s->from + (s->to - s->from) * 0.5 * (1.0 - std::cos(kPi * x));
        }
        return s->from;
    }

    double derivative(double t) const
    {
        const Segment *s = find(t);
        if (!s)
            return 0.0;
        const double x = (t - s->start) / s->duration;
        switch (s->shape) {
        case Shape::hold: return 0.0;
        case Shape::linear: return (s->to - s->from) / s->duration;
        case Shape::raised_cosine: return (s->to - s->from) * 0.5 * kPi / s->duration * std::sin(kPi * x);
        }
        return 0.0;
    }

private:
    static void check_value(double v)
    {
        if (!std::isfinite(v) || v < 0.0)
            throw ValidationError("drive amplitude must be finite and non-negative");
    }

    DriveSchedule &push(Shape shape, double duration, double to)
    {
        if (!(duration > 0.0) || !std::isfinite(duration))
            throw ValidationError("drive segment duration must be positive");
        check_value(to);
        segments_.push_back({shape, end(), duration, final_value(), to});
        return *this;
    }

    const Segment *find(double t) const
    {
        if (segments_.empty() || t < 0.0 || t >= end())
            return nullptr;
        auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                                   [](double v, const Segment &s) { return v < s.start; });
        return &*(it - 1);
    }

    double initial_ = 0.0;
    std::vector<Segment> segments_;
};

// Gaussian input pulse in the rotating frame, flux-normalized so that |u|^2 is photon flux:
//   u(t) = amplitude exp(-((t - launch)/half_width)^2) exp(-i detuning (t - launch))
struct PulseSpec
{
    double detuning = 0.0;
    double half_width = 1.0;  // 1/e half-width of the amplitude envelope, s
    double amplitude = 1.0;
    double launch_time = 0.0;

    cplx operator()(double t) const
    {
        const double x = (t - launch_time) / half_width;
        return amplitude * std::exp(-x * x) * std::polar(1.0, -detuning * (t - launch_time));
    }

    double energy() const { return amplitude * amplitude * half_width * std::sqrt(kPi / 2.0); }
    // Full spectral width between the 1/e points of the amplitude spectrum.
    double spectral_width() const { return 4.0 / half_width; }
};

struct EnergyLedger
{
    double input = 0.0;
    double transmitted = 0.0;
    double reflected = 0.0;
    double optical = 0.0;     // sum |a_j|^2
    double mechanical = 0.0;  // sum |b_j|^2
    double dissipated_optical = 0.0;     // kappa_in channel
    double dissipated_mechanical = 0.0;  // gamma_m channel

    double accounted() const
    {
        return transmitted + reflected + optical + mechanical + dissipated_optical + dissipated_mechanical;
    }
    // |input - accounted| relative to an energy scale, by default the input so far.
    double imbalance(double scale = 0.0) const
    {
        const double s = std::max(scale > 0.0 ? scale : input, std::numeric_limits<double>::min());
        return std::abs(input - accounted()) / s;
    }
};

struct ElementSnapshot
{
    double time = 0.0;
    std::vector<cplx> optical;
    std::vector<cplx> mechanical;
};

struct StorageRun
{
    SystemParams params;
    PulseSpec pulse;
    double dt = 0.0;
    std::vector<double> times;
    std::vector<cplx> input;
    std::vector<cplx> transmitted;  // right end
    std::vector<cplx> reflected;    // left end
    std::vector<double> drive;
    std::vector<EnergyLedger> ledger;
    std::vector<ElementSnapshot> elements;
    std::vector<std::string> warnings;

    // Worst ledger mismatch over all samples, relative to the full pulse energy
    // (the input so far is a meaningless scale while the pulse tail is still ~1e-20).
    double max_imbalance() const
    {
        const double scale = std::max(pulse.energy(), ledger.empty() ? 0.0 : ledger.back().input);
        double m = 0.0;
        for (const auto &l : ledger)
            m = std::max(m, l.imbalance(scale));
        return m;
    }
};

struct SimulationOptions
{
    double dt = 0.0;
    double t_end = 0.0;
    int record_stride = 1;
    int element_snapshots = 0;  // number of per-element snapshots spread over the run
};

inline double max_stable_step(const SystemParams &p) { return 0.02 / p.kappa(); }

namespace detail
{
// RK4 state: cavity and mechanical amplitudes plus the integrated ledger fluxes.
struct ArrayState
{
    std::vector<cplx> a, b;
    double e_in = 0.0, e_t = 0.0, e_r = 0.0, d_opt = 0.0, d_mech = 0.0;

    void resize(std::size_t n)
    {
        a.assign(n, cplx{0.0});
        b.assign(n, cplx{0.0});
    }
    void axpy(double h, const ArrayState &k, ArrayState &out) const
    {
        for (std::size_t j = 0; j < a.size(); ++j) {
            out.a[j] = a[j] + h * k.a[j];
            out.b[j] = b[j] + h * k.b[j];
        }
        out.e_in = e_in + h * k.e_in;
        out.e_t = e_t + h * k.e_t;
        out.e_r = e_r + h * k.e_r;
        out.d_opt = d_opt + h * k.d_opt;
        out.d_mech = d_mech + h * k.d_mech;
    }
};

class ArrayIntegrator
{
public:
    ArrayIntegrator(const SystemParams &p, const DriveSchedule &schedule, const PulseSpec &pulse)
        : p_(p), schedule_(schedule), pulse_(pulse), n_(static_cast<std::size_t>(p.n_elements)),
          coupling_(kI * std::sqrt(0.5 * p.kappa_ex)), cell_phase_(std::polar(1.0, p.phase_per_cell))
    {
        r_minus_.resize(n_);
        l_plus_.resize(n_);
    }

    struct Boundary
    {
        cplx in, out_right, out_left;
    };

    // Left-to-right and right-to-left sweeps of the waveguide fields for given cavity amplitudes.
    Boundary sweep(double t, const std::vector<cplx> &a)
    {
        Boundary bd;
        bd.in = pulse_(t);
        cplx u = bd.in;
        for (std::size_t j = 0; j < n_; ++j) {
            r_minus_[j] = u;
            u += coupling_ * a[j];
            if (j + 1 < n_)
                u *= cell_phase_;
        }
        bd.out_right = u;
        u = 0.0;
        for (std::size_t j = n_; j-- > 0;) {
            l_plus_[j] = u;
            u += coupling_ * a[j];
            if (j > 0)
                u *= cell_phase_;
        }
        bd.out_left = u;
        return bd;
    }

    void rhs(double t, const ArrayState &y, ArrayState &dy)
    {
        const double om = schedule_.value(t);
        const Boundary bd = sweep(t, y.a);
        const double half_kappa = 0.5 * p_.kappa();
        const double half_gamma = 0.5 * p_.gamma_m;
        double sum_a = 0.0, sum_b = 0.0;
        for (std::size_t j = 0; j < n_; ++j) {
            dy.a[j] = -half_kappa * y.a[j] + kI * om * y.b[j] + coupling_ * (r_minus_[j] + l_plus_[j]);
            dy.b[j] = -half_gamma * y.b[j] + kI * om * y.a[j];
            sum_a += std::norm(y.a[j]);
            sum_b += std::norm(y.b[j]);
        }
        dy.e_in = std::norm(bd.in);
        dy.e_t = std::norm(bd.out_right);
        dy.e_r = std::norm(bd.out_left);
        dy.d_opt = p_.kappa_in * sum_a;
        dy.d_mech = p_.gamma_m * sum_b;
    }

    void step(double t, double h, ArrayState &y)
    {
        if (k1_.a.size() != n_) {
            for (auto *s : {&k1_, &k2_, &k3_, &k4_, &tmp_})
                s->resize(n_);
        }
        rhs(t, y, k1_);
        y.axpy(0.5 * h, k1_, tmp_);
        rhs(t + 0.5 * h, tmp_, k2_);
        y.axpy(0.5 * h, k2_, tmp_);
        rhs(t + 0.5 * h, tmp_, k3_);
        y.axpy(h, k3_, tmp_);
        rhs(t + h, tmp_, k4_);
        const double w = h / 6.0;
        for (std::size_t j = 0; j < n_; ++j) {
            y.a[j] += w * (k1_.a[j] + 2.0 * k2_.a[j] + 2.0 * k3_.a[j] + k4_.a[j]);
            y.b[j] += w * (k1_.b[j] + 2.0 * k2_.b[j] + 2.0 * k3_.b[j] + k4_.b[j]);
        }
        y.e_in += w * (k1_.e_in + 2.0 * k2_.e_in + 2.0 * k3_.e_in + k4_.e_in);
        y.e_t += w * (k1_.e_t + 2.0 * k2_.e_t + 2.0 * k3_.e_t + k4_.e_t);
        y.e_r += w * (k1_.e_r + 2.0 * k2_.e_r + 2.0 * k3_.e_r + k4_.e_r);
        y.d_opt += w * (k1_.d_opt + 2.0 * k2_.d_opt + 2.0 * k3_.d_opt + k4_.d_opt);
        y.d_mech += w * (k1_.d_mech + 2.0 * k2_.d_mech + 2.0 * k3_.d_mech + k4_.d_mech);
    }

private:
    SystemParams p_;
    const DriveSchedule &schedule_;
    const PulseSpec &pulse_;
    std::size_t n_;
    cplx coupling_;
    cplx cell_phase_;
    std::vector<cplx> r_minus_, l_plus_;
    ArrayState k1_, k2_, k3_, k4_, tmp_;
};
} // namespace detail

// Classical time-domain evolution of the driven array with the input pulse
// injected from the left and open boundaries at both ends. Waveguide transit
// between cells is treated as instantaneous; each cell adds phase_per_cell.
inline StorageRun simulate(const SystemParams &p, const DriveSchedule &schedule, const PulseSpec &pulse,
                           const SimulationOptions &opt)
{
    require_valid(p);
    if (!(opt.dt > 0.0) || !(opt.t_end > 0.0))
        throw ValidationError("simulate needs dt > 0 and t_end > 0");
    if (opt.dt > max_stable_step(p) * (1.0 + 1e-12))
        throw ValidationError("time step too large: dt must not exceed 0.02 / kappa = " +
                              std::to_string(max_stable_step(p)) + " s");
    if (!(pulse.half_width > 0.0))
        throw ValidationError("pulse half-width must be positive");
    if (opt.record_stride < 1)
        throw ValidationError("record_stride must be >= 1");

    StorageRun run;
    run.params = p;
    run.pulse = pulse;
    run.dt = opt.dt;
    const double om0 = schedule.value(pulse.launch_time);
    const double band = 4.0 * om0 * om0 / p.kappa_ex;
    if (pulse.spectral_width() > 2.0 * band)
        run.warnings.push_back("pulse spectrum exceeds twice the slow-band width");

    const std::size_t n = static_cast<std::size_t>(p.n_elements);
    const long steps = static_cast<long>(std::ceil(opt.t_end / opt.dt - 1e-9));
    const long snapshot_every = opt.element_snapshots > 0 ? std::max(1L, steps / opt.element_snapshots) : 0;

    detail::ArrayIntegrator integ(p, schedule, pulse);
    detail::ArrayState y;
    y.resize(n);

    auto record = [&](double t) {
        const auto bd = integ.sweep(t, y.a);
        run.times.push_back(t);
        run.input.push_back(bd.in);
        run.transmitted.push_back(bd.out_right);
        run.reflected.push_back(bd.out_left);
        run.drive.push_back(schedule.value(t));
        EnergyLedger l;
        l.input = y.e_in;
        l.transmitted = y.e_t;
        l.reflected = y.e_r;
        for (std::size_t j = 0; j < n; ++j) {
            l.optical += std::norm(y.a[j]);
            l.mechanical += std::norm(y.b[j]);
        }
        l.dissipated_optical = y.d_opt;
        l.dissipated_mechanical = y.d_mech;
        run.ledger.push_back(l);
    };
    auto snapshot = [&](double t) { run.elements.push_back({t, y.a, y.b}); };

    record(0.0);
    if (snapshot_every > 0)
        snapshot(0.0);
    for (long s = 1; s <= steps; ++s) {
        const double t0 = (s - 1) * opt.dt;
        integ.step(t0, opt.dt, y);
        const double t = s * opt.dt;
        if (s % opt.record_stride == 0 || s == steps)
            record(t);
        if (snapshot_every > 0 && (s % snapshot_every == 0 || s == steps))
            snapshot(t);
    }
    return run;
}

inline StorageRun simulate(const SystemParams &p, const DriveSchedule &schedule, const PulseSpec &pulse,
                           double dt, double t_end)
{
    SimulationOptions opt;
    opt.dt = dt;
    opt.t_end = t_end;
    return simulate(p, schedule, pulse, opt);
}

// -------------------------------------------------------------------------

struct AdiabaticityTrace
{
    std::vector<double> times;
    std::vector<double> ratio;  // |d/dt (Omega^2 / kappa)| / kappa^2
    double max_ratio = 0.0;
};

inline AdiabaticityTrace adiabaticity_margin(const SystemParams &p, const DriveSchedule &schedule,
                                             int samples_per_segment = 2001)
{
    require_valid(p);
    const double k = p.kappa();
    AdiabaticityTrace tr;
    auto add = [&](double t) {
        const double r = std::abs(2.0 * schedule.value(t) * schedule.derivative(t)) / (k * k * k);
        tr.times.push_back(t);
        tr.ratio.push_back(r);
        tr.max_ratio = std::max(tr.max_ratio, r);
    };
    if (schedule.segments().empty()) {
        add(0.0);
        return tr;
    }
    for (const auto &s : schedule.segments())
        for (int i = 0; i < samples_per_segment; ++i) {
            // Sample on [start, end) so the value at a segment boundary belongs to the next segment.
            add(s.start + s.duration * i / samples_per_segment);
        }
    add(schedule.end());
    return tr;
}

// -------------------------------------------------------------------------

struct StorageMetrics
{
    double efficiency = 0.0;
    double fidelity = std::numeric_limits<double>::quiet_NaN();
    double achieved_delay = std::numeric_limits<double>::quiet_NaN();
    double input_energy = 0.0;
    double output_energy = 0.0;
};

// Efficiency from the integrated ledger; fidelity and delay from the recorded
// right-end waveform against the input shifted by reference_delay (NaN: use
// the centroid delay).
inline StorageMetrics storage_metrics(const StorageRun &run,
                                      double reference_delay = std::numeric_limits<double>::quiet_NaN())
{
    StorageMetrics m;
    if (run.ledger.empty())
        throw ValidationError("storage_metrics needs a completed run");
    const auto &last = run.ledger.back();
    m.input_energy = last.input;
    m.output_energy = last.transmitted;
    m.efficiency = last.input > 0.0 ? last.transmitted / last.input : 0.0;

    const auto &t = run.times;
    double out_w = 0.0, out_tw = 0.0, in_w = 0.0, in_tw = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) {
        const double h = t[i] - t[i - 1];
        const double o0 = std::norm(run.transmitted[i - 1]), o1 = std::norm(run.transmitted[i]);
        const double i0 = std::norm(run.input[i - 1]), i1 = std::norm(run.input[i]);
        out_w += 0.5 * h * (o0 + o1);
        out_tw += 0.5 * h * (o0 * t[i - 1] + o1 * t[i]);
        in_w += 0.5 * h * (i0 + i1);
        in_tw += 0.5 * h * (i0 * t[i - 1] + i1 * t[i]);
    }
    if (!(out_w > 0.0) || !(in_w > 0.0))
        return m;
    m.achieved_delay = out_tw / out_w - in_tw / in_w;
    const double shift = std::isnan(reference_delay) ? m.achieved_delay : reference_delay;

    cplx overlap{0.0};
    double ref_w = 0.0;
    cplx prev_term{0.0};
    double prev_ref = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const cplx ref = run.pulse(t[i] - shift);
        const cplx term = std::conj(run.transmitted[i]) * ref;
        const double rn = std::norm(ref);
        if (i > 0) {
            const double h = t[i] - t[i - 1];
            overlap += 0.5 * h * (prev_term + term);
            ref_w += 0.5 * h * (prev_ref + rn);
        }
        prev_term = term;
        prev_ref = rn;
    }
    m.fidelity = ref_w > 0.0 ? std::norm(overlap) / (out_w * ref_w) : std::numeric_limits<double>::quiet_NaN();
    return m;
}

// -------------------------------------------------------------------------
// Capture / hold / release template: hold omega0 while the pulse enters,
// raised-cosine ramp to zero, hold, and the mirrored ramp back to omega0.

struct StorageProtocol
{
    double omega0 = 0.0;
    double entry = 0.0;  // duration of the initial hold
    double ramp = 0.0;
    double hold = 0.0;   // storage time at Omega = 0
    double tail = 0.0;   // hold at omega0 after release
};

inline DriveSchedule make_storage_schedule(const StorageProtocol &proto)
{
    DriveSchedule s(proto.omega0);
    s.hold(proto.entry).ramp_cosine(0.0, proto.ramp);
    if (proto.hold > 0.0)
        s.hold(proto.hold);
    s.ramp_cosine(proto.omega0, proto.ramp);
    if (proto.tail > 0.0)
        s.hold(proto.tail);
    return s;
}

// Entry hold that leaves the pulse centre in the middle of the array once the
// ramp-down is complete; a raised-cosine ramp to zero covers 3/8 of the
// distance travelled at constant speed over the same time.
inline double centred_entry(const SystemParams &p, double omega0, double launch_time, double ramp)
{
    const double tau = p.n_elements * p.kappa_ex / (2.0 * omega0 * omega0);
    return launch_time + 0.5 * tau - 0.375 * ramp;
}

} // namespace omarray
