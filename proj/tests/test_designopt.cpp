#include <catch_amalgamated.hpp>

#include <omarray/designopt.hpp>

using namespace omarray;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("candidate evaluation at the reference design", "[designopt]")
{
    const auto p = presets::optimum();
    const auto c = evaluate(p);
    const double om2 = p.omega_drive * p.omega_drive;
    CHECK_THAT(c.delay, WithinRel(p.n_elements * p.kappa_ex / (2.0 * om2), 1e-14));
    const double abs_arm = 2.0 * std::sqrt(2.0) * om2 / std::sqrt(p.n_elements * p.kappa_ex * p.kappa_in);
    const double disp_arm = 2.0 * std::cbrt(6.0 * kPi) * om2 / (p.kappa_ex * std::cbrt(p.n_elements));
    CHECK_THAT(c.bandwidth, WithinRel(std::min(abs_arm, disp_arm), 1e-14));
    CHECK_THAT(c.product, WithinRel(c.bandwidth * c.delay, 1e-14));
    CHECK_THAT(c.bath_temperature, WithinRel(0.382, 0.01));
    CHECK_THAT(c.gamma_tau, WithinRel(0.895, 0.01));
    CHECK(c.ok_decay);
    // Noise sits right at the boundary: the rounded published numbers land 8% short.
    CHECK_THAT(c.photon_to_noise, WithinAbs(1.0, 0.1));
    CHECK(c.ok_noise == (c.margin_noise >= 0.0));
    CHECK(c.ok_decay == (c.margin_decay >= 0.0));
    CHECK(c.ok_bandwidth);
}

TEST_CASE("strong drive heats the bath", "[designopt]")
{
    auto p = presets::optimum();
    const auto base = evaluate(p);
    p.omega_drive *= 10.0;
    const auto c = evaluate(p);
    CHECK((c.bath_temperature - p.t_base) / (base.bath_temperature - p.t_base) == Catch::Approx(100.0));
    CHECK(c.bath_temperature / base.bath_temperature > 30.0);
    CHECK_FALSE(c.ok_noise);
    CHECK_FALSE(c.feasible());
    CHECK(c.binding_constraint() == "photon_to_noise");
}

TEST_CASE("a single element is feasible", "[designopt]")
{
    const auto c = evaluate(1.0, hz_to_angular(1e9), hz_to_angular(50e6), presets::optimum());
    CHECK(c.feasible());
    CHECK(c.product < 5.0);
}

TEST_CASE("log axes", "[designopt]")
{
    const auto a = log_axis(1.0, 1000.0, 4);
    REQUIRE(a.size() == 4);
    CHECK_THAT(a[1], WithinRel(10.0, 1e-12));
    CHECK(a.back() == 1000.0);
    const auto n = log_axis(1.0, 10.0, 20, true);
    for (std::size_t i = 1; i < n.size(); ++i)
        CHECK(n[i] > n[i - 1]);
    CHECK_THROWS_AS(log_axis(0.0, 1.0, 3), ValidationError);
}

TEST_CASE("coarse grid matches an exhaustive search", "[designopt]")
{
    const auto base = presets::optimum();
    OptimizerOptions opt;
    opt.n_count = opt.kappa_count = opt.omega_count = 10;
    opt.refine = false;
    const auto res = optimize(base, opt);
    REQUIRE(res.feasible);

    // Independent brute force over the same points.
    auto axis = [](double lo, double hi, bool integer) {
        std::vector<double> v;
        for (int i = 0; i < 10; ++i) {
            double x = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / 9.0);
            if (i == 9)
                x = hi;
            v.push_back(integer ? std::round(x) : x);
        }
        return v;
    };
    const auto &b = opt.bounds;
    double best = -1.0, bn = 0, bk = 0, bo = 0;
    for (double n : axis(b.n_min, b.n_max, true))
        for (double k : axis(b.kappa_ex_min, b.kappa_ex_max, false))
            for (double o : axis(b.omega_min, b.omega_max, false)) {
                const auto c = evaluate(n, k, o, base);
                if (c.feasible() && c.product > best) {
                    best = c.product;
                    bn = n;
                    bk = k;
                    bo = o;
                }
            }
    CHECK(res.best.n == bn);
    CHECK_THAT(res.best.kappa_ex, WithinRel(bk, 1e-12));
    CHECK_THAT(res.best.omega_drive, WithinRel(bo, 1e-12));
    CHECK_THAT(res.best.product, WithinRel(best, 1e-12));
}

TEST_CASE("reference optimum", "[designopt]")
{
    const auto res = optimize(reference_design_base());
    REQUIRE(res.feasible);
    const auto &c = res.best;
    CHECK(c.feasible());
    CHECK(c.n == std::round(c.n));
    CHECK_THAT(c.product, WithinRel(110.0, 0.25));
    CHECK(c.n > 275.0 / 2.0);
    CHECK(c.n < 275.0 * 2.0);
    CHECK(angular_to_hz(c.kappa_ex) > 0.55e9);
    CHECK(angular_to_hz(c.kappa_ex) < 2.2e9);
    CHECK(angular_to_hz(c.omega_drive) > 65e6);
    CHECK(angular_to_hz(c.omega_drive) < 260e6);
    CHECK(c.product >= res.grid_best.product);

    SECTION("no grid point beats the result")
    {
        OptimizerOptions opt;
        opt.keep_grid = true;
        opt.refine = false;
        for (const auto &g : optimize(reference_design_base(), opt).grid)
            if (g.feasible())
                CHECK(g.product <= c.product);
    }
    SECTION("tighter constraints never help")
    {
        OptimizerOptions opt;
        opt.thresholds.min_photon_to_noise = 2.0;
        CHECK(optimize(reference_design_base(), opt).best.product <= c.product);
        opt = {};
        opt.thresholds.max_gamma_tau = 0.5;
        CHECK(optimize(reference_design_base(), opt).best.product <= c.product);
        opt = {};
        opt.bounds.n_max = 100.0;
        CHECK(optimize(reference_design_base(), opt).best.product <= c.product);
    }
    SECTION("removing pump heating helps")
    {
        auto p = reference_design_base();
        p.chi = 0.0;
        CHECK(optimize(p).best.product > c.product);
    }
}

TEST_CASE("infeasible searches say why", "[designopt]")
{
    OptimizerOptions opt;
    opt.points_per_decade = 4;
    opt.thresholds.min_photon_to_noise = 1e12;
    const auto res = optimize(reference_design_base(), opt);
    CHECK_FALSE(res.feasible);
    CHECK(res.binding_constraint == "photon_to_noise");

    opt.bounds.n_min = 0.5;
    CHECK_THROWS_AS(optimize(reference_design_base(), opt), ValidationError);
}

TEST_CASE("optimizer is deterministic", "[designopt]")
{
    const auto a = optimize(reference_design_base());
    const auto b = optimize(reference_design_base());
    CHECK(a.best.product == b.best.product);
    CHECK(a.best.n == b.best.n);
    CHECK(a.evaluations == b.evaluations);
}
