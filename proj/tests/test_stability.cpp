#include <cmath>
#include <numbers>
#include <stdexcept>

#include "doctest.h"
#include "sedes/presets.hpp"
#include "sedes/stability.hpp"

using namespace sedes;

namespace {

/// Plain bisection in long double, independent of the library solver.
double bisect_eps1(double a1, double a2, double tau, int iterations = 200) {
    long double lo = 0, hi = a1;
    for (int i = 0; i < iterations; ++i) {
        const long double mid = (lo + hi) / 2;
        if (mid + a2 * std::exp(mid * tau) - a1 > 0) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return static_cast<double>((lo + hi) / 2);
}

MsCurve synthetic_curve(const std::function<double(double)>& fn, int n, double t_final) {
    MsCurve c;
    c.n_paths = 10;
    for (int i = 0; i < n; ++i) {
        const double t = t_final * i / (n - 1);
        c.points.push_back({t, fn(t), 0.0, 10});
    }
    return c;
}

ProblemSpec small_heat(double t_final, double amplitude = 1.0) {
    PresetOptions o;
    o.grid_n = 31;
    o.dt = 1e-2;
    o.t_final = t_final;
    o.psi_amplitude = amplitude;
    return make_problem(Preset::heat, o);
}

}  // namespace

TEST_CASE("eps1 roots") {
    CHECK(solve_eps1(2.5, 0.0, 1.0) == 2.5);
    CHECK(solve_eps1(2.0, 1.0, 1.0) == doctest::Approx(bisect_eps1(2, 1, 1)).epsilon(1e-13));
    CHECK(solve_eps1(2.0, 1.0, 1.0) == doctest::Approx(0.4429).epsilon(1e-4));
    CHECK(solve_eps1(3.0, 2.0, 1.0) == doctest::Approx(0.3001).epsilon(1e-3));
    CHECK_THROWS_WITH_AS(solve_eps1(1.0, 1.0, 1.0), "hypothesis α₁>α₂ violated", HypothesisError);
    CHECK_THROWS_AS(solve_eps1(2.0, 1.0, 0.0), HypothesisError);
    CHECK_THROWS_AS(solve_eps1(2.0, -1.0, 1.0), HypothesisError);
}

TEST_CASE("eps2 closed form") {
    CHECK(solve_eps2(std::numbers::e * 0.7, 0.7, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(solve_eps2(1.0, 0.5, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(solve_eps2(2.0, 1.0, 2.0) == doctest::Approx(std::log(2.0) / 2).epsilon(1e-15));
    CHECK_THROWS_AS(solve_eps2(1.0, 1.0, 1.0), HypothesisError);
    CHECK_THROWS_AS(solve_eps2(1.0, 0.0, 1.0), HypothesisError);
    CHECK_THROWS_AS(solve_eps2(2.0, 1.0, -1.0), HypothesisError);
}

TEST_CASE("decay solution residuals and bound over a lattice") {
    const double a1s[] = {0.5, 1.0, 2.0, 4.0, 8.0};
    const double ratios[] = {0.0, 0.1, 0.4, 0.7, 0.95};
    const double taus[] = {0.1, 0.5, 1.0, 2.0, 5.0};
    for (double a1 : a1s) {
        for (double r : ratios) {
            for (double tau : taus) {
                const DecaySolution d = solve_decay(a1, r * a1, 1.0, 0.5, 0.2, tau);
                CHECK(d.residual1 <= 1e-12 * a1);
                CHECK(d.residual2 <= 1e-12);
                CHECK(d.eps1 > 0.0);
                CHECK(d.eps == std::min(d.eps1, d.eps2));
                CHECK(d.bound == -std::min({0.2, d.eps1, d.eps2}));
            }
        }
    }
    const DecaySolution inf_mu = solve_decay(3.0, 2.0, 1.0, 0.5, std::numeric_limits<double>::infinity(), 1.0);
    CHECK(std::isinf(inf_mu.mu));
    CHECK(inf_mu.bound == -inf_mu.eps);
    CHECK(inf_mu.eps2 == doctest::Approx(std::log(2.0)));
    CHECK_THROWS_AS(solve_decay(3.0, 2.0, 1.0, 0.5, 0.0, 1.0), HypothesisError);
}

TEST_CASE("eps1 monotonicity lattice") {
    const double vals[] = {0.5, 1.0, 1.5, 2.0, 3.0};
    for (double a2 : {0.1, 0.3, 0.45}) {
        for (double tau : {0.2, 1.0, 3.0}) {
            double prev = 0.0;
            for (double a1 : vals) {
                const double e = solve_eps1(a1, a2, tau);
                CHECK(e > prev);
                prev = e;
            }
        }
    }
    for (double a1 : vals) {
        for (double tau : vals) {
            double prev = std::numeric_limits<double>::infinity();
            for (double frac : {0.0, 0.2, 0.4, 0.6, 0.8}) {
                const double e = solve_eps1(a1, frac * a1, tau);
                CHECK(e < prev);
                prev = e;
            }
        }
    }
    for (double a1 : vals) {
        double prev = std::numeric_limits<double>::infinity();
        for (double tau : vals) {
            const double e = solve_eps1(a1, 0.3 * a1, tau);
            CHECK(e < prev);
            prev = e;
        }
    }
}

TEST_CASE("rate fit") {
    const auto exact = synthetic_curve([](double t) { return 5.0 * std::exp(-1.2 * t); }, 20, 10.0);
    const RateFit f = fit_decay_rate(exact, std::make_pair(0.0, 10.0));
    CHECK(f.rate == doctest::Approx(-1.2).epsilon(1e-9));
    CHECK(f.n_points == 20);

    const RateFit d = fit_decay_rate(exact);
    CHECK(d.t_lo >= 5.0);
    CHECK(d.t_lo < 5.6);
    CHECK(d.t_hi == 10.0);

    const auto flat = synthetic_curve([](double) { return 3.0; }, 20, 10.0);
    const RateFit c = fit_decay_rate(flat);
    CHECK(std::abs(c.rate) <= c.half_width + 1e-12);

    CHECK_THROWS_WITH_AS(fit_decay_rate(exact, std::make_pair(9.0, 10.0)), "window too small", InvalidArgument);

    // Values at the rounding floor are excluded from the fit.
    const auto tail = synthetic_curve([](double t) { return t < 5.6 ? std::exp(-2.0 * t) : 1e-300; }, 41, 10.0);
    CHECK_THROWS_WITH_AS(fit_decay_rate(tail), "window too small", InvalidArgument);
    const RateFit a = fit_decay_rate_adaptive(tail);
    CHECK(a.rate == doctest::Approx(-2.0).epsilon(1e-9));
    CHECK(a.t_hi < 5.6);
}

TEST_CASE("heat ensemble equals the discrete exact solution") {
    const ProblemSpec p = small_heat(2.0);
    const auto times = uniform_record_times(p, 0.1);
    CHECK(times.size() == 21);
    const MsCurve c = ms_ensemble(p, 4, times);
    const double lam = p.grid().lambda_min();
    for (const MsPoint& pt : c.points) {
        const double n = std::round(pt.t / p.dt());
        CHECK(pt.mean_h_norm_sq == doctest::Approx(std::numbers::pi / 2 * std::pow(1 + p.dt() * lam, -2 * n)).epsilon(1e-10));
        CHECK(pt.std_err == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(pt.n_alive == 4);
    }
    const RateFit f = fit_decay_rate(c);
    CHECK(f.rate == doctest::Approx(-2.0 * std::log1p(p.dt() * lam) / p.dt()).epsilon(1e-8));
}

TEST_CASE("ensembles are reproducible and independent of the worker count") {
    PresetOptions o;
    o.grid_n = 31;
    o.t_final = 3.0;
    o.seed = 8;
    const ProblemSpec p = make_problem(Preset::logistic_delay, o);
    const auto times = uniform_record_times(p, 0.5);
    const MsCurve a = ms_ensemble(p, 6, times, {1});
    const MsCurve b = ms_ensemble(p, 6, times, {3});
    const MsCurve c = ms_ensemble(p, 6, times, {1});
    REQUIRE(a.points.size() == b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        CHECK(a.points[i].mean_h_norm_sq == b.points[i].mean_h_norm_sq);
        CHECK(a.points[i].std_err == b.points[i].std_err);
        CHECK(a.points[i].mean_h_norm_sq == c.points[i].mean_h_norm_sq);
        if (i > 0) CHECK(a.points[i].std_err > 0.0);
    }
    CHECK_THROWS_AS(ms_ensemble(p, 1, times), InvalidArgument);
}

TEST_CASE("ensemble collapse") {
    ProblemParams params = small_heat(2.0).params();
    params.psi = [](double, double x) { return 30.0 * std::sin(x); };
    params.drift = Coefficient::pointwise([](double, double u, double) { return u * u * u; });
    const ProblemSpec p(params);
    CHECK_THROWS_WITH_AS(ms_ensemble(p, 3, uniform_record_times(p, 0.5)), "ensemble collapse", NumericalError);
}

TEST_CASE("exploded paths are excluded and counted") {
    // Drift pushes up, noise decides which paths cross the cubic blow-up threshold.
    ProblemParams params = small_heat(3.0, 0.0).params();
    params.psi = [](double, double x) { return 2.0 * std::sin(x); };
    params.drift = Coefficient::pointwise([](double, double u, double) { return u * u * u - u; });
    params.diffusion = Coefficient::pointwise([](double, double u, double) { return 1.5 * u; });
    params.noise = NoiseModel::scalar(1);
    const ProblemSpec p(params);
    const MsCurve c = ms_ensemble(p, 40, uniform_record_times(p, 0.5));
    CHECK(c.explosion_fraction() > 0.0);
    CHECK(c.explosion_fraction() < 1.0);
    CHECK(c.points.back().n_alive == 40 - c.exploded_paths.size());
    for (std::uint64_t id : c.exploded_paths) CHECK(simulate(p, id).exploded());
}

TEST_CASE("almost sure proxy") {
    const ProblemSpec p = small_heat(12.0);
    const AsStats s = as_stability_stats(p, 3, 1e-2, {10.0, 12.0});
    CHECK(s.fraction_converged == 1.0);
    CHECK(s.fraction_bounded == 1.0);
    CHECK(as_stability_stats(p, 3, 0.0, {10.0, 12.0}).fraction_converged == 0.0);
    CHECK_THROWS_AS(as_stability_stats(p, 3, 1e-2, {10.0, 13.0}), InvalidArgument);
}

TEST_CASE("explosion scan on deterministic decay") {
    const ProblemSpec p = small_heat(5.0);
    CHECK(p.psi_bound() == doctest::Approx(1.2533).epsilon(1e-3));
    const ExplosionTable t = explosion_scan(p, {2.0, 4.0}, 5, 5.0);
    for (const auto& row : t.rows) CHECK(row.probability == 0.0);
    CHECK(t.nonincreasing);
    CHECK_THROWS_AS(explosion_scan(p, {1.0, 4.0}, 5, 5.0), InvalidArgument);
    CHECK_THROWS_AS(explosion_scan(p, {4.0, 2.0}, 5, 5.0), InvalidArgument);
}

TEST_CASE("for_each_path propagates worker exceptions") {
    std::vector<int> hits(50, 0);
    for_each_path(50, 4, [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) CHECK(h == 1);
    CHECK_THROWS_AS(for_each_path(10, 3, [](std::size_t i) {
                        if (i == 7) throw std::runtime_error("boom");
                    }),
                    std::runtime_error);
}
