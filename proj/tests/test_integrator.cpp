#include <cmath>
#include <numbers>

#include "doctest.h"
#include "sedes/integrator.hpp"
#include "sedes/presets.hpp"
#include "support.hpp"

using namespace sedes;
using sedes::testing::sine_mode;

namespace {

ProblemParams heat_params(std::size_t n, double dt, double t_final) {
    ProblemParams p;
    p.grid = Grid(n);
    p.dt = dt;
    p.tau = 0.1;
    p.t_final = t_final;
    p.psi = [](double, double x) { return std::sin(x); };
    return p;
}

bool same_trajectory(const Trajectory& a, const Trajectory& b) {
    return a.times == b.times && a.h_norms == b.h_norms && a.v_norms == b.v_norms &&
           a.status.kind == b.status.kind;
}

}  // namespace

TEST_CASE("problem construction adjusts dt to divide tau") {
    auto params = heat_params(15, 0.3, 2.0);
    params.tau = 1.0;
    const ProblemSpec p(params);
    CHECK(p.delay_steps() == 4);
    CHECK(p.dt() == 0.25);
    CHECK(p.dt_requested() == 0.3);
    CHECK(p.dt_adjusted());
    CHECK(p.n_steps() == 8);

    params.dt = 0.25;
    CHECK_FALSE(ProblemSpec(params).dt_adjusted());
    params.dt = 0.001;
    CHECK(ProblemSpec(params).delay_steps() == 1000);
}

TEST_CASE("problem validation") {
    auto params = heat_params(15, 0.01, 1.0);
    params.psi = [](double, double x) { return std::cos(x); };
    CHECK_THROWS_AS(ProblemSpec{params}, InvalidArgument);

    params.psi = [](double theta, double x) { return (theta < -0.05 ? 1.0 : 0.0) * std::sin(x); };
    CHECK_THROWS_AS(ProblemSpec{params}, InvalidArgument);

    params.psi = [](double, double) { return std::nan(""); };
    CHECK_THROWS_AS(ProblemSpec{params}, InvalidArgument);

    params = heat_params(15, 0.01, 1.0);
    params.drift = Coefficient::pointwise([](double, double, double) { return HUGE_VAL; });
    CHECK_THROWS_AS(ProblemSpec{params}, InvalidArgument);

    params = heat_params(15, 0.01, 1.0);
    params.tau = 0.0;
    CHECK_THROWS_AS(ProblemSpec{params}, InvalidArgument);

    params = heat_params(15, 0.01, 1.0);
    params.psi = [](double, double x) { return 3.0 * std::sin(2 * x); };
    CHECK(ProblemSpec(params).psi_bound() == doctest::Approx(3.0 * std::sqrt(std::numbers::pi / 2)));
}

TEST_CASE("history buffer holds exactly the last m+1 states") {
    auto params = heat_params(4, 0.25, 5.0);
    params.tau = 1.0;
    params.psi = [](double theta, double x) { return (1.0 + theta) * std::sin(x); };
    const ProblemSpec p(params);
    HistoryBuffer h(p);
    CHECK(h.delay_steps() == 4);
    for (std::size_t lag = 0; lag <= 4; ++lag) {
        const Field expected = p.history_field(lag);
        CHECK(h.lagged(lag).values()[0] == expected.values()[0]);
    }
    CHECK(h.delayed()[1] == p.history_field(4)[1]);
    CHECK_THROWS_AS(h.lagged(5), InvalidArgument);

    std::vector<Field> pushed;
    for (int i = 0; i < 11; ++i) {
        Field f(p.grid(), std::vector<double>(4, 100.0 + i));
        pushed.push_back(f);
        h.push(f, p.dt());
        CHECK(h.current()[0] == 100.0 + i);
        if (i >= 4) CHECK(h.delayed()[0] == pushed[i - 4][0]);
        for (std::size_t lag = 0; lag <= std::min<std::size_t>(4, i); ++lag) CHECK(h.lagged(lag)[2] == 100.0 + i - lag);
    }
    CHECK(h.head_time() == doctest::Approx(11 * 0.25));
}

TEST_CASE("one implicit step decays sin by the discrete eigenvalue") {
    const ProblemSpec p(heat_params(63, 0.01, 1.0));
    const HistoryBuffer h(p);
    const Field x1 = imex_em_step(p, h, 0.0, NoiseIncrement{p.dt(), {0.0}});
    const double lam = p.grid().lambda_min();
    for (std::size_t i = 0; i < x1.size(); ++i) {
        CHECK(x1[i] == doctest::Approx(h.current()[i] / (1.0 + p.dt() * lam)).epsilon(1e-13));
    }
    CHECK_THROWS_AS(imex_em_step(p, h, 0.0, NoiseIncrement{0.02, {0.0}}), InvalidArgument);
}

TEST_CASE("step uses the stored delayed state and the mode-summed increment") {
    auto params = heat_params(7, 0.1, 1.0);
    params.tau = 0.2;
    params.psi = [](double theta, double x) { return (2.0 + theta) * std::sin(x); };
    params.drift = Coefficient::pointwise([](double, double u, double v) { return v - u; });
    params.diffusion = Coefficient::pointwise([](double, double u, double) { return u; });
    params.noise = NoiseModel::q_wiener({1.0, 0.25}, 3);
    const ProblemSpec p(params);
    const HistoryBuffer h(p);
    const NoiseIncrement dw{p.dt(), {0.3, -0.1}};
    const Field x1 = imex_em_step(p, h, 0.0, dw);

    // Independent assembly: rhs then dense solve of (I - dt A).
    const Field x0 = p.history_field(0);
    const Field y0 = p.history_field(2);
    std::vector<double> rhs(7);
    for (std::size_t j = 0; j < 7; ++j) rhs[j] = x0[j] + p.dt() * (y0[j] - x0[j]) + x0[j] * 0.2;
    auto m = sedes::testing::dense_operator(std::vector<double>(8, 1.0), p.grid().dx());
    for (double& v : m) v *= -p.dt();
    for (std::size_t i = 0; i < 7; ++i) m[i * 7 + i] += 1.0;
    const auto expected = sedes::testing::dense_solve(m, rhs);
    for (std::size_t j = 0; j < 7; ++j) CHECK(x1[j] == doctest::Approx(expected[j]).epsilon(1e-12));
}

TEST_CASE("two half steps differ from one step at second order") {
    auto diff_at = [](double h) {
        auto make = [](double dt) {
            ProblemParams p;
            p.grid = Grid(15);
            p.dt = dt;
            p.tau = 0.4;
            p.t_final = 0.1;
            p.psi = [](double, double x) { return std::sin(x) + 0.3 * std::sin(2 * x); };
            p.drift = Coefficient::pointwise([](double, double u, double v) { return -u * u * u + 0.5 * v; });
            return ProblemSpec(p);
        };
        const ProblemSpec coarse = make(h);
        const ProblemSpec fine = make(h / 2);
        const HistoryBuffer hc(coarse);
        const Field one = imex_em_step(coarse, hc, 0.0, NoiseIncrement{h, {0.0}});
        HistoryBuffer hf(fine);
        hf.push(imex_em_step(fine, hf, 0.0, NoiseIncrement{h / 2, {0.0}}), h / 2);
        const Field two = imex_em_step(fine, hf, h / 2, NoiseIncrement{h / 2, {0.0}});
        return h_norm(one - two);
    };
    const double d1 = diff_at(0.01);
    const double d2 = diff_at(0.005);
    CHECK(d1 / d2 == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("zero data stays zero") {
    auto params = heat_params(15, 0.01, 2.0);
    params.psi = [](double, double) { return 0.0; };
    params.drift = Coefficient::pointwise([](double, double u, double v) { return v * v - u * u * u; });
    params.diffusion = Coefficient::pointwise([](double, double, double v) { return v * v; });
    const Trajectory t = simulate(ProblemSpec(params), 4);
    CHECK(t.status.kind == TrajectoryStatus::Kind::completed);
    for (double h : t.h_norms) CHECK(h == 0.0);
}

TEST_CASE("heat solution matches the exact decay") {
    const ProblemSpec p(heat_params(127, 1e-3, 1.0));
    const Trajectory t = simulate(p, 0, {.snapshot_times = {0.5, 1.0}});
    CHECK(t.times.size() == p.n_steps() + 1);
    CHECK(t.times.front() == 0.0);
    CHECK(t.times.back() == doctest::Approx(1.0));
    for (std::size_t i = 1; i < t.times.size(); ++i) CHECK(t.times[i] > t.times[i - 1]);
    const double lam = p.grid().lambda_min();
    const double exact = std::numbers::pi / 2 * std::exp(-2.0 * lam);
    CHECK(t.h_norms.back() * t.h_norms.back() == doctest::Approx(exact).epsilon(0.01));
    // Discrete solution is known in closed form too.
    const double discrete = std::numbers::pi / 2 * std::pow(1.0 + 1e-3 * lam, -2.0 * 1000);
    CHECK(t.h_norms.back() * t.h_norms.back() == doctest::Approx(discrete).epsilon(1e-10));
    REQUIRE(t.snapshots.size() == 2);
    CHECK(t.snapshots[1].first == doctest::Approx(1.0));
    CHECK(h_norm(t.snapshots[1].second) == t.h_norms.back());
}

TEST_CASE("simulation is deterministic and zero noise ignores the seed") {
    PresetOptions o;
    o.t_final = 2.0;
    o.grid_n = 31;
    o.seed = 5;
    const ProblemSpec p = make_problem(Preset::cubic_delay, o);
    CHECK(same_trajectory(simulate(p, 3), simulate(p, 3)));
    CHECK_FALSE(same_trajectory(simulate(p, 3), simulate(p, 4)));

    const ProblemSpec quiet = p.with_coefficients(p.drift(), Coefficient::zero());
    CHECK(same_trajectory(simulate(quiet, 0), simulate(quiet, 17)));
    CHECK(same_trajectory(simulate(quiet, 0), simulate(quiet.with_noise(NoiseModel::scalar(99)), 0)));
}

TEST_CASE("damped cubic preset completes") {
    PresetOptions o;
    o.seed = 12;
    const ProblemSpec p = make_problem(Preset::damped_cubic, o);
    const Trajectory t = simulate(p, 0);
    CHECK(t.status.kind == TrajectoryStatus::Kind::completed);
    CHECK(t.times.back() == doctest::Approx(50.0));
}

TEST_CASE("blow-up is reported, or clamped on request") {
    auto params = heat_params(15, 0.01, 5.0);
    params.psi = [](double, double x) { return 20.0 * std::sin(x); };
    params.drift = Coefficient::pointwise([](double, double u, double) { return u * u * u; });
    const Trajectory t = simulate(ProblemSpec(params), 0);
    CHECK(t.exploded());
    CHECK(t.status.time > 0.0);
    CHECK(t.status.time < 5.0);
    CHECK(t.times.size() == t.h_norms.size());
    CHECK(t.status.describe().rfind("exploded(", 0) == 0);

    params.psi = [](double, double x) { return std::sin(x); };
    params.drift = Coefficient::pointwise([](double, double u, double) { return 20.0 * u; });
    params.explosion = {1e3, true};
    const Trajectory c = simulate(ProblemSpec(params), 0);
    CHECK(c.status.kind == TrajectoryStatus::Kind::clamped);
    CHECK(c.times.back() == doctest::Approx(5.0));
    for (double h : c.h_norms) CHECK(h <= 1e3 * (1 + 1e-12));
}

TEST_CASE("ball truncation") {
    CHECK(truncation_factor(0.0, 2.0) == 0.0);
    CHECK(truncation_factor(1.0, 2.0) == 1.0);
    CHECK(truncation_factor(8.0, 2.0) == 0.25);

    const Grid g(31);
    const Field x = sine_mode(g, 1, 3.0);
    const double k = 0.5 * h_norm(x);
    CHECK(h_norm(project_to_ball(x, k)) == doctest::Approx(k).epsilon(1e-15));
    const Field inside = project_to_ball(x, 10.0);
    CHECK(std::equal(inside.values().begin(), inside.values().end(), x.values().begin()));
    CHECK(h_norm(project_to_ball(Field(g), 1.0)) == 0.0);
}

TEST_CASE("truncated coefficients") {
    PresetOptions o;
    o.grid_n = 31;
    o.t_final = 1.0;
    const ProblemSpec p = make_problem(Preset::cubic_delay, o);
    CHECK_THROWS_WITH_AS(truncate_problem(p, 0.05), "truncation below initial data", InvalidArgument);
    const ProblemSpec pk = truncate_problem(p, 2.0);
    CHECK(pk.drift().kind() == Coefficient::Kind::field_level);

    const Field x = sine_mode(p.grid(), 1, 0.8);
    const Field y = sine_mode(p.grid(), 2, -0.5);
    const Field a = p.drift()(0.3, x, y);
    const Field b = pk.drift()(0.3, x, y);
    CHECK(std::equal(a.values().begin(), a.values().end(), b.values().begin()));

    // Outside the ball both arguments are projected first.
    const Field big = sine_mode(p.grid(), 1, 10.0);
    const Field projected = project_to_ball(big, 2.0);
    const Field expected = p.diffusion()(0.0, projected, projected);
    const Field got = pk.diffusion()(0.0, big, big);
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == expected[i]);

    // Zero state maps to zero under the convention.
    const Field z(p.grid());
    CHECK(h_norm(pk.drift()(0.0, z, z)) == 0.0);
}

TEST_CASE("truncated and plain simulations agree inside the ball") {
    PresetOptions o;
    o.grid_n = 31;
    o.t_final = 5.0;
    const ProblemSpec p = make_problem(Preset::cubic_delay, o);
    const ProblemSpec pk = truncate_problem(p, 16.0);
    for (std::uint64_t id = 0; id < 5; ++id) {
        const Trajectory a = simulate(p, id);
        const Trajectory b = simulate(pk, id);
        REQUIRE_FALSE(stopping_time_sigma_k(a, 16.0).has_value());
        CHECK(same_trajectory(a, b));
    }
}

TEST_CASE("stopping time") {
    Trajectory t;
    t.times = {0.0, 0.1, 0.2};
    t.h_norms = {0.5, 1.5, 0.7};
    CHECK(stopping_time_sigma_k(t, 1.0) == 0.1);
    CHECK_FALSE(stopping_time_sigma_k(t, 2.0).has_value());
    CHECK(stopping_time_sigma_k(t, 0.5) == 0.0);
}
