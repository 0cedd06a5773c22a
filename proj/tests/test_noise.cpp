#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "sedes/noise.hpp"
#include "support.hpp"

using namespace sedes;

TEST_CASE("philox4x32-10 known answers") {
    using rng::Counter;
    CHECK(rng::philox4x32({0, 0, 0, 0}, {0, 0}) == Counter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(rng::philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          Counter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(rng::philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          Counter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("uniform ranges") {
    for (std::uint64_t i = 0; i < 10000; ++i) {
        const auto u = rng::uniform_pair(1, rng::Stream::brownian, 2, i, 0);
        CHECK(u[0] > 0.0);
        CHECK(u[0] <= 1.0);
        CHECK(u[1] >= 0.0);
        CHECK(u[1] < 1.0);
    }
}

TEST_CASE("noise model validation") {
    CHECK_THROWS_AS(NoiseModel::q_wiener({}, 0), InvalidArgument);
    CHECK_THROWS_AS(NoiseModel::q_wiener({0.5, 1.0}, 0), InvalidArgument);
    CHECK_THROWS_AS(NoiseModel::q_wiener({1.0, -0.1}, 0), InvalidArgument);
    CHECK_NOTHROW(NoiseModel::q_wiener({1.0, 1.0, 0.0}, 0));
    const auto q = NoiseModel::q_wiener_inverse_square(NoiseModel::kDefaultModes, 4);
    CHECK(q.n_modes() == 16);
    CHECK(q.eigenvalues()[3] == doctest::Approx(1.0 / 16));
    double trace = 0.0;
    for (int k = 1; k <= 16; ++k) trace += 1.0 / (k * k);
    CHECK(q.trace() == doctest::Approx(trace).epsilon(1e-15));
    CHECK(NoiseModel::scalar(0).trace() == 1.0);
    CHECK(q.with_seed(9).seed() == 9);
}

TEST_CASE("increments are deterministic and keyed") {
    const auto q = NoiseModel::q_wiener_inverse_square(4, 77);
    const auto a = sample_increment(q, 3, 10, 0.01);
    const auto b = sample_increment(q, 3, 10, 0.01);
    CHECK(a.coords == b.coords);
    CHECK(a.coords.size() == 4);
    CHECK(sample_increment(q, 4, 10, 0.01).coords != a.coords);
    CHECK(sample_increment(q, 3, 11, 0.01).coords != a.coords);
    CHECK(sample_increment(q.with_seed(78), 3, 10, 0.01).coords != a.coords);
    CHECK(sample_increment(NoiseModel::scalar(1), 0, 0, 0.5).coords.size() == 1);
    CHECK_THROWS_WITH_AS(sample_increment(q, 0, 0, 0.0), "nonpositive step", InvalidArgument);
    CHECK_THROWS_WITH_AS(sample_increment(q, 0, 0, -1.0), "nonpositive step", InvalidArgument);
}

TEST_CASE("mode sum") {
    const NoiseIncrement inc{0.1, {1.0, -2.0, 0.5}};
    CHECK(inc.mode_sum() == doctest::Approx(-0.5));
}

TEST_CASE("scalar increment variance and scaling") {
    const auto m = NoiseModel::scalar(2024);
    const int n = 1'000'000;
    double s1 = 0, s2 = 0, q1 = 0, q2 = 0;
    for (int i = 0; i < n; ++i) {
        const double a = sample_increment(m, 0, i, 0.01).coords[0];
        const double b = sample_increment(m, 1, i, 0.04).coords[0];
        s1 += a;
        q1 += a * a;
        s2 += b;
        q2 += b * b;
    }
    const double var1 = q1 / n - (s1 / n) * (s1 / n);
    const double var2 = q2 / n - (s2 / n) * (s2 / n);
    CHECK(var1 >= 0.0099);
    CHECK(var1 <= 0.0101);
    CHECK(std::sqrt(var2 / var1) == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("Q-Wiener trace identity and mode independence") {
    const std::size_t modes = 8;
    const auto q = NoiseModel::q_wiener_inverse_square(modes, 99);
    const double dt = 0.02;
    const int n = 100'000;
    double total = 0.0;
    double s0 = 0, s1 = 0, s00 = 0, s11 = 0, s01 = 0;
    for (int i = 0; i < n; ++i) {
        const auto inc = sample_increment(q, 5, i, dt);
        for (double c : inc.coords) total += c * c;
        s0 += inc.coords[0];
        s1 += inc.coords[1];
        s00 += inc.coords[0] * inc.coords[0];
        s11 += inc.coords[1] * inc.coords[1];
        s01 += inc.coords[0] * inc.coords[1];
    }
    CHECK(total / n == doctest::Approx(dt * q.trace()).epsilon(0.02));
    const double cov = s01 / n - (s0 / n) * (s1 / n);
    const double corr =
        cov / std::sqrt((s00 / n - (s0 / n) * (s0 / n)) * (s11 / n - (s1 / n) * (s1 / n)));
    CHECK(std::abs(corr) < 0.02);
}

TEST_CASE("Hilbert-Schmidt norm") {
    const Grid fine(1999);
    const auto scalar = NoiseModel::scalar(0);
    CHECK(hs_norm_sq(Field(fine), scalar) == 0.0);
    CHECK(hs_norm_sq(sedes::testing::sine_mode(fine, 1), scalar) ==
          doctest::Approx(std::numbers::pi / 2).epsilon(1e-3));

    const Grid g(31);
    const auto q = NoiseModel::q_wiener({1.0, 0.5, 0.25}, 0);
    const Field f = sedes::testing::sine_mode(g, 2, 3.0);
    const std::vector<Field> same(3, f);
    const double h = h_norm(f);
    CHECK(hs_norm_sq(same, q) == doctest::Approx(q.trace() * h * h).epsilon(1e-14));
    CHECK(hs_norm_sq(f, q) == doctest::Approx(q.trace() * h * h).epsilon(1e-14));
    const std::vector<Field> different = {f, 2.0 * f, Field(g)};
    CHECK(hs_norm_sq(different, q) == doctest::Approx((1.0 + 0.5 * 4.0) * h * h).epsilon(1e-14));
    CHECK_THROWS_AS(hs_norm_sq(std::vector<Field>(2, f), q), InvalidArgument);
}
