#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "sedes/field.hpp"

namespace sedes {

/// Counter-based random streams. Every draw is a pure function of
/// (seed, stream, path_id, step_index, slot), so ensembles are reproducible
/// regardless of which thread evaluates which path.
namespace rng {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
Counter philox4x32(Counter ctr, Key key) noexcept;

/// Independent stream families sharing one seed.
enum class Stream : std::uint32_t { brownian = 0, sampler = 1 };

/// Two uniforms: first in (0,1], second in [0,1), 53 bits each.
std::array<double, 2> uniform_pair(std::uint64_t seed, Stream stream, std::uint64_t path_id,
                                   std::uint64_t index, std::uint32_t slot) noexcept;

/// Standard normal via Box-Muller on uniform_pair (cosine branch only).
double standard_normal(std::uint64_t seed, Stream stream, std::uint64_t path_id,
                       std::uint64_t index, std::uint32_t slot) noexcept;

inline constexpr std::string_view kGaussianMethod = "philox4x32-10 + box-muller";

}  // namespace rng

/// Driving noise: a scalar Brownian motion, or a Q-Wiener process truncated to
/// M modes with covariance eigenvalues lambda_1 >= ... >= lambda_M >= 0.
class NoiseModel {
public:
    enum class Kind { scalar, q_wiener };

    static constexpr std::size_t kDefaultModes = 16;

    static NoiseModel scalar(std::uint64_t seed);
    static NoiseModel q_wiener(std::vector<double> eigenvalues, std::uint64_t seed);
    /// lambda_k = 1/k^2, k = 1..n_modes.
    static NoiseModel q_wiener_inverse_square(std::size_t n_modes, std::uint64_t seed);

    Kind kind() const noexcept { return kind_; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::size_t n_modes() const noexcept { return eigenvalues_.size(); }
    /// Scalar noise reports a single unit eigenvalue.
    std::span<const double> eigenvalues() const noexcept { return eigenvalues_; }
    std::span<const double> sqrt_eigenvalues() const noexcept { return sqrt_eigenvalues_; }
    double trace() const noexcept { return trace_; }

    NoiseModel with_seed(std::uint64_t seed) const;

private:
    NoiseModel(Kind kind, std::vector<double> eigenvalues, std::uint64_t seed);

    Kind kind_;
    std::vector<double> eigenvalues_;
    std::vector<double> sqrt_eigenvalues_;
    double trace_;
    std::uint64_t seed_;
};

/// Increment over one step, coordinates already scaled by sqrt(lambda_k).
struct NoiseIncrement {
    double dt;
    std::vector<double> coords;

    double mode_sum() const noexcept;
};

/// coords_k = sqrt(lambda_k) * N(0, dt) keyed by (seed, path_id, step_index, k).
NoiseIncrement sample_increment(const NoiseModel& model, std::uint64_t path_id, std::uint64_t step_index,
                                double dt);

/// Squared Hilbert-Schmidt norm trace(G Q G*) of a diffusion output given as
/// one field per noise mode: sum_k lambda_k * |g_k|_H^2.
double hs_norm_sq(std::span<const Field> mode_fields, const NoiseModel& model);

/// Pointwise diffusion acting identically on every mode: trace(Q) * |g|_H^2.
double hs_norm_sq(const Field& g, const NoiseModel& model);

}  // namespace sedes
