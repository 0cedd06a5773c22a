#include "sedes/noise.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace sedes {
namespace rng {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace

Counter philox4x32(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

std::array<double, 2> uniform_pair(std::uint64_t seed, Stream stream, std::uint64_t path_id,
                                   std::uint64_t index, std::uint32_t slot) noexcept {
    const std::uint64_t k = splitmix64(seed ^ splitmix64(path_id ^ (static_cast<std::uint64_t>(stream) << 56)));
    const Key key{static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
    const Counter ctr{static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), slot,
                      static_cast<std::uint32_t>(stream)};
    const Counter out = philox4x32(ctr, key);
    const std::uint64_t a = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
    const std::uint64_t b = (static_cast<std::uint64_t>(out[2]) << 32) | out[3];
    constexpr double scale = 0x1p-53;
    return {static_cast<double>((a >> 11) + 1) * scale, static_cast<double>(b >> 11) * scale};
}

double standard_normal(std::uint64_t seed, Stream stream, std::uint64_t path_id, std::uint64_t index,
                       std::uint32_t slot) noexcept {
    const auto [u1, u2] = uniform_pair(seed, stream, path_id, index, slot);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace rng

NoiseModel::NoiseModel(Kind kind, std::vector<double> eigenvalues, std::uint64_t seed)
    : kind_(kind), eigenvalues_(std::move(eigenvalues)), trace_(0.0), seed_(seed) {
    if (eigenvalues_.empty()) throw InvalidArgument("noise model needs at least one mode");
    sqrt_eigenvalues_.reserve(eigenvalues_.size());
    for (std::size_t k = 0; k < eigenvalues_.size(); ++k) {
        const double lam = eigenvalues_[k];
        if (!std::isfinite(lam) || lam < 0.0) {
            throw InvalidArgument("eigenvalue " + std::to_string(k + 1) + " must be finite and nonnegative");
        }
        if (k > 0 && lam > eigenvalues_[k - 1]) {
            throw InvalidArgument("eigenvalues must be nonincreasing");
        }
        trace_ += lam;
        sqrt_eigenvalues_.push_back(std::sqrt(lam));
    }
}

NoiseModel NoiseModel::scalar(std::uint64_t seed) { return NoiseModel(Kind::scalar, {1.0}, seed); }

NoiseModel NoiseModel::q_wiener(std::vector<double> eigenvalues, std::uint64_t seed) {
    return NoiseModel(Kind::q_wiener, std::move(eigenvalues), seed);
}

NoiseModel NoiseModel::q_wiener_inverse_square(std::size_t n_modes, std::uint64_t seed) {
    if (n_modes == 0) throw InvalidArgument("q_wiener needs at least one mode");
    std::vector<double> lam(n_modes);
    for (std::size_t k = 0; k < n_modes; ++k) {
        const double kk = static_cast<double>(k + 1);
        lam[k] = 1.0 / (kk * kk);
    }
    return q_wiener(std::move(lam), seed);
}

NoiseModel NoiseModel::with_seed(std::uint64_t seed) const {
    NoiseModel copy = *this;
    copy.seed_ = seed;
    return copy;
}

double NoiseIncrement::mode_sum() const noexcept {
    double s = 0.0;
    for (double c : coords) s += c;
    return s;
}

NoiseIncrement sample_increment(const NoiseModel& model, std::uint64_t path_id, std::uint64_t step_index,
                                double dt) {
    if (!(dt > 0.0)) throw InvalidArgument("nonpositive step");
    const double sd = std::sqrt(dt);
    NoiseIncrement inc{dt, std::vector<double>(model.n_modes())};
    for (std::size_t k = 0; k < model.n_modes(); ++k) {
        const double z = rng::standard_normal(model.seed(), rng::Stream::brownian, path_id, step_index,
                                              static_cast<std::uint32_t>(k));
        inc.coords[k] = model.sqrt_eigenvalues()[k] * sd * z;
    }
    return inc;
}

double hs_norm_sq(std::span<const Field> mode_fields, const NoiseModel& model) {
    if (mode_fields.size() != model.n_modes()) {
        throw InvalidArgument("diffusion output has " + std::to_string(mode_fields.size()) +
                              " mode fields, noise model has " + std::to_string(model.n_modes()));
    }
    const auto lam = model.eigenvalues();
    double s = 0.0;
    for (std::size_t k = 0; k < mode_fields.size(); ++k) {
        const double h = h_norm(mode_fields[k]);
        s += lam[k] * h * h;
    }
    return s;
}

double hs_norm_sq(const Field& g, const NoiseModel& model) {
    const double h = h_norm(g);
    return model.trace() * h * h;
}

}  // namespace sedes
