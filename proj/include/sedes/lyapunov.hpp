#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sedes/field.hpp"
#include "sedes/integrator.hpp"

namespace sedes {

/// A stability hypothesis on user-supplied constants does not hold
/// (e.g. alpha1 > alpha2 or alpha3 > alpha4 > 0).
class HypothesisError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

using Functional = std::function<double(const Field&)>;
using TimeFunctional = std::function<double(double t, const Field&)>;
using ScalarFn = std::function<double(double t)>;

/// The Lyapunov function U(t, x). Every worked example uses U = |x|_H^2, which
/// has a closed-form diffusion operator; anything else is `custom` and supplies
/// its derivatives.
class LyapunovFunction {
public:
    enum class Kind { h_norm_sq, custom };

    using GradientFn = std::function<Field(double t, const Field& x)>;
    /// <U_xx(t,x) h, h>_H.
    using QuadFormFn = std::function<double(double t, const Field& x, const Field& h)>;

    static LyapunovFunction h_norm_sq();
    static LyapunovFunction custom(TimeFunctional value, TimeFunctional time_derivative, GradientFn gradient,
                                   QuadFormFn hessian_quadform);

    Kind kind() const noexcept { return kind_; }
    double operator()(double t, const Field& x) const;

    double time_derivative(double t, const Field& x) const;
    Field gradient(double t, const Field& x) const;
    double hessian_quadform(double t, const Field& x, const Field& h) const;

private:
    Kind kind_ = Kind::h_norm_sq;
    TimeFunctional value_;
    TimeFunctional dt_;
    GradientFn grad_;
    QuadFormFn quad_;
};

/// LU <= lambda1 [1 + U(t,x) + U(t-tau,y) + W(t-tau,y)] - lambda2 W(t,x), plus
/// radial unboundedness of U. Yields global existence.
struct KhasminskiiCertificate {
    TimeFunctional W;
    double lambda1;
    double lambda2;

    /// Throws HypothesisError unless lambda1 > 0 and lambda2 > 0.
    static KhasminskiiCertificate create(TimeFunctional W, double lambda1, double lambda2);
};

/// LU <= gamma(t) - w1(x) + w2(y), w1(0) = w2(0) = 0, w1 > w2 off zero.
/// Yields almost sure asymptotic stability.
struct LaSalleCertificate {
    /// Unset means gamma == 0.
    std::optional<ScalarFn> gamma;
    Functional w1;
    Functional w2;
};

/// beta1 |x|^2 <= U <= beta2 |x|^2 and
/// LU <= gamma(t) - alpha1 U(t,x) + alpha2 U(t-tau,y) - alpha3 W1(t,x) + alpha4 W1(t-tau,y).
/// Yields mean-square exponential stability.
struct ExponentialCertificate {
    double beta1;
    double beta2;
    double alpha1;
    double alpha2;
    double alpha3;
    double alpha4;
    /// +infinity when gamma == 0: the integrability side condition then holds for every mu.
    double mu;
    TimeFunctional W1;
    std::optional<ScalarFn> gamma;

    /// Throws HypothesisError unless beta1, beta2 > 0, alpha1 > alpha2 >= 0,
    /// alpha3 > alpha4 > 0 and mu > 0.
    static ExponentialCertificate create(double beta1, double beta2, double alpha1, double alpha2, double alpha3,
                                         double alpha4, double mu, TimeFunctional W1,
                                         std::optional<ScalarFn> gamma = std::nullopt);
};

struct LyapunovSpec {
    LyapunovFunction U = LyapunovFunction::h_norm_sq();
    std::optional<KhasminskiiCertificate> khasminskii;
    std::optional<LaSalleCertificate> lasalle;
    std::optional<ExponentialCertificate> exponential;
};

/// LU(t,x,y) = U_t + <A(t,x) + f(t,x,y), U_x>_H + 1/2 trace(U_xx g Q g*).
/// For U = |x|_H^2 this is -2 (A-energy of x) + 2<f, x>_H + |g|_HS^2.
double diffusion_operator(const ProblemSpec& p, const LyapunovFunction& U, double t, const Field& x,
                          const Field& y);

struct StateSample {
    double t;
    Field x;
    Field y;
};

struct SamplerOptions {
    std::size_t n_modes = 8;
    double norm_lo = 1e-2;
    double norm_hi = 8.0;
};

/// Deterministic stream of (t, x, y). Sample i depends only on (seed, i), so a
/// longer run extends a shorter one. Fields are random sine series
/// sum_{k<=n_modes} c_k sin(kx) rescaled to H-norms log-uniform in [norm_lo, norm_hi].
class StateSampler {
public:
    StateSampler(const Grid& grid, double t_final, std::uint64_t seed, SamplerOptions options = {});
    /// Fixed list of samples; requesting more than its size is an error.
    static StateSampler from_samples(std::vector<StateSample> samples);

    std::size_t capacity() const noexcept { return capacity_; }
    StateSample operator()(std::size_t i) const;

    /// Direction fields (unit H-norm) used for radial ladders.
    std::vector<Field> ladder_directions(std::size_t count) const;

private:
    StateSampler() = default;
    Field random_field(std::size_t i, std::uint32_t which, double target_norm) const;

    std::optional<Grid> grid_;
    double t_final_ = 0.0;
    std::uint64_t seed_ = 0;
    SamplerOptions options_;
    std::vector<StateSample> fixed_;
    std::size_t capacity_ = std::numeric_limits<std::size_t>::max();
};

struct SubCheck {
    std::string name;
    bool passed;
    double value;
    std::string detail;
};

struct ConditionReport {
    std::string condition;
    std::size_t n_samples = 0;
    /// max over samples of (lhs - rhs) / (1 + |lhs| + |rhs|); positive means violated.
    double max_violation = -std::numeric_limits<double>::infinity();
    double tolerance = 1e-8;
    std::string argmax_sample;
    /// Side conditions: radial ladders, strictness, integrability, sandwich bounds.
    std::vector<SubCheck> subchecks;
    /// Free-form remark, e.g. why a certificate could not be constructed.
    std::string note;
    bool passed = false;

    bool inequality_passed() const noexcept { return max_violation <= tolerance; }
    void finalize();
};

struct CheckOptions {
    double tolerance = 1e-8;
    /// Norm doublings 2^1..2^ladder_rungs for radial-unboundedness ladders.
    int ladder_rungs = 10;
    std::size_t ladder_directions = 4;
};

/// Composite Simpson rule on [a, b] with 2*half_intervals panels.
double simpson(const ScalarFn& fn, double a, double b, std::size_t half_intervals = 4096);

ConditionReport check_khasminskii(const ProblemSpec& p, const LyapunovSpec& L, const StateSampler& sampler,
                                  std::size_t n, const CheckOptions& options = {});

ConditionReport check_lasalle(const ProblemSpec& p, const LyapunovSpec& L, const StateSampler& sampler,
                              std::size_t n, const CheckOptions& options = {});

ConditionReport check_exponential(const ProblemSpec& p, const LyapunovSpec& L, const StateSampler& sampler,
                                  std::size_t n, const CheckOptions& options = {});

}  // namespace sedes
