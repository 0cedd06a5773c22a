#include "sedes/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sedes/noise.hpp"

namespace sedes {

LyapunovFunction LyapunovFunction::h_norm_sq() { return LyapunovFunction{}; }

LyapunovFunction LyapunovFunction::custom(TimeFunctional value, TimeFunctional time_derivative, GradientFn gradient,
                                          QuadFormFn hessian_quadform) {
    if (!value || !time_derivative || !gradient || !hessian_quadform) {
        throw InvalidArgument("custom Lyapunov function needs U, U_t, U_x and the U_xx quadratic form");
    }
    LyapunovFunction U;
    U.kind_ = Kind::custom;
    U.value_ = std::move(value);
    U.dt_ = std::move(time_derivative);
    U.grad_ = std::move(gradient);
    U.quad_ = std::move(hessian_quadform);
    return U;
}

double LyapunovFunction::operator()(double t, const Field& x) const {
    if (kind_ == Kind::h_norm_sq) {
        const double h = h_norm(x);
        return h * h;
    }
    return value_(t, x);
}

double LyapunovFunction::time_derivative(double t, const Field& x) const {
    return kind_ == Kind::h_norm_sq ? 0.0 : dt_(t, x);
}

Field LyapunovFunction::gradient(double t, const Field& x) const {
    if (kind_ == Kind::h_norm_sq) return 2.0 * x;
    return grad_(t, x);
}

double LyapunovFunction::hessian_quadform(double t, const Field& x, const Field& h) const {
    if (kind_ == Kind::h_norm_sq) {
        const double n = h_norm(h);
        return 2.0 * n * n;
    }
    return quad_(t, x, h);
}

KhasminskiiCertificate KhasminskiiCertificate::create(TimeFunctional W, double lambda1, double lambda2) {
    if (!W) throw InvalidArgument("Khasminskii certificate needs W");
    if (!(lambda1 > 0.0) || !(lambda2 > 0.0)) {
        throw HypothesisError("requires positive constants lambda1 and lambda2");
    }
    return {std::move(W), lambda1, lambda2};
}

ExponentialCertificate ExponentialCertificate::create(double beta1, double beta2, double alpha1, double alpha2,
                                                      double alpha3, double alpha4, double mu, TimeFunctional W1,
                                                      std::optional<ScalarFn> gamma) {
    if (!W1) throw InvalidArgument("exponential certificate needs W1");
    if (!(beta1 > 0.0) || !(beta2 > 0.0)) throw HypothesisError("requires beta1 > 0 and beta2 > 0");
    if (!(alpha1 > alpha2) || !(alpha2 >= 0.0)) throw HypothesisError("requires alpha1 > alpha2 >= 0");
    if (!(alpha3 > alpha4) || !(alpha4 > 0.0)) {
        std::ostringstream os;
        os << "requires alpha3 > alpha4 > 0 (alpha3 = " << alpha3 << ", alpha4 = " << alpha4 << ")";
        throw HypothesisError(os.str());
    }
    if (!(mu > 0.0)) throw HypothesisError("requires mu > 0");
    return {beta1, beta2, alpha1, alpha2, alpha3, alpha4, mu, std::move(W1), std::move(gamma)};
}

double diffusion_operator(const ProblemSpec& p, const LyapunovFunction& U, double t, const Field& x,
                          const Field& y) {
    if (!(x.grid() == p.grid()) || !(y.grid() == p.grid())) throw InvalidArgument("state not on problem grid");
    const Field f = p.drift()(t, x, y);
    const Field g = p.diffusion()(t, x, y);
    if (!f.all_finite() || !g.all_finite()) throw NumericalError("evaluation overflow");
    double value;
    if (U.kind() == LyapunovFunction::Kind::h_norm_sq) {
        value = -2.0 * energy_pairing(p.op(), t, x) + 2.0 * h_inner(f, x) + hs_norm_sq(g, p.noise());
    } else {
        Field drift = apply_operator(p.op(), t, x);
        drift += f;
        // Pointwise diffusion puts the same field on every noise mode.
        value = U.time_derivative(t, x) + h_inner(drift, U.gradient(t, x)) +
                0.5 * p.noise().trace() * U.hessian_quadform(t, x, g);
    }
    if (!std::isfinite(value)) throw NumericalError("evaluation overflow");
    return value;
}

StateSampler::StateSampler(const Grid& grid, double t_final, std::uint64_t seed, SamplerOptions options)
    : grid_(grid), t_final_(t_final), seed_(seed), options_(options) {
    if (!(t_final >= 0.0)) throw InvalidArgument("sampler horizon must be nonnegative");
    if (options.n_modes == 0) throw InvalidArgument("sampler needs at least one mode");
    if (!(options.norm_lo > 0.0) || !(options.norm_hi >= options.norm_lo)) {
        throw InvalidArgument("sampler norm range must satisfy 0 < lo <= hi");
    }
}

StateSampler StateSampler::from_samples(std::vector<StateSample> samples) {
    StateSampler s;
    s.capacity_ = samples.size();
    s.fixed_ = std::move(samples);
    return s;
}

Field StateSampler::random_field(std::size_t i, std::uint32_t which, double target_norm) const {
    const Grid& grid = *grid_;
    Field f(grid);
    const std::uint64_t base = static_cast<std::uint64_t>(which) * 256;
    for (std::size_t k = 1; k <= options_.n_modes; ++k) {
        const double c = rng::standard_normal(seed_, rng::Stream::sampler, i, base + k, 0);
        for (std::size_t j = 0; j < grid.size(); ++j) f[j] += c * std::sin(static_cast<double>(k) * grid.point(j));
    }
    double n = h_norm(f);
    if (n == 0.0) {
        f = Field::from_function(grid, [](double x) { return std::sin(x); });
        n = h_norm(f);
    }
    f *= target_norm / n;
    return f;
}

StateSample StateSampler::operator()(std::size_t i) const {
    if (i >= capacity_) throw InvalidArgument("sampler exhausted after " + std::to_string(capacity_) + " samples");
    if (!grid_) return fixed_[i];
    const auto [u_t, u_x] = rng::uniform_pair(seed_, rng::Stream::sampler, i, 0, 1);
    const auto [u_y, u_spare] = rng::uniform_pair(seed_, rng::Stream::sampler, i, 1, 1);
    (void)u_spare;
    const double log_lo = std::log(options_.norm_lo);
    const double log_span = std::log(options_.norm_hi) - log_lo;
    // u_t lies in (0,1]; map to [0, t_final].
    const double t = t_final_ * (1.0 - u_t);
    const double nx = std::exp(log_lo + log_span * u_x);
    const double ny = std::exp(log_lo + log_span * u_y);
    return {t, random_field(i, 0, nx), random_field(i, 1, ny)};
}

std::vector<Field> StateSampler::ladder_directions(std::size_t count) const {
    std::vector<Field> dirs;
    if (!grid_) {
        for (std::size_t i = 0; i < std::min(count, fixed_.size()); ++i) {
            const double n = h_norm(fixed_[i].x);
            if (n > 0.0) dirs.push_back((1.0 / n) * fixed_[i].x);
        }
        return dirs;
    }
    Field s = Field::from_function(*grid_, [](double x) { return std::sin(x); });
    dirs.push_back((1.0 / h_norm(s)) * s);
    constexpr std::size_t kLadderStream = std::size_t{1} << 40;
    for (std::size_t d = 1; d < count; ++d) dirs.push_back(random_field(kLadderStream + d, 2, 1.0));
    return dirs;
}

void ConditionReport::finalize() {
    passed = inequality_passed() &&
             std::all_of(subchecks.begin(), subchecks.end(), [](const SubCheck& c) { return c.passed; });
}

double simpson(const ScalarFn& fn, double a, double b, std::size_t half_intervals) {
    if (half_intervals == 0) throw InvalidArgument("simpson needs at least one panel pair");
    if (b == a) return 0.0;
    const std::size_t n = 2 * half_intervals;
    const double h = (b - a) / static_cast<double>(n);
    double s = fn(a) + fn(b);
    for (std::size_t i = 1; i < n; ++i) s += (i % 2 == 1 ? 4.0 : 2.0) * fn(a + h * static_cast<double>(i));
    return s * h / 3.0;
}

namespace {

std::string describe_sample(const StateSample& s) {
    std::ostringstream os;
    os.precision(6);
    os << "t=" << s.t << " |x|_H=" << h_norm(s.x) << " |x|_V=" << v_norm(s.x) << " |y|_H=" << h_norm(s.y);
    return os.str();
}

double normalized_violation(double lhs, double rhs) { return (lhs - rhs) / (1.0 + std::abs(lhs) + std::abs(rhs)); }

template <typename Rhs>
void scan_samples(ConditionReport& report, const ProblemSpec& p, const LyapunovSpec& L, const StateSampler& sampler,
                  std::size_t n, Rhs&& rhs) {
    report.n_samples = n;
    for (std::size_t i = 0; i < n; ++i) {
        const StateSample s = sampler(i);
        const double lhs = diffusion_operator(p, L.U, s.t, s.x, s.y);
        const double v = normalized_violation(lhs, rhs(s));
        if (v > report.max_violation || std::isnan(v)) {
            report.max_violation = v;
            report.argmax_sample = describe_sample(s);
        }
    }
}

/// Rungs at norm 2^1..2^rungs along fixed rays; U must increase strictly and
/// grow by at least a factor 100 over the ladder. A finite proxy for
/// lim_{|x| -> inf} inf_t U(t,x) = inf.
SubCheck radial_ladder(const std::string& name, const LyapunovFunction& U, const std::vector<Field>& directions,
                       bool v_norm_ladder, double t_final, int rungs) {
    constexpr int kTimes = 16;
    SubCheck check{name, true, std::numeric_limits<double>::infinity(), "ray ladder, norm doublings 2^1..2^" +
                                                                            std::to_string(rungs)};
    for (const Field& dir : directions) {
        const double base = v_norm_ladder ? v_norm(dir) : h_norm(dir);
        double first = 0.0;
        double prev = -std::numeric_limits<double>::infinity();
        for (int i = 1; i <= rungs; ++i) {
            const Field x = (std::ldexp(1.0, i) / base) * dir;
            double inf_t = std::numeric_limits<double>::infinity();
            for (int k = 0; k < kTimes; ++k) inf_t = std::min(inf_t, U(t_final * k / (kTimes - 1), x));
            if (!(inf_t > prev)) check.passed = false;
            if (i == 1) first = inf_t;
            prev = inf_t;
        }
        const double growth = prev / std::max(first, std::numeric_limits<double>::min());
        check.value = std::min(check.value, growth);
        if (!(growth >= 100.0)) check.passed = false;
    }
    return check;
}

SubCheck gamma_integral(const std::optional<ScalarFn>& gamma, double mu, double t_final, const std::string& name) {
    if (!gamma) return {name, true, 0.0, "gamma == 0"};
    ScalarFn integrand = *gamma;
    if (std::isfinite(mu)) integrand = [g = *gamma, mu](double t) { return g(t) * std::exp(mu * t); };
    const double value = simpson(integrand, 0.0, t_final);
    bool ok = std::isfinite(value);
    for (int i = 0; i <= 64 && ok; ++i) ok = (*gamma)(t_final * i / 64.0) >= 0.0;
    return {name, ok, value, "Simpson quadrature on [0, t_final]"};
}

}  // namespace

ConditionReport check_khasminskii(const ProblemSpec& p, const LyapunovSpec& L, const StateSampler& sampler,
                                  std::size_t n, const CheckOptions& options) {
    if (!L.khasminskii) throw InvalidArgument("Lyapunov spec has no Khasminskii certificate");
    const KhasminskiiCertificate& c = *L.khasminskii;
    ConditionReport report;
    report.condition = "khasminskii";
    report.tolerance = options.tolerance;
    const double tau = p.tau();
    scan_samples(report, p, L, sampler, n, [&](const StateSample& s) {
        return c.lambda1 * (1.0 + L.U(s.t, s.x) + L.U(s.t - tau, s.y) + c.W(s.t - tau, s.y)) -
               c.lambda2 * c.W(s.t, s.x);
    });
    report.subchecks.push_back(radial_ladder("radial_unboundedness_H", L.U,
                                             sampler.ladder_directions(options.ladder_directions), false,
                                             p.t_final(), options.ladder_rungs));
    report.finalize();
    return report;
}

ConditionReport check_lasalle(const ProblemSpec& p, const LyapunovSpec& L, const StateSampler& sampler,
                              std::size_t n, const CheckOptions& options) {
    if (!L.lasalle) throw InvalidArgument("Lyapunov spec has no LaSalle certificate");
    const LaSalleCertificate& c = *L.lasalle;
    ConditionReport report;
    report.condition = "lasalle";
    report.tolerance = options.tolerance;
    scan_samples(report, p, L, sampler, n, [&](const StateSample& s) {
        const double g = c.gamma ? (*c.gamma)(s.t) : 0.0;
        return g - c.w1(s.x) + c.w2(s.y);
    });

    const Field zero(p.grid());
    const double w1_zero = c.w1(zero);
    const double w2_zero = c.w2(zero);
    report.subchecks.push_back({"w_vanish_at_zero", w1_zero == 0.0 && w2_zero == 0.0,
                                std::max(std::abs(w1_zero), std::abs(w2_zero)), "w1(0) = w2(0) = 0"});

    // Strict w1 > w2 on every nonzero sampled state.
    double min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const StateSample s = sampler(i);
        for (const Field* f : {&s.x, &s.y}) {
            if (h_norm(*f) == 0.0) continue;
            min_gap = std::min(min_gap, c.w1(*f) - c.w2(*f));
        }
    }
    report.subchecks.push_back({"w1_exceeds_w2", min_gap > 0.0, min_gap, "min of w1(x) - w2(x) over nonzero samples"});
    report.subchecks.push_back(gamma_integral(c.gamma, std::numeric_limits<double>::infinity(), p.t_final(),
                                              "gamma_integrable"));

    const auto dirs = sampler.ladder_directions(options.ladder_directions);
    report.subchecks.push_back(
        radial_ladder("radial_unboundedness_H", L.U, dirs, false, p.t_final(), options.ladder_rungs));
    report.subchecks.push_back(
        radial_ladder("radial_unboundedness_V", L.U, dirs, true, p.t_final(), options.ladder_rungs));
    report.finalize();
    return report;
}

ConditionReport check_exponential(const ProblemSpec& p, const LyapunovSpec& L, const StateSampler& sampler,
                                  std::size_t n, const CheckOptions& options) {
    if (!L.exponential) throw InvalidArgument("Lyapunov spec has no exponential certificate");
    const ExponentialCertificate& c = *L.exponential;
    ConditionReport report;
    report.condition = "exponential";
    report.tolerance = options.tolerance;
    const double tau = p.tau();
    scan_samples(report, p, L, sampler, n, [&](const StateSample& s) {
        const double g = c.gamma ? (*c.gamma)(s.t) : 0.0;
        return g - c.alpha1 * L.U(s.t, s.x) + c.alpha2 * L.U(s.t - tau, s.y) - c.alpha3 * c.W1(s.t, s.x) +
               c.alpha4 * c.W1(s.t - tau, s.y);
    });

    double sandwich = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const StateSample s = sampler(i);
        const double h = h_norm(s.x);
        const double u = L.U(s.t, s.x);
        sandwich = std::max({sandwich, normalized_violation(c.beta1 * h * h, u),
                             normalized_violation(u, c.beta2 * h * h)});
    }
    report.subchecks.push_back({"quadratic_sandwich", sandwich <= options.tolerance, sandwich,
                                "beta1 |x|_H^2 <= U(t,x) <= beta2 |x|_H^2"});
    report.subchecks.push_back(gamma_integral(c.gamma, c.mu, p.t_final(), "gamma_exp_mu_integral"));
    report.finalize();
    return report;
}

}  // namespace sedes
