#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "sedes/integrator.hpp"
#include "sedes/lyapunov.hpp"

namespace sedes {

/// Built-in problems. CLI names in parentheses.
enum class Preset {
    /// (eq16) y_t = y_xx + s(y(t-tau)^2 - y^3) + y(t-tau)^2 dB, s = +1 (or -1 for the sign variant).
    cubic_delay,
    /// (eq6) y_t = y_xx - (y^3 + y) + y(t-tau) sin(t) dB.
    damped_cubic,
    /// (eq24) y_t = (a(t,x) y_x)_x + y(a + b y(t-tau) - y^2) + c y y(t-tau) dB.
    logistic_delay,
    /// (heat) y_t = y_xx, no drift, no noise.
    heat,
};

std::string_view preset_name(Preset p) noexcept;
std::optional<Preset> parse_preset(std::string_view name) noexcept;

/// Which Lyapunov certificate accompanies a preset.
///  - printed: the functionals and constants exactly as in the worked examples,
///    with quartic terms written |x|_H^4 and the embedding constant taken as 1.
///  - discrete: the same derivations carried out without the two lossy steps:
///    quartic terms stay as the integral of x^4, and the V-norm is bounded below
///    by sqrt(lambda_min) times the H-norm. These are exact inequalities on the grid.
enum class CertificateFlavor { printed, discrete };

std::string_view certificate_name(CertificateFlavor c) noexcept;
std::optional<CertificateFlavor> parse_certificate(std::string_view name) noexcept;

struct LogisticParams {
    double nu = 2.0;
    double a = 0.5;
    double b = 1.0;
    double c = 1.0;
};

struct PresetOptions {
    std::size_t grid_n = 63;
    double dt = 1e-3;
    double tau = 1.0;
    double t_final = 50.0;
    std::uint64_t seed = 0;
    /// psi(theta, x) = psi_amplitude * sin(x) for every theta.
    double psi_amplitude = 0.1;
    LogisticParams logistic;
    /// +1 or -1 on the delayed-minus-cubic drift of cubic_delay.
    int cubic_sign = 1;
    /// Multiplier on the damped_cubic diffusion.
    double noise_gain = 1.0;
    /// Overrides lambda2 in the cubic_delay certificate.
    std::optional<double> lambda2;
    bool clamp = false;
};

/// Time-dependent coefficient used by logistic_delay:
/// a(t,x) = nu (1 + (1 + sin t) sin^2(x) / 4), so nu <= a <= 1.5 nu.
double logistic_diffusivity(double nu, double t, double x);

ProblemSpec make_problem(Preset preset, const PresetOptions& options);

/// Throws HypothesisError when the flavor's constants violate the theorem
/// hypotheses (e.g. c^4 >= 2 makes alpha3 > alpha4 fail).
LyapunovSpec make_lyapunov(Preset preset, const PresetOptions& options, CertificateFlavor flavor);

/// Reason the logistic parameters fall outside nu - a > b^2 > 0, c^4 < 2, or nullopt.
std::optional<std::string> logistic_violation(const LogisticParams& params);

}  // namespace sedes
