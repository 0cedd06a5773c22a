#include "sedes/presets.hpp"

#include <cmath>
#include <sstream>

namespace sedes {

std::string_view preset_name(Preset p) noexcept {
    switch (p) {
        case Preset::cubic_delay: return "eq16";
        case Preset::damped_cubic: return "eq6";
        case Preset::logistic_delay: return "eq24";
        case Preset::heat: return "heat";
    }
    return "unknown";
}

std::optional<Preset> parse_preset(std::string_view name) noexcept {
    for (Preset p : {Preset::cubic_delay, Preset::damped_cubic, Preset::logistic_delay, Preset::heat}) {
        if (preset_name(p) == name) return p;
    }
    return std::nullopt;
}

std::string_view certificate_name(CertificateFlavor c) noexcept {
    return c == CertificateFlavor::printed ? "printed" : "discrete";
}

std::optional<CertificateFlavor> parse_certificate(std::string_view name) noexcept {
    if (name == "printed") return CertificateFlavor::printed;
    if (name == "discrete") return CertificateFlavor::discrete;
    return std::nullopt;
}

double logistic_diffusivity(double nu, double t, double x) {
    const double s = std::sin(x);
    return nu * (1.0 + 0.25 * (1.0 + std::sin(t)) * s * s);
}

std::optional<std::string> logistic_violation(const LogisticParams& q) {
    std::ostringstream os;
    if (!(q.nu > 0.0)) {
        os << "requires nu > 0 (nu = " << q.nu << ")";
        return os.str();
    }
    if (!(q.b * q.b > 0.0) || !(q.nu - q.a > q.b * q.b)) {
        os << "requires ν−a>b²>0, Example eq24 (nu - a = " << q.nu - q.a << ", b^2 = " << q.b * q.b << ")";
        return os.str();
    }
    const double c4 = q.c * q.c * q.c * q.c;
    if (!(c4 < 2.0)) {
        os << "requires c⁴<2, Example eq24 (c^4 = " << c4 << ")";
        return os.str();
    }
    return std::nullopt;
}

ProblemSpec make_problem(Preset preset, const PresetOptions& o) {
    ProblemParams params;
    params.grid = Grid(o.grid_n);
    params.tau = o.tau;
    params.dt = o.dt;
    params.t_final = o.t_final;
    params.noise = NoiseModel::scalar(o.seed);
    params.explosion.clamp = o.clamp;
    const double amp = o.psi_amplitude;
    params.psi = [amp](double, double x) { return amp * std::sin(x); };

    switch (preset) {
        case Preset::cubic_delay: {
            const double s = o.cubic_sign >= 0 ? 1.0 : -1.0;
            params.drift = Coefficient::pointwise([s](double, double u, double v) { return s * (v * v - u * u * u); });
            params.diffusion = Coefficient::pointwise([](double, double, double v) { return v * v; });
            break;
        }
        case Preset::damped_cubic: {
            const double gain = o.noise_gain;
            params.drift = Coefficient::pointwise([](double, double u, double) { return -(u * u * u + u); });
            params.diffusion =
                Coefficient::pointwise([gain](double t, double, double v) { return gain * v * std::sin(t); });
            break;
        }
        case Preset::logistic_delay: {
            const LogisticParams q = o.logistic;
            params.op = OperatorCoeff::divergence(
                [nu = q.nu](double t, double x) { return logistic_diffusivity(nu, t, x); }, q.nu, 1.5 * q.nu,
                o.t_final);
            params.drift = Coefficient::pointwise(
                [q](double, double u, double v) { return u * (q.a + q.b * v - u * u); });
            params.diffusion = Coefficient::pointwise([c = q.c](double, double u, double v) { return c * u * v; });
            break;
        }
        case Preset::heat:
            break;
    }
    return ProblemSpec(std::move(params));
}

namespace {

double sq_norm(const Field& x) {
    const double h = h_norm(x);
    return h * h;
}

double sq_norm_squared(const Field& x) {
    const double n = sq_norm(x);
    return n * n;
}

double v_sq_norm(const Field& x) {
    const double v = v_norm(x);
    return v * v;
}

}  // namespace

LyapunovSpec make_lyapunov(Preset preset, const PresetOptions& o, CertificateFlavor flavor) {
    const Grid grid(o.grid_n);
    const double lam = grid.lambda_min();
    const bool printed = flavor == CertificateFlavor::printed;
    LyapunovSpec L;
    L.U = LyapunovFunction::h_norm_sq();

    switch (preset) {
        case Preset::cubic_delay: {
            // printed: LU <= |x|^2 - 2|x|^4 + (4/3)|y|^4, certificate (1, 4/3, |x|_H^4).
            // discrete: 2<y^2,x> <= |x|^2 + Q(y) gives LU <= |x|^2 - 2Q(x) + 2Q(y), certificate (2, 2, Q).
            TimeFunctional W = printed ? TimeFunctional([](double, const Field& x) { return sq_norm_squared(x); })
                                       : TimeFunctional([](double, const Field& x) { return quartic_integral(x); });
            const double l1 = printed ? 1.0 : 2.0;
            const double l2 = o.lambda2.value_or(printed ? 4.0 / 3.0 : 2.0);
            L.khasminskii = KhasminskiiCertificate::create(std::move(W), l1, l2);
            break;
        }
        case Preset::damped_cubic: {
            LaSalleCertificate c;
            if (printed) {
                c.w1 = [](const Field& x) {
                    const double n = sq_norm(x);
                    return 2.0 * (n * n + 2.0 * n);
                };
            } else {
                c.w1 = [](const Field& x) { return 2.0 * (quartic_integral(x) + sq_norm(x) + v_sq_norm(x)); };
            }
            c.w2 = [](const Field& x) { return sq_norm(x); };
            L.lasalle = std::move(c);
            break;
        }
        case Preset::logistic_delay: {
            const LogisticParams& q = o.logistic;
            const double nu_eff = printed ? q.nu : q.nu * lam;
            TimeFunctional W1 = printed ? TimeFunctional([](double, const Field& x) { return sq_norm_squared(x); })
                                        : TimeFunctional([](double, const Field& x) { return quartic_integral(x); });
            const double c4 = q.c * q.c * q.c * q.c;
            L.exponential = ExponentialCertificate::create(1.0, 1.0, 2.0 * (nu_eff - q.a), 2.0 * q.b * q.b, 1.0,
                                                           0.5 * c4, std::numeric_limits<double>::infinity(),
                                                           std::move(W1));
            break;
        }
        case Preset::heat: {
            // LU = -2|x|_V^2 <= -2 lambda_min |x|_H^2 on the grid, for either flavor.
            L.khasminskii = KhasminskiiCertificate::create([](double, const Field&) { return 0.0; }, 1.0, 1.0);
            const double alpha1 = 2.0 * lam;
            // W1 == 0, so alpha3/alpha4 only set eps2; choose them so eps2 = alpha1.
            L.exponential = ExponentialCertificate::create(1.0, 1.0, alpha1, 0.0, 1.0, std::exp(-alpha1 * o.tau),
                                                           std::numeric_limits<double>::infinity(),
                                                           [](double, const Field&) { return 0.0; });
            break;
        }
    }
    return L;
}

}  // namespace sedes
