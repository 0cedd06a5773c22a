#include "sedes/run.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "sedes/presets.hpp"

#ifndef SEDES_VERSION
#define SEDES_VERSION "unknown"
#endif

namespace sedes {

using nlohmann::json;

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

// The a.s. proxy only decides the exit code on windows at least this long.
constexpr double kMinAsWindow = 5.0;

json num(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

void write_text(const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << body;
}

std::string ms_curve_csv(const MsCurve* curve) {
    std::string s = "t,mean_h_norm_sq,std_err,n_alive\n";
    if (!curve) return s;
    for (const MsPoint& p : curve->points) {
        s += format_number(p.t) + "," + format_number(p.mean_h_norm_sq) + "," + format_number(p.std_err) + "," +
             std::to_string(p.n_alive) + "\n";
    }
    return s;
}

std::string paths_csv(const ProblemSpec& p, std::size_t n_paths, double interval) {
    std::string s = "t,path_id,h_norm,v_norm\n";
    const std::size_t stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(interval / p.dt())));
    for (std::size_t path = 0; path < std::min<std::size_t>(8, n_paths); ++path) {
        const Trajectory traj = simulate(p, path);
        for (std::size_t i = 0; i < traj.times.size(); i += stride) {
            s += format_number(traj.times[i]) + "," + std::to_string(path) + "," + format_number(traj.h_norms[i]) +
                 "," + format_number(traj.v_norms[i]) + "\n";
        }
    }
    return s;
}

}  // namespace

json to_json(const ConditionReport& r) {
    json subs = json::array();
    for (const SubCheck& c : r.subchecks) {
        subs.push_back({{"name", c.name}, {"passed", c.passed}, {"value", num(c.value)}, {"detail", c.detail}});
    }
    return {{"condition", r.condition},     {"n_samples", r.n_samples},
            {"max_violation", num(r.max_violation)}, {"tolerance", r.tolerance},
            {"argmax_sample", r.argmax_sample}, {"subchecks", subs},
            {"note", r.note},               {"passed", r.passed}};
}

json to_json(const DecaySolution& d) {
    return {{"eps1", num(d.eps1)}, {"eps2", num(d.eps2)},           {"eps", num(d.eps)},
            {"mu", num(d.mu)},     {"bound", num(d.bound)},         {"residual1", num(d.residual1)},
            {"residual2", num(d.residual2)}};
}

json to_json(const RateFit& f) {
    return {{"rate", num(f.rate)}, {"half_width", num(f.half_width)}, {"window", {num(f.t_lo), num(f.t_hi)}},
            {"n_points", f.n_points}};
}

json to_json(const AsStats& s) {
    return {{"fraction_converged", num(s.fraction_converged)},
            {"fraction_bounded", num(s.fraction_bounded)},
            {"threshold", num(s.threshold)},
            {"u_bound", num(s.u_bound)},
            {"window", {num(s.window.first), num(s.window.second)}},
            {"n_paths", s.n_paths},
            {"n_exploded", s.n_exploded}};
}

json to_json(const ExplosionTable& t) {
    json rows = json::array();
    for (const ExplosionRow& r : t.rows) {
        rows.push_back(
            {{"k", num(r.k)}, {"n_hit", r.n_hit}, {"probability", num(r.probability)}, {"std_err", num(r.std_err)}});
    }
    return {{"horizon", num(t.horizon)}, {"n_paths", t.n_paths}, {"rows", rows}, {"nonincreasing", t.nonincreasing}};
}

RunOutcome run(const RunConfig& config, std::ostream& log) {
    RunOutcome out;
    out.output_dir = config.output_dir;
    std::filesystem::create_directories(out.output_dir);
    write_text(out.output_dir / "config.resolved.json", to_json(config).dump(2) + "\n");

    const Preset preset = config.preset_kind();
    const PresetOptions options = config.preset_options();
    const ProblemSpec problem = make_problem(preset, options);
    const EnsembleOptions ensemble{config.workers};
    StabilityReport& stab = out.stability;
    stab.n_paths = config.n_paths;
    stab.seed = config.seed;
    stab.scheme = kSchemeName;

    std::optional<LyapunovSpec> lyapunov;
    std::string certificate_error;
    try {
        lyapunov = make_lyapunov(preset, options, config.certificate_kind());
    } catch (const HypothesisError& e) {
        certificate_error = e.what();
    }

    if (config.analyses.check_conditions) {
        if (!lyapunov) {
            ConditionReport r;
            r.condition = "hypotheses";
            r.note = certificate_error;
            r.max_violation = std::numeric_limits<double>::infinity();
            r.passed = false;
            out.conditions.push_back(r);
        } else {
            const StateSampler sampler(problem.grid(), config.t_final, config.seed);
            const std::size_t n = config.condition_samples;
            if (lyapunov->khasminskii) out.conditions.push_back(check_khasminskii(problem, *lyapunov, sampler, n));
            if (lyapunov->lasalle) out.conditions.push_back(check_lasalle(problem, *lyapunov, sampler, n));
            if (lyapunov->exponential) out.conditions.push_back(check_exponential(problem, *lyapunov, sampler, n));
        }
        for (const ConditionReport& r : out.conditions) {
            out.checks["condition:" + r.condition] = r.passed;
            log << "condition " << r.condition << ": " << (r.passed ? "passed" : "FAILED")
                << " (max violation " << r.max_violation << ")\n";
        }
    }

    if (config.analyses.decay_solver && lyapunov && lyapunov->exponential) {
        stab.decay = solve_decay(*lyapunov->exponential, problem.tau());
        log << "decay bound " << stab.decay->bound << " (eps1 " << stab.decay->eps1 << ", eps2 " << stab.decay->eps2
            << ")\n";
    }

    bool numerical_failure = false;
    if (config.analyses.ms_ensemble) {
        try {
            stab.ms_curve =
                ms_ensemble(problem, config.n_paths, uniform_record_times(problem, config.resolved_record_interval()),
                            ensemble);
        } catch (const NumericalError& e) {
            log << "ms ensemble failed: " << e.what() << "\n";
            stab.ms_curve.n_paths = config.n_paths;
            numerical_failure = true;
        }
        if (stab.ms_curve.explosion_fraction() > config.explosion_budget) numerical_failure = true;
        if (!stab.ms_curve.points.empty()) {
            try {
                stab.fitted_rate = fit_decay_rate_adaptive(stab.ms_curve);
                log << "fitted rate " << stab.fitted_rate->rate << " +- " << stab.fitted_rate->half_width << "\n";
            } catch (const InvalidArgument& e) {
                log << "decay fit skipped: " << e.what() << "\n";
            }
        }
        if (stab.decay && stab.fitted_rate) {
            const double slack = 2.0 * stab.fitted_rate->half_width + 0.05;
            out.checks["decay_bound"] = stab.fitted_rate->rate <= stab.decay->bound + slack;
        }
    }

    if (config.analyses.as_stats) {
        stab.as_stats = as_stability_stats(problem, config.n_paths, config.as_threshold, config.resolved_as_window(),
                                           ensemble, config.u_bound);
        const auto [w_lo, w_hi] = config.resolved_as_window();
        if (w_hi - w_lo >= kMinAsWindow) {
            out.checks["as_stats"] =
                stab.as_stats->fraction_converged >= config.as_min_fraction && stab.as_stats->fraction_bounded == 1.0;
        } else {
            log << "a.s. proxy window shorter than " << kMinAsWindow << ", reported only\n";
        }
        const double frac = static_cast<double>(stab.as_stats->n_exploded) / static_cast<double>(config.n_paths);
        if (frac > config.explosion_budget) numerical_failure = true;
        log << "a.s. proxy: converged " << stab.as_stats->fraction_converged << ", bounded "
            << stab.as_stats->fraction_bounded << "\n";
    }

    if (config.analyses.explosion_scan) {
        try {
            stab.explosion =
                explosion_scan(problem, config.explosion_k, config.n_paths, config.explosion_horizon, ensemble);
            out.checks["explosion_scan"] = stab.explosion->nonincreasing;
        } catch (const InvalidArgument& e) {
            log << "explosion scan rejected: " << e.what() << "\n";
            out.checks["explosion_scan"] = false;
        }
    }

    bool all_passed = true;
    for (const auto& [name, ok] : out.checks) all_passed = all_passed && ok;
    out.exit_code = numerical_failure ? kExitNumericalFailure : (all_passed ? kExitPass : kExitCheckFailure);

    json conditions = json::array();
    for (const ConditionReport& r : out.conditions) conditions.push_back(to_json(r));

    json report;
    report["metadata"] = {{"version", SEDES_VERSION},
                          {"scheme", kSchemeName},
                          {"gaussian", std::string(rng::kGaussianMethod)},
                          {"preset", config.preset},
                          {"certificate", config.certificate},
                          {"grid_n", config.grid_n},
                          {"dt", config.dt},
                          {"dt_requested", config.dt_requested ? json(*config.dt_requested) : json(nullptr)},
                          {"tau", config.tau},
                          {"t_final", config.t_final},
                          {"n_paths", config.n_paths},
                          {"seed", config.seed},
                          {"lambda_1h", problem.grid().lambda_min()},
                          {"embedding_constant", std::sqrt(problem.grid().lambda_min())}};
    json sr;
    sr["n_paths"] = stab.n_paths;
    sr["seed"] = stab.seed;
    sr["scheme"] = stab.scheme;
    json curve = json::array();
    for (const MsPoint& p : stab.ms_curve.points) {
        curve.push_back({num(p.t), num(p.mean_h_norm_sq), num(p.std_err), p.n_alive});
    }
    sr["ms_curve"] = curve;
    sr["exploded_paths"] = stab.ms_curve.exploded_paths;
    sr["explosion_fraction"] = stab.ms_curve.explosion_fraction();
    sr["fitted_rate"] = stab.fitted_rate ? to_json(*stab.fitted_rate) : json(nullptr);
    sr["theoretical_bound"] = stab.decay ? num(stab.decay->bound) : json(nullptr);
    sr["as_stats"] = stab.as_stats ? to_json(*stab.as_stats) : json(nullptr);
    sr["explosion_stats"] = stab.explosion ? to_json(*stab.explosion) : json(nullptr);
    report["stability"] = sr;
    report["decay_solution"] = stab.decay ? to_json(*stab.decay) : json(nullptr);
    report["conditions"] = conditions;
    report["certificate_error"] = certificate_error.empty() ? json(nullptr) : json(certificate_error);
    report["checks"] = out.checks;
    report["exit_code"] = out.exit_code;
    out.report = report;

    write_text(out.output_dir / "ms_curve.csv", ms_curve_csv(config.analyses.ms_ensemble ? &stab.ms_curve : nullptr));
    write_text(out.output_dir / "paths_sample.csv", paths_csv(problem, config.n_paths, config.resolved_record_interval()));
    write_text(out.output_dir / "report.json", report.dump(2) + "\n");
    write_text(out.output_dir / "conditions.json", conditions.dump(2) + "\n");
    return out;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Simulator and stability checks for stochastic evolution equations with delay on (0, pi)"};
    app.set_version_flag("--version", SEDES_VERSION);

    std::string config_path;
    json overrides = json::object();
    std::string preset, out_dir, certificate, sign_variant;
    std::size_t grid_n = 0, paths = 0;
    double dt = 0, tau = 0, t_final = 0, nu = 0, a = 0, b = 0, c = 0, lambda2 = 0, noise_gain = 0;
    std::uint64_t seed = 0;
    unsigned workers = 0;
    bool allow_unstable = false, clamp = false;

    app.add_option("--config", config_path, "JSON configuration file");
    auto* o_preset = app.add_option("--preset", preset, "eq16 | eq6 | eq24 | heat");
    auto* o_grid = app.add_option("--grid-n", grid_n, "interior grid points");
    auto* o_dt = app.add_option("--dt", dt, "time step (adjusted so tau is a multiple)");
    auto* o_tau = app.add_option("--tau", tau, "delay");
    auto* o_tf = app.add_option("--t-final", t_final, "horizon");
    auto* o_paths = app.add_option("--paths", paths, "Monte Carlo paths");
    auto* o_seed = app.add_option("--seed", seed, "noise seed");
    auto* o_out = app.add_option("--out-dir", out_dir, "output directory (env SEDES_OUT if unset)");
    auto* o_cert = app.add_option("--certificate", certificate, "printed | discrete");
    auto* o_nu = app.add_option("--nu", nu, "eq24 lower bound of a(t,x)");
    auto* o_a = app.add_option("--a", a, "eq24 growth constant");
    auto* o_b = app.add_option("--b", b, "eq24 delay coupling");
    auto* o_c = app.add_option("--c", c, "eq24 noise coupling");
    auto* o_sign = app.add_option("--sign-variant", sign_variant, "eq16 drift sign: plus | minus");
    auto* o_l2 = app.add_option("--lambda2", lambda2, "eq16 certificate lambda2");
    auto* o_gain = app.add_option("--noise-gain", noise_gain, "eq6 diffusion multiplier");
    auto* o_workers = app.add_option("--workers", workers, "worker threads (0 = all cores)");
    app.add_flag("--allow-unstable", allow_unstable, "run eq24 outside its stability hypotheses");
    app.add_flag("--clamp", clamp, "rescale blown-up states instead of stopping the path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitPass : kExitConfigError;
    }

    if (*o_preset) overrides["preset"] = preset;
    if (*o_grid) overrides["grid_n"] = grid_n;
    if (*o_dt) overrides["dt"] = dt;
    if (*o_tau) overrides["tau"] = tau;
    if (*o_tf) overrides["t_final"] = t_final;
    if (*o_paths) overrides["n_paths"] = paths;
    if (*o_seed) overrides["seed"] = seed;
    if (*o_cert) overrides["certificate"] = certificate;
    if (*o_nu) overrides["nu"] = nu;
    if (*o_a) overrides["a"] = a;
    if (*o_b) overrides["b"] = b;
    if (*o_c) overrides["c"] = c;
    if (*o_sign) overrides["sign_variant"] = sign_variant;
    if (*o_l2) overrides["lambda2"] = lambda2;
    if (*o_gain) overrides["noise_gain"] = noise_gain;
    if (*o_workers) overrides["workers"] = workers;
    if (allow_unstable) overrides["allow_unstable"] = true;
    if (clamp) overrides["clamp"] = true;
    if (*o_out) {
        overrides["output_dir"] = out_dir;
    } else if (const char* env = std::getenv("SEDES_OUT"); env && *env) {
        overrides["output_dir"] = env;
    }

    RunConfig config;
    try {
        config = load_config(config_path.empty() ? std::nullopt : std::optional<std::filesystem::path>(config_path),
                             overrides);
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << "\n";
        return kExitConfigError;
    }
    if (config.dt_requested) {
        out << "dt adjusted from " << *config.dt_requested << " to " << config.dt << " so that tau is a multiple\n";
    }

    try {
        const RunOutcome outcome = run(config, out);
        out << "exit code " << outcome.exit_code << ", outputs in " << outcome.output_dir.string() << "\n";
        return outcome.exit_code;
    } catch (const InvalidArgument& e) {
        err << "configuration error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kExitNumericalFailure;
    }
}

}  // namespace sedes
