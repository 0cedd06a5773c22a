#include "sedes/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace sedes {

using nlohmann::json;

namespace {

const std::set<std::string> kKeys = {
    "preset",         "grid_n",        "dt",          "tau",
    "t_final",        "n_paths",       "seed",        "nu",
    "a",              "b",             "c",           "sign_variant",
    "noise_gain",     "lambda2",       "certificate", "psi_amplitude",
    "analyses",       "output_dir",    "allow_unstable", "clamp",
    "condition_samples", "record_interval", "as_threshold", "as_window",
    "as_min_fraction", "u_bound",      "explosion_k", "explosion_horizon",
    "explosion_budget", "workers",     "dt_requested",
};

const std::set<std::string> kAnalysisKeys = {"check_conditions", "decay_solver", "ms_ensemble", "as_stats",
                                             "explosion_scan"};

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    std::vector<std::string> unknown;
    for (const auto& [key, _] : j.items()) {
        if (!known.contains(key)) unknown.push_back(key);
    }
    if (unknown.empty()) return;
    std::string msg = "unknown configuration keys" + where + ":";
    for (const auto& k : unknown) msg += " " + k;
    throw ConfigError(msg);
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("configuration key '") + key + "': " + e.what());
    }
}

void merge_into(const json& j, RunConfig& c) {
    if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
    reject_unknown(j, kKeys, "");
    read(j, "preset", c.preset);
    read(j, "grid_n", c.grid_n);
    read(j, "dt", c.dt);
    read(j, "tau", c.tau);
    read(j, "t_final", c.t_final);
    read(j, "n_paths", c.n_paths);
    read(j, "seed", c.seed);
    read(j, "nu", c.nu);
    read(j, "a", c.a);
    read(j, "b", c.b);
    read(j, "c", c.c);
    read(j, "sign_variant", c.sign_variant);
    read(j, "noise_gain", c.noise_gain);
    if (j.contains("lambda2")) {
        if (j.at("lambda2").is_null()) {
            c.lambda2.reset();
        } else {
            double v = 0.0;
            read(j, "lambda2", v);
            c.lambda2 = v;
        }
    }
    read(j, "certificate", c.certificate);
    read(j, "psi_amplitude", c.psi_amplitude);
    if (j.contains("analyses")) {
        const json& an = j.at("analyses");
        if (!an.is_object()) throw ConfigError("configuration key 'analyses' must be an object");
        reject_unknown(an, kAnalysisKeys, " in 'analyses'");
        read(an, "check_conditions", c.analyses.check_conditions);
        read(an, "decay_solver", c.analyses.decay_solver);
        read(an, "ms_ensemble", c.analyses.ms_ensemble);
        read(an, "as_stats", c.analyses.as_stats);
        read(an, "explosion_scan", c.analyses.explosion_scan);
    }
    read(j, "output_dir", c.output_dir);
    read(j, "allow_unstable", c.allow_unstable);
    read(j, "clamp", c.clamp);
    read(j, "condition_samples", c.condition_samples);
    read(j, "record_interval", c.record_interval);
    read(j, "as_threshold", c.as_threshold);
    if (j.contains("as_window")) {
        if (j.at("as_window").is_null()) {
            c.as_window.reset();
        } else {
            std::vector<double> w;
            read(j, "as_window", w);
            if (w.size() != 2) throw ConfigError("configuration key 'as_window' must be [t_lo, t_hi]");
            c.as_window = std::make_pair(w[0], w[1]);
        }
    }
    read(j, "as_min_fraction", c.as_min_fraction);
    read(j, "u_bound", c.u_bound);
    read(j, "explosion_k", c.explosion_k);
    read(j, "explosion_horizon", c.explosion_horizon);
    read(j, "explosion_budget", c.explosion_budget);
    read(j, "workers", c.workers);
}

std::size_t delay_steps(double tau, double dt) {
    const double ratio = tau / dt;
    const double nearest = std::round(ratio);
    if (nearest >= 1.0 && std::abs(ratio - nearest) <= 1e-9 * nearest) return static_cast<std::size_t>(nearest);
    return static_cast<std::size_t>(std::ceil(ratio));
}

void validate(RunConfig& c) {
    if (!parse_preset(c.preset)) throw ConfigError("unknown preset '" + c.preset + "'");
    if (!parse_certificate(c.certificate)) {
        throw ConfigError("certificate must be 'printed' or 'discrete', got '" + c.certificate + "'");
    }
    if (c.sign_variant != "plus" && c.sign_variant != "minus") {
        throw ConfigError("sign_variant must be 'plus' or 'minus', got '" + c.sign_variant + "'");
    }
    if (c.grid_n < 2) throw ConfigError("grid_n must be at least 2");
    if (!(c.dt > 0.0) || !std::isfinite(c.dt)) throw ConfigError("dt must be positive");
    if (!(c.tau > 0.0) || !std::isfinite(c.tau)) throw ConfigError("tau must be positive");
    if (!(c.t_final > 0.0) || !std::isfinite(c.t_final)) throw ConfigError("t_final must be positive");
    if (c.n_paths < 2) throw ConfigError("n_paths must be at least 2");
    if (c.condition_samples == 0) throw ConfigError("condition_samples must be positive");
    if (c.record_interval < 0.0) throw ConfigError("record_interval must be nonnegative");
    if (!(c.explosion_budget >= 0.0 && c.explosion_budget <= 1.0)) {
        throw ConfigError("explosion_budget must lie in [0, 1]");
    }
    if (!(c.explosion_horizon > 0.0)) throw ConfigError("explosion_horizon must be positive");
    for (std::size_t i = 0; i < c.explosion_k.size(); ++i) {
        if (!(c.explosion_k[i] > 0.0) || (i > 0 && !(c.explosion_k[i] > c.explosion_k[i - 1]))) {
            throw ConfigError("explosion_k must be positive and increasing");
        }
    }
    if (c.as_window) {
        const auto [lo, hi] = *c.as_window;
        if (!(lo >= 0.0) || !(hi >= lo) || hi > c.t_final) throw ConfigError("as_window must lie inside [0, t_final]");
    }
    if (c.preset == "eq24" && !c.allow_unstable) {
        if (auto why = logistic_violation({c.nu, c.a, c.b, c.c})) {
            throw ConfigError("eq24 parameters rejected: " + *why + "; pass --allow-unstable to run anyway");
        }
    }

    const std::size_t m = delay_steps(c.tau, c.dt);
    const double adjusted = c.tau / static_cast<double>(m);
    if (adjusted != c.dt) {
        if (!c.dt_requested) c.dt_requested = c.dt;
        c.dt = adjusted;
    }
}

}  // namespace

Preset RunConfig::preset_kind() const {
    auto p = parse_preset(preset);
    if (!p) throw ConfigError("unknown preset '" + preset + "'");
    return *p;
}

CertificateFlavor RunConfig::certificate_kind() const {
    auto c = parse_certificate(certificate);
    if (!c) throw ConfigError("unknown certificate '" + certificate + "'");
    return *c;
}

PresetOptions RunConfig::preset_options() const {
    PresetOptions o;
    o.grid_n = grid_n;
    o.dt = dt;
    o.tau = tau;
    o.t_final = t_final;
    o.seed = seed;
    o.psi_amplitude = psi_amplitude;
    o.logistic = {nu, a, b, c};
    o.cubic_sign = sign_variant == "minus" ? -1 : 1;
    o.noise_gain = noise_gain;
    o.lambda2 = lambda2;
    o.clamp = clamp;
    return o;
}

std::pair<double, double> RunConfig::resolved_as_window() const {
    if (as_window) return *as_window;
    return {std::max(0.5 * t_final, t_final - 5.0), t_final};
}

double RunConfig::resolved_record_interval() const {
    return record_interval > 0.0 ? record_interval : t_final / 500.0;
}

RunConfig default_config(std::string_view preset) {
    RunConfig c;
    c.preset = std::string(preset);
    if (preset == "heat") {
        c.t_final = 1.0;
        c.psi_amplitude = 1.0;
    } else {
        c.t_final = 50.0;
        c.psi_amplitude = 0.1;
    }
    return c;
}

RunConfig load_config(const std::optional<std::filesystem::path>& path, const json& overrides) {
    json file = json::object();
    if (path) {
        std::ifstream in(*path);
        if (!in) throw ConfigError("cannot open configuration file " + path->string());
        try {
            file = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError("configuration file " + path->string() + " is not valid JSON: " + e.what());
        }
    }
    if (!overrides.is_null() && !overrides.is_object()) throw ConfigError("overrides must be a JSON object");

    std::string preset = "heat";
    if (file.is_object() && file.contains("preset")) read(file, "preset", preset);
    if (overrides.is_object() && overrides.contains("preset")) read(overrides, "preset", preset);
    if (preset == "custom") {
        throw ConfigError("preset 'custom' takes user-supplied coefficient functions; use the library API");
    }
    if (!parse_preset(preset)) throw ConfigError("unknown preset '" + preset + "'");

    RunConfig c = default_config(preset);
    merge_into(file, c);
    if (overrides.is_object()) merge_into(overrides, c);
    validate(c);
    return c;
}

json to_json(const RunConfig& c) {
    json j;
    j["preset"] = c.preset;
    j["grid_n"] = c.grid_n;
    j["dt"] = c.dt;
    j["tau"] = c.tau;
    j["t_final"] = c.t_final;
    j["n_paths"] = c.n_paths;
    j["seed"] = c.seed;
    j["nu"] = c.nu;
    j["a"] = c.a;
    j["b"] = c.b;
    j["c"] = c.c;
    j["sign_variant"] = c.sign_variant;
    j["noise_gain"] = c.noise_gain;
    j["lambda2"] = c.lambda2 ? json(*c.lambda2) : json(nullptr);
    j["certificate"] = c.certificate;
    j["psi_amplitude"] = c.psi_amplitude;
    j["analyses"] = {{"check_conditions", c.analyses.check_conditions},
                     {"decay_solver", c.analyses.decay_solver},
                     {"ms_ensemble", c.analyses.ms_ensemble},
                     {"as_stats", c.analyses.as_stats},
                     {"explosion_scan", c.analyses.explosion_scan}};
    j["output_dir"] = c.output_dir;
    j["allow_unstable"] = c.allow_unstable;
    j["clamp"] = c.clamp;
    j["condition_samples"] = c.condition_samples;
    j["record_interval"] = c.resolved_record_interval();
    j["as_threshold"] = c.as_threshold;
    const auto w = c.resolved_as_window();
    j["as_window"] = {w.first, w.second};
    j["as_min_fraction"] = c.as_min_fraction;
    j["u_bound"] = c.u_bound;
    j["explosion_k"] = c.explosion_k;
    j["explosion_horizon"] = c.explosion_horizon;
    j["explosion_budget"] = c.explosion_budget;
    j["workers"] = c.workers;
    j["dt_requested"] = c.dt_requested ? json(*c.dt_requested) : json(nullptr);
    return j;
}

}  // namespace sedes
