#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sedes/presets.hpp"

namespace sedes {

/// Bad configuration: unknown keys, wrong types, or violated preset hypotheses.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum ExitCode : int {
    kExitPass = 0,
    kExitCheckFailure = 2,
    kExitNumericalFailure = 3,
    kExitConfigError = 4,
};

struct AnalysisToggles {
    bool check_conditions = true;
    bool decay_solver = true;
    bool ms_ensemble = true;
    bool as_stats = true;
    bool explosion_scan = true;
};

/// Fully resolved run configuration. JSON keys match the member names.
struct RunConfig {
    std::string preset = "heat";
    std::size_t grid_n = 63;
    double dt = 1e-3;
    double tau = 1.0;
    double t_final = 1.0;
    std::size_t n_paths = 200;
    std::uint64_t seed = 0;

    // logistic (eq24) parameters
    double nu = 2.0;
    double a = 0.5;
    double b = 1.0;
    double c = 1.0;
    /// cubic (eq16) drift sign: "plus" or "minus".
    std::string sign_variant = "plus";
    /// Extra multiplier on the eq6 diffusion.
    double noise_gain = 1.0;
    /// Replaces lambda2 in the eq16 certificate.
    std::optional<double> lambda2;
    std::string certificate = "discrete";
    double psi_amplitude = 0.1;

    AnalysisToggles analyses;
    std::string output_dir = "sedes_out";
    bool allow_unstable = false;
    bool clamp = false;

    std::size_t condition_samples = 10000;
    /// Spacing of ms_curve rows; 0 means t_final / 500.
    double record_interval = 0.0;
    double as_threshold = 1e-2;
    /// Empty means [t_final - 5, t_final].
    std::optional<std::pair<double, double>> as_window;
    double as_min_fraction = 0.99;
    double u_bound = 1e6;
    std::vector<double> explosion_k = {2.0, 4.0, 8.0, 16.0};
    double explosion_horizon = 5.0;
    double explosion_budget = 0.01;
    unsigned workers = 0;

    /// Set when dt was reduced to make tau an integer multiple of it.
    std::optional<double> dt_requested;

    Preset preset_kind() const;
    CertificateFlavor certificate_kind() const;
    PresetOptions preset_options() const;
    std::pair<double, double> resolved_as_window() const;
    double resolved_record_interval() const;
};

/// Preset-dependent defaults (t_final and psi amplitude differ for heat).
RunConfig default_config(std::string_view preset);

/// Merges defaults <- file <- overrides, then validates and normalizes dt.
/// `overrides` uses the same keys as the file. The preset is read first (from
/// overrides, then the file) so preset defaults apply.
RunConfig load_config(const std::optional<std::filesystem::path>& path, const nlohmann::json& overrides);

nlohmann::json to_json(const RunConfig& config);

}  // namespace sedes
