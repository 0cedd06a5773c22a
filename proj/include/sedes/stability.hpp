#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sedes/integrator.hpp"
#include "sedes/lyapunov.hpp"

namespace sedes {

// ---------------------------------------------------------------------------
// Decay-rate prediction
// ---------------------------------------------------------------------------

/// Unique root eps1 in (0, alpha1] of eps + alpha2 * exp(eps * tau) = alpha1.
/// Bisection to 1e-13 relative width followed by one Newton step.
double solve_eps1(double alpha1, double alpha2, double tau);

/// eps2 = ln(alpha3 / alpha4) / tau, the root of alpha3 = alpha4 * exp(eps2 * tau).
double solve_eps2(double alpha3, double alpha4, double tau);

struct DecaySolution {
    double eps1;
    double eps2;
    double eps;
    /// +infinity when gamma == 0.
    double mu;
    /// -min(mu, eps): predicted upper bound on limsup (1/t) log E|x(t)|_H^2.
    double bound;
    double residual1;
    double residual2;
};

DecaySolution solve_decay(double alpha1, double alpha2, double alpha3, double alpha4, double mu, double tau);
DecaySolution solve_decay(const ExponentialCertificate& cert, double tau);

// ---------------------------------------------------------------------------
// Monte Carlo ensembles
// ---------------------------------------------------------------------------

struct EnsembleOptions {
    /// 0 picks std::thread::hardware_concurrency(). Results do not depend on it.
    unsigned workers = 0;
};

struct MsPoint {
    double t;
    double mean_h_norm_sq;
    double std_err;
    /// Paths that had not exploded by time t.
    std::size_t n_alive;
};

/// Estimate of E|x(t)|_H^2. Paths that explode at any time are excluded from
/// every mean and listed in exploded_paths.
struct MsCurve {
    std::vector<MsPoint> points;
    std::size_t n_paths = 0;
    std::vector<std::uint64_t> exploded_paths;

    double explosion_fraction() const noexcept {
        return n_paths == 0 ? 0.0 : static_cast<double>(exploded_paths.size()) / static_cast<double>(n_paths);
    }
};

/// Record times every `interval` (rounded to whole steps) from 0 to t_final.
std::vector<double> uniform_record_times(const ProblemSpec& p, double interval);

/// Paths use path_id = 0..n_paths-1. Throws NumericalError("ensemble collapse")
/// if every path explodes.
MsCurve ms_ensemble(const ProblemSpec& p, std::size_t n_paths, const std::vector<double>& record_times,
                    const EnsembleOptions& options = {});

struct RateFit {
    double rate;
    double half_width;
    double t_lo;
    double t_hi;
    std::size_t n_points;
};

/// Least-squares slope of log(mean) against t over [t_lo, t_hi], using only
/// points above 10 * machine epsilon * initial mean. half_width is two
/// regression standard errors. Throws InvalidArgument("window too small") with
/// fewer than 4 usable points.
RateFit fit_decay_rate(const MsCurve& curve, std::optional<std::pair<double, double>> window = std::nullopt);

/// Tries the default window [t_final/2, t_final]; if the mean has already
/// dropped below the floor there, refits on [t_last/2, t_last] with t_last the
/// last time above the floor.
RateFit fit_decay_rate_adaptive(const MsCurve& curve);

struct AsStats {
    /// Fraction of paths with sup_{t in window} |x(t)|_H < threshold.
    double fraction_converged;
    /// Fraction of paths with sup_t U(t, x(t)) = sup_t |x(t)|_H^2 below u_bound.
    double fraction_bounded;
    double threshold;
    double u_bound;
    std::pair<double, double> window;
    std::size_t n_paths;
    std::size_t n_exploded;
};

/// Finite-horizon proxies for almost sure convergence and for
/// limsup U(t, x(t)) < infinity. Exploded paths count against both fractions.
AsStats as_stability_stats(const ProblemSpec& p, std::size_t n_paths, double threshold,
                           std::pair<double, double> window, const EnsembleOptions& options = {},
                           double u_bound = 1e6);

struct ExplosionRow {
    double k;
    std::size_t n_hit;
    double probability;
    double std_err;
};

struct ExplosionTable {
    double horizon;
    std::size_t n_paths;
    std::vector<ExplosionRow> rows;
    /// Every consecutive pair satisfies p_{i+1} <= p_i + 2 * sqrt(se_i^2 + se_{i+1}^2).
    bool nonincreasing;
};

/// Empirical P(sigma_k <= horizon) for the ball-truncated problem at each k.
ExplosionTable explosion_scan(const ProblemSpec& p, const std::vector<double>& k_values, std::size_t n_paths,
                              double horizon, const EnsembleOptions& options = {});

struct StabilityReport {
    MsCurve ms_curve;
    std::optional<RateFit> fitted_rate;
    std::optional<DecaySolution> decay;
    std::optional<AsStats> as_stats;
    std::optional<ExplosionTable> explosion;
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
    std::string scheme;
};

/// Runs `fn(path_id)` for path_id in [0, n) on a pool of worker threads.
/// Exceptions from workers are rethrown on the calling thread.
void for_each_path(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn);

}  // namespace sedes
