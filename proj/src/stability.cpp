#include "sedes/stability.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace sedes {

double solve_eps1(double alpha1, double alpha2, double tau) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw HypothesisError("delay tau must be positive");
    if (!(alpha2 >= 0.0)) throw HypothesisError("hypothesis α₂≥0 violated");
    if (!(alpha1 > alpha2)) throw HypothesisError("hypothesis α₁>α₂ violated");
    if (alpha2 == 0.0) return alpha1;

    auto h = [&](double e) { return e + alpha2 * std::exp(e * tau) - alpha1; };
    // h is strictly increasing with h(0) = alpha2 - alpha1 < 0 <= h(alpha1).
    double lo = 0.0;
    double hi = alpha1;
    while (hi - lo > 1e-13 * hi) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (h(mid) < 0.0 ? lo : hi) = mid;
    }
    double e = 0.5 * (lo + hi);
    const double slope = 1.0 + alpha2 * tau * std::exp(e * tau);
    const double polished = e - h(e) / slope;
    if (polished >= lo && polished <= hi && std::abs(h(polished)) <= std::abs(h(e))) e = polished;
    return e;
}

double solve_eps2(double alpha3, double alpha4, double tau) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw HypothesisError("delay tau must be positive");
    if (!(alpha4 > 0.0)) throw HypothesisError("hypothesis α₄>0 violated");
    if (!(alpha3 > alpha4)) throw HypothesisError("hypothesis α₃>α₄ violated");
    return std::log(alpha3 / alpha4) / tau;
}

DecaySolution solve_decay(double alpha1, double alpha2, double alpha3, double alpha4, double mu, double tau) {
    if (!(mu > 0.0)) throw HypothesisError("hypothesis μ>0 violated");
    DecaySolution s{};
    s.eps1 = solve_eps1(alpha1, alpha2, tau);
    s.eps2 = solve_eps2(alpha3, alpha4, tau);
    s.eps = std::min(s.eps1, s.eps2);
    s.mu = mu;
    s.bound = -std::min(mu, s.eps);
    s.residual1 = std::abs(alpha1 - s.eps1 - alpha2 * std::exp(s.eps1 * tau));
    s.residual2 = std::abs(alpha3 - alpha4 * std::exp(s.eps2 * tau));
    return s;
}

DecaySolution solve_decay(const ExponentialCertificate& cert, double tau) {
    return solve_decay(cert.alpha1, cert.alpha2, cert.alpha3, cert.alpha4, cert.mu, tau);
}

void for_each_path(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next = n;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

std::vector<double> uniform_record_times(const ProblemSpec& p, double interval) {
    if (!(interval > 0.0)) throw InvalidArgument("record interval must be positive");
    const std::size_t stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(interval / p.dt())));
    std::vector<double> times;
    for (std::size_t n = 0; n <= p.n_steps(); n += stride) times.push_back(static_cast<double>(n) * p.dt());
    if (p.n_steps() % stride != 0) times.push_back(static_cast<double>(p.n_steps()) * p.dt());
    return times;
}

namespace {

std::vector<std::size_t> record_steps(const ProblemSpec& p, const std::vector<double>& record_times) {
    std::vector<std::size_t> steps;
    steps.reserve(record_times.size());
    for (double t : record_times) {
        const double k = std::round(t / p.dt());
        if (k < 0.0 || k > static_cast<double>(p.n_steps())) {
            throw InvalidArgument("record time " + std::to_string(t) + " outside [0, t_final]");
        }
        steps.push_back(static_cast<std::size_t>(k));
    }
    return steps;
}

}  // namespace

MsCurve ms_ensemble(const ProblemSpec& p, std::size_t n_paths, const std::vector<double>& record_times,
                    const EnsembleOptions& options) {
    if (n_paths < 2) throw InvalidArgument("ms_ensemble needs at least 2 paths");
    const auto steps = record_steps(p, record_times);
    const std::size_t n_rec = steps.size();

    // Per-path samples, reduced afterwards in path order so the result does
    // not depend on scheduling.
    std::vector<std::vector<double>> samples(n_paths);
    std::vector<std::size_t> reached(n_paths, 0);
    std::vector<char> exploded(n_paths, 0);
    for_each_path(n_paths, options.workers, [&](std::size_t path) {
        const Trajectory traj = simulate(p, path);
        std::vector<double> v(n_rec, 0.0);
        std::size_t count = 0;
        for (std::size_t r = 0; r < n_rec; ++r) {
            if (steps[r] < traj.h_norms.size()) {
                const double h = traj.h_norms[steps[r]];
                v[r] = h * h;
                ++count;
            }
        }
        samples[path] = std::move(v);
        exploded[path] = traj.exploded() ? 1 : 0;
        reached[path] = traj.h_norms.size();
    });

    MsCurve curve;
    curve.n_paths = n_paths;
    for (std::size_t i = 0; i < n_paths; ++i) {
        if (exploded[i]) curve.exploded_paths.push_back(i);
    }
    const std::size_t n_good = n_paths - curve.exploded_paths.size();
    if (n_good == 0) throw NumericalError("ensemble collapse");

    curve.points.reserve(n_rec);
    for (std::size_t r = 0; r < n_rec; ++r) {
        double sum = 0.0;
        std::size_t alive = 0;
        for (std::size_t i = 0; i < n_paths; ++i) {
            if (steps[r] < reached[i]) ++alive;
            if (!exploded[i]) sum += samples[i][r];
        }
        const double mean = sum / static_cast<double>(n_good);
        double ss = 0.0;
        for (std::size_t i = 0; i < n_paths; ++i) {
            if (exploded[i]) continue;
            const double d = samples[i][r] - mean;
            ss += d * d;
        }
        const double var = n_good > 1 ? ss / static_cast<double>(n_good - 1) : 0.0;
        curve.points.push_back(
            {static_cast<double>(steps[r]) * p.dt(), mean, std::sqrt(var / static_cast<double>(n_good)), alive});
    }
    return curve;
}

RateFit fit_decay_rate(const MsCurve& curve, std::optional<std::pair<double, double>> window) {
    if (curve.points.empty()) throw InvalidArgument("window too small");
    const double t_end = curve.points.back().t;
    const auto [lo, hi] = window.value_or(std::make_pair(0.5 * t_end, t_end));
    const double floor = 10.0 * std::numeric_limits<double>::epsilon() * curve.points.front().mean_h_norm_sq;

    std::vector<double> ts;
    std::vector<double> ys;
    for (const MsPoint& pt : curve.points) {
        if (pt.t < lo || pt.t > hi) continue;
        if (!(pt.mean_h_norm_sq > floor) || !(pt.mean_h_norm_sq > 0.0)) continue;
        ts.push_back(pt.t);
        ys.push_back(std::log(pt.mean_h_norm_sq));
    }
    const std::size_t n = ts.size();
    if (n < 4) throw InvalidArgument("window too small");

    double t_mean = 0.0;
    double y_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        t_mean += ts[i];
        y_mean += ys[i];
    }
    t_mean /= static_cast<double>(n);
    y_mean /= static_cast<double>(n);
    double stt = 0.0;
    double sty = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        stt += (ts[i] - t_mean) * (ts[i] - t_mean);
        sty += (ts[i] - t_mean) * (ys[i] - y_mean);
    }
    const double slope = sty / stt;
    const double intercept = y_mean - slope * t_mean;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ys[i] - (intercept + slope * ts[i]);
        sse += r * r;
    }
    const double se = std::sqrt(sse / static_cast<double>(n - 2) / stt);
    return {slope, 2.0 * se, ts.front(), ts.back(), n};
}

RateFit fit_decay_rate_adaptive(const MsCurve& curve) {
    try {
        return fit_decay_rate(curve);
    } catch (const InvalidArgument&) {
        if (curve.points.empty()) throw;
    }
    const double floor = 10.0 * std::numeric_limits<double>::epsilon() * curve.points.front().mean_h_norm_sq;
    double t_last = 0.0;
    for (const MsPoint& pt : curve.points) {
        if (pt.mean_h_norm_sq > floor) t_last = pt.t;
    }
    return fit_decay_rate(curve, std::make_pair(0.5 * t_last, t_last));
}

AsStats as_stability_stats(const ProblemSpec& p, std::size_t n_paths, double threshold,
                           std::pair<double, double> window, const EnsembleOptions& options, double u_bound) {
    if (!(window.first >= 0.0) || !(window.second >= window.first) || window.second > p.t_final() + 0.5 * p.dt()) {
        throw InvalidArgument("a.s. window must lie inside [0, t_final]");
    }
    std::vector<char> converged(n_paths, 0);
    std::vector<char> bounded(n_paths, 0);
    std::vector<char> exploded(n_paths, 0);
    for_each_path(n_paths, options.workers, [&](std::size_t path) {
        const Trajectory traj = simulate(p, path);
        if (traj.exploded()) {
            exploded[path] = 1;
            return;
        }
        double sup_window = 0.0;
        double sup_u = 0.0;
        for (std::size_t i = 0; i < traj.times.size(); ++i) {
            const double h = traj.h_norms[i];
            sup_u = std::max(sup_u, h * h);
            if (traj.times[i] >= window.first - 1e-12 && traj.times[i] <= window.second + 1e-12) {
                sup_window = std::max(sup_window, h);
            }
        }
        converged[path] = sup_window < threshold ? 1 : 0;
        bounded[path] = sup_u < u_bound ? 1 : 0;
    });
    AsStats s{};
    std::size_t n_conv = 0;
    std::size_t n_bound = 0;
    for (std::size_t i = 0; i < n_paths; ++i) {
        n_conv += converged[i];
        n_bound += bounded[i];
        s.n_exploded += exploded[i];
    }
    const double n = static_cast<double>(std::max<std::size_t>(n_paths, 1));
    s.fraction_converged = static_cast<double>(n_conv) / n;
    s.fraction_bounded = static_cast<double>(n_bound) / n;
    s.threshold = threshold;
    s.u_bound = u_bound;
    s.window = window;
    s.n_paths = n_paths;
    return s;
}

ExplosionTable explosion_scan(const ProblemSpec& p, const std::vector<double>& k_values, std::size_t n_paths,
                              double horizon, const EnsembleOptions& options) {
    if (n_paths == 0) throw InvalidArgument("explosion scan needs at least one path");
    for (std::size_t i = 1; i < k_values.size(); ++i) {
        if (!(k_values[i] > k_values[i - 1])) throw InvalidArgument("k values must be increasing");
    }
    const ProblemSpec base = p.with_horizon(horizon);
    ExplosionTable table{horizon, n_paths, {}, true};
    for (double k : k_values) {
        const ProblemSpec q = truncate_problem(base, k);
        std::vector<char> hit(n_paths, 0);
        for_each_path(n_paths, options.workers, [&](std::size_t path) {
            const Trajectory traj = simulate(q, path);
            const auto sigma = stopping_time_sigma_k(traj, k);
            hit[path] = (traj.exploded() || (sigma && *sigma <= horizon)) ? 1 : 0;
        });
        std::size_t n_hit = 0;
        for (char h : hit) n_hit += static_cast<std::size_t>(h);
        const double prob = static_cast<double>(n_hit) / static_cast<double>(n_paths);
        table.rows.push_back({k, n_hit, prob, std::sqrt(prob * (1.0 - prob) / static_cast<double>(n_paths))});
    }
    for (std::size_t i = 1; i < table.rows.size(); ++i) {
        const auto& a = table.rows[i - 1];
        const auto& b = table.rows[i];
        if (b.probability > a.probability + 2.0 * std::hypot(a.std_err, b.std_err)) table.nonincreasing = false;
    }
    return table;
}

}  // namespace sedes
