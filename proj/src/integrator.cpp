#include "sedes/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace sedes {

Coefficient Coefficient::pointwise(PointwiseFn fn) {
    if (!fn) throw InvalidArgument("pointwise coefficient needs a function");
    Coefficient c;
    c.kind_ = Kind::pointwise;
    c.pointwise_ = std::move(fn);
    return c;
}

Coefficient Coefficient::field_level(FieldFn fn) {
    if (!fn) throw InvalidArgument("field-level coefficient needs a function");
    Coefficient c;
    c.kind_ = Kind::field_level;
    c.field_ = std::move(fn);
    return c;
}

void Coefficient::evaluate(double t, const Field& x, const Field& y, std::span<double> out) const {
    switch (kind_) {
        case Kind::zero:
            std::fill(out.begin(), out.end(), 0.0);
            return;
        case Kind::pointwise:
            for (std::size_t j = 0; j < out.size(); ++j) out[j] = pointwise_(t, x[j], y[j]);
            return;
        case Kind::field_level:
            field_(t, x, y, out);
            return;
    }
}

Field Coefficient::operator()(double t, const Field& x, const Field& y) const {
    Field out(x.grid());
    evaluate(t, x, y, out.values());
    return out;
}

namespace {

constexpr int kValidationSamples = 64;

std::size_t delay_multiple(double tau, double dt) {
    // Tolerate representation error when tau/dt is already an integer.
    const double ratio = tau / dt;
    const double nearest = std::round(ratio);
    if (nearest >= 1.0 && std::abs(ratio - nearest) <= 1e-9 * nearest) return static_cast<std::size_t>(nearest);
    return static_cast<std::size_t>(std::ceil(ratio));
}

}  // namespace

ProblemSpec::ProblemSpec(ProblemParams params) : p_(std::move(params)), dt_requested_(p_.dt) {
    if (!(p_.tau > 0.0) || !std::isfinite(p_.tau)) throw InvalidArgument("delay tau must be positive");
    if (!(p_.dt > 0.0) || !std::isfinite(p_.dt)) throw InvalidArgument("nonpositive step");
    if (!(p_.t_final > 0.0) || !std::isfinite(p_.t_final)) throw InvalidArgument("t_final must be positive");
    if (!p_.psi) throw InvalidArgument("initial history psi is required");
    if (!(p_.explosion.h_norm_limit > 0.0)) throw InvalidArgument("explosion limit must be positive");

    delay_steps_ = delay_multiple(p_.tau, p_.dt);
    p_.dt = p_.tau / static_cast<double>(delay_steps_);
    const double steps = p_.t_final / p_.dt;
    const double rounded = std::round(steps);
    n_steps_ = static_cast<std::size_t>(std::abs(steps - rounded) <= 1e-9 * std::max(1.0, rounded) ? rounded
                                                                                                   : std::ceil(steps));

    // Boundedness of f(t,0,0) and g(t,0,0) over the horizon.
    const Field zero(p_.grid);
    std::vector<double> buf(p_.grid.size());
    for (int i = 0; i < kValidationSamples; ++i) {
        const double t = p_.t_final * i / (kValidationSamples - 1);
        for (const Coefficient* c : {&p_.drift, &p_.diffusion}) {
            c->evaluate(t, zero, zero, buf);
            for (double v : buf) {
                if (!std::isfinite(v) || std::abs(v) > p_.explosion.h_norm_limit) {
                    throw InvalidArgument("coefficient at the zero state is unbounded at t = " + std::to_string(t));
                }
            }
        }
    }

    // psi: zero boundary values, finite, continuous in theta.
    auto sample_jump = [&](int lattice) {
        double jump = 0.0;
        std::vector<double> prev;
        for (int i = 0; i <= lattice; ++i) {
            const double theta = -p_.tau + p_.tau * i / lattice;
            std::vector<double> cur(p_.grid.size());
            for (std::size_t j = 0; j < cur.size(); ++j) {
                cur[j] = p_.psi(theta, p_.grid.point(j));
                if (!std::isfinite(cur[j])) throw InvalidArgument("initial history is not finite");
            }
            for (double x_edge : {0.0, std::numbers::pi}) {
                const double edge = p_.psi(theta, x_edge);
                if (std::abs(edge) > 1e-10) {
                    throw InvalidArgument("initial history must vanish at x = 0 and x = pi");
                }
            }
            const Field f(p_.grid, cur);
            psi_bound_ = std::max(psi_bound_, h_norm(f));
            if (!prev.empty()) {
                for (std::size_t j = 0; j < cur.size(); ++j) jump = std::max(jump, std::abs(cur[j] - prev[j]));
            }
            prev = std::move(cur);
        }
        return jump;
    };
    const double coarse = sample_jump(kValidationSamples);
    const double fine = sample_jump(16 * kValidationSamples);
    if (fine > 0.5 * coarse + 1e-9 * (1.0 + psi_bound_)) {
        throw InvalidArgument("initial history is not continuous in theta");
    }
}

Field ProblemSpec::history_field(std::size_t lag) const {
    const double theta = -static_cast<double>(lag) * p_.dt;
    Field f(p_.grid);
    for (std::size_t j = 0; j < f.size(); ++j) f[j] = p_.psi(theta, p_.grid.point(j));
    return f;
}

namespace {

ProblemParams rebuild(const ProblemParams& p, double dt_requested) {
    ProblemParams q = p;
    q.dt = dt_requested;
    return q;
}

}  // namespace

ProblemSpec ProblemSpec::with_coefficients(Coefficient drift, Coefficient diffusion) const {
    ProblemParams q = rebuild(p_, dt_requested_);
    q.drift = std::move(drift);
    q.diffusion = std::move(diffusion);
    return ProblemSpec(std::move(q));
}

ProblemSpec ProblemSpec::with_noise(NoiseModel noise) const {
    ProblemParams q = rebuild(p_, dt_requested_);
    q.noise = std::move(noise);
    return ProblemSpec(std::move(q));
}

ProblemSpec ProblemSpec::with_horizon(double t_final) const {
    ProblemParams q = rebuild(p_, dt_requested_);
    q.t_final = t_final;
    return ProblemSpec(std::move(q));
}

ProblemSpec ProblemSpec::with_history(InitialHistory psi) const {
    ProblemParams q = rebuild(p_, dt_requested_);
    q.psi = std::move(psi);
    return ProblemSpec(std::move(q));
}

ProblemSpec ProblemSpec::with_explosion(ExplosionPolicy policy) const {
    ProblemParams q = rebuild(p_, dt_requested_);
    q.explosion = policy;
    return ProblemSpec(std::move(q));
}

HistoryBuffer::HistoryBuffer(const ProblemSpec& p) {
    const std::size_t m = p.delay_steps();
    ring_.reserve(m + 1);
    // ring_[0] is the head (lag 0); ring_[(head + lag) % size] holds lag steps back.
    for (std::size_t lag = 0; lag <= m; ++lag) ring_.push_back(p.history_field(lag));
}

const Field& HistoryBuffer::lagged(std::size_t lag) const {
    if (lag > delay_steps()) throw InvalidArgument("lag exceeds the history window");
    return ring_[(head_ + lag) % ring_.size()];
}

void HistoryBuffer::push(const Field& next, double dt) {
    // The slot one step older than the delayed state is the one to recycle.
    head_ = (head_ + ring_.size() - 1) % ring_.size();
    ring_[head_] = next;
    head_time_ += dt;
}

ImexStepper::ImexStepper(const ProblemSpec& p)
    : p_(p), solver_(p.op(), p.grid(), p.dt()), drift_(p.grid().size()), diffusion_(p.grid().size()) {}

void ImexStepper::step(const HistoryBuffer& h, double t, const NoiseIncrement& dw, Field& out) {
    const Field& x = h.current();
    const Field& y = h.delayed();
    const double dt = p_.dt();
    p_.drift().evaluate(t, x, y, drift_);
    auto rhs = out.values();
    if (p_.diffusion().kind() == Coefficient::Kind::zero) {
        for (std::size_t j = 0; j < rhs.size(); ++j) rhs[j] = x[j] + dt * drift_[j];
    } else {
        p_.diffusion().evaluate(t, x, y, diffusion_);
        const double db = dw.mode_sum();
        for (std::size_t j = 0; j < rhs.size(); ++j) rhs[j] = x[j] + dt * drift_[j] + diffusion_[j] * db;
    }
    solver_.solve(t + dt, rhs);
}

Field imex_em_step(const ProblemSpec& p, const HistoryBuffer& h, double t, const NoiseIncrement& dw) {
    if (std::abs(dw.dt - p.dt()) > 1e-15 * p.dt()) throw InvalidArgument("increment dt does not match problem dt");
    ImexStepper stepper(p);
    Field out(p.grid());
    stepper.step(h, t, dw, out);
    return out;
}

std::string TrajectoryStatus::describe() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::completed:
            return "completed";
        case Kind::exploded:
            os << "exploded(" << time << ")";
            break;
        case Kind::clamped:
            os << "clamped(" << time << ")";
            break;
    }
    return os.str();
}

Trajectory simulate(const ProblemSpec& p, std::uint64_t path_id, const SimulateOptions& options) {
    const std::size_t n_steps = p.n_steps();
    const double dt = p.dt();
    const double limit = p.explosion().h_norm_limit;

    std::vector<std::size_t> snapshot_steps;
    for (double ts : options.snapshot_times) {
        const double k = std::round(ts / dt);
        if (k >= 0.0 && k <= static_cast<double>(n_steps)) snapshot_steps.push_back(static_cast<std::size_t>(k));
    }
    std::sort(snapshot_steps.begin(), snapshot_steps.end());
    snapshot_steps.erase(std::unique(snapshot_steps.begin(), snapshot_steps.end()), snapshot_steps.end());
    auto next_snapshot = snapshot_steps.begin();

    Trajectory traj;
    traj.times.reserve(n_steps + 1);
    traj.h_norms.reserve(n_steps + 1);
    traj.v_norms.reserve(n_steps + 1);

    HistoryBuffer history(p);
    auto record = [&](std::size_t n, const Field& x) {
        traj.times.push_back(static_cast<double>(n) * dt);
        traj.h_norms.push_back(h_norm(x));
        traj.v_norms.push_back(v_norm(x));
        if (next_snapshot != snapshot_steps.end() && *next_snapshot == n) {
            traj.snapshots.emplace_back(traj.times.back(), x);
            ++next_snapshot;
        }
    };
    record(0, history.current());

    const bool noisy = p.diffusion().kind() != Coefficient::Kind::zero;
    NoiseIncrement zero_increment{dt, std::vector<double>(p.noise().n_modes(), 0.0)};
    ImexStepper stepper(p);
    Field next(p.grid());
    for (std::size_t n = 0; n < n_steps; ++n) {
        const double t = static_cast<double>(n) * dt;
        if (noisy) {
            stepper.step(history, t, sample_increment(p.noise(), path_id, n, dt), next);
        } else {
            stepper.step(history, t, zero_increment, next);
        }
        const double t_next = static_cast<double>(n + 1) * dt;
        if (!next.all_finite()) {
            traj.status = {TrajectoryStatus::Kind::exploded, t_next};
            return traj;
        }
        const double norm = h_norm(next);
        if (norm > limit) {
            if (!p.explosion().clamp) {
                traj.status = {TrajectoryStatus::Kind::exploded, t_next};
                return traj;
            }
            next *= limit / norm;
            if (traj.status.kind == TrajectoryStatus::Kind::completed) {
                traj.status = {TrajectoryStatus::Kind::clamped, t_next};
            }
        }
        history.push(next, dt);
        record(n + 1, history.current());
    }
    return traj;
}

double truncation_factor(double h_norm_value, double k) {
    if (h_norm_value == 0.0) return 0.0;
    return std::min(h_norm_value, k) / h_norm_value;
}

Field project_to_ball(const Field& x, double k) {
    const double norm = h_norm(x);
    if (norm <= k) return x;
    Field out = x;
    out *= truncation_factor(norm, k);
    return out;
}

namespace {

Coefficient truncated(const Coefficient& inner, double k) {
    if (inner.kind() == Coefficient::Kind::zero) return inner;
    return Coefficient::field_level([inner, k](double t, const Field& x, const Field& y, std::span<double> out) {
        const double nx = h_norm(x);
        const double ny = h_norm(y);
        if (nx <= k && ny <= k) {
            inner.evaluate(t, x, y, out);
            return;
        }
        inner.evaluate(t, project_to_ball(x, k), project_to_ball(y, k), out);
    });
}

}  // namespace

ProblemSpec truncate_problem(const ProblemSpec& p, double k) {
    if (!(k > 0.0)) throw InvalidArgument("truncation radius must be positive");
    if (k < p.psi_bound()) throw InvalidArgument("truncation below initial data");
    return p.with_coefficients(truncated(p.drift(), k), truncated(p.diffusion(), k));
}

std::optional<double> stopping_time_sigma_k(const Trajectory& traj, double k) {
    for (std::size_t i = 0; i < traj.h_norms.size(); ++i) {
        if (traj.h_norms[i] >= k) return traj.times[i];
    }
    return std::nullopt;
}

}  // namespace sedes
