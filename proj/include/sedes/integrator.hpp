#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sedes/field.hpp"
#include "sedes/noise.hpp"

namespace sedes {

/// Drift f(t, x, y) or diffusion g(t, x, y), where x is the current state and
/// y the state one delay earlier. Pointwise coefficients act on (u, v) =
/// (x_j, y_j) at each grid point; field-level coefficients see the whole fields,
/// which is what the ball truncation f_k needs.
class Coefficient {
public:
    enum class Kind { zero, pointwise, field_level };
    using PointwiseFn = std::function<double(double t, double u, double v)>;
    using FieldFn = std::function<void(double t, const Field& x, const Field& y, std::span<double> out)>;

    Coefficient() = default;
    static Coefficient zero() { return {}; }
    static Coefficient pointwise(PointwiseFn fn);
    static Coefficient field_level(FieldFn fn);

    Kind kind() const noexcept { return kind_; }

    void evaluate(double t, const Field& x, const Field& y, std::span<double> out) const;
    Field operator()(double t, const Field& x, const Field& y) const;

private:
    Kind kind_ = Kind::zero;
    PointwiseFn pointwise_;
    FieldFn field_;
};

/// psi(theta, x) for theta in [-tau, 0].
using InitialHistory = std::function<double(double theta, double x)>;

struct ExplosionPolicy {
    /// States with |x|_H above this are treated as blow-up.
    double h_norm_limit = 1e12;
    /// Rescale to the limit and continue instead of stopping.
    bool clamp = false;
};

/// Inputs for ProblemSpec. dt may be adjusted downward so that tau is an
/// integer multiple of it.
struct ProblemParams {
    Grid grid{63};
    OperatorCoeff op = OperatorCoeff::laplacian();
    Coefficient drift;
    Coefficient diffusion;
    double tau = 1.0;
    NoiseModel noise = NoiseModel::scalar(0);
    InitialHistory psi;
    double t_final = 1.0;
    double dt = 1e-3;
    ExplosionPolicy explosion;
};

/// Validated discrete instance of
///   dx = [A(t,x) + f(t,x(t),x(t-tau))] dt + g(t,x(t),x(t-tau)) dB(t),  x(theta) = psi(theta).
class ProblemSpec {
public:
    explicit ProblemSpec(ProblemParams params);

    const Grid& grid() const noexcept { return p_.grid; }
    const OperatorCoeff& op() const noexcept { return p_.op; }
    const Coefficient& drift() const noexcept { return p_.drift; }
    const Coefficient& diffusion() const noexcept { return p_.diffusion; }
    const NoiseModel& noise() const noexcept { return p_.noise; }
    const InitialHistory& psi() const noexcept { return p_.psi; }
    const ExplosionPolicy& explosion() const noexcept { return p_.explosion; }
    double tau() const noexcept { return p_.tau; }
    double t_final() const noexcept { return p_.t_final; }
    /// Step actually used (tau / delay_steps).
    double dt() const noexcept { return p_.dt; }
    double dt_requested() const noexcept { return dt_requested_; }
    bool dt_adjusted() const noexcept { return p_.dt != dt_requested_; }
    std::size_t delay_steps() const noexcept { return delay_steps_; }
    std::size_t n_steps() const noexcept { return n_steps_; }
    /// max over the sampled history window of |psi(theta)|_H.
    double psi_bound() const noexcept { return psi_bound_; }

    /// psi sampled on the grid at theta = -lag*dt.
    Field history_field(std::size_t lag) const;

    ProblemSpec with_coefficients(Coefficient drift, Coefficient diffusion) const;
    ProblemSpec with_noise(NoiseModel noise) const;
    ProblemSpec with_horizon(double t_final) const;
    ProblemSpec with_history(InitialHistory psi) const;
    ProblemSpec with_explosion(ExplosionPolicy policy) const;

    const ProblemParams& params() const noexcept { return p_; }

private:
    ProblemParams p_;
    double dt_requested_;
    std::size_t delay_steps_;
    std::size_t n_steps_;
    double psi_bound_ = 0.0;
};

/// The last delay_steps+1 states, x(t_n - j*dt) for j = 0..m.
class HistoryBuffer {
public:
    /// Filled from psi at theta = -m*dt, ..., 0; head_time = 0.
    explicit HistoryBuffer(const ProblemSpec& p);

    std::size_t delay_steps() const noexcept { return ring_.size() - 1; }
    double head_time() const noexcept { return head_time_; }

    const Field& current() const noexcept { return ring_[head_]; }
    /// Exactly the state stored delay_steps pushes ago.
    const Field& delayed() const noexcept { return ring_[(head_ + ring_.size() - 1) % ring_.size()]; }
    /// State `lag` steps before the head, lag <= delay_steps.
    const Field& lagged(std::size_t lag) const;

    /// Appends the state at head_time + dt, discarding the oldest one.
    void push(const Field& next, double dt);

private:
    std::vector<Field> ring_;
    std::size_t head_ = 0;
    double head_time_ = 0.0;
};

/// One IMEX Euler-Maruyama step:
///   (I - dt A(t_{n+1})) x_{n+1} = x_n + dt f(t_n, x_n, x_{n-m}) + g(t_n, x_n, x_{n-m}) * sum_k dW_k.
/// Keeps the tridiagonal factorization between steps.
class ImexStepper {
public:
    explicit ImexStepper(const ProblemSpec& p);

    /// Writes x_{n+1} into out; t is t_n.
    void step(const HistoryBuffer& h, double t, const NoiseIncrement& dw, Field& out);

private:
    ProblemSpec p_;
    ImplicitEulerSolver solver_;
    std::vector<double> drift_;
    std::vector<double> diffusion_;
};

/// Single step convenience wrapper around ImexStepper. Throws if dw.dt != p.dt().
Field imex_em_step(const ProblemSpec& p, const HistoryBuffer& h, double t, const NoiseIncrement& dw);

struct TrajectoryStatus {
    enum class Kind { completed, exploded, clamped };
    Kind kind = Kind::completed;
    /// Time of the first bad (exploded) or rescaled (clamped) step.
    double time = 0.0;

    std::string describe() const;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<double> h_norms;
    std::vector<double> v_norms;
    std::vector<std::pair<double, Field>> snapshots;
    TrajectoryStatus status;

    bool exploded() const noexcept { return status.kind == TrajectoryStatus::Kind::exploded; }
};

struct SimulateOptions {
    /// Field snapshots are stored at the steps nearest to these times.
    std::vector<double> snapshot_times;
};

/// Runs path `path_id` from psi to t_final. Deterministic in (noise seed, path_id).
Trajectory simulate(const ProblemSpec& p, std::uint64_t path_id, const SimulateOptions& options = {});

/// min(|x|_H, k)/|x|_H, and 0 when x = 0.
double truncation_factor(double h_norm_value, double k);

/// Radial projection of x onto the closed H-ball of radius k. Fields inside
/// the ball are returned unchanged.
Field project_to_ball(const Field& x, double k);

/// Problem whose drift and diffusion first project both the current and the
/// delayed state onto the H-ball of radius k. Requires k >= psi_bound().
ProblemSpec truncate_problem(const ProblemSpec& p, double k);

/// First recorded time with |x|_H >= k; nullopt stands for +infinity.
std::optional<double> stopping_time_sigma_k(const Trajectory& traj, double k);

}  // namespace sedes
