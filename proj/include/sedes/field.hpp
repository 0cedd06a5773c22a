#pragma once

#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sedes {

/// Raised when a field holds NaN/Inf or an operator produces a non-finite value.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised on malformed inputs: bad sizes, violated constructor invariants.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Uniform interior grid on (0, pi) with homogeneous Dirichlet boundary.
///
/// Interior points are x_j = j*dx for j = 1..n, dx = pi/(n+1). Boundary
/// values at x_0 = 0 and x_{n+1} = pi are implicitly zero.
class Grid {
public:
    explicit Grid(std::size_t n_interior);

    std::size_t size() const noexcept { return n_; }
    double dx() const noexcept { return dx_; }
    /// x_j for the zero-based interior index i (so x = (i+1)*dx).
    double point(std::size_t i) const noexcept { return static_cast<double>(i + 1) * dx_; }
    std::vector<double> points() const;

    /// Smallest eigenvalue of the discrete Dirichlet Laplacian, (4/dx^2) sin^2(dx/2).
    /// This is the square of the discrete embedding constant between the V- and H-norms.
    double lambda_min() const noexcept { return lambda_min_; }

    friend bool operator==(const Grid& a, const Grid& b) noexcept { return a.n_ == b.n_; }

private:
    std::size_t n_;
    double dx_;
    double lambda_min_;
};

/// Interior values of a grid function. Boundary values are zero and not stored.
class Field {
public:
    explicit Field(const Grid& grid);
    Field(const Grid& grid, std::vector<double> values);

    /// Samples fn at every interior point.
    static Field from_function(const Grid& grid, const std::function<double(double)>& fn);

    const Grid& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return values_.size(); }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    double operator[](std::size_t i) const noexcept { return values_[i]; }
    double& operator[](std::size_t i) noexcept { return values_[i]; }

    bool all_finite() const noexcept;
    /// Throws NumericalError("invalid field") if any entry is NaN or Inf.
    void require_finite() const;

    Field& operator+=(const Field& other);
    Field& operator-=(const Field& other);
    Field& operator*=(double c) noexcept;

    friend Field operator+(Field a, const Field& b) { return a += b; }
    friend Field operator-(Field a, const Field& b) { return a -= b; }
    friend Field operator*(double c, Field a) noexcept { return a *= c; }

private:
    Grid grid_;
    std::vector<double> values_;
};

/// H inner product: dx * sum_j f_j g_j (rectangle rule, zero boundary contribution).
double h_inner(const Field& f, const Field& g);

/// sqrt(dx * sum f_j^2).
double h_norm(const Field& f);

/// sqrt(dx * sum_{j=0..n} ((v_{j+1} - v_j)/dx)^2) with v_0 = v_{n+1} = 0.
double v_norm(const Field& f);

/// dx * sum f_j^4, i.e. the squared H-norm of the pointwise square f^2.
double quartic_integral(const Field& f);

/// Coefficient a(t,x) of the divergence-form operator d/dx(a(t,x) d/dx).
class OperatorCoeff {
public:
    enum class Kind { constant_laplacian, variable_divergence };
    using CoeffFn = std::function<double(double t, double x)>;

    /// a == 1 everywhere; the classical three-point Laplacian.
    static OperatorCoeff laplacian();

    /// Variable coefficient with declared bounds 0 < nu <= a(t,x) <= alpha_upper.
    /// The bounds are checked on a 64x64 (t,x) lattice over [0, horizon] x [0, pi].
    static OperatorCoeff divergence(CoeffFn a, double nu, double alpha_upper, double horizon);

    Kind kind() const noexcept { return kind_; }
    double nu() const noexcept { return nu_; }
    double alpha_upper() const noexcept { return alpha_upper_; }
    bool time_dependent() const noexcept { return kind_ == Kind::variable_divergence; }

    double operator()(double t, double x) const { return a_ ? a_(t, x) : 1.0; }

    /// Midpoint coefficients a_{j+1/2} = a(t, (x_j + x_{j+1})/2), j = 0..n (n+1 entries).
    void midpoints(const Grid& grid, double t, std::span<double> out) const;

private:
    OperatorCoeff(Kind kind, CoeffFn a, double nu, double alpha_upper);

    Kind kind_;
    CoeffFn a_;
    double nu_;
    double alpha_upper_;
};

/// Conservative second-order stencil:
/// (A f)_j = [a_{j+1/2}(v_{j+1} - v_j) - a_{j-1/2}(v_j - v_{j-1})] / dx^2.
Field apply_operator(const OperatorCoeff& coeff, double t, const Field& f);

/// -<A f, f>_H evaluated by summation by parts: dx * sum a_{j+1/2} ((v_{j+1}-v_j)/dx)^2.
/// For the Laplacian this equals v_norm(f)^2.
double energy_pairing(const OperatorCoeff& coeff, double t, const Field& f);

/// Solves (I - dt*A(t)) x = rhs with the Thomas algorithm. The matrix is
/// symmetric and strictly diagonally dominant for a > 0, so no pivoting is needed.
/// For time-independent coefficients the forward sweep is factored once.
class ImplicitEulerSolver {
public:
    ImplicitEulerSolver(OperatorCoeff coeff, const Grid& grid, double dt);

    /// Overwrites rhs with the solution at coefficient time t.
    void solve(double t, std::span<double> rhs);

private:
    void factor(double t);

    OperatorCoeff coeff_;
    Grid grid_;
    double dt_;
    bool factored_ = false;
    std::vector<double> mid_;
    std::vector<double> lower_;   // sub-diagonal
    std::vector<double> cprime_;  // modified super-diagonal
    std::vector<double> denom_;   // pivots
};

}  // namespace sedes
