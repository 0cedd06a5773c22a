#include "sedes/field.hpp"

#include <cmath>
#include <numbers>

namespace sedes {

Grid::Grid(std::size_t n_interior) : n_(n_interior) {
    if (n_interior < 2) {
        throw InvalidArgument("grid needs at least 2 interior points");
    }
    dx_ = std::numbers::pi / static_cast<double>(n_ + 1);
    const double s = std::sin(0.5 * dx_);
    lambda_min_ = 4.0 * s * s / (dx_ * dx_);
}

std::vector<double> Grid::points() const {
    std::vector<double> xs(n_);
    for (std::size_t i = 0; i < n_; ++i) xs[i] = point(i);
    return xs;
}

Field::Field(const Grid& grid) : grid_(grid), values_(grid.size(), 0.0) {}

Field::Field(const Grid& grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
        throw InvalidArgument("field length " + std::to_string(values_.size()) +
                              " does not match grid size " + std::to_string(grid_.size()));
    }
}

Field Field::from_function(const Grid& grid, const std::function<double(double)>& fn) {
    Field f(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) f.values_[i] = fn(grid.point(i));
    return f;
}

bool Field::all_finite() const noexcept {
    for (double v : values_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Field::require_finite() const {
    if (!all_finite()) throw NumericalError("invalid field");
}

Field& Field::operator+=(const Field& other) {
    if (other.size() != size()) throw InvalidArgument("field size mismatch");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
}

Field& Field::operator-=(const Field& other) {
    if (other.size() != size()) throw InvalidArgument("field size mismatch");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
    return *this;
}

Field& Field::operator*=(double c) noexcept {
    for (double& v : values_) v *= c;
    return *this;
}

double h_inner(const Field& f, const Field& g) {
    if (f.size() != g.size()) throw InvalidArgument("field size mismatch");
    f.require_finite();
    g.require_finite();
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * g[i];
    return f.grid().dx() * s;
}

double h_norm(const Field& f) {
    f.require_finite();
    double s = 0.0;
    for (double v : f.values()) s += v * v;
    return std::sqrt(f.grid().dx() * s);
}

double v_norm(const Field& f) {
    f.require_finite();
    const auto v = f.values();
    const double dx = f.grid().dx();
    double s = 0.0;
    double prev = 0.0;
    for (double cur : v) {
        const double d = cur - prev;
        s += d * d;
        prev = cur;
    }
    s += prev * prev;
    return std::sqrt(s / dx);
}

double quartic_integral(const Field& f) {
    f.require_finite();
    double s = 0.0;
    for (double v : f.values()) s += (v * v) * (v * v);
    return f.grid().dx() * s;
}

OperatorCoeff::OperatorCoeff(Kind kind, CoeffFn a, double nu, double alpha_upper)
    : kind_(kind), a_(std::move(a)), nu_(nu), alpha_upper_(alpha_upper) {}

OperatorCoeff OperatorCoeff::laplacian() {
    return OperatorCoeff(Kind::constant_laplacian, nullptr, 1.0, 1.0);
}

OperatorCoeff OperatorCoeff::divergence(CoeffFn a, double nu, double alpha_upper, double horizon) {
    if (!a) throw InvalidArgument("divergence operator needs a coefficient function");
    if (!(nu > 0.0) || !(alpha_upper >= nu)) {
        throw InvalidArgument("coefficient bounds must satisfy 0 < nu <= alpha");
    }
    if (!(horizon >= 0.0)) throw InvalidArgument("validation horizon must be nonnegative");
    constexpr int lattice = 64;
    for (int i = 0; i < lattice; ++i) {
        const double t = horizon * i / (lattice - 1);
        for (int j = 0; j < lattice; ++j) {
            const double x = std::numbers::pi * j / (lattice - 1);
            const double v = a(t, x);
            if (!std::isfinite(v) || v < nu || v > alpha_upper) {
                throw InvalidArgument("coefficient a(t,x) = " + std::to_string(v) + " at (t,x) = (" +
                                      std::to_string(t) + ", " + std::to_string(x) +
                                      ") leaves [nu, alpha]");
            }
        }
    }
    return OperatorCoeff(Kind::variable_divergence, std::move(a), nu, alpha_upper);
}

void OperatorCoeff::midpoints(const Grid& grid, double t, std::span<double> out) const {
    const std::size_t n = grid.size();
    if (out.size() != n + 1) throw InvalidArgument("midpoint buffer must hold n+1 entries");
    if (!a_) {
        for (double& v : out) v = 1.0;
        return;
    }
    const double dx = grid.dx();
    for (std::size_t j = 0; j <= n; ++j) out[j] = a_(t, (static_cast<double>(j) + 0.5) * dx);
}

Field apply_operator(const OperatorCoeff& coeff, double t, const Field& f) {
    f.require_finite();
    const Grid& grid = f.grid();
    const std::size_t n = grid.size();
    std::vector<double> mid(n + 1);
    coeff.midpoints(grid, t, mid);
    const double inv_dx2 = 1.0 / (grid.dx() * grid.dx());

    Field out(grid);
    for (std::size_t j = 0; j < n; ++j) {
        const double left = j == 0 ? 0.0 : f[j - 1];
        const double right = j + 1 == n ? 0.0 : f[j + 1];
        out[j] = (mid[j + 1] * (right - f[j]) - mid[j] * (f[j] - left)) * inv_dx2;
    }
    if (!out.all_finite()) throw NumericalError("operator overflow");
    return out;
}

double energy_pairing(const OperatorCoeff& coeff, double t, const Field& f) {
    f.require_finite();
    const Grid& grid = f.grid();
    const std::size_t n = grid.size();
    std::vector<double> mid(n + 1);
    coeff.midpoints(grid, t, mid);
    double s = 0.0;
    double prev = 0.0;
    for (std::size_t j = 0; j <= n; ++j) {
        const double cur = j == n ? 0.0 : f[j];
        const double d = cur - prev;
        s += mid[j] * d * d;
        prev = cur;
    }
    const double e = s / grid.dx();
    if (!std::isfinite(e)) throw NumericalError("operator overflow");
    return e;
}

ImplicitEulerSolver::ImplicitEulerSolver(OperatorCoeff coeff, const Grid& grid, double dt)
    : coeff_(std::move(coeff)),
      grid_(grid),
      dt_(dt),
      mid_(grid.size() + 1),
      lower_(grid.size()),
      cprime_(grid.size()),
      denom_(grid.size()) {
    if (!(dt > 0.0)) throw InvalidArgument("nonpositive step");
}

void ImplicitEulerSolver::factor(double t) {
    const std::size_t n = grid_.size();
    coeff_.midpoints(grid_, t, mid_);
    const double r = dt_ / (grid_.dx() * grid_.dx());
    for (std::size_t j = 0; j < n; ++j) {
        const double diag = 1.0 + r * (mid_[j] + mid_[j + 1]);
        const double sub = -r * mid_[j];
        const double sup = -r * mid_[j + 1];
        lower_[j] = sub;
        const double d = j == 0 ? diag : diag - sub * cprime_[j - 1];
        if (!(d > 0.0)) throw std::logic_error("tridiagonal breakdown in implicit solve");
        denom_[j] = d;
        cprime_[j] = sup / d;
    }
    factored_ = true;
}

void ImplicitEulerSolver::solve(double t, std::span<double> rhs) {
    const std::size_t n = grid_.size();
    if (rhs.size() != n) throw InvalidArgument("right-hand side size mismatch");
    if (!factored_ || coeff_.time_dependent()) factor(t);
    rhs[0] /= denom_[0];
    for (std::size_t j = 1; j < n; ++j) rhs[j] = (rhs[j] - lower_[j] * rhs[j - 1]) / denom_[j];
    for (std::size_t j = n - 1; j-- > 0;) rhs[j] -= cprime_[j] * rhs[j + 1];
}

}  // namespace sedes
