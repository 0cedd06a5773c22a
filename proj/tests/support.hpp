#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "sedes/field.hpp"

namespace sedes::testing {

/// Gaussian entries with random overall scale in [1e-3, 1e3].
inline Field random_field(const Grid& grid, std::mt19937_64& gen) {
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> log_scale(-3.0, 3.0);
    const double scale = std::pow(10.0, log_scale(gen));
    Field f(grid);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = scale * normal(gen);
    return f;
}

inline Field sine_mode(const Grid& grid, int k, double amplitude = 1.0) {
    return Field::from_function(grid, [k, amplitude](double x) { return amplitude * std::sin(k * x); });
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

/// Dense (n x n) Dirichlet stencil matrix for midpoint coefficients a (n+1 entries), row-major.
inline std::vector<double> dense_operator(const std::vector<double>& a, double dx) {
    const std::size_t n = a.size() - 1;
    std::vector<double> m(n * n, 0.0);
    const double s = 1.0 / (dx * dx);
    for (std::size_t j = 0; j < n; ++j) {
        m[j * n + j] = -(a[j] + a[j + 1]) * s;
        if (j > 0) m[j * n + j - 1] = a[j] * s;
        if (j + 1 < n) m[j * n + j + 1] = a[j + 1] * s;
    }
    return m;
}

/// Gaussian elimination with partial pivoting on a copy.
inline std::vector<double> dense_solve(std::vector<double> m, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r) {
            if (std::abs(m[r * n + c]) > std::abs(m[piv * n + c])) piv = r;
        }
        for (std::size_t k = 0; k < n; ++k) std::swap(m[c * n + k], m[piv * n + k]);
        std::swap(b[c], b[piv]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = m[r * n + c] / m[c * n + c];
            for (std::size_t k = c; k < n; ++k) m[r * n + k] -= f * m[c * n + k];
            b[r] -= f * b[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t r = n; r-- > 0;) {
        double s = b[r];
        for (std::size_t k = r + 1; k < n; ++k) s -= m[r * n + k] * x[k];
        x[r] = s / m[r * n + r];
    }
    return x;
}

}  // namespace sedes::testing
