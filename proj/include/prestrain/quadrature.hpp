#pragma once

// 1D building blocks: Gauss-Legendre rules, Lagrange differentiation on the
// Gauss nodes, trapezoid and Gregory weights, finite-difference stencils.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "prestrain/errors.hpp"

namespace prestrain {

struct QuadratureRule {
    std::vector<double> points;
    std::vector<double> weights;
};

/// m-point Gauss-Legendre rule on [-1/2, 1/2]; weights sum to 1.
inline QuadratureRule gauss_legendre(int m) {
    if (m < 1) throw DomainError("Gauss-Legendre rule needs at least one point");
    QuadratureRule rule;
    rule.points.resize(m);
    rule.weights.resize(m);
    for (int i = 0; i < m; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= m; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (m == 1) p0 = 1.0;
            dp = m * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // Recompute derivative at the converged root.
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= m; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        if (m == 1) p0 = 1.0;
        dp = m * (x * p1 - p0) / (x * x - 1.0);
        // Ascending order on [-1/2, 1/2].
        rule.points[m - 1 - i] = 0.5 * x;
        rule.weights[m - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    return rule;
}

/// D(k, l) = L_l'(x_k) for the Lagrange basis on the given nodes, row-major m x m.
inline std::vector<double> lagrange_differentiation(const std::vector<double>& x) {
    const std::size_t m = x.size();
    std::vector<double> bary(m, 1.0);
    for (std::size_t l = 0; l < m; ++l)
        for (std::size_t j = 0; j < m; ++j)
            if (j != l) bary[l] /= (x[l] - x[j]);
    std::vector<double> d(m * m, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
        double diag = 0.0;
        for (std::size_t l = 0; l < m; ++l) {
            if (l == k) continue;
            const double v = (bary[l] / bary[k]) / (x[k] - x[l]);
            d[k * m + l] = v;
            diag -= v;
        }
        d[k * m + k] = diag;
    }
    return d;
}

/// Composite trapezoid weights for n uniformly spaced nodes.
inline std::vector<double> trapezoid_weights(int n, double spacing) {
    std::vector<double> w(n, spacing);
    w.front() *= 0.5;
    w.back() *= 0.5;
    return w;
}

/// Trapezoid rule with fourth-order Gregory end corrections; needs n >= 6.
inline std::vector<double> gregory_weights(int n, double spacing) {
    if (n < 6) throw DomainError("Gregory weights need at least 6 nodes");
    std::vector<double> w(n, spacing);
    const double end[3] = {3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0};
    for (int k = 0; k < 3; ++k) {
        w[k] = end[k] * spacing;
        w[n - 1 - k] = end[k] * spacing;
    }
    return w;
}

/// A finite-difference stencil with at most six taps.
struct Stencil {
    std::array<int, 6> index{};
    std::array<double, 6> weight{};
    int size = 0;

    double apply(const double* values, std::ptrdiff_t stride = 1) const {
        double s = 0.0;
        for (int t = 0; t < size; ++t) s += weight[t] * values[index[t] * stride];
        return s;
    }
};

/// Second-order first derivative at node i of n: central inside, one-sided at the ends.
inline Stencil first_derivative_stencil(int i, int n, double h) {
    Stencil s;
    s.size = 3;
    const double inv = 1.0 / (2.0 * h);
    if (i == 0) {
        s.index = {0, 1, 2};
        s.weight = {-3.0 * inv, 4.0 * inv, -1.0 * inv};
    } else if (i == n - 1) {
        s.index = {n - 1, n - 2, n - 3};
        s.weight = {3.0 * inv, -4.0 * inv, 1.0 * inv};
    } else {
        s.size = 2;
        s.index = {i + 1, i - 1};
        s.weight = {inv, -inv};
    }
    return s;
}

/// Second-order second derivative at node i of n: central inside, 4-point one-sided at the ends.
inline Stencil second_derivative_stencil(int i, int n, double h) {
    Stencil s;
    const double inv = 1.0 / (h * h);
    if (i == 0) {
        s.size = 4;
        s.index = {0, 1, 2, 3};
        s.weight = {2.0 * inv, -5.0 * inv, 4.0 * inv, -1.0 * inv};
    } else if (i == n - 1) {
        s.size = 4;
        s.index = {n - 1, n - 2, n - 3, n - 4};
        s.weight = {2.0 * inv, -5.0 * inv, 4.0 * inv, -1.0 * inv};
    } else {
        s.size = 3;
        s.index = {i - 1, i, i + 1};
        s.weight = {inv, -2.0 * inv, inv};
    }
    return s;
}

/// Fornberg weights for the derivative of order `deriv` at `x0` from integer nodes
/// first, first+1, ..., first+count-1 (unit spacing).
inline std::vector<double> fornberg_weights(double x0, int first, int count, int deriv) {
    std::vector<std::vector<double>> c(count, std::vector<double>(deriv + 1, 0.0));
    c[0][0] = 1.0;
    double c1 = 1.0, c4 = first - x0;
    for (int i = 1; i < count; ++i) {
        const int mn = std::min(i, deriv);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = first + i - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = (first + i) - (first + j);
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(count);
    for (int i = 0; i < count; ++i) w[i] = c[i][deriv];
    return w;
}

namespace detail {

inline Stencil window_stencil(int i, int first, int count, int deriv, double h) {
    Stencil s;
    s.size = count;
    const auto w = fornberg_weights(i, first, count, deriv);
    const double scale = std::pow(h, -deriv);
    for (int t = 0; t < count; ++t) {
        s.index[t] = first + t;
        s.weight[t] = w[t] * scale;
    }
    return s;
}

}  // namespace detail

/// Fourth-order first derivative: 5 points, centred where possible; needs n >= 5.
inline Stencil first_derivative_stencil4(int i, int n, double h) {
    if (n < 5) throw DomainError("fourth-order stencil needs at least 5 nodes");
    return detail::window_stencil(i, std::clamp(i - 2, 0, n - 5), 5, 1, h);
}

/// Fourth-order second derivative: 5 centred points inside, 6 one-sided points at the
/// two nodes nearest each end; needs n >= 6.
inline Stencil second_derivative_stencil4(int i, int n, double h) {
    if (n < 6) throw DomainError("fourth-order stencil needs at least 6 nodes");
    if (i >= 2 && i <= n - 3) return detail::window_stencil(i, i - 2, 5, 2, h);
    return detail::window_stencil(i, i < 2 ? 0 : n - 6, 6, 2, h);
}

/// Sum by pairwise tree; order depends only on the input length.
inline double pairwise_sum(const double* v, std::size_t n) {
    if (n == 0) return 0.0;
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()); }

}  // namespace prestrain
