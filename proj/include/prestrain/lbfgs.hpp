#pragma once

// Limited-memory BFGS with backtracking Armijo line search.

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace prestrain {

struct LbfgsOptions {
    int memory = 10;
    int max_iter = 1000;
    /// Stop when the gradient infinity norm drops to this value.
    double grad_tol = 0.0;
    double armijo = 1e-4;
    double backtrack = 0.5;
    int max_backtracks = 60;
};

struct LbfgsRecord {
    int iter = 0;
    double energy = 0.0;
    double grad_norm = 0.0;  // infinity norm
    double step = 0.0;
};

enum class LbfgsStatus { converged, max_iterations, line_search_failed };

inline const char* to_string(LbfgsStatus s) {
    switch (s) {
        case LbfgsStatus::converged: return "converged";
        case LbfgsStatus::max_iterations: return "max_iterations";
        case LbfgsStatus::line_search_failed: return "line_search_failed";
    }
    return "unknown";
}

struct LbfgsResult {
    double energy = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    LbfgsStatus status = LbfgsStatus::max_iterations;
    std::vector<LbfgsRecord> log;
};

namespace detail {
inline double inf_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}
inline double dotv(const std::vector<double>& a, const std::vector<double>& b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}
}  // namespace detail

/// Minimizes f over x in place. `objective(x, grad)` returns f(x) and fills grad;
/// it may return +inf for inadmissible points, which the line search backs away from.
/// The returned iterate never has a larger objective than the starting point.
inline LbfgsResult lbfgs_minimize(std::vector<double>& x,
                                  const std::function<double(const std::vector<double>&, std::vector<double>&)>& objective,
                                  const LbfgsOptions& opts) {
    const std::size_t n = x.size();
    std::vector<double> g(n), g_new(n), x_new(n), p(n);
    std::deque<std::vector<double>> s_hist, y_hist;
    std::deque<double> rho_hist;

    LbfgsResult res;
    double f = objective(x, g);
    double gnorm = detail::inf_norm(g);
    res.log.push_back({0, f, gnorm, 0.0});

    for (int iter = 1; iter <= opts.max_iter; ++iter) {
        if (gnorm <= opts.grad_tol) {
            res.status = LbfgsStatus::converged;
            break;
        }
        // Two-loop recursion for p = -H g.
        p = g;
        std::vector<double> alpha(s_hist.size());
        for (std::size_t k = s_hist.size(); k-- > 0;) {
            alpha[k] = rho_hist[k] * detail::dotv(s_hist[k], p);
            for (std::size_t i = 0; i < n; ++i) p[i] -= alpha[k] * y_hist[k][i];
        }
        double scale;
        if (s_hist.empty()) {
            const double gg = detail::dotv(g, g);
            scale = (f > 0.0 && gg > 0.0) ? std::min(1.0, f / gg) : 1.0 / std::max(1.0, std::sqrt(gg));
        } else {
            scale = detail::dotv(s_hist.back(), y_hist.back()) / detail::dotv(y_hist.back(), y_hist.back());
        }
        for (auto& v : p) v *= scale;
        for (std::size_t k = 0; k < s_hist.size(); ++k) {
            const double beta = rho_hist[k] * detail::dotv(y_hist[k], p);
            for (std::size_t i = 0; i < n; ++i) p[i] += (alpha[k] - beta) * s_hist[k][i];
        }
        for (auto& v : p) v = -v;

        double slope = detail::dotv(g, p);
        if (!(slope < 0.0)) {
            // Not a descent direction: reset memory and fall back to steepest descent.
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            const double gg = detail::dotv(g, g);
            const double sc = (f > 0.0 && gg > 0.0) ? std::min(1.0, f / gg) : 1.0;
            for (std::size_t i = 0; i < n; ++i) p[i] = -sc * g[i];
            slope = detail::dotv(g, p);
        }

        double step = 1.0;
        double f_new = std::numeric_limits<double>::infinity();
        bool accepted = false;
        for (int bt = 0; bt < opts.max_backtracks; ++bt) {
            for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + step * p[i];
            f_new = objective(x_new, g_new);
            if (std::isfinite(f_new) && f_new <= f + opts.armijo * step * slope) {
                accepted = true;
                break;
            }
            step *= opts.backtrack;
        }
        if (!accepted) {
            res.status = LbfgsStatus::line_search_failed;
            break;
        }

        std::vector<double> s(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = x_new[i] - x[i];
            y[i] = g_new[i] - g[i];
        }
        const double sy = detail::dotv(s, y);
        if (sy > 1e-300 && sy > 1e-14 * std::sqrt(detail::dotv(s, s) * detail::dotv(y, y))) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > opts.memory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }
        x.swap(x_new);
        g.swap(g_new);
        f = f_new;
        gnorm = detail::inf_norm(g);
        res.iterations = iter;
        res.log.push_back({iter, f, gnorm, step});
        if (iter == opts.max_iter) res.status = gnorm <= opts.grad_tol ? LbfgsStatus::converged : LbfgsStatus::max_iterations;
    }
    if (opts.max_iter == 0 && gnorm <= opts.grad_tol) res.status = LbfgsStatus::converged;
    res.energy = f;
    res.grad_norm = gnorm;
    return res;
}

}  // namespace prestrain
