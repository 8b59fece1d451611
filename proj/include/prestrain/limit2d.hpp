#pragma once

// The limiting bending functional
//
//   I_gamma(V3) = (1/24) int_omega Q2(grad^2 V3 + (sym B)_{2x2}) dx'
//
// evaluated on analytic or grid fields, and minimized on a grid modulo
// affine functions.

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "prestrain/errors.hpp"
#include "prestrain/fields.hpp"
#include "prestrain/lbfgs.hpp"
#include "prestrain/material.hpp"
#include "prestrain/prestrain.hpp"
#include "prestrain/quadrature.hpp"

namespace prestrain {

struct LimitFunctional {
    PrestrainSpec spec;
    EnergyDensity w;

    IsotropicModuli moduli() const { return w.quadratic_moduli(); }
    Mat2 bending_target(Point2 p) const { return sym(spec.B.value(p).minor2()); }
};

/// Composite Gauss-Legendre rule on the rectangle: `cells` x `cells` panels, `order` points each way.
template <class F>
double integrate_rect(const Rect& r, F&& f, int cells = 64, int order = 5) {
    const QuadratureRule g = gauss_legendre(order);
    const double hx = r.width() / cells, hy = r.height() / cells;
    std::vector<double> rows;
    rows.reserve(static_cast<std::size_t>(cells) * order);
    for (int cy = 0; cy < cells; ++cy)
        for (int qy = 0; qy < order; ++qy) {
            const double y = r.y_lo + hy * (cy + 0.5 + g.points[qy]);
            std::vector<double> acc;
            acc.reserve(static_cast<std::size_t>(cells) * order);
            for (int cx = 0; cx < cells; ++cx)
                for (int qx = 0; qx < order; ++qx) {
                    const double x = r.x_lo + hx * (cx + 0.5 + g.points[qx]);
                    acc.push_back(g.weights[qx] * f(Point2{x, y}));
                }
            rows.push_back(g.weights[qy] * pairwise_sum(acc));
        }
    return hx * hy * pairwise_sum(rows);
}

/// Hessian of a grid field at node (i, j) by fourth-order finite differences.
inline Mat2 fd_hessian(const GridScalarField& v, int i, int j) {
    const Stencil sxx = second_derivative_stencil4(i, v.n1, v.dx());
    const Stencil syy = second_derivative_stencil4(j, v.n2, v.dy());
    const Stencil sx = first_derivative_stencil4(i, v.n1, v.dx());
    const Stencil sy = first_derivative_stencil4(j, v.n2, v.dy());
    double a = 0.0, b = 0.0, c = 0.0;
    for (int t = 0; t < sxx.size; ++t) a += sxx.weight[t] * v.at(sxx.index[t], j);
    for (int t = 0; t < syy.size; ++t) c += syy.weight[t] * v.at(i, syy.index[t]);
    for (int s = 0; s < sx.size; ++s)
        for (int t = 0; t < sy.size; ++t) b += sx.weight[s] * sy.weight[t] * v.at(sx.index[s], sy.index[t]);
    return Mat2{{a, b, b, c}};
}

/// Gradient of a grid field at node (i, j) by fourth-order finite differences.
inline std::array<double, 2> fd_gradient(const GridScalarField& v, int i, int j) {
    const Stencil sx = first_derivative_stencil4(i, v.n1, v.dx());
    const Stencil sy = first_derivative_stencil4(j, v.n2, v.dy());
    double gx = 0.0, gy = 0.0;
    for (int t = 0; t < sx.size; ++t) gx += sx.weight[t] * v.at(sx.index[t], j);
    for (int t = 0; t < sy.size; ++t) gy += sy.weight[t] * v.at(i, sy.index[t]);
    return {gx, gy};
}

inline double evaluate_Igamma(const AnalyticScalarField& v3, const LimitFunctional& fnl, int cells = 64) {
    const IsotropicModuli m = fnl.moduli();
    return integrate_rect(fnl.spec.omega, [&](Point2 p) {
               return q2(m, v3.jet(p).hessian + fnl.bending_target(p));
           }, cells) / 24.0;
}

/// Grid path: FD Hessians at the nodes, Gregory weights.
inline double evaluate_Igamma(const GridScalarField& v3, const LimitFunctional& fnl) {
    const IsotropicModuli m = fnl.moduli();
    const auto w1 = gregory_weights(v3.n1, v3.dx());
    const auto w2 = gregory_weights(v3.n2, v3.dy());
    std::vector<double> rows(v3.n2);
    for (int j = 0; j < v3.n2; ++j) {
        std::vector<double> acc(v3.n1);
        for (int i = 0; i < v3.n1; ++i)
            acc[i] = w1[i] * q2(m, fd_hessian(v3, i, j) + fnl.bending_target(v3.node(i, j)));
        rows[j] = w2[j] * pairwise_sum(acc);
    }
    return pairwise_sum(rows) / 24.0;
}

inline double evaluate_Igamma(const ScalarField2D& v3, const LimitFunctional& fnl) {
    return std::visit([&](const auto& f) { return evaluate_Igamma(f, fnl); }, v3);
}

struct LimitSolveOptions {
    double cg_tol = 1e-10;
    int cg_maxiter = 200000;
    bool direct = false;
};

struct LimitMinimum {
    GridScalarField v3;
    double value = 0.0;
    int iterations = 0;
    double relative_residual = 0.0;
    /// |P(K v - b)|_inf and |P b|_inf, the projected gradient at the minimizer and its natural scale.
    double projected_gradient = 0.0;
    double gradient_scale = 0.0;
};

/// Discrete quadratic form E(v) = (1/24) sum_q w_q Q2(H_q v + M_q) = 1/2 v.K v - b.v + const
/// on an n1 x n2 nodal grid, with H_q the FD Hessian at node q.
class LimitOperator {
public:
    LimitOperator(const LimitFunctional& fnl, int n1, int n2)
        : omega_(fnl.spec.omega), n1_(n1), n2_(n2) {
        if (n1 < 6 || n2 < 6) throw ConfigError("limit grid must be at least 6 x 6");
        const double dx = omega_.width() / (n1 - 1), dy = omega_.height() / (n2 - 1);
        const IsotropicModuli mod = fnl.moduli();
        const double kappa = mod.plane_stress_lambda();
        c_ = {2.0 * mod.mu + kappa, 4.0 * mod.mu, kappa};  // C = [[c0,0,c2],[0,c1,0],[c2,0,c0]]
        w_.resize(size());
        target_.resize(size());
        rows_.resize(size());
        const auto w1 = gregory_weights(n1, dx), w2 = gregory_weights(n2, dy);
        for (int j = 0; j < n2; ++j)
            for (int i = 0; i < n1; ++i) {
                const std::size_t q = index(i, j);
                w_[q] = w1[i] * w2[j];
                const Mat2 mt = fnl.bending_target({omega_.x_lo + i * dx, omega_.y_lo + j * dy});
                target_[q] = {mt(0, 0), mt(0, 1), mt(1, 1)};
                std::map<std::size_t, std::array<double, 3>> row;
                const Stencil sxx = second_derivative_stencil4(i, n1, dx);
                const Stencil syy = second_derivative_stencil4(j, n2, dy);
                const Stencil sx = first_derivative_stencil4(i, n1, dx);
                const Stencil sy = first_derivative_stencil4(j, n2, dy);
                for (int t = 0; t < sxx.size; ++t) row[index(sxx.index[t], j)][0] += sxx.weight[t];
                for (int s = 0; s < sx.size; ++s)
                    for (int t = 0; t < sy.size; ++t)
                        row[index(sx.index[s], sy.index[t])][1] += sx.weight[s] * sy.weight[t];
                for (int t = 0; t < syy.size; ++t) row[index(i, syy.index[t])][2] += syy.weight[t];
                rows_[q].assign(row.begin(), row.end());
            }
        // Constraint vectors: integral of v, of dv/dx and of dv/dy.
        constraints_.assign(3, std::vector<double>(size(), 0.0));
        for (int j = 0; j < n2; ++j)
            for (int i = 0; i < n1; ++i) {
                const std::size_t q = index(i, j);
                constraints_[0][q] += w_[q];
                const Stencil sx = first_derivative_stencil4(i, n1, dx);
                for (int t = 0; t < sx.size; ++t) constraints_[1][index(sx.index[t], j)] += w_[q] * sx.weight[t];
                const Stencil sy = first_derivative_stencil4(j, n2, dy);
                for (int t = 0; t < sy.size; ++t) constraints_[2][index(i, sy.index[t])] += w_[q] * sy.weight[t];
            }
    }

    std::size_t size() const { return static_cast<std::size_t>(n1_) * n2_; }
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * n1_ + i; }
    const std::vector<std::vector<double>>& constraints() const { return constraints_; }

    /// (H11, H12, H22) of v at node q.
    std::array<double, 3> hessian(const std::vector<double>& v, std::size_t q) const {
        std::array<double, 3> h{};
        for (const auto& [p, coef] : rows_[q])
            for (int r = 0; r < 3; ++r) h[r] += coef[r] * v[p];
        return h;
    }

    double energy(const std::vector<double>& v) const {
        std::vector<double> acc(size());
        for (std::size_t q = 0; q < size(); ++q) {
            auto x = hessian(v, q);
            for (int r = 0; r < 3; ++r) x[r] += target_[q][r];
            acc[q] = w_[q] * form(x);
        }
        return pairwise_sum(acc) / 24.0;
    }

    std::vector<double> apply(const std::vector<double>& v) const {
        std::vector<double> out(size(), 0.0);
        for (std::size_t q = 0; q < size(); ++q) scatter(q, hessian(v, q), out);
        return out;
    }

    std::vector<double> rhs() const {
        std::vector<double> out(size(), 0.0);
        for (std::size_t q = 0; q < size(); ++q)
            scatter(q, {-target_[q][0], -target_[q][1], -target_[q][2]}, out);
        return out;
    }

    std::vector<double> diagonal() const {
        std::vector<double> d(size(), 0.0);
        for (std::size_t q = 0; q < size(); ++q)
            for (const auto& [p, l] : rows_[q]) d[p] += (w_[q] / 12.0) * form(l);
        return d;
    }

    Eigen::SparseMatrix<double> matrix() const {
        std::vector<Eigen::Triplet<double>> trip;
        for (std::size_t q = 0; q < size(); ++q) {
            const double s = w_[q] / 12.0;
            for (const auto& [p, lp] : rows_[q]) {
                const auto clp = apply_c(lp);
                for (const auto& [r, lr] : rows_[q])
                    trip.emplace_back(static_cast<int>(r), static_cast<int>(p),
                                      s * (clp[0] * lr[0] + clp[1] * lr[1] + clp[2] * lr[2]));
            }
        }
        Eigen::SparseMatrix<double> k(static_cast<int>(size()), static_cast<int>(size()));
        k.setFromTriplets(trip.begin(), trip.end());
        return k;
    }

private:
    std::array<double, 3> apply_c(const std::array<double, 3>& x) const {
        return {c_[0] * x[0] + c_[2] * x[2], c_[1] * x[1], c_[2] * x[0] + c_[0] * x[2]};
    }
    double form(const std::array<double, 3>& x) const {
        const auto cx = apply_c(x);
        return x[0] * cx[0] + x[1] * cx[1] + x[2] * cx[2];
    }
    void scatter(std::size_t q, const std::array<double, 3>& x, std::vector<double>& out) const {
        const auto cx = apply_c(x);
        const double s = w_[q] / 12.0;
        for (const auto& [p, l] : rows_[q]) out[p] += s * (l[0] * cx[0] + l[1] * cx[1] + l[2] * cx[2]);
    }

    Rect omega_;
    int n1_, n2_;
    std::array<double, 3> c_{};
    std::vector<double> w_;
    std::vector<std::array<double, 3>> target_;
    std::vector<std::vector<std::pair<std::size_t, std::array<double, 3>>>> rows_;
    std::vector<std::vector<double>> constraints_;
};

namespace detail {

/// Orthonormal basis (Euclidean) of the span of the constraint vectors.
inline std::vector<std::vector<double>> orthonormalize(std::vector<std::vector<double>> vs) {
    std::vector<std::vector<double>> out;
    for (auto& v : vs) {
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& q : out) {
                const double d = dotv(v, q);
                for (std::size_t i = 0; i < v.size(); ++i) v[i] -= d * q[i];
            }
        const double n = std::sqrt(dotv(v, v));
        if (n > 0.0) {
            for (auto& x : v) x /= n;
            out.push_back(std::move(v));
        }
    }
    return out;
}

inline void project(std::vector<double>& v, const std::vector<std::vector<double>>& basis) {
    for (const auto& q : basis) {
        const double d = dotv(v, q);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= d * q[i];
    }
}

/// Affine a + b x + c y on the operator grid, with (a, b, c) chosen so that v - affine meets the constraints.
inline void remove_constraint_component(std::vector<double>& v, const LimitOperator& op, const Rect& r, int n1, int n2) {
    const double dx = r.width() / (n1 - 1), dy = r.height() / (n2 - 1);
    std::array<std::vector<double>, 3> affine;
    for (auto& a : affine) a.assign(op.size(), 0.0);
    for (int j = 0; j < n2; ++j)
        for (int i = 0; i < n1; ++i) {
            const std::size_t q = op.index(i, j);
            affine[0][q] = 1.0;
            affine[1][q] = r.x_lo + i * dx;
            affine[2][q] = r.y_lo + j * dy;
        }
    // Solve the 3x3 system  (c_k . affine_l) coef_l = c_k . v.
    Mat3 m;
    Vec3 rhs;
    for (int k = 0; k < 3; ++k) {
        rhs[k] = dotv(op.constraints()[k], v);
        for (int l = 0; l < 3; ++l) m(k, l) = dotv(op.constraints()[k], affine[l]);
    }
    const Vec3 coef = inverse(m) * rhs;
    for (std::size_t q = 0; q < v.size(); ++q)
        v[q] -= coef[0] * affine[0][q] + coef[1] * affine[1][q] + coef[2] * affine[2][q];
}

}  // namespace detail

/// Minimizes the discrete I_gamma over n1 x n2 node values subject to
/// int V3 = int dV3/dx = int dV3/dy = 0. Projected CG with Jacobi preconditioning by default.
inline LimitMinimum minimize_Igamma(const LimitFunctional& fnl, int n1, int n2, const LimitSolveOptions& opts = {}) {
    const LimitOperator op(fnl, n1, n2);
    const std::size_t n = op.size();
    const auto basis = detail::orthonormalize(op.constraints());
    std::vector<double> b = op.rhs();
    detail::project(b, basis);
    const double bnorm = std::sqrt(detail::dotv(b, b));

    LimitMinimum out;
    std::vector<double> v(n, 0.0);
    if (opts.direct) {
        // Pin the affine nullspace at three corners, factor, then shift by an affine function.
        Eigen::SparseMatrix<double> k = op.matrix();
        const std::array<std::size_t, 3> pins{op.index(0, 0), op.index(n1 - 1, 0), op.index(0, n2 - 1)};
        Eigen::VectorXd rhs(static_cast<int>(n));
        const std::vector<double> b_full = op.rhs();
        for (std::size_t i = 0; i < n; ++i) rhs[static_cast<int>(i)] = b_full[i];
        k.prune([&](int r, int c, double) {
            for (auto p : pins)
                if (static_cast<std::size_t>(r) == p || static_cast<std::size_t>(c) == p) return r == c;
            return true;
        });
        for (auto p : pins) {
            k.coeffRef(static_cast<int>(p), static_cast<int>(p)) = 1.0;
            rhs[static_cast<int>(p)] = 0.0;
        }
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(k);
        if (solver.info() != Eigen::Success) throw SolverError("limit minimizer: sparse factorization failed");
        const Eigen::VectorXd sol = solver.solve(rhs);
        for (std::size_t i = 0; i < n; ++i) v[i] = sol[static_cast<int>(i)];
        detail::remove_constraint_component(v, op, fnl.spec.omega, n1, n2);
    } else if (bnorm > 0.0) {
        const std::vector<double> diag = op.diagonal();
        std::vector<double> r = b, z(n), p(n), kp;
        auto precondition = [&](const std::vector<double>& in, std::vector<double>& outv) {
            outv = in;
            detail::project(outv, basis);
            for (std::size_t i = 0; i < n; ++i) outv[i] /= diag[i];
            detail::project(outv, basis);
        };
        precondition(r, z);
        p = z;
        double rz = detail::dotv(r, z);
        int it = 0;
        double rel = 1.0;
        for (; it < opts.cg_maxiter; ++it) {
            rel = std::sqrt(detail::dotv(r, r)) / bnorm;
            if (rel <= opts.cg_tol) break;
            kp = op.apply(p);
            detail::project(kp, basis);
            const double alpha = rz / detail::dotv(p, kp);
            for (std::size_t i = 0; i < n; ++i) {
                v[i] += alpha * p[i];
                r[i] -= alpha * kp[i];
            }
            // Recompute the true residual periodically to limit drift.
            if ((it + 1) % 500 == 0) {
                r = op.apply(v);
                for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
                detail::project(r, basis);
            }
            precondition(r, z);
            const double rz_new = detail::dotv(r, z);
            const double beta = rz_new / rz;
            rz = rz_new;
            for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
        }
        if (rel > opts.cg_tol)
            throw SolverError("limit minimizer: CG did not reach relative residual " + std::to_string(opts.cg_tol) +
                              " in " + std::to_string(opts.cg_maxiter) + " iterations (reached " +
                              std::to_string(rel) + ")");
        out.iterations = it;
    }

    std::vector<double> g = op.apply(v);
    const std::vector<double> b_raw = op.rhs();
    for (std::size_t i = 0; i < n; ++i) g[i] -= b_raw[i];
    detail::project(g, basis);
    out.projected_gradient = detail::inf_norm(g);
    out.gradient_scale = detail::inf_norm(b);
    out.relative_residual = bnorm > 0.0 ? std::sqrt(detail::dotv(g, g)) / bnorm : 0.0;
    out.value = op.energy(v);
    out.v3 = GridScalarField(fnl.spec.omega, n1, n2, std::move(v));
    return out;
}

/// Writes "x1,x2,V3" rows.
inline void write_field_csv(std::ostream& os, const GridScalarField& f, const char* name = "V3") {
    os << "x1,x2," << name << '\n';
    os.precision(17);
    for (int j = 0; j < f.n2; ++j)
        for (int i = 0; i < f.n1; ++i) {
            const Point2 p = f.node(i, j);
            os << p.x << ',' << p.y << ',' << f.at(i, j) << '\n';
        }
}

/// Leading integrals of the formal small-h expansion for V = (0, 0, V3), without prefactors:
///   stretching = int Q3(-2 sym S + (grad V3 (x) grad V3)*)     (enters with h^{2 gamma} / 8)
///   bending    = int Q3(-sym B - (grad^2 V3)*)                (enters with h^{gamma + 2} / 24)
struct TwoTermExpansion {
    double stretching = 0.0;
    double bending = 0.0;

    double stretching_energy(double h, double gamma) const { return std::pow(h, 2.0 * gamma) / 8.0 * stretching; }
    double bending_energy(double h, double gamma) const { return std::pow(h, gamma + 2.0) / 24.0 * bending; }
};

inline TwoTermExpansion formal_two_term_expansion(const AnalyticScalarField& v3, const PrestrainSpec& spec,
                                                  const EnergyDensity& w, int cells = 64) {
    const IsotropicModuli m = w.quadratic_moduli();
    TwoTermExpansion out;
    out.stretching = integrate_rect(spec.omega, [&](Point2 p) {
        const ScalarJet jv = v3.jet(p);
        const Mat2 gg{{jv.grad[0] * jv.grad[0], jv.grad[0] * jv.grad[1], jv.grad[1] * jv.grad[0], jv.grad[1] * jv.grad[1]}};
        return q3(m, -2.0 * sym(spec.S.value(p)) + star(gg));
    }, cells);
    out.bending = integrate_rect(spec.omega, [&](Point2 p) {
        return q3(m, -sym(spec.B.value(p)) - star(v3.jet(p).hessian));
    }, cells);
    return out;
}

}  // namespace prestrain
