#pragma once

// Discretization of the thin plate and the prestrained 3D energy
//
//   I_W^h(u) = (1/h) int_{Omega^h} W(grad u (A^h)^{-1}) dx
//
// Deformations live on the rescaled plate omega x (-1/2, 1/2): each in-plane
// node carries m values at the Gauss-Legendre points of the thickness
// coordinate. In-plane derivatives are second-order finite differences,
// the thickness derivative is exact for polynomials of degree < m, and the
// physical d/dx3 equals (1/h) d/dxi.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "prestrain/errors.hpp"
#include "prestrain/fields.hpp"
#include "prestrain/lbfgs.hpp"
#include "prestrain/material.hpp"
#include "prestrain/parallel.hpp"
#include "prestrain/prestrain.hpp"
#include "prestrain/quadrature.hpp"
#include "prestrain/tensor.hpp"

namespace prestrain {

class PlateGrid {
public:
    PlateGrid() = default;
    PlateGrid(Rect omega, int n1, int n2, int m) : omega_(omega), n1_(n1), n2_(n2), m_(m) {
        omega.validate();
        if (n1 < 3 || n2 < 3) throw ConfigError("grid: n1, n2 must be >= 3");
        if (m < 2) throw ConfigError("grid: m must be >= 2");
        dx_ = omega.width() / (n1 - 1);
        dy_ = omega.height() / (n2 - 1);
        thickness_ = gauss_legendre(m);
        d3_ = lagrange_differentiation(thickness_.points);
        w1_ = trapezoid_weights(n1, dx_);
        w2_ = trapezoid_weights(n2, dy_);
        s1_.reserve(n1);
        s2_.reserve(n2);
        for (int i = 0; i < n1; ++i) s1_.push_back(first_derivative_stencil(i, n1, dx_));
        for (int j = 0; j < n2; ++j) s2_.push_back(first_derivative_stencil(j, n2, dy_));
    }

    const Rect& omega() const { return omega_; }
    int n1() const { return n1_; }
    int n2() const { return n2_; }
    int m() const { return m_; }
    double dx() const { return dx_; }
    double dy() const { return dy_; }

    std::size_t node_count() const { return static_cast<std::size_t>(n1_) * n2_ * m_; }
    std::size_t column_count() const { return static_cast<std::size_t>(n1_) * n2_; }
    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(j) * n1_ + i) * m_ + k;
    }

    Point2 node(int i, int j) const { return {omega_.x_lo + i * dx_, omega_.y_lo + j * dy_}; }
    /// Rescaled thickness coordinate of layer k, in (-1/2, 1/2).
    double xi(int k) const { return thickness_.points[k]; }
    double xi_weight(int k) const { return thickness_.weights[k]; }
    double d3(int k, int l) const { return d3_[static_cast<std::size_t>(k) * m_ + l]; }
    double in_plane_weight(int i, int j) const { return w1_[i] * w2_[j]; }
    const Stencil& stencil1(int i) const { return s1_[i]; }
    const Stencil& stencil2(int j) const { return s2_[j]; }

    /// Same domain and layer count with (n - 1) / 2 + 1 nodes per axis.
    PlateGrid coarsened() const { return PlateGrid(omega_, (n1_ - 1) / 2 + 1, (n2_ - 1) / 2 + 1, m_); }

private:
    Rect omega_{};
    int n1_ = 0, n2_ = 0, m_ = 0;
    double dx_ = 0.0, dy_ = 0.0;
    QuadratureRule thickness_;
    std::vector<double> d3_, w1_, w2_;
    std::vector<Stencil> s1_, s2_;
};

struct Deformation3D {
    PlateGrid grid;
    std::vector<Vec3> values;

    Deformation3D() = default;
    Deformation3D(PlateGrid g, std::vector<Vec3> v) : grid(std::move(g)), values(std::move(v)) {
        if (values.size() != grid.node_count()) throw DomainError("deformation: value count does not match grid");
        for (const auto& x : values)
            if (!std::isfinite(x[0]) || !std::isfinite(x[1]) || !std::isfinite(x[2]))
                throw DomainError("deformation: non-finite node value");
    }

    Vec3& at(int i, int j, int k) { return values[grid.index(i, j, k)]; }
    const Vec3& at(int i, int j, int k) const { return values[grid.index(i, j, k)]; }
};

/// u(x', x3) = (x', x3) sampled at x3 = h xi.
inline Deformation3D identity_lift(const PlateGrid& grid, double h) {
    std::vector<Vec3> v(grid.node_count());
    for (int j = 0; j < grid.n2(); ++j)
        for (int i = 0; i < grid.n1(); ++i) {
            const Point2 p = grid.node(i, j);
            for (int k = 0; k < grid.m(); ++k) v[grid.index(i, j, k)] = Vec3{{p.x, p.y, h * grid.xi(k)}};
        }
    return Deformation3D(grid, std::move(v));
}

/// x -> R x + c applied to every node.
inline Deformation3D rigid_motion(const Deformation3D& u, const Mat3& r, const Vec3& c) {
    Deformation3D out = u;
    for (auto& x : out.values) x = r * x + c;
    return out;
}

struct EnergyBreakdown {
    double total = 0.0;
    /// max over quadrature points of dist^2(F_el, SO(3)); filled when diagnostics are requested.
    double max_dist2 = 0.0;
    double min_det = std::numeric_limits<double>::infinity();
    std::size_t degenerate_points = 0;

    bool degenerate() const { return degenerate_points > 0; }
};

/// Discrete energy on a fixed grid for one (spec, W, h): caches A^h and its
/// inverse at every quadrature point.
class PlateEnergy {
public:
    PlateEnergy(PlateGrid grid, const PrestrainSpec& spec, EnergyDensity w, double h, int threads = 1)
        : grid_(std::move(grid)), w_(w), h_(h), threads_(threads) {
        if (!(h > 0.0)) throw DomainError("plate energy: h must be positive");
        a_.resize(grid_.node_count());
        a_inv_.resize(grid_.node_count());
        for (int j = 0; j < grid_.n2(); ++j)
            for (int i = 0; i < grid_.n1(); ++i)
                for (int k = 0; k < grid_.m(); ++k) {
                    const GrowthTensor gt = growth_tensor(spec, h, grid_.node(i, j), h * grid_.xi(k));
                    a_[grid_.index(i, j, k)] = gt.value;
                    a_inv_[grid_.index(i, j, k)] = gt.inverse;
                }
    }

    const PlateGrid& grid() const { return grid_; }
    double h() const { return h_; }
    const EnergyDensity& density_model() const { return w_; }
    const Mat3& growth(int i, int j, int k) const { return a_[grid_.index(i, j, k)]; }
    const Mat3& growth_inverse(int i, int j, int k) const { return a_inv_[grid_.index(i, j, k)]; }

    /// grad u at quadrature point (i, j, k), with the thickness derivative in physical units.
    Mat3 deformation_gradient(const std::vector<Vec3>& u, int i, int j, int k) const {
        Vec3 c1, c2, c3;
        const Stencil& s1 = grid_.stencil1(i);
        for (int t = 0; t < s1.size; ++t) c1 += s1.weight[t] * u[grid_.index(s1.index[t], j, k)];
        const Stencil& s2 = grid_.stencil2(j);
        for (int t = 0; t < s2.size; ++t) c2 += s2.weight[t] * u[grid_.index(i, s2.index[t], k)];
        const double inv_h = 1.0 / h_;
        for (int l = 0; l < grid_.m(); ++l) c3 += (inv_h * grid_.d3(k, l)) * u[grid_.index(i, j, l)];
        return Mat3::from_columns(c1, c2, c3);
    }

    /// Elastic tensor F = grad u (A^h)^{-1}.
    Mat3 elastic_tensor(const std::vector<Vec3>& u, int i, int j, int k) const {
        return deformation_gradient(u, i, j, k) * a_inv_[grid_.index(i, j, k)];
    }

    double weight(int i, int j, int k) const { return grid_.in_plane_weight(i, j) * grid_.xi_weight(k); }

    /// Energy value; with diagnostics also the max pointwise dist^2 to SO(3).
    EnergyBreakdown evaluate(const std::vector<Vec3>& u, bool diagnostics = true) const {
        check_shape(u);
        const int n1 = grid_.n1(), n2 = grid_.n2(), m = grid_.m();
        std::vector<double> row_sum(n2, 0.0), row_dist(n2, 0.0), row_det(n2, 0.0);
        std::vector<std::size_t> row_bad(n2, 0);
        parallel_for(n2, threads_, [&](int j) {
            std::vector<double> acc;
            acc.reserve(static_cast<std::size_t>(n1) * m);
            double dmax = 0.0, dmin = std::numeric_limits<double>::infinity();
            std::size_t bad = 0;
            for (int i = 0; i < n1; ++i)
                for (int k = 0; k < m; ++k) {
                    const Mat3 f = elastic_tensor(u, i, j, k);
                    const double det = f.det();
                    dmin = std::min(dmin, det);
                    if (!(det > 0.0)) ++bad;
                    if (!(det > 0.0) && w_.kind == DensityKind::dist2) continue;
                    acc.push_back(weight(i, j, k) * density(w_, f));
                    if (diagnostics) dmax = std::max(dmax, dist2_SO3(f));
                }
            row_sum[j] = pairwise_sum(acc);
            row_dist[j] = dmax;
            row_det[j] = dmin;
            row_bad[j] = bad;
        });
        EnergyBreakdown out;
        out.total = pairwise_sum(row_sum);
        for (int j = 0; j < n2; ++j) {
            out.max_dist2 = std::max(out.max_dist2, row_dist[j]);
            out.min_det = std::min(out.min_det, row_det[j]);
            out.degenerate_points += row_bad[j];
        }
        if (out.degenerate() && w_.kind == DensityKind::dist2)
            throw DegenerateElementError("dist2 density: det F <= 0 at " + std::to_string(out.degenerate_points) +
                                         " quadrature point(s)");
        return out;
    }

    /// Energy and its exact gradient with respect to the node values.
    double value_and_gradient(const std::vector<Vec3>& u, std::vector<Vec3>& grad, std::size_t* degenerate = nullptr) const {
        check_shape(u);
        const int n1 = grid_.n1(), n2 = grid_.n2(), m = grid_.m();
        std::vector<Mat3> dg(grid_.node_count());  // dE/d(grad u) per quadrature point
        std::vector<double> row_sum(n2, 0.0);
        std::vector<std::size_t> row_bad(n2, 0);
        parallel_for(n2, threads_, [&](int j) {
            std::vector<double> acc;
            acc.reserve(static_cast<std::size_t>(n1) * m);
            std::size_t bad = 0;
            for (int i = 0; i < n1; ++i)
                for (int k = 0; k < m; ++k) {
                    const std::size_t q = grid_.index(i, j, k);
                    const Mat3 f = deformation_gradient(u, i, j, k) * a_inv_[q];
                    if (!(f.det() > 0.0)) {
                        ++bad;
                        if (w_.kind == DensityKind::dist2) continue;
                    }
                    const double wq = weight(i, j, k);
                    acc.push_back(wq * density(w_, f));
                    dg[q] = wq * (density_gradient(w_, f) * a_inv_[q].transpose());
                }
            row_sum[j] = pairwise_sum(acc);
            row_bad[j] = bad;
        });
        std::size_t bad = 0;
        for (auto b : row_bad) bad += b;
        if (degenerate) *degenerate = bad;
        if (bad > 0 && w_.kind == DensityKind::dist2)
            throw DegenerateElementError("dist2 density: det F <= 0 at " + std::to_string(bad) + " quadrature point(s)");

        grad.assign(grid_.node_count(), Vec3{});
        const double inv_h = 1.0 / h_;
        for (int j = 0; j < n2; ++j)
            for (int i = 0; i < n1; ++i)
                for (int k = 0; k < m; ++k) {
                    const Mat3& p = dg[grid_.index(i, j, k)];
                    const Vec3 c1 = p.col(0), c2 = p.col(1), c3 = p.col(2);
                    const Stencil& s1 = grid_.stencil1(i);
                    for (int t = 0; t < s1.size; ++t) grad[grid_.index(s1.index[t], j, k)] += s1.weight[t] * c1;
                    const Stencil& s2 = grid_.stencil2(j);
                    for (int t = 0; t < s2.size; ++t) grad[grid_.index(i, s2.index[t], k)] += s2.weight[t] * c2;
                    for (int l = 0; l < m; ++l) grad[grid_.index(i, j, l)] += (inv_h * grid_.d3(k, l)) * c3;
                }
        return pairwise_sum(row_sum);
    }

private:
    void check_shape(const std::vector<Vec3>& u) const {
        if (u.size() != grid_.node_count()) throw DomainError("deformation shape does not match the energy grid");
    }

    PlateGrid grid_;
    EnergyDensity w_;
    double h_;
    int threads_;
    std::vector<Mat3> a_, a_inv_;
};

inline EnergyBreakdown evaluate_energy(const Deformation3D& u, const PrestrainSpec& spec, const EnergyDensity& w,
                                       double h, int threads = 1) {
    return PlateEnergy(u.grid, spec, w, h, threads).evaluate(u.values);
}

inline std::vector<Vec3> energy_gradient(const Deformation3D& u, const PrestrainSpec& spec, const EnergyDensity& w,
                                         double h, int threads = 1) {
    std::vector<Vec3> g;
    PlateEnergy(u.grid, spec, w, h, threads).value_and_gradient(u.values, g);
    return g;
}

struct MinimizerOptions {
    /// Relative gradient tolerance: stop when |g|_inf <= tol * |g0|_inf.
    double tol = 1e-8;
    int max_iter = 2000;
    int memory = 10;
    int threads = 1;
};

struct MinimizationResult {
    Deformation3D deformation;
    EnergyBreakdown energy;
    std::vector<LbfgsRecord> log;
    LbfgsStatus status = LbfgsStatus::max_iterations;
    double initial_energy = 0.0;
};

/// Approximates e_h = inf I_W^h by L-BFGS from u0. The returned energy never exceeds the energy of u0.
inline MinimizationResult minimize_energy(const Deformation3D& u0, const PrestrainSpec& spec, const EnergyDensity& w,
                                          double h, const MinimizerOptions& opts = {}) {
    const PlateEnergy energy(u0.grid, spec, w, h, opts.threads);
    const std::size_t n = u0.values.size();

    // Optimize the displacement from u0 so the unknowns stay small.
    std::vector<double> x(3 * n, 0.0);
    std::vector<Vec3> trial(n), grad;
    auto assemble = [&](const std::vector<double>& d) {
        for (std::size_t q = 0; q < n; ++q)
            trial[q] = u0.values[q] + Vec3{{d[3 * q], d[3 * q + 1], d[3 * q + 2]}};
    };
    auto objective = [&](const std::vector<double>& d, std::vector<double>& g) -> double {
        assemble(d);
        double f;
        try {
            f = energy.value_and_gradient(trial, grad);
        } catch (const DegenerateElementError&) {
            return std::numeric_limits<double>::infinity();
        }
        g.resize(3 * n);
        for (std::size_t q = 0; q < n; ++q)
            for (int c = 0; c < 3; ++c) g[3 * q + c] = grad[q][c];
        return f;
    };

    std::vector<double> g0;
    const double f0 = objective(x, g0);
    if (!std::isfinite(f0)) throw DegenerateElementError("minimizer: initial deformation is degenerate");
    LbfgsOptions lo;
    lo.memory = opts.memory;
    lo.max_iter = opts.max_iter;
    lo.grad_tol = opts.tol * detail::inf_norm(g0);
    const LbfgsResult r = lbfgs_minimize(x, objective, lo);

    assemble(x);
    MinimizationResult out;
    out.deformation = Deformation3D(u0.grid, trial);
    out.energy = energy.evaluate(trial);
    out.log = r.log;
    out.status = r.status;
    out.initial_energy = f0;
    return out;
}

/// V^h(x') = h^{-gamma/2} (thickness average of u - (x', 0)), one grid field per component.
inline std::array<GridScalarField, 3> scaled_displacement(const Deformation3D& u, const PrestrainSpec& spec, double h) {
    const PlateGrid& g = u.grid;
    const double s = std::pow(h, -0.5 * spec.gamma);
    std::array<GridScalarField, 3> out;
    for (auto& f : out) f = GridScalarField::zeros(g.omega(), g.n1(), g.n2());
    for (int j = 0; j < g.n2(); ++j)
        for (int i = 0; i < g.n1(); ++i) {
            Vec3 avg;
            for (int k = 0; k < g.m(); ++k) avg += g.xi_weight(k) * u.at(i, j, k);
            const Point2 p = g.node(i, j);
            avg -= Vec3{{p.x, p.y, 0.0}};
            for (int c = 0; c < 3; ++c) out[c].at(i, j) = s * avg[c];
        }
    return out;
}

struct RotationDiagnostic {
    /// Polar rotation of the thickness-averaged elastic tensor at each in-plane node, index j*n1 + i.
    std::vector<Mat3> rotations;
    /// (1/h) int |grad u - R A^h|^2 dx.
    double misfit = 0.0;
    /// Largest thickness-averaged pointwise misfit density.
    double max_local_misfit = 0.0;
};

inline RotationDiagnostic rotation_field_diagnostic(const Deformation3D& u, const PrestrainSpec& spec, double h,
                                                    const EnergyDensity& w = {}, int threads = 1) {
    const PlateEnergy energy(u.grid, spec, w, h, threads);
    const PlateGrid& g = u.grid;
    RotationDiagnostic out;
    out.rotations.resize(g.column_count());
    std::vector<double> local(g.column_count(), 0.0);
    std::vector<double> row_sum(g.n2(), 0.0);
    parallel_for(g.n2(), threads, [&](int j) {
        std::vector<double> acc;
        for (int i = 0; i < g.n1(); ++i) {
            Mat3 fbar;
            for (int k = 0; k < g.m(); ++k) fbar += g.xi_weight(k) * energy.elastic_tensor(u.values, i, j, k);
            const Mat3 r = polar_decompose(fbar).rotation;
            double dens = 0.0;
            for (int k = 0; k < g.m(); ++k)
                dens += g.xi_weight(k) *
                        frobenius2(energy.deformation_gradient(u.values, i, j, k) - r * energy.growth(i, j, k));
            const std::size_t c = static_cast<std::size_t>(j) * g.n1() + i;
            out.rotations[c] = r;
            local[c] = dens;
            acc.push_back(g.in_plane_weight(i, j) * dens);
        }
        row_sum[j] = pairwise_sum(acc);
    });
    out.misfit = pairwise_sum(row_sum);
    out.max_local_misfit = *std::max_element(local.begin(), local.end());
    return out;
}

}  // namespace prestrain
