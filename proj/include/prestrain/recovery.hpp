#pragma once

// Recovery sequences for a smooth out-of-plane displacement V3:
//
//   u^h(x', x3) = (x', 0) + (0, 0, h^{g/2} V3) + x3 (-h^{g/2} grad V3, 1) + (1/2) h^{g/2} x3^2 d1(x')
//   d1 = l(B) + c(-grad^2 V3 - (sym B)_{2x2})
//
// and the curve h -> I_W^h(u^h) / h^{gamma+2}, which tends to I_gamma(V3).

#include <cmath>
#include <optional>
#include <variant>
#include <vector>

#include "prestrain/errors.hpp"
#include "prestrain/fields.hpp"
#include "prestrain/fit.hpp"
#include "prestrain/limit2d.hpp"
#include "prestrain/material.hpp"
#include "prestrain/plate3d.hpp"
#include "prestrain/prestrain.hpp"

namespace prestrain {

struct RecoveryInput {
    AnalyticScalarField v3;
    PrestrainSpec spec;
    EnergyDensity w;

    RecoveryInput(AnalyticScalarField v, PrestrainSpec s, EnergyDensity wd)
        : v3(std::move(v)), spec(std::move(s)), w(wd) {}

    /// Grid-sampled fields are rejected: the warping gradient needs third derivatives of V3.
    RecoveryInput(const ScalarField2D& v, PrestrainSpec s, EnergyDensity wd) : spec(std::move(s)), w(wd) {
        const auto* a = std::get_if<AnalyticScalarField>(&v);
        if (!a) throw DomainError("recovery sequence requires an analytic V3 (third derivatives needed)");
        v3 = *a;
    }
};

struct WarpingJet {
    Vec3 value;
    std::array<Vec3, 2> grad;
};

inline Vec3 warping_from(const IsotropicModuli& m, const Mat3& b, const Mat2& hess) {
    return l_vector(b) + c_vector(m, -hess - sym(b.minor2()));
}

/// d1 and its in-plane gradient, by linearity of l and c.
inline WarpingJet warping_field(const RecoveryInput& inp, Point2 p) {
    const IsotropicModuli m = inp.w.quadratic_moduli();
    const ScalarJet v = inp.v3.jet(p);
    const MatrixJet b = inp.spec.B.jet(p);
    const auto& t = v.third;  // d111, d112, d122, d222
    const Mat2 dh1{{t[0], t[1], t[1], t[2]}};
    const Mat2 dh2{{t[1], t[2], t[2], t[3]}};
    WarpingJet out;
    out.value = warping_from(m, b.value, v.hessian);
    out.grad[0] = warping_from(m, b.d1[0], dh1);
    out.grad[1] = warping_from(m, b.d1[1], dh2);
    return out;
}

namespace detail {
inline Vec3 recovery_point(Point2 p, double hs, double x3, double v, const std::array<double, 2>& g, const Vec3& d) {
    return Vec3{{p.x - x3 * hs * g[0], p.y - x3 * hs * g[1], hs * v + x3}} + (0.5 * hs * x3 * x3) * d;
}
}  // namespace detail

inline Deformation3D build_recovery(const RecoveryInput& inp, double h, const PlateGrid& grid) {
    if (!(h > 0.0 && h <= 0.5)) throw DomainError("recovery sequence requires 0 < h <= 1/2");
    const double hs = std::pow(h, 0.5 * inp.spec.gamma);
    const IsotropicModuli m = inp.w.quadratic_moduli();
    std::vector<Vec3> values(grid.node_count());
    for (int j = 0; j < grid.n2(); ++j)
        for (int i = 0; i < grid.n1(); ++i) {
            const Point2 p = grid.node(i, j);
            const ScalarJet v = inp.v3.jet(p);
            const Vec3 d = warping_from(m, inp.spec.B.value(p), v.hessian);
            for (int k = 0; k < grid.m(); ++k)
                values[grid.index(i, j, k)] = detail::recovery_point(p, hs, h * grid.xi(k), v.value, v.grad, d);
        }
    return Deformation3D(grid, std::move(values));
}

/// Same construction from grid samples of V3 (derivatives by finite differences).
/// Used to seed the 3D minimizer from a discrete limit minimizer.
inline Deformation3D build_recovery_from_grid(const GridScalarField& v3, const PrestrainSpec& spec,
                                              const EnergyDensity& w, double h, const PlateGrid& grid) {
    if (!(h > 0.0 && h <= 0.5)) throw DomainError("recovery sequence requires 0 < h <= 1/2");
    if (v3.n1 != grid.n1() || v3.n2 != grid.n2())
        throw DomainError("grid V3 must share the in-plane grid of the plate");
    const double hs = std::pow(h, 0.5 * spec.gamma);
    const IsotropicModuli m = w.quadratic_moduli();
    std::vector<Vec3> values(grid.node_count());
    for (int j = 0; j < grid.n2(); ++j)
        for (int i = 0; i < grid.n1(); ++i) {
            const Point2 p = grid.node(i, j);
            const Vec3 d = warping_from(m, spec.B.value(p), fd_hessian(v3, i, j));
            const auto g = fd_gradient(v3, i, j);
            for (int k = 0; k < grid.m(); ++k)
                values[grid.index(i, j, k)] = detail::recovery_point(p, hs, h * grid.xi(k), v3.at(i, j), g, d);
        }
    return Deformation3D(grid, std::move(values));
}

/// Exact grad u^h of the recovery sequence at (x', x3), x3 physical.
inline Mat3 recovery_gradient(const RecoveryInput& inp, double h, Point2 p, double x3) {
    const double hs = std::pow(h, 0.5 * inp.spec.gamma);
    const ScalarJet v = inp.v3.jet(p);
    const WarpingJet d = warping_field(inp, p);
    const Mat2& hv = v.hessian;
    const Vec3 c1 = e1 + Vec3{{-x3 * hs * hv(0, 0), -x3 * hs * hv(0, 1), hs * v.grad[0]}} + (0.5 * hs * x3 * x3) * d.grad[0];
    const Vec3 c2 = e2 + Vec3{{-x3 * hs * hv(1, 0), -x3 * hs * hv(1, 1), hs * v.grad[1]}} + (0.5 * hs * x3 * x3) * d.grad[1];
    const Vec3 c3 = Vec3{{-hs * v.grad[0], -hs * v.grad[1], 1.0}} + (hs * x3) * d.value;
    return Mat3::from_columns(c1, c2, c3);
}

/// I_W^h of the recovery sequence using the exact gradient at the same quadrature points,
/// so model error can be separated from finite-difference error.
inline double recovery_energy_analytic(const RecoveryInput& inp, double h, const PlateGrid& grid) {
    std::vector<double> rows(grid.n2());
    for (int j = 0; j < grid.n2(); ++j) {
        std::vector<double> acc;
        for (int i = 0; i < grid.n1(); ++i)
            for (int k = 0; k < grid.m(); ++k) {
                const Point2 p = grid.node(i, j);
                const double x3 = h * grid.xi(k);
                const Mat3 f = recovery_gradient(inp, h, p, x3) * growth_tensor(inp.spec, h, p, x3).inverse;
                acc.push_back(grid.in_plane_weight(i, j) * grid.xi_weight(k) * density(inp.w, f));
            }
        rows[j] = pairwise_sum(acc);
    }
    return pairwise_sum(rows);
}

struct CurvePoint {
    double h = 0.0;
    double energy = 0.0;
    double rescaled = 0.0;
    double reference = 0.0;
    double abs_error = 0.0;
    /// Rescaled energy on the half-resolution grid (refinement check).
    double rescaled_coarse = 0.0;
};

struct RescaledCurve {
    std::vector<CurvePoint> points;
    double reference = 0.0;
    /// Fit of |rescaled - reference| against h; empty when fewer than 3 positive errors exist.
    std::optional<LogLogFit> fit;
    double max_refinement_change = 0.0;
};

struct CurveOptions {
    bool refinement_check = true;
    double refinement_tolerance = 0.10;
    int threads = 1;
};

inline RescaledCurve rescaled_energy_curve(const RecoveryInput& inp, const std::vector<double>& hs,
                                           const PlateGrid& grid, const CurveOptions& opts = {}) {
    for (std::size_t i = 1; i < hs.size(); ++i)
        if (!(hs[i] < hs[i - 1])) throw DomainError("h list must be strictly decreasing");
    RescaledCurve curve;
    curve.reference = evaluate_Igamma(inp.v3, LimitFunctional{inp.spec, inp.w});
    const PlateGrid coarse = grid.coarsened();
    std::vector<std::pair<double, double>> errors;
    for (double h : hs) {
        CurvePoint pt;
        pt.h = h;
        const double scale = std::pow(h, inp.spec.gamma + 2.0);
        pt.energy = evaluate_energy(build_recovery(inp, h, grid), inp.spec, inp.w, h, opts.threads).total;
        pt.rescaled = pt.energy / scale;
        pt.reference = curve.reference;
        pt.abs_error = std::abs(pt.rescaled - curve.reference);
        if (opts.refinement_check) {
            pt.rescaled_coarse =
                evaluate_energy(build_recovery(inp, h, coarse), inp.spec, inp.w, h, opts.threads).total / scale;
            const double denom = std::abs(pt.rescaled);
            const double change = denom > 0.0 ? std::abs(pt.rescaled - pt.rescaled_coarse) / denom
                                              : (pt.rescaled_coarse == 0.0 ? 0.0 : 1.0);
            curve.max_refinement_change = std::max(curve.max_refinement_change, change);
            if (change > opts.refinement_tolerance)
                throw RefinementError("rescaled energy at h=" + std::to_string(h) + " changes by " +
                                      std::to_string(100.0 * change) + "% under grid doubling");
        }
        if (pt.abs_error > 0.0) errors.emplace_back(h, pt.abs_error);
        curve.points.push_back(pt);
    }
    if (errors.size() >= 3) curve.fit = fit_loglog_slope(errors);
    return curve;
}

}  // namespace prestrain
