#pragma once

// Energy densities W, their quadratic forms Q3 = D^2 W(I), the relaxed planar
// form Q2, and the linear maps c(.) and l(.) of the recovery construction.

#include <cmath>
#include <string>
#include <string_view>

#include "prestrain/errors.hpp"
#include "prestrain/tensor.hpp"

namespace prestrain {

struct IsotropicModuli {
    double mu = 1.0;
    double lambda = 1.0;

    /// Throws ConfigError unless mu > 0, lambda >= 0 and 2 mu + lambda > 0.
    void validate() const {
        if (!(mu > 0.0)) throw ConfigError("material.mu must be > 0");
        if (!(lambda >= 0.0)) throw ConfigError("material.lambda must be >= 0");
        if (!(2.0 * mu + lambda > 0.0)) throw ConfigError("material: 2 mu + lambda must be > 0");
    }

    /// Coefficient of (tr F)^2 in the plane-stress form Q2.
    double plane_stress_lambda() const { return 2.0 * mu * lambda / (2.0 * mu + lambda); }
};

enum class DensityKind { svk, dist2 };

inline std::string_view to_string(DensityKind k) { return k == DensityKind::svk ? "svk" : "dist2"; }

inline DensityKind parse_density_kind(std::string_view s) {
    if (s == "svk") return DensityKind::svk;
    if (s == "dist2") return DensityKind::dist2;
    throw ConfigError("material.kind must be one of {svk, dist2}, got '" + std::string(s) + "'");
}

/// Either St. Venant-Kirchhoff with isotropic moduli, or dist^2(F, SO(3)).
struct EnergyDensity {
    DensityKind kind = DensityKind::svk;
    IsotropicModuli moduli{};

    static EnergyDensity svk(double mu, double lambda) { return {DensityKind::svk, {mu, lambda}}; }
    static EnergyDensity dist2() { return {DensityKind::dist2, {1.0, 0.0}}; }

    /// Moduli of Q3 = D^2 W(I). dist^2 linearizes to 2|sym F|^2, i.e. mu = 1, lambda = 0.
    IsotropicModuli quadratic_moduli() const {
        return kind == DensityKind::svk ? moduli : IsotropicModuli{1.0, 0.0};
    }

    /// Constant c with W(F) >= c dist^2(F, SO(3)) whenever dist(F, SO(3)) <= 1/2 and det F > 0.
    /// For svk, W >= (mu/4) sum (s_i - 1)^2 (s_i + 1)^2 and s_i >= 1/2 there.
    double nondegeneracy_constant() const {
        return kind == DensityKind::svk ? 0.5625 * moduli.mu : 1.0;
    }
};

namespace detail {
inline void require_finite(const Mat3& f) {
    if (!f.is_finite()) throw DomainError("energy density: non-finite deformation gradient");
}
}  // namespace detail

/// W(F). svk: (mu/4)|F^T F - I|^2 + (lambda/8) tr(F^T F - I)^2.
inline double density(const EnergyDensity& w, const Mat3& f) {
    detail::require_finite(f);
    if (w.kind == DensityKind::dist2) return dist2_SO3(f);
    const Mat3 e = f.transpose() * f - Mat3::identity();
    const double tr = e.trace();
    return 0.25 * w.moduli.mu * frobenius2(e) + 0.125 * w.moduli.lambda * tr * tr;
}

/// dW/dF.
inline Mat3 density_gradient(const EnergyDensity& w, const Mat3& f) {
    detail::require_finite(f);
    if (w.kind == DensityKind::dist2) {
        const PolarFactors pf = polar_decompose(f);
        return 2.0 * (f - pf.rotation);
    }
    const Mat3 e = f.transpose() * f - Mat3::identity();
    const Mat3 s = w.moduli.mu * e + (0.5 * w.moduli.lambda * e.trace()) * Mat3::identity();
    return f * s;
}

inline double q3(const IsotropicModuli& m, const Mat3& f) {
    const double tr = f.trace();
    return 2.0 * m.mu * frobenius2(sym(f)) + m.lambda * tr * tr;
}

inline double q3(const EnergyDensity& w, const Mat3& f) { return q3(w.quadratic_moduli(), f); }

/// min { Q3(G) : G_{2x2} = F } in closed form for isotropic Q3.
inline double q2(const IsotropicModuli& m, const Mat2& f) {
    const double tr = f.trace();
    return 2.0 * m.mu * frobenius2(sym(f)) + m.plane_stress_lambda() * tr * tr;
}

inline double q2(const EnergyDensity& w, const Mat2& f) { return q2(w.quadratic_moduli(), f); }

/// The unique c with Q2(F) = Q3(F* + sym(c (x) e3)); linear in F.
inline Vec3 c_vector(const IsotropicModuli& m, const Mat2& f) {
    return {{0.0, 0.0, -m.lambda * f.trace() / (2.0 * m.mu + m.lambda)}};
}

inline Vec3 c_vector(const EnergyDensity& w, const Mat2& f) { return c_vector(w.quadratic_moduli(), f); }

/// The unique l with sym(F - (F_{2x2})*) = sym(l (x) e3).
constexpr Vec3 l_vector(const Mat3& f) {
    return {{f(0, 2) + f(2, 0), f(1, 2) + f(2, 1), f(2, 2)}};
}

}  // namespace prestrain
