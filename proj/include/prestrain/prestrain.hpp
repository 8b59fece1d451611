#pragma once

// Growth tensor A^h = I + h^gamma S + h^(gamma/2) x3 B, the induced metric
// G^h = (A^h)^T A^h, and the linearized Gauss curvature diagnostic.

#include <cmath>
#include <string>

#include "prestrain/errors.hpp"
#include "prestrain/fields.hpp"
#include "prestrain/tensor.hpp"

namespace prestrain {

struct PrestrainSpec {
    PlanarMatrixField S;  // stretching
    PlanarMatrixField B;  // bending
    double gamma = 3.0;
    Rect omega{};

    void validate() const {
        if (!(gamma > 2.0))
            throw ConfigError("prestrain.gamma must satisfy gamma > 2 (got " + std::to_string(gamma) + ")");
        omega.validate();
    }
};

struct GrowthTensor {
    Mat3 value;
    Mat3 inverse;
};

namespace detail {
inline void check_admissible(double h, double x3) {
    if (!(h > 0.0)) throw DomainError("thickness h must be positive");
    if (std::abs(x3) > 0.5 * h * (1.0 + 1e-12)) throw DomainError("|x3| exceeds h/2");
}
}  // namespace detail

/// A^h at (x', x3) with x3 the physical through-thickness coordinate.
inline GrowthTensor growth_tensor(const PrestrainSpec& spec, double h, Point2 xp, double x3) {
    detail::check_admissible(h, x3);
    Mat3 a = Mat3::identity();
    if (!spec.S.is_zero()) a += std::pow(h, spec.gamma) * spec.S.value(xp);
    if (!spec.B.is_zero()) a += (std::pow(h, 0.5 * spec.gamma) * x3) * spec.B.value(xp);
    if (!(a.det() > 1e-10)) throw SingularMatrixError("growth tensor: det A^h <= 1e-10 (misconfigured field?)");
    return {a, inverse(a)};
}

/// G^h = (A^h)^T A^h.
inline Mat3 metric(const PrestrainSpec& spec, double h, Point2 xp, double x3) {
    const Mat3 a = growth_tensor(spec, h, xp, x3).value;
    return a.transpose() * a;
}

/// I + 2 h^gamma sym S + 2 h^(gamma/2) x3 sym B: the metric up to its quadratic terms.
inline Mat3 metric_truncation(const PrestrainSpec& spec, double h, Point2 xp, double x3) {
    detail::check_admissible(h, x3);
    return Mat3::identity() + (2.0 * std::pow(h, spec.gamma)) * sym(spec.S.value(xp)) +
           (2.0 * std::pow(h, 0.5 * spec.gamma) * x3) * sym(spec.B.value(xp));
}

/// f = -curl^T curl M for M = (sym field)_{2x2}:
/// f = -(d22 M11 - 2 d12 M12 + d11 M22).
inline double linearized_gauss_curvature(const PlanarMatrixField& field, Point2 xp) {
    const Mat3 d11 = field.partial(2, 0, xp);
    const Mat3 d12 = field.partial(1, 1, xp);
    const Mat3 d22 = field.partial(0, 2, xp);
    const double m11_22 = d22(0, 0);
    const double m12_12 = 0.5 * (d12(0, 1) + d12(1, 0));
    const double m22_11 = d11(1, 1);
    return -(m11_22 - 2.0 * m12_12 + m22_11);
}

/// Curvature operator applied to (sym B)_{2x2}, sampled on an n1 x n2 grid over omega.
/// A vanishing field means (sym B)_{2x2} is a Hessian and the limit energy can reach zero.
inline GridScalarField bending_compatibility(const PrestrainSpec& spec, int n1, int n2) {
    GridScalarField g = GridScalarField::zeros(spec.omega, n1, n2);
    for (int j = 0; j < n2; ++j)
        for (int i = 0; i < n1; ++i) g.at(i, j) = linearized_gauss_curvature(spec.B, g.node(i, j));
    return g;
}

}  // namespace prestrain
