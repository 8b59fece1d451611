#pragma once

// Analytic catalog fields on the midplate: scalar fields (out-of-plane
// displacements) and planar matrix fields (stretching and bending tensors).
// Every catalog term carries exact partial derivatives up to third order.

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "prestrain/errors.hpp"
#include "prestrain/tensor.hpp"

namespace prestrain {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/// Axis-aligned rectangle [x_lo, x_hi] x [y_lo, y_hi].
struct Rect {
    double x_lo = 0.0;
    double x_hi = 1.0;
    double y_lo = 0.0;
    double y_hi = 1.0;

    double width() const { return x_hi - x_lo; }
    double height() const { return y_hi - y_lo; }
    double area() const { return width() * height(); }

    void validate() const {
        if (!(x_hi > x_lo && y_hi > y_lo)) throw ConfigError("domain.rect must have positive area");
    }
};

/// x^px * y^py
struct Monomial {
    int px = 0;
    int py = 0;
};

/// sin(k1 x + k2 y + phase)
struct PlaneWave {
    double k1 = 0.0;
    double k2 = 0.0;
    double phase = 0.0;
};

/// sin(k1 x + p1) * sin(k2 y + p2)
struct TrigProduct {
    double k1 = 0.0;
    double p1 = 0.0;
    double k2 = 0.0;
    double p2 = 0.0;
};

using Basis = std::variant<Monomial, PlaneWave, TrigProduct>;

namespace detail {

inline double falling_power(int p, int a, double x) {
    if (a > p) return 0.0;
    double c = 1.0;
    for (int k = 0; k < a; ++k) c *= static_cast<double>(p - k);
    return c * std::pow(x, p - a);
}

inline double sin_derivative(int n, double theta) {
    return std::sin(theta + 0.5 * std::numbers::pi * n);
}

}  // namespace detail

/// d^(a+b) / dx^a dy^b of a basis function.
inline double partial(const Basis& basis, int a, int b, Point2 p) {
    return std::visit(
        [&](const auto& f) -> double {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, Monomial>) {
                return detail::falling_power(f.px, a, p.x) * detail::falling_power(f.py, b, p.y);
            } else if constexpr (std::is_same_v<T, PlaneWave>) {
                return std::pow(f.k1, a) * std::pow(f.k2, b) *
                       detail::sin_derivative(a + b, f.k1 * p.x + f.k2 * p.y + f.phase);
            } else {
                return std::pow(f.k1, a) * detail::sin_derivative(a, f.k1 * p.x + f.p1) *
                       std::pow(f.k2, b) * detail::sin_derivative(b, f.k2 * p.y + f.p2);
            }
        },
        basis);
}

inline int polynomial_degree(const Basis& basis) {
    if (const auto* m = std::get_if<Monomial>(&basis)) return m->px + m->py;
    return -1;
}

/// Value and partial derivatives of a scalar field up to third order.
struct ScalarJet {
    double value = 0.0;
    std::array<double, 2> grad{};
    Mat2 hessian{};
    std::array<double, 4> third{};  // d111, d112, d122, d222
};

struct ScalarTerm {
    double coef = 1.0;
    Basis basis = Monomial{};
};

/// Finite sum of catalog terms; polynomial terms limited to degree 6.
class AnalyticScalarField {
public:
    static constexpr int kMaxDegree = 6;

    AnalyticScalarField() = default;
    explicit AnalyticScalarField(std::vector<ScalarTerm> terms) : terms_(std::move(terms)) {
        for (const auto& t : terms_)
            if (polynomial_degree(t.basis) > kMaxDegree)
                throw ConfigError("scalar field: polynomial degree exceeds 6");
    }

    static AnalyticScalarField zero() { return AnalyticScalarField{}; }
    static AnalyticScalarField sin_sin(double k1, double k2, double amplitude = 1.0) {
        return AnalyticScalarField({{amplitude, TrigProduct{k1, 0.0, k2, 0.0}}});
    }

    const std::vector<ScalarTerm>& terms() const { return terms_; }

    double partial(int a, int b, Point2 p) const {
        double s = 0.0;
        for (const auto& t : terms_) s += t.coef * prestrain::partial(t.basis, a, b, p);
        return s;
    }

    double value(Point2 p) const { return partial(0, 0, p); }

    ScalarJet jet(Point2 p) const {
        ScalarJet j;
        j.value = partial(0, 0, p);
        j.grad = {partial(1, 0, p), partial(0, 1, p)};
        const double h12 = partial(1, 1, p);
        j.hessian = Mat2{{partial(2, 0, p), h12, h12, partial(0, 2, p)}};
        j.third = {partial(3, 0, p), partial(2, 1, p), partial(1, 2, p), partial(0, 3, p)};
        return j;
    }

    AnalyticScalarField operator+(const AnalyticScalarField& o) const {
        auto t = terms_;
        t.insert(t.end(), o.terms_.begin(), o.terms_.end());
        return AnalyticScalarField(std::move(t));
    }

    AnalyticScalarField scaled(double s) const {
        auto t = terms_;
        for (auto& term : t) term.coef *= s;
        return AnalyticScalarField(std::move(t));
    }

private:
    std::vector<ScalarTerm> terms_;
};

/// Node values on a uniform n1 x n2 tensor grid over a rectangle, index j*n1 + i.
struct GridScalarField {
    Rect omega;
    int n1 = 0;
    int n2 = 0;
    std::vector<double> values;

    GridScalarField() = default;
    GridScalarField(Rect r, int nx, int ny, std::vector<double> v)
        : omega(r), n1(nx), n2(ny), values(std::move(v)) {
        if (n1 < 3 || n2 < 3) throw DomainError("grid field: at least 3 nodes per axis required");
        if (values.size() != static_cast<std::size_t>(n1) * static_cast<std::size_t>(n2))
            throw DomainError("grid field: value count does not match grid shape");
        for (double x : values)
            if (!std::isfinite(x)) throw DomainError("grid field: non-finite value");
    }

    static GridScalarField zeros(Rect r, int nx, int ny) {
        return GridScalarField(r, nx, ny, std::vector<double>(static_cast<std::size_t>(nx) * ny, 0.0));
    }

    double dx() const { return omega.width() / (n1 - 1); }
    double dy() const { return omega.height() / (n2 - 1); }
    Point2 node(int i, int j) const { return {omega.x_lo + i * dx(), omega.y_lo + j * dy()}; }
    double& at(int i, int j) { return values[static_cast<std::size_t>(j) * n1 + i]; }
    double at(int i, int j) const { return values[static_cast<std::size_t>(j) * n1 + i]; }
};

/// An out-of-plane displacement: analytic catalog field or grid samples.
using ScalarField2D = std::variant<AnalyticScalarField, GridScalarField>;

inline GridScalarField sample(const AnalyticScalarField& f, Rect r, int n1, int n2) {
    GridScalarField g = GridScalarField::zeros(r, n1, n2);
    for (int j = 0; j < n2; ++j)
        for (int i = 0; i < n1; ++i) g.at(i, j) = f.value(g.node(i, j));
    return g;
}

struct MatrixTerm {
    Mat3 coef{};
    Basis basis = Monomial{};
};

/// Value and derivatives of a planar matrix field up to second order.
struct MatrixJet {
    Mat3 value{};
    std::array<Mat3, 2> d1{};  // d/dx, d/dy
    std::array<Mat3, 3> d2{};  // d11, d12, d22
};

/// M(x') = sum_k coef_k * basis_k(x'). Catalog kinds: constant, polynomial
/// (degree <= 4), and trig (plane waves).
class PlanarMatrixField {
public:
    static constexpr int kMaxDegree = 4;

    PlanarMatrixField() = default;
    explicit PlanarMatrixField(std::vector<MatrixTerm> terms) : terms_(std::move(terms)) {
        for (const auto& t : terms_)
            if (polynomial_degree(t.basis) > kMaxDegree)
                throw ConfigError("matrix field: polynomial degree exceeds 4");
    }

    static PlanarMatrixField zero() { return PlanarMatrixField{}; }
    static PlanarMatrixField constant(const Mat3& m) { return PlanarMatrixField({{m, Monomial{0, 0}}}); }

    const std::vector<MatrixTerm>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    Mat3 partial(int a, int b, Point2 p) const {
        Mat3 s;
        for (const auto& t : terms_) {
            const double phi = prestrain::partial(t.basis, a, b, p);
            if (phi != 0.0) s += phi * t.coef;
        }
        return s;
    }

    Mat3 value(Point2 p) const { return partial(0, 0, p); }

    MatrixJet jet(Point2 p) const {
        return {partial(0, 0, p),
                {partial(1, 0, p), partial(0, 1, p)},
                {partial(2, 0, p), partial(1, 1, p), partial(0, 2, p)}};
    }

    /// sup-norm estimate sampled on a grid; used for diagnostics only.
    double sup_norm(const Rect& r, int samples = 33) const {
        double m = 0.0;
        for (int j = 0; j < samples; ++j)
            for (int i = 0; i < samples; ++i) {
                const Point2 p{r.x_lo + r.width() * i / (samples - 1), r.y_lo + r.height() * j / (samples - 1)};
                m = std::max(m, frobenius(value(p)));
            }
        return m;
    }

private:
    std::vector<MatrixTerm> terms_;
};

}  // namespace prestrain
