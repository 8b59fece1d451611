#pragma once

// Fixed-size 2x2 / 3x3 linear algebra and SO(3) utilities.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <utility>

#include "prestrain/errors.hpp"

namespace prestrain {

struct Vec3 {
    std::array<double, 3> v{0.0, 0.0, 0.0};

    constexpr double& operator[](std::size_t i) { return v[i]; }
    constexpr double operator[](std::size_t i) const { return v[i]; }

    constexpr Vec3& operator+=(const Vec3& o) {
        for (std::size_t i = 0; i < 3; ++i) v[i] += o.v[i];
        return *this;
    }
    constexpr Vec3& operator-=(const Vec3& o) {
        for (std::size_t i = 0; i < 3; ++i) v[i] -= o.v[i];
        return *this;
    }
    constexpr Vec3& operator*=(double s) {
        for (auto& x : v) x *= s;
        return *this;
    }
    friend constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
    friend constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
    friend constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
    friend constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
    friend constexpr Vec3 operator-(Vec3 a) { return a *= -1.0; }
    friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr double dot(const Vec3& a, const Vec3& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]}};
}

inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

/// 2x2 real matrix, row-major.
struct Mat2 {
    std::array<double, 4> a{0.0, 0.0, 0.0, 0.0};

    static constexpr Mat2 identity() { return Mat2{{1.0, 0.0, 0.0, 1.0}}; }
    static constexpr Mat2 zero() { return Mat2{}; }

    constexpr double& operator()(std::size_t i, std::size_t j) { return a[2 * i + j]; }
    constexpr double operator()(std::size_t i, std::size_t j) const { return a[2 * i + j]; }

    constexpr Mat2& operator+=(const Mat2& o) {
        for (std::size_t i = 0; i < 4; ++i) a[i] += o.a[i];
        return *this;
    }
    constexpr Mat2& operator-=(const Mat2& o) {
        for (std::size_t i = 0; i < 4; ++i) a[i] -= o.a[i];
        return *this;
    }
    constexpr Mat2& operator*=(double s) {
        for (auto& x : a) x *= s;
        return *this;
    }
    friend constexpr Mat2 operator+(Mat2 x, const Mat2& y) { return x += y; }
    friend constexpr Mat2 operator-(Mat2 x, const Mat2& y) { return x -= y; }
    friend constexpr Mat2 operator-(Mat2 x) { return x *= -1.0; }
    friend constexpr Mat2 operator*(double s, Mat2 x) { return x *= s; }
    friend constexpr Mat2 operator*(Mat2 x, double s) { return x *= s; }
    friend constexpr bool operator==(const Mat2&, const Mat2&) = default;

    constexpr Mat2 transpose() const { return Mat2{{a[0], a[2], a[1], a[3]}}; }
    constexpr double trace() const { return a[0] + a[3]; }
    constexpr double det() const { return a[0] * a[3] - a[1] * a[2]; }
};

constexpr Mat2 sym(const Mat2& f) {
    return Mat2{{f.a[0], 0.5 * (f.a[1] + f.a[2]), 0.5 * (f.a[1] + f.a[2]), f.a[3]}};
}

constexpr double frobenius2(const Mat2& f) {
    double s = 0.0;
    for (double x : f.a) s += x * x;
    return s;
}

/// 3x3 real matrix, row-major.
struct Mat3 {
    std::array<double, 9> a{0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};

    static constexpr Mat3 identity() { return Mat3{{1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0}}; }
    static constexpr Mat3 zero() { return Mat3{}; }
    static constexpr Mat3 diag(double d0, double d1, double d2) {
        return Mat3{{d0, 0.0, 0.0, 0.0, d1, 0.0, 0.0, 0.0, d2}};
    }
    static constexpr Mat3 from_columns(const Vec3& c0, const Vec3& c1, const Vec3& c2) {
        return Mat3{{c0[0], c1[0], c2[0], c0[1], c1[1], c2[1], c0[2], c1[2], c2[2]}};
    }

    constexpr double& operator()(std::size_t i, std::size_t j) { return a[3 * i + j]; }
    constexpr double operator()(std::size_t i, std::size_t j) const { return a[3 * i + j]; }

    constexpr Vec3 col(std::size_t j) const { return {{a[j], a[3 + j], a[6 + j]}}; }
    constexpr Vec3 row(std::size_t i) const { return {{a[3 * i], a[3 * i + 1], a[3 * i + 2]}}; }
    constexpr void set_col(std::size_t j, const Vec3& c) {
        a[j] = c[0];
        a[3 + j] = c[1];
        a[6 + j] = c[2];
    }

    constexpr Mat3& operator+=(const Mat3& o) {
        for (std::size_t i = 0; i < 9; ++i) a[i] += o.a[i];
        return *this;
    }
    constexpr Mat3& operator-=(const Mat3& o) {
        for (std::size_t i = 0; i < 9; ++i) a[i] -= o.a[i];
        return *this;
    }
    constexpr Mat3& operator*=(double s) {
        for (auto& x : a) x *= s;
        return *this;
    }
    friend constexpr Mat3 operator+(Mat3 x, const Mat3& y) { return x += y; }
    friend constexpr Mat3 operator-(Mat3 x, const Mat3& y) { return x -= y; }
    friend constexpr Mat3 operator-(Mat3 x) { return x *= -1.0; }
    friend constexpr Mat3 operator*(double s, Mat3 x) { return x *= s; }
    friend constexpr Mat3 operator*(Mat3 x, double s) { return x *= s; }
    friend constexpr bool operator==(const Mat3&, const Mat3&) = default;

    friend constexpr Mat3 operator*(const Mat3& x, const Mat3& y) {
        Mat3 r;
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t k = 0; k < 3; ++k) {
                const double xik = x(i, k);
                for (std::size_t j = 0; j < 3; ++j) r(i, j) += xik * y(k, j);
            }
        return r;
    }
    friend constexpr Vec3 operator*(const Mat3& x, const Vec3& v) {
        return {{x(0, 0) * v[0] + x(0, 1) * v[1] + x(0, 2) * v[2],
                 x(1, 0) * v[0] + x(1, 1) * v[1] + x(1, 2) * v[2],
                 x(2, 0) * v[0] + x(2, 1) * v[1] + x(2, 2) * v[2]}};
    }

    constexpr Mat3 transpose() const {
        return Mat3{{a[0], a[3], a[6], a[1], a[4], a[7], a[2], a[5], a[8]}};
    }
    constexpr double trace() const { return a[0] + a[4] + a[8]; }
    constexpr double det() const {
        return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) +
               a[2] * (a[3] * a[7] - a[4] * a[6]);
    }

    /// Principal 2x2 minor F_{2x2}.
    constexpr Mat2 minor2() const { return Mat2{{a[0], a[1], a[3], a[4]}}; }

    bool is_finite() const {
        return std::all_of(a.begin(), a.end(), [](double x) { return std::isfinite(x); });
    }
};

/// Frobenius inner product F:G.
constexpr double ddot(const Mat3& f, const Mat3& g) {
    double s = 0.0;
    for (std::size_t i = 0; i < 9; ++i) s += f.a[i] * g.a[i];
    return s;
}

constexpr double frobenius2(const Mat3& f) { return ddot(f, f); }
inline double frobenius(const Mat3& f) { return std::sqrt(frobenius2(f)); }

constexpr Mat3 sym(const Mat3& f) {
    Mat3 r;
    for (std::size_t i = 0; i < 3; ++i) {
        r(i, i) = f(i, i);
        for (std::size_t j = i + 1; j < 3; ++j) {
            const double s = 0.5 * (f(i, j) + f(j, i));
            r(i, j) = s;
            r(j, i) = s;
        }
    }
    return r;
}

constexpr Mat3 skew(const Mat3& f) { return 0.5 * (f - f.transpose()); }

/// a (x) b, i.e. the matrix a b^T.
constexpr Mat3 outer(const Vec3& a, const Vec3& b) {
    Mat3 r;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) r(i, j) = a[i] * b[j];
    return r;
}

/// F* : embeds a 2x2 matrix as the upper-left block of a 3x3 matrix, zero elsewhere.
constexpr Mat3 star(const Mat2& f) {
    return Mat3{{f.a[0], f.a[1], 0.0, f.a[2], f.a[3], 0.0, 0.0, 0.0, 0.0}};
}

inline constexpr Vec3 e1{{1.0, 0.0, 0.0}};
inline constexpr Vec3 e2{{0.0, 1.0, 0.0}};
inline constexpr Vec3 e3{{0.0, 0.0, 1.0}};

/// Inverse by cofactors. Throws SingularMatrixError when |det| <= tol.
inline Mat3 inverse(const Mat3& f, double tol = 0.0) {
    const double d = f.det();
    if (!(std::abs(d) > tol)) throw SingularMatrixError("3x3 inverse: determinant below tolerance");
    Mat3 c;
    c(0, 0) = f(1, 1) * f(2, 2) - f(1, 2) * f(2, 1);
    c(0, 1) = f(0, 2) * f(2, 1) - f(0, 1) * f(2, 2);
    c(0, 2) = f(0, 1) * f(1, 2) - f(0, 2) * f(1, 1);
    c(1, 0) = f(1, 2) * f(2, 0) - f(1, 0) * f(2, 2);
    c(1, 1) = f(0, 0) * f(2, 2) - f(0, 2) * f(2, 0);
    c(1, 2) = f(0, 2) * f(1, 0) - f(0, 0) * f(1, 2);
    c(2, 0) = f(1, 0) * f(2, 1) - f(1, 1) * f(2, 0);
    c(2, 1) = f(0, 1) * f(2, 0) - f(0, 0) * f(2, 1);
    c(2, 2) = f(0, 0) * f(1, 1) - f(0, 1) * f(1, 0);
    return (1.0 / d) * c;
}

/// Exponential of a skew-symmetric matrix (Rodrigues).
inline Mat3 exp_skew(const Mat3& k) {
    const Vec3 w{{k(2, 1), k(0, 2), k(1, 0)}};
    const double theta = norm(w);
    if (theta < 1e-300) return Mat3::identity();
    const Mat3 kn = (1.0 / theta) * skew(k);
    return Mat3::identity() + std::sin(theta) * kn + (1.0 - std::cos(theta)) * (kn * kn);
}

/// Eigen-decomposition of a symmetric 3x3 matrix.
struct SymmetricEigen {
    std::array<double, 3> values;  // ascending
    Mat3 vectors;                  // columns are unit eigenvectors
};

/// Cyclic Jacobi rotations; converges to full double precision for 3x3 input.
inline SymmetricEigen symmetric_eigen(const Mat3& s_in) {
    Mat3 s = sym(s_in);
    Mat3 v = Mat3::identity();
    for (int sweep = 0; sweep < 64; ++sweep) {
        const double off = s(0, 1) * s(0, 1) + s(0, 2) * s(0, 2) + s(1, 2) * s(1, 2);
        const double diag = s(0, 0) * s(0, 0) + s(1, 1) * s(1, 1) + s(2, 2) * s(2, 2);
        if (off == 0.0 || off <= 1e-36 * diag) break;
        for (std::size_t p = 0; p < 2; ++p) {
            for (std::size_t q = p + 1; q < 3; ++q) {
                const double apq = s(p, q);
                if (apq == 0.0) continue;
                const double theta = (s(q, q) - s(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;
                // s <- J^T s J with J the (p,q) rotation
                for (std::size_t k = 0; k < 3; ++k) {
                    const double skp = s(k, p);
                    const double skq = s(k, q);
                    s(k, p) = c * skp - sn * skq;
                    s(k, q) = sn * skp + c * skq;
                }
                for (std::size_t k = 0; k < 3; ++k) {
                    const double spk = s(p, k);
                    const double sqk = s(q, k);
                    s(p, k) = c * spk - sn * sqk;
                    s(q, k) = sn * spk + c * sqk;
                }
                for (std::size_t k = 0; k < 3; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - sn * vkq;
                    v(k, q) = sn * vkp + c * vkq;
                }
            }
        }
    }
    std::array<std::size_t, 3> order{0, 1, 2};
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return s(i, i) < s(j, j); });
    SymmetricEigen out;
    for (std::size_t k = 0; k < 3; ++k) {
        out.values[k] = s(order[k], order[k]);
        out.vectors.set_col(k, v.col(order[k]));
    }
    return out;
}

struct PolarFactors {
    Mat3 rotation;
    Mat3 stretch;
};

/// F = R U with R in SO(3) and U symmetric positive definite. R is the nearest
/// rotation to F. The stretch comes from the eigen-decomposition of F^T F.
inline PolarFactors polar_decompose(const Mat3& f) {
    const double scale = frobenius(f);
    const double d = f.det();
    if (!(d > 0.0)) throw SingularMatrixError("polar decomposition: det F <= 0");
    const SymmetricEigen eig = symmetric_eigen(f.transpose() * f);
    std::array<double, 3> sigma{};
    for (std::size_t k = 0; k < 3; ++k) sigma[k] = std::sqrt(std::max(eig.values[k], 0.0));
    if (!(sigma[0] > 1e-12 * scale)) throw SingularMatrixError("polar decomposition: near-singular input");
    Mat3 u, u_inv;
    for (std::size_t k = 0; k < 3; ++k) {
        const Vec3 vk = eig.vectors.col(k);
        u += sigma[k] * outer(vk, vk);
        u_inv += (1.0 / sigma[k]) * outer(vk, vk);
    }
    Mat3 r = f * u_inv;
    // One Newton step on R <- (R + R^-T)/2 polishes orthogonality to round-off.
    r = 0.5 * (r + inverse(r).transpose());
    return {r, sym(u)};
}

/// Singular values of F in ascending order.
inline std::array<double, 3> singular_values(const Mat3& f) {
    const SymmetricEigen eig = symmetric_eigen(f.transpose() * f);
    return {std::sqrt(std::max(eig.values[0], 0.0)), std::sqrt(std::max(eig.values[1], 0.0)),
            std::sqrt(std::max(eig.values[2], 0.0))};
}

/// Squared Frobenius distance from F to SO(3).
inline double dist2_SO3(const Mat3& f) {
    // Eigenvalues of F^T F - I give sigma^2 - 1 without cancellation near SO(3).
    const SymmetricEigen eig = symmetric_eigen(f.transpose() * f - Mat3::identity());
    std::array<double, 3> dev{};  // sigma_i - 1
    for (std::size_t k = 0; k < 3; ++k) {
        const double lam = std::max(eig.values[k], -1.0);
        dev[k] = lam / (std::sqrt(1.0 + lam) + 1.0);
    }
    double s = dev[0] * dev[0] + dev[1] * dev[1] + dev[2] * dev[2];
    if (f.det() < 0.0) {
        // Reflect the smallest singular value: (sigma_min + 1)^2 replaces (sigma_min - 1)^2.
        const double smin = 1.0 + dev[0];
        s += (smin + 1.0) * (smin + 1.0) - dev[0] * dev[0];
    }
    return s;
}

}  // namespace prestrain
