#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "prestrain/material.hpp"
#include "prestrain/q2_oracle.hpp"

using namespace prestrain;

namespace {

Mat3 random_mat(std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Mat3 m;
    for (auto& x : m.a) x = u(rng);
    return m;
}

Mat3 basis(int k) {
    Mat3 e;
    e.a[k] = 1.0;
    return e;
}

/// Exact minimum of the quadratic c -> Q3(F* + c (x) e3), reconstructed from function values only.
std::pair<double, Eigen::Vector3d> quadratic_fit_minimum(const IsotropicModuli& m, const Mat2& f) {
    auto obj = [&](const Eigen::Vector3d& c) {
        Mat3 g = star(f);
        for (int i = 0; i < 3; ++i) g(i, 2) += c(i);
        return q3(m, g);
    };
    const Eigen::Vector3d zero = Eigen::Vector3d::Zero();
    const double f0 = obj(zero);
    Eigen::Matrix3d hess;
    Eigen::Vector3d grad;
    for (int i = 0; i < 3; ++i) {
        const Eigen::Vector3d ei = Eigen::Vector3d::Unit(i);
        grad(i) = 0.5 * (obj(ei) - obj(-ei));
        for (int j = 0; j < 3; ++j) {
            const Eigen::Vector3d ej = Eigen::Vector3d::Unit(j);
            hess(i, j) = obj(ei + ej) - obj(ei) - obj(ej) + f0;
        }
    }
    const Eigen::Vector3d c = -hess.ldlt().solve(grad);
    return {obj(c), c};
}

}  // namespace

TEST(Material, SvkVanishesOnRotationsAndIsFrameIndifferent) {
    std::mt19937_64 rng(11);
    const EnergyDensity w = EnergyDensity::svk(1.3, 0.7);
    for (int t = 0; t < 50; ++t) {
        const Mat3 r = exp_skew(skew(random_mat(rng, 3.0)));
        const Mat3 f = Mat3::identity() + 0.3 * random_mat(rng);
        EXPECT_LT(density(w, r), 1e-28);
        EXPECT_NEAR(density(w, r * f), density(w, f), 1e-13);
        EXPECT_NEAR(density(EnergyDensity::dist2(), r * f), density(EnergyDensity::dist2(), f), 1e-12);
    }
}

TEST(Material, GradientMatchesCentralDifferences) {
    std::mt19937_64 rng(12);
    for (const EnergyDensity w : {EnergyDensity::svk(2.0, 1.5), EnergyDensity::dist2()}) {
        for (int t = 0; t < 20; ++t) {
            const Mat3 f = Mat3::identity() + 0.4 * random_mat(rng);
            const Mat3 g = density_gradient(w, f);
            for (int k = 0; k < 9; ++k) {
                const double s = 1e-6;
                const double fd = (density(w, f + s * basis(k)) - density(w, f - s * basis(k))) / (2.0 * s);
                EXPECT_NEAR(g.a[k], fd, 1e-7 * (1.0 + std::abs(fd))) << to_string(w.kind) << " component " << k;
            }
        }
    }
}

TEST(Material, QuadraticFormIsSecondDerivativeAtIdentity) {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> umu(0.5, 4.0), ula(0.0, 4.0);
    for (int t = 0; t < 20; ++t) {
        const EnergyDensity w = t % 4 == 3 ? EnergyDensity::dist2() : EnergyDensity::svk(umu(rng), ula(rng));
        const Mat3 f = random_mat(rng);
        const double s = 1e-4;
        const Mat3 i3 = Mat3::identity();
        const double fd = (density(w, i3 + s * f) + density(w, i3 - s * f) - 2.0 * density(w, i3)) / (s * s);
        EXPECT_NEAR(fd, q3(w, f), 1e-6 * q3(w, f));
    }
}

TEST(Material, QuadraticFormDependsOnlyOnSymmetricPart) {
    std::mt19937_64 rng(14);
    const IsotropicModuli m{1.7, 0.4};
    for (int t = 0; t < 20; ++t) {
        const Mat3 f = random_mat(rng);
        EXPECT_NEAR(q3(m, f), q3(m, sym(f)), 1e-13);
        EXPECT_NEAR(q3(m, skew(f)), 0.0, 1e-13);
    }
}

TEST(Material, Q2MatchesTwoIndependentRelaxations) {
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> ue(-2.0, 2.0), umu(0.5, 4.0), ula(0.0, 4.0);
    for (int t = 0; t < 300; ++t) {
        const IsotropicModuli m{umu(rng), ula(rng)};
        const double b = ue(rng);
        const Mat2 f{{ue(rng), b, b, ue(rng)}};
        const auto [value, argmin] = quadratic_fit_minimum(m, f);
        EXPECT_NEAR(q2(m, f), value, 1e-9);
        const Vec3 c = c_vector(m, f);
        for (int i = 0; i < 3; ++i) EXPECT_NEAR(c[i], argmin(i), 1e-9);
        const Q2Minimum bf = brute_force_q2(m, f);
        EXPECT_NEAR(bf.value, value, 1e-8);
    }
}

TEST(Material, Q2ForDistanceDensityIsTwiceSymmetricNorm) {
    const Mat2 f{{0.3, -0.2, -0.2, 1.1}};
    EXPECT_NEAR(q2(EnergyDensity::dist2(), f), 2.0 * frobenius2(sym(f)), 1e-15);
}

TEST(Material, LVectorRecoversOutOfPlaneSymmetricPart) {
    std::mt19937_64 rng(16);
    for (int t = 0; t < 20; ++t) {
        const Mat3 f = random_mat(rng);
        const Vec3 l = l_vector(f);
        EXPECT_LT(frobenius(sym(f - star(f.minor2())) - sym(outer(l, e3))), 1e-14);
    }
}

TEST(Material, NondegeneracyHoldsNearRotations) {
    std::mt19937_64 rng(17);
    for (const EnergyDensity w : {EnergyDensity::svk(1.0, 1.0), EnergyDensity::svk(0.5, 3.0), EnergyDensity::dist2()}) {
        const double c = w.nondegeneracy_constant();
        int tested = 0;
        while (tested < 2000) {
            const Mat3 r = exp_skew(skew(random_mat(rng, 3.0)));
            const Mat3 f = r * (Mat3::identity() + 0.5 * random_mat(rng));
            if (f.det() <= 0.0 || dist2_SO3(f) > 0.25) continue;
            ++tested;
            EXPECT_GE(density(w, f), c * dist2_SO3(f) * (1.0 - 1e-12));
        }
    }
}

TEST(Material, NonFiniteInputIsADomainError) {
    Mat3 f = Mat3::identity();
    f(1, 2) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(density(EnergyDensity::svk(1, 1), f), DomainError);
    EXPECT_THROW(density_gradient(EnergyDensity::dist2(), f), DomainError);
}

TEST(Material, ModuliValidation) {
    EXPECT_THROW((IsotropicModuli{0.0, 1.0}.validate()), ConfigError);
    EXPECT_THROW((IsotropicModuli{1.0, -0.5}.validate()), ConfigError);
    EXPECT_NO_THROW((IsotropicModuli{1.0, 0.0}.validate()));
    EXPECT_THROW(parse_density_kind("neo-hookean"), ConfigError);
}
