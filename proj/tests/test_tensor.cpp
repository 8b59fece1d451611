#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "prestrain/tensor.hpp"

using namespace prestrain;

namespace {

Eigen::Matrix3d to_eigen(const Mat3& f) {
    Eigen::Matrix3d m;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m(i, j) = f(i, j);
    return m;
}

Mat3 random_mat(std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Mat3 m;
    for (auto& x : m.a) x = u(rng);
    return m;
}

double max_abs_diff(const Mat3& a, const Eigen::Matrix3d& b) {
    double d = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) d = std::max(d, std::abs(a(i, j) - b(i, j)));
    return d;
}

}  // namespace

TEST(Tensor, ProductAndTransposeAgreeWithEigen) {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 50; ++t) {
        const Mat3 a = random_mat(rng), b = random_mat(rng);
        EXPECT_LT(max_abs_diff(a * b, to_eigen(a) * to_eigen(b)), 1e-14);
        EXPECT_LT(max_abs_diff(a.transpose(), to_eigen(a).transpose()), 0.0 + 1e-300);
        EXPECT_NEAR(a.det(), to_eigen(a).determinant(), 1e-13);
        EXPECT_NEAR(ddot(a, b), (to_eigen(a).array() * to_eigen(b).array()).sum(), 1e-14);
    }
}

TEST(Tensor, InverseAgreesWithEigen) {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 100; ++t) {
        const Mat3 a = random_mat(rng) + 2.0 * Mat3::identity();
        EXPECT_LT(max_abs_diff(inverse(a), to_eigen(a).inverse()), 1e-10);
    }
}

TEST(Tensor, InverseOfSingularMatrixThrows) {
    const Mat3 s = Mat3::from_columns(e1, e2, e1 + e2);
    EXPECT_THROW(inverse(s), SingularMatrixError);
}

TEST(Tensor, SymmetricEigenAgreesWithEigen) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 100; ++t) {
        const Mat3 a = sym(random_mat(rng, 3.0));
        const SymmetricEigen ours = symmetric_eigen(a);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(to_eigen(a));
        for (int k = 0; k < 3; ++k) {
            EXPECT_NEAR(ours.values[k], es.eigenvalues()(k), 1e-12);
            const Vec3 v = ours.vectors.col(k);
            EXPECT_LT(norm(a * v - ours.values[k] * v), 1e-12);
        }
    }
}

TEST(Tensor, SingularValuesAgreeWithJacobiSvd) {
    std::mt19937_64 rng(4);
    for (int t = 0; t < 100; ++t) {
        const Mat3 a = random_mat(rng, 2.0);
        const auto ours = singular_values(a);
        Eigen::JacobiSVD<Eigen::Matrix3d> svd(to_eigen(a));
        const auto& s = svd.singularValues();  // descending
        for (int k = 0; k < 3; ++k) EXPECT_NEAR(ours[k], s(2 - k), 1e-9);
    }
}

TEST(Tensor, PolarDecompositionAgreesWithSvd) {
    std::mt19937_64 rng(5);
    int tested = 0;
    while (tested < 100) {
        const Mat3 a = random_mat(rng, 2.0);
        if (a.det() < 1e-2) continue;
        ++tested;
        const PolarFactors pf = polar_decompose(a);
        Eigen::JacobiSVD<Eigen::Matrix3d> svd(to_eigen(a), Eigen::ComputeFullU | Eigen::ComputeFullV);
        const Eigen::Matrix3d r = svd.matrixU() * svd.matrixV().transpose();
        EXPECT_LT(max_abs_diff(pf.rotation, r), 1e-8);
        EXPECT_LT(frobenius(pf.rotation.transpose() * pf.rotation - Mat3::identity()), 1e-13);
        EXPECT_NEAR(pf.rotation.det(), 1.0, 1e-13);
        EXPECT_LT(frobenius(pf.rotation * pf.stretch - a), 1e-10 * frobenius(a));
        EXPECT_GT(symmetric_eigen(pf.stretch).values[0], 0.0);
    }
}

TEST(Tensor, PolarDecompositionRejectsNonpositiveDeterminant) {
    EXPECT_THROW(polar_decompose(Mat3::diag(1.0, 1.0, -1.0)), SingularMatrixError);
    EXPECT_THROW(polar_decompose(Mat3::diag(1.0, 1.0, 0.0)), SingularMatrixError);
}

TEST(Tensor, DistanceToRotationsAgreesWithSvdConstruction) {
    std::mt19937_64 rng(6);
    for (int t = 0; t < 200; ++t) {
        const Mat3 a = random_mat(rng, 1.5);
        Eigen::JacobiSVD<Eigen::Matrix3d> svd(to_eigen(a), Eigen::ComputeFullU | Eigen::ComputeFullV);
        Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
        if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0) d(2, 2) = -1.0;
        const Eigen::Matrix3d nearest = svd.matrixU() * d * svd.matrixV().transpose();
        const double expected = (to_eigen(a) - nearest).squaredNorm();
        EXPECT_NEAR(dist2_SO3(a), expected, 1e-10 * (1.0 + expected));
    }
}

TEST(Tensor, DistanceToRotationsVanishesOnRotations) {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 50; ++t) {
        const Mat3 r = exp_skew(skew(random_mat(rng, 3.0)));
        EXPECT_LT(dist2_SO3(r), 1e-28);
        const double s = 1e-7;
        EXPECT_NEAR(dist2_SO3(r * Mat3::diag(1.0 + s, 1.0, 1.0)), s * s, 1e-20);
    }
}

TEST(Tensor, ExpSkewMatchesAngleAxis) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int t = 0; t < 50; ++t) {
        const Eigen::Vector3d w(u(rng), u(rng), u(rng));
        Mat3 k;
        k(0, 1) = -w(2);
        k(0, 2) = w(1);
        k(1, 0) = w(2);
        k(1, 2) = -w(0);
        k(2, 0) = -w(1);
        k(2, 1) = w(0);
        const Eigen::Matrix3d r = Eigen::AngleAxisd(w.norm(), w.normalized()).toRotationMatrix();
        EXPECT_LT(max_abs_diff(exp_skew(k), r), 1e-13);
    }
}
