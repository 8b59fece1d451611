#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "prestrain/plate3d.hpp"

using namespace prestrain;

namespace {

Mat3 random_mat(std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Mat3 m;
    for (auto& x : m.a) x = u(rng);
    return m;
}

PrestrainSpec curved_spec() {
    PrestrainSpec spec;
    spec.gamma = 3.0;
    Mat3 s, b;
    s(0, 0) = 1.0;
    s(0, 1) = 0.5;
    b(0, 0) = 1.0;
    b(1, 1) = -0.5;
    b(2, 0) = 0.3;
    spec.S = PlanarMatrixField({{s, Monomial{1, 0}}});
    spec.B = PlanarMatrixField({{b, Monomial{0, 1}}, {Mat3::identity(), PlaneWave{1.0, 2.0, 0.0}}});
    return spec;
}

Deformation3D perturbed(const Deformation3D& u, std::mt19937_64& rng, double amp) {
    std::uniform_real_distribution<double> d(-amp, amp);
    Deformation3D out = u;
    for (auto& x : out.values) x += Vec3{{d(rng), d(rng), d(rng)}};
    return out;
}

}  // namespace

TEST(Plate3D, IdentityLiftHasZeroEnergyWithoutPrestrain) {
    const PrestrainSpec flat;
    const PlateGrid g(Rect{}, 9, 7, 3);
    for (double h : {0.5, 0.125, 1.0 / 128})
        for (const EnergyDensity w : {EnergyDensity::svk(1, 1), EnergyDensity::dist2()})
            EXPECT_LE(evaluate_energy(identity_lift(g, h), flat, w, h).total, 1e-14);
}

TEST(Plate3D, AffineDeformationEnergyIsAreaTimesDensity) {
    std::mt19937_64 rng(21);
    const PrestrainSpec flat;
    const Rect r{-1.0, 1.0, 0.0, 0.5};
    const PlateGrid g(r, 6, 5, 3);
    const double h = 0.2;
    const Mat3 f = Mat3::identity() + 0.2 * random_mat(rng);
    Deformation3D u = identity_lift(g, h);
    for (auto& x : u.values) x = f * x;
    for (const EnergyDensity w : {EnergyDensity::svk(1.5, 0.5), EnergyDensity::dist2()})
        EXPECT_NEAR(evaluate_energy(u, flat, w, h).total, r.area() * density(w, f), 1e-13);
}

TEST(Plate3D, GradientMatchesDirectionalDifferences) {
    std::mt19937_64 rng(22);
    const PrestrainSpec spec = curved_spec();
    const PlateGrid g(Rect{}, 7, 6, 3);
    const double h = 0.25;
    for (const EnergyDensity w : {EnergyDensity::svk(1.0, 2.0), EnergyDensity::dist2()}) {
        const Deformation3D u = perturbed(identity_lift(g, h), rng, 0.01);
        const PlateEnergy e(g, spec, w, h);
        std::vector<Vec3> grad;
        e.value_and_gradient(u.values, grad);
        for (int t = 0; t < 5; ++t) {
            const Deformation3D dir = perturbed(Deformation3D(g, std::vector<Vec3>(g.node_count())), rng, 1.0);
            double analytic = 0.0;
            for (std::size_t q = 0; q < grad.size(); ++q) analytic += dot(grad[q], dir.values[q]);
            const double s = 1e-6;
            std::vector<Vec3> up = u.values, um = u.values;
            for (std::size_t q = 0; q < up.size(); ++q) {
                up[q] += s * dir.values[q];
                um[q] -= s * dir.values[q];
            }
            const double fd = (e.evaluate(up).total - e.evaluate(um).total) / (2.0 * s);
            EXPECT_NEAR(analytic, fd, 1e-6 * std::abs(fd)) << to_string(w.kind);
        }
    }
}

TEST(Plate3D, RigidMotionsPreserveEnergy) {
    std::mt19937_64 rng(23);
    const PrestrainSpec spec = curved_spec();
    const PlateGrid g(Rect{}, 9, 9, 3);
    const double h = 0.125;
    const EnergyDensity w = EnergyDensity::svk(1.0, 1.0);
    const Deformation3D u = perturbed(identity_lift(g, h), rng, 1e-3);
    const double e0 = evaluate_energy(u, spec, w, h).total;
    for (int t = 0; t < 5; ++t) {
        const Mat3 r = exp_skew(skew(random_mat(rng, 3.0)));
        const Vec3 c{{0.3, -1.0, 2.0}};
        EXPECT_NEAR(evaluate_energy(rigid_motion(u, r, c), spec, w, h).total, e0, 1e-10 * e0);
    }
}

TEST(Plate3D, DegeneratePointsAreReportedOrFatal) {
    const PrestrainSpec flat;
    const PlateGrid g(Rect{}, 5, 5, 2);
    const double h = 0.1;
    Deformation3D u = identity_lift(g, h);
    for (auto& x : u.values) x[2] = -x[2];  // orientation reversal
    const EnergyBreakdown svk = evaluate_energy(u, flat, EnergyDensity::svk(1, 1), h);
    EXPECT_EQ(svk.degenerate_points, g.node_count());
    EXPECT_LT(svk.min_det, 0.0);
    EXPECT_THROW(evaluate_energy(u, flat, EnergyDensity::dist2(), h), DegenerateElementError);
}

TEST(Plate3D, ShapeAndFiniteChecks) {
    const PlateGrid g(Rect{}, 5, 5, 2);
    EXPECT_THROW(Deformation3D(g, std::vector<Vec3>(3)), DomainError);
    std::vector<Vec3> v(g.node_count());
    v[4][1] = std::nan("");
    EXPECT_THROW(Deformation3D(g, v), DomainError);
    EXPECT_THROW(PlateGrid(Rect{}, 2, 5, 2), ConfigError);
}

TEST(Plate3D, MinimizerDecreasesEnergyMonotonically) {
    const PrestrainSpec spec = curved_spec();
    const PlateGrid g(Rect{}, 9, 9, 3);
    const double h = 0.25;
    const EnergyDensity w = EnergyDensity::svk(1.0, 1.0);
    MinimizerOptions opts;
    opts.max_iter = 60;
    const MinimizationResult r = minimize_energy(identity_lift(g, h), spec, w, h, opts);
    EXPECT_LT(r.energy.total, r.initial_energy);
    for (std::size_t k = 1; k < r.log.size(); ++k) EXPECT_LE(r.log[k].energy, r.log[k - 1].energy);
    EXPECT_NEAR(r.energy.total, r.log.back().energy, 1e-12 * r.initial_energy);
}

TEST(Plate3D, ScaledDisplacementAndRotationsOfRigidMotion) {
    const PrestrainSpec flat;
    const PlateGrid g(Rect{}, 7, 7, 3);
    const double h = 0.1;
    const Deformation3D id = identity_lift(g, h);
    for (const auto& f : scaled_displacement(id, flat, h))
        for (double v : f.values) EXPECT_NEAR(v, 0.0, 1e-14);
    const Mat3 r = exp_skew(skew(Mat3{{0, 0.4, -0.2, 0.1, 0, 0.7, 0.3, -0.5, 0}}));
    const RotationDiagnostic d = rotation_field_diagnostic(rigid_motion(id, r, Vec3{{1, 2, 3}}), flat, h);
    EXPECT_LT(d.misfit, 1e-24);
    for (const Mat3& q : d.rotations) EXPECT_LT(frobenius(q - r), 1e-12);
}
