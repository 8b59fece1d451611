#pragma once

// Brute-force relaxation of Q3 over out-of-plane extensions, used to audit the
// closed forms q2 and c_vector.

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

#include "prestrain/material.hpp"
#include "prestrain/tensor.hpp"

namespace prestrain {

struct Q2Minimum {
    double value = 0.0;
    Vec3 argmin;
};

/// min over c of Q3(F* + c (x) e3) by compass search; no use of the closed form.
inline Q2Minimum brute_force_q2(const IsotropicModuli& m, const Mat2& f, double initial_step = 8.0,
                                double final_step = 1e-11) {
    const Mat3 base = star(f);
    auto objective = [&](const Vec3& c) {
        Mat3 g = base;
        for (int i = 0; i < 3; ++i) g(i, 2) += c[i];
        return q3(m, g);
    };
    Vec3 c;
    double best = objective(c);
    for (double step = initial_step; step > final_step;) {
        bool moved = false;
        for (int i = 0; i < 3; ++i)
            for (double sgn : {1.0, -1.0}) {
                Vec3 t = c;
                t[i] += sgn * step;
                const double v = objective(t);
                if (v < best) {
                    best = v;
                    c = t;
                    moved = true;
                }
            }
        if (!moved) step *= 0.5;
    }
    return {best, c};
}

struct Q2OracleReport {
    int samples = 0;
    double max_q2_deviation = 0.0;
    double max_c_deviation = 0.0;
};

/// Random symmetric 2x2 matrices with entries in [-entry, entry]. When `fixed` is empty the
/// moduli are drawn from mu in [0.5, 4], lambda in [0, 4].
inline Q2OracleReport q2_oracle_suite(int samples, unsigned seed, std::optional<IsotropicModuli> fixed = {},
                                      double entry = 2.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ue(-entry, entry), umu(0.5, 4.0), ula(0.0, 4.0);
    Q2OracleReport rep;
    rep.samples = samples;
    for (int s = 0; s < samples; ++s) {
        const IsotropicModuli m = fixed ? *fixed : IsotropicModuli{umu(rng), ula(rng)};
        const double a = ue(rng), b = ue(rng), d = ue(rng);
        const Mat2 f{{a, b, b, d}};
        const Q2Minimum bf = brute_force_q2(m, f);
        rep.max_q2_deviation = std::max(rep.max_q2_deviation, std::abs(q2(m, f) - bf.value));
        rep.max_c_deviation = std::max(rep.max_c_deviation, norm(c_vector(m, f) - bf.argmin));
    }
    return rep;
}

}  // namespace prestrain
