#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "prestrain/errors.hpp"

namespace prestrain {

struct LogLogFit {
    double slope = 0.0;
    double intercept = 0.0;  // natural log of the prefactor
    double r2 = 0.0;
    /// Standard error of the slope; the reported band is slope +/- 2 * slope_stderr.
    double slope_stderr = 0.0;
};

/// Ordinary least squares of log(value) against log(h).
inline LogLogFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 3) throw FitError("log-log fit needs at least 3 points");
    double sx = 0.0, sy = 0.0;
    std::vector<double> xs, ys;
    for (const auto& [h, v] : points) {
        if (!(h > 0.0) || !(v > 0.0) || !std::isfinite(v))
            throw FitError("log-log fit needs positive finite abscissae and values");
        xs.push_back(std::log(h));
        ys.push_back(std::log(v));
        sx += xs.back();
        sy += ys.back();
    }
    const double n = static_cast<double>(xs.size());
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (!(sxx > 0.0)) throw FitError("log-log fit needs at least two distinct h values");
    LogLogFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - (f.intercept + f.slope * xs[i]);
        ss_res += r * r;
    }
    f.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    f.slope_stderr = xs.size() > 2 ? std::sqrt(ss_res / (n - 2.0) / sxx) : 0.0;
    return f;
}

}  // namespace prestrain
