#pragma once

// h-sweep orchestration: limit minimization, recovery sequences, optional 3D
// minimization, slope fits and report files.

#include <algorithm>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "prestrain/config.hpp"
#include "prestrain/errors.hpp"
#include "prestrain/fit.hpp"
#include "prestrain/limit2d.hpp"
#include "prestrain/parallel.hpp"
#include "prestrain/plate3d.hpp"
#include "prestrain/recovery.hpp"

namespace prestrain {

/// Removes the trapezoid-weighted least-squares affine part a + b x1 + c x2.
inline std::vector<double> remove_affine_part(const GridScalarField& f) {
    const auto w1 = trapezoid_weights(f.n1, f.dx());
    const auto w2 = trapezoid_weights(f.n2, f.dy());
    Mat3 gram;
    Vec3 rhs;
    for (int j = 0; j < f.n2; ++j)
        for (int i = 0; i < f.n1; ++i) {
            const Point2 p = f.node(i, j);
            const Vec3 phi{{1.0, p.x, p.y}};
            const double w = w1[i] * w2[j];
            gram += w * outer(phi, phi);
            rhs += (w * f.at(i, j)) * phi;
        }
    const Vec3 c = inverse(gram, 1e-300) * rhs;
    std::vector<double> out;
    out.reserve(f.values.size());
    for (int j = 0; j < f.n2; ++j)
        for (int i = 0; i < f.n1; ++i) {
            const Point2 p = f.node(i, j);
            out.push_back(f.at(i, j) - c[0] - c[1] * p.x - c[2] * p.y);
        }
    return out;
}

/// |a - b|_L2 / |b|_L2 after removing the affine part of both fields.
inline double aligned_relative_l2(const GridScalarField& a, const GridScalarField& b) {
    if (a.n1 != b.n1 || a.n2 != b.n2) throw DomainError("aligned_relative_l2: grids differ");
    const auto x = remove_affine_part(a), y = remove_affine_part(b);
    const auto w1 = trapezoid_weights(a.n1, a.dx());
    const auto w2 = trapezoid_weights(a.n2, a.dy());
    double num = 0.0, den = 0.0;
    for (int j = 0; j < a.n2; ++j)
        for (int i = 0; i < a.n1; ++i) {
            const std::size_t q = static_cast<std::size_t>(j) * a.n1 + i;
            num += w1[i] * w2[j] * (x[q] - y[q]) * (x[q] - y[q]);
            den += w1[i] * w2[j] * y[q] * y[q];
        }
    if (!(den > 0.0)) return num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return std::sqrt(num / den);
}

struct ExperimentRow {
    double h = 0.0;
    double e3d_recovery = 0.0;
    std::optional<double> e3d_minimized;
    double rescaled_recovery = 0.0;
    std::optional<double> rescaled_minimized;
    std::optional<double> rescaled_recovery_coarse;
    double reference_Igamma = 0.0;
    double rotation_misfit = 0.0;
    /// Affine-aligned relative L2 distance between the scaled V^h_3 of the 3D minimizer and the limit minimizer.
    std::optional<double> v3_aligned_rel_l2;
    double min_det = 0.0;
    std::size_t degenerate_points = 0;
    std::string minimizer_status;
    int iterations = 0;
    std::vector<std::string> flags;
    std::vector<LbfgsRecord> log;
};

struct SlopeEntry {
    std::string name;
    std::optional<LogLogFit> fit;
    std::string note;  // reason when the fit is undefined
};

struct ExperimentReport {
    std::vector<ExperimentRow> rows;
    double reference_Igamma = 0.0;
    LimitMinimum limit;
    std::vector<SlopeEntry> slopes;
    bool complete = true;
    std::string abort_message;
};

struct ExperimentRunOptions {
    int threads = 1;
    /// Output directory; empty disables file output.
    std::string out_dir;
};

inline SlopeEntry make_slope(std::string name, const std::vector<std::pair<double, double>>& pts) {
    SlopeEntry s{std::move(name), std::nullopt, ""};
    try {
        s.fit = fit_loglog_slope(pts);
    } catch (const FitError& e) {
        s.note = e.what();
    }
    return s;
}

inline std::vector<SlopeEntry> fit_report_slopes(const std::vector<ExperimentRow>& rows) {
    std::vector<std::pair<double, double>> rec, mn, err, mis;
    for (const auto& r : rows) {
        rec.emplace_back(r.h, r.e3d_recovery);
        if (r.e3d_minimized) mn.emplace_back(r.h, *r.e3d_minimized);
        err.emplace_back(r.h, std::abs(r.rescaled_recovery - r.reference_Igamma));
        mis.emplace_back(r.h, r.rotation_misfit);
    }
    std::vector<SlopeEntry> out;
    out.push_back(make_slope("e3d_recovery", rec));
    if (!mn.empty()) out.push_back(make_slope("e3d_minimized", mn));
    out.push_back(make_slope("rescaled_error", err));
    out.push_back(make_slope("rotation_misfit", mis));
    return out;
}

namespace detail {

inline std::string fmt(double x) {
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

inline std::string fmt(const std::optional<double>& x) { return x ? fmt(*x) : std::string(); }

inline std::string join_flags(const std::vector<std::string>& f) {
    if (f.empty()) return "ok";
    std::string s;
    for (const auto& x : f) s += (s.empty() ? "" : ";") + x;
    return s;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("io", "cannot write '" + p.string() + "'");
    out << text;
}

}  // namespace detail

inline void write_iteration_log(std::ostream& os, const std::vector<LbfgsRecord>& log) {
    os << "iter,energy,grad_norm,step\n" << std::setprecision(17);
    for (const auto& r : log) os << r.iter << ',' << r.energy << ',' << r.grad_norm << ',' << r.step << '\n';
}

inline void write_report_csv(std::ostream& os, const ExperimentReport& rep) {
    using detail::fmt;
    os << "h,e3d_recovery,e3d_minimized,rescaled_recovery,rescaled_minimized,rescaled_recovery_coarse,"
          "reference_Igamma,rotation_misfit,v3_aligned_rel_l2,min_det,degenerate_points,minimizer_status,iterations,flags\n";
    for (const auto& r : rep.rows)
        os << fmt(r.h) << ',' << fmt(r.e3d_recovery) << ',' << fmt(r.e3d_minimized) << ',' << fmt(r.rescaled_recovery)
           << ',' << fmt(r.rescaled_minimized) << ',' << fmt(r.rescaled_recovery_coarse) << ','
           << fmt(r.reference_Igamma) << ',' << fmt(r.rotation_misfit) << ',' << fmt(r.v3_aligned_rel_l2) << ','
           << fmt(r.min_det) << ',' << r.degenerate_points << ',' << r.minimizer_status << ',' << r.iterations << ','
           << detail::join_flags(r.flags) << '\n';
}

inline void write_slopes(std::ostream& os, const std::vector<SlopeEntry>& slopes) {
    for (const auto& s : slopes) {
        os << "slope " << s.name << ": ";
        if (s.fit)
            os << detail::fmt(s.fit->slope) << " +/- " << detail::fmt(2.0 * s.fit->slope_stderr)
               << " (intercept " << detail::fmt(s.fit->intercept) << ", r2 " << detail::fmt(s.fit->r2) << ")\n";
        else
            os << "undefined (" << s.note << ")\n";
    }
}

inline std::string report_summary(const ExperimentConfig& cfg, const ExperimentReport& rep) {
    std::ostringstream os;
    os << "prestrain-plate gamma-limit report\n";
    os << "material: " << to_string(cfg.material.kind) << " mu=" << cfg.material.moduli.mu
       << " lambda=" << cfg.material.moduli.lambda << '\n';
    os << "gamma: " << cfg.prestrain.gamma << " (energy scaling exponent gamma+2 = " << cfg.prestrain.gamma + 2.0 << ")\n";
    os << "grid: " << cfg.n1 << " x " << cfg.n2 << " x " << cfg.m << '\n';
    os << "V3 source: " << (cfg.displacement ? "analytic" : "discrete limit minimizer") << '\n';
    os << "Igamma reference: " << detail::fmt(rep.reference_Igamma) << '\n';
    os << "Igamma discrete minimum: " << detail::fmt(rep.limit.value) << " (" << cfg.limit_grid_n1() << " x "
       << cfg.limit_grid_n2() << ", relative residual " << detail::fmt(rep.limit.relative_residual) << ")\n";
    os << "rows: " << rep.rows.size() << '\n';
    write_slopes(os, rep.slopes);
    os << "status: " << (rep.complete ? "complete" : "aborted: " + rep.abort_message) << '\n';
    return os.str();
}

inline void write_report_files(const ExperimentConfig& cfg, const ExperimentReport& rep, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const fs::path base(dir);
    detail::write_text(base / "config.toml", cfg.source);
    const bool csv = std::find(cfg.formats.begin(), cfg.formats.end(), "csv") != cfg.formats.end();
    if (csv) {
        std::ostringstream r;
        write_report_csv(r, rep);
        detail::write_text(base / "report.csv", r.str());
        if (rep.limit.v3.n1 > 0) {
            std::ostringstream v;
            write_field_csv(v, rep.limit.v3);
            detail::write_text(base / "limit_v3.csv", v.str());
        }
        for (std::size_t k = 0; k < rep.rows.size(); ++k) {
            if (rep.rows[k].log.empty()) continue;
            std::ostringstream l;
            write_iteration_log(l, rep.rows[k].log);
            detail::write_text(base / ("iterations_h" + std::to_string(k) + ".csv"), l.str());
        }
    }
    detail::write_text(base / "summary.txt", report_summary(cfg, rep));
}

namespace detail {

inline ExperimentRow run_sweep_point(const ExperimentConfig& cfg, const LimitMinimum& seed_limit, double reference,
                                     double h, int threads) {
    const PlateGrid grid = cfg.plate_grid();
    const PrestrainSpec& spec = cfg.prestrain;
    const EnergyDensity& w = cfg.material;
    const double scale = std::pow(h, spec.gamma + 2.0);

    ExperimentRow row;
    row.h = h;
    row.reference_Igamma = reference;

    Deformation3D u = cfg.displacement ? build_recovery(RecoveryInput(*cfg.displacement, spec, w), h, grid)
                                       : build_recovery_from_grid(seed_limit.v3, spec, w, h, grid);
    const EnergyBreakdown eb = evaluate_energy(u, spec, w, h, threads);
    row.e3d_recovery = eb.total;
    row.rescaled_recovery = eb.total / scale;
    row.min_det = eb.min_det;
    row.degenerate_points = eb.degenerate_points;
    if (eb.degenerate_points > 0) row.flags.push_back("degenerate");

    if (cfg.displacement && cfg.refinement_check) {
        const PlateGrid coarse = grid.coarsened();
        const double rc =
            evaluate_energy(build_recovery(RecoveryInput(*cfg.displacement, spec, w), h, coarse), spec, w, h, threads)
                .total /
            scale;
        row.rescaled_recovery_coarse = rc;
        const double denom = std::abs(row.rescaled_recovery);
        const double change = denom > 0.0 ? std::abs(row.rescaled_recovery - rc) / denom : (rc == 0.0 ? 0.0 : 1.0);
        if (change > 0.10)
            throw RefinementError("rescaled recovery energy changes by " + std::to_string(100.0 * change) +
                                  "% under grid doubling");
    }

    row.rotation_misfit = rotation_field_diagnostic(u, spec, h, w, threads).misfit;

    if (cfg.minimize) {
        MinimizerOptions mo = cfg.opt;
        mo.threads = threads;
        MinimizationResult r = minimize_energy(u, spec, w, h, mo);
        row.e3d_minimized = r.energy.total;
        row.rescaled_minimized = r.energy.total / scale;
        row.minimizer_status = to_string(r.status);
        row.iterations = r.log.empty() ? 0 : r.log.back().iter;
        row.log = std::move(r.log);
        if (r.status == LbfgsStatus::line_search_failed) row.flags.push_back("line-search");
        if (r.status == LbfgsStatus::max_iterations) row.flags.push_back("max-iterations");
        if (r.energy.degenerate_points > 0) row.flags.push_back("degenerate-minimizer");
        if (seed_limit.v3.n1 == grid.n1() && seed_limit.v3.n2 == grid.n2())
            row.v3_aligned_rel_l2 = aligned_relative_l2(scaled_displacement(r.deformation, spec, h)[2], seed_limit.v3);
    }
    return row;
}

}  // namespace detail

/// Runs the configured h-sweep. Rows are assembled in the declared h order; with more than one
/// thread the sweep points run concurrently. On a module error the rows that completed before the
/// failing h are written (when an output directory is given) and the error is rethrown with h annotated.
inline ExperimentReport run_gamma_limit_experiment(const ExperimentConfig& cfg, const ExperimentRunOptions& ro = {}) {
    cfg.validate();
    ExperimentReport rep;
    const LimitFunctional fnl{cfg.prestrain, cfg.material};
    rep.limit = minimize_Igamma(fnl, cfg.limit_grid_n1(), cfg.limit_grid_n2(), cfg.limit);

    // The recovery seed and the 3D comparison need V3 on the plate grid.
    LimitMinimum seed = rep.limit;
    if (seed.v3.n1 != cfg.n1 || seed.v3.n2 != cfg.n2) {
        if (!cfg.displacement || cfg.minimize) seed = minimize_Igamma(fnl, cfg.n1, cfg.n2, cfg.limit);
    }
    rep.reference_Igamma = cfg.displacement ? evaluate_Igamma(*cfg.displacement, fnl) : seed.value;

    const std::size_t n = cfg.hs.size();
    std::vector<std::optional<ExperimentRow>> rows(n);
    std::vector<std::exception_ptr> errors(n);
    const int outer = std::max(1, std::min<int>(ro.threads, static_cast<int>(n)));
    const int inner = std::max(1, ro.threads / outer);
    parallel_for(static_cast<int>(n), outer, [&](int k) {
        try {
            rows[k] = detail::run_sweep_point(cfg, seed, rep.reference_Igamma, cfg.hs[k], inner);
        } catch (...) {
            errors[k] = std::current_exception();
        }
    });

    for (std::size_t k = 0; k < n; ++k) {
        if (!errors[k]) {
            rep.rows.push_back(std::move(*rows[k]));
            continue;
        }
        std::string category = "internal", message;
        try {
            std::rethrow_exception(errors[k]);
        } catch (const Error& e) {
            category = e.category();
            message = e.what();
        } catch (const std::exception& e) {
            message = e.what();
        }
        const std::string annotated = "h=" + detail::fmt(cfg.hs[k]) + ": " + message;
        rep.complete = false;
        rep.abort_message = category + ": " + annotated;
        rep.slopes = fit_report_slopes(rep.rows);
        if (!ro.out_dir.empty()) write_report_files(cfg, rep, ro.out_dir);
        throw Error(category, annotated);
    }
    rep.slopes = fit_report_slopes(rep.rows);
    if (!ro.out_dir.empty()) write_report_files(cfg, rep, ro.out_dir);
    return rep;
}

/// Minimal reader for the CSV files written by this toolkit: a header row and comma-separated fields.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    }

    std::vector<double> numbers(const std::string& name) const {
        const int c = column(name);
        if (c < 0) throw Error("io", "missing CSV column '" + name + "'");
        std::vector<double> out;
        for (const auto& r : rows) {
            const std::string& s = static_cast<std::size_t>(c) < r.size() ? r[c] : std::string();
            char* end = nullptr;
            const double v = std::strtod(s.c_str(), &end);
            out.push_back(s.empty() || end != s.c_str() + s.size() ? std::numeric_limits<double>::quiet_NaN() : v);
        }
        return out;
    }

    static CsvTable read(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error("io", "cannot read '" + path + "'");
        CsvTable t;
        std::string line;
        auto split = [](const std::string& l) {
            std::vector<std::string> f;
            std::stringstream ss(l);
            std::string x;
            while (std::getline(ss, x, ',')) f.push_back(x);
            if (!l.empty() && l.back() == ',') f.emplace_back();
            return f;
        };
        if (!std::getline(in, line)) throw Error("io", "empty CSV '" + path + "'");
        t.header = split(line);
        while (std::getline(in, line))
            if (!line.empty()) t.rows.push_back(split(line));
        return t;
    }
};

}  // namespace prestrain
