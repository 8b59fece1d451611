// prestrain-plate: command-line driver for the prestrained thin-film toolkit.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "prestrain/config.hpp"
#include "prestrain/experiment.hpp"
#include "prestrain/limit2d.hpp"
#include "prestrain/prestrain.hpp"
#include "prestrain/q2_oracle.hpp"
#include "prestrain/recovery.hpp"

namespace fs = std::filesystem;
using namespace prestrain;

namespace {

struct CommonArgs {
    std::string config;
    std::string out;
    int threads = 1;
    bool direct = false;
};

ExperimentConfig load_config(const CommonArgs& a) {
    ExperimentConfig cfg = ExperimentConfig::load(a.config);
    if (a.direct) cfg.limit.direct = true;
    cfg.output_dir = a.out;
    fs::create_directories(a.out);
    detail::write_text(fs::path(a.out) / "config.toml", cfg.source);
    return cfg;
}

std::string fmt(double x) { return detail::fmt(x); }

int cmd_q2_check(const CommonArgs& a) {
    const ExperimentConfig cfg = load_config(a);
    constexpr int samples = 10000;
    const Q2OracleReport random_moduli = q2_oracle_suite(samples, 20240611u);
    const Q2OracleReport config_moduli = q2_oracle_suite(samples, 20240612u, cfg.material.quadratic_moduli());
    std::ostringstream csv;
    csv << "suite,samples,max_q2_deviation,max_c_deviation\n";
    csv << "random_moduli," << random_moduli.samples << ',' << fmt(random_moduli.max_q2_deviation) << ','
        << fmt(random_moduli.max_c_deviation) << '\n';
    csv << "config_moduli," << config_moduli.samples << ',' << fmt(config_moduli.max_q2_deviation) << ','
        << fmt(config_moduli.max_c_deviation) << '\n';
    detail::write_text(fs::path(a.out) / "q2_check.csv", csv.str());
    const double dq = std::max(random_moduli.max_q2_deviation, config_moduli.max_q2_deviation);
    const double dc = std::max(random_moduli.max_c_deviation, config_moduli.max_c_deviation);
    std::cout << "q2-check samples=" << 2 * samples << " max_q2_deviation=" << dq << " max_c_deviation=" << dc << '\n';
    if (dq > 1e-6 || dc > 1e-4)
        throw Error("oracle", "closed-form q2 disagrees with brute force (q2 " + fmt(dq) + ", c " + fmt(dc) + ")");
    return 0;
}

int cmd_limit_min(const CommonArgs& a) {
    const ExperimentConfig cfg = load_config(a);
    const LimitFunctional fnl{cfg.prestrain, cfg.material};
    const LimitMinimum lm = minimize_Igamma(fnl, cfg.limit_grid_n1(), cfg.limit_grid_n2(), cfg.limit);
    std::ostringstream v;
    write_field_csv(v, lm.v3);
    detail::write_text(fs::path(a.out) / "limit_v3.csv", v.str());
    std::ostringstream s;
    s << "Igamma minimum: " << fmt(lm.value) << '\n'
      << "grid: " << cfg.limit_grid_n1() << " x " << cfg.limit_grid_n2() << '\n'
      << "solver: " << (cfg.limit.direct ? "direct" : "projected-cg") << '\n'
      << "iterations: " << lm.iterations << '\n'
      << "relative residual: " << fmt(lm.relative_residual) << '\n'
      << "projected gradient: " << fmt(lm.projected_gradient) << " (scale " << fmt(lm.gradient_scale) << ")\n";
    detail::write_text(fs::path(a.out) / "limit_summary.txt", s.str());
    std::cout << "limit-min value=" << fmt(lm.value) << " iterations=" << lm.iterations
              << " relative_residual=" << lm.relative_residual << '\n';
    return 0;
}

int cmd_recovery_sweep(const CommonArgs& a) {
    const ExperimentConfig cfg = load_config(a);
    if (!cfg.displacement) throw ConfigError("recovery-sweep needs an analytic [displacement] block");
    CurveOptions co;
    co.refinement_check = cfg.refinement_check;
    co.threads = a.threads;
    const RescaledCurve curve = rescaled_energy_curve(RecoveryInput(*cfg.displacement, cfg.prestrain, cfg.material),
                                                      cfg.hs, cfg.plate_grid(), co);
    std::ostringstream csv;
    csv << "h,rescaled_energy,reference_Igamma,abs_error\n";
    for (const auto& p : curve.points)
        csv << fmt(p.h) << ',' << fmt(p.rescaled) << ',' << fmt(p.reference) << ',' << fmt(p.abs_error) << '\n';
    detail::write_text(fs::path(a.out) / "recovery_curve.csv", csv.str());
    nlohmann::ordered_json fit;
    if (curve.fit) {
        fit["slope"] = curve.fit->slope;
        fit["intercept"] = curve.fit->intercept;
        fit["r2"] = curve.fit->r2;
    } else {
        fit["slope"] = nullptr;
        fit["intercept"] = nullptr;
        fit["r2"] = nullptr;
        fit["note"] = "undefined: fewer than 3 positive errors";
    }
    detail::write_text(fs::path(a.out) / "recovery_fit.json", fit.dump() + "\n");
    std::cout << "recovery-sweep reference=" << fmt(curve.reference) << " fit=" << fit.dump() << '\n';
    return 0;
}

int cmd_full_min(const CommonArgs& a) {
    ExperimentConfig cfg = load_config(a);
    cfg.minimize = true;
    const ExperimentReport rep = run_gamma_limit_experiment(cfg, {a.threads, a.out});
    for (const auto& r : rep.rows)
        std::cout << "h=" << fmt(r.h) << " e3d_recovery=" << fmt(r.e3d_recovery)
                  << " e3d_minimized=" << detail::fmt(r.e3d_minimized) << " status=" << r.minimizer_status << '\n';
    write_slopes(std::cout, rep.slopes);
    return 0;
}

int cmd_diagnostics(const CommonArgs& a) {
    const ExperimentConfig cfg = load_config(a);
    const PrestrainSpec& spec = cfg.prestrain;
    const GridScalarField kb = bending_compatibility(spec, cfg.n1, cfg.n2);
    std::ostringstream curv;
    curv << "x1,x2,curvature_S,curvature_B\n";
    double max_kb = 0.0, max_ks = 0.0;
    for (int j = 0; j < cfg.n2; ++j)
        for (int i = 0; i < cfg.n1; ++i) {
            const Point2 p = kb.node(i, j);
            const double ks = linearized_gauss_curvature(spec.S, p);
            max_ks = std::max(max_ks, std::abs(ks));
            max_kb = std::max(max_kb, std::abs(kb.at(i, j)));
            curv << fmt(p.x) << ',' << fmt(p.y) << ',' << fmt(ks) << ',' << fmt(kb.at(i, j)) << '\n';
        }
    detail::write_text(fs::path(a.out) / "curvature.csv", curv.str());

    const PlateGrid grid = cfg.plate_grid();
    std::optional<LimitMinimum> lm;
    if (!cfg.displacement) lm = minimize_Igamma(LimitFunctional{spec, cfg.material}, cfg.n1, cfg.n2, cfg.limit);
    std::ostringstream mis;
    mis << "h,rotation_misfit,max_local_misfit,rescaled_recovery\n";
    std::ostringstream sum;
    sum << "max |curvature(S)|: " << fmt(max_ks) << '\n' << "max |curvature(B)|: " << fmt(max_kb) << '\n';
    std::optional<TwoTermExpansion> expansion;
    if (cfg.displacement) {
        expansion = formal_two_term_expansion(*cfg.displacement, spec, cfg.material);
        sum << "stretching integral: " << fmt(expansion->stretching) << '\n'
            << "bending integral: " << fmt(expansion->bending) << '\n';
    }
    for (double h : cfg.hs) {
        try {
            const Deformation3D u =
                cfg.displacement ? build_recovery(RecoveryInput(*cfg.displacement, spec, cfg.material), h, grid)
                                 : build_recovery_from_grid(lm->v3, spec, cfg.material, h, grid);
            const RotationDiagnostic rd = rotation_field_diagnostic(u, spec, h, cfg.material, a.threads);
            const double e = evaluate_energy(u, spec, cfg.material, h, a.threads).total;
            mis << fmt(h) << ',' << fmt(rd.misfit) << ',' << fmt(rd.max_local_misfit) << ','
                << fmt(e / std::pow(h, spec.gamma + 2.0)) << '\n';
            if (expansion) {
                const double st = expansion->stretching_energy(h, spec.gamma);
                const double be = expansion->bending_energy(h, spec.gamma);
                sum << "h=" << fmt(h) << " dominant term: " << (st > be ? "stretching" : "bending") << '\n';
            }
        } catch (const Error& e) {
            detail::write_text(fs::path(a.out) / "diagnostics_misfit.csv", mis.str());
            throw Error(e.category(), "h=" + fmt(h) + ": " + e.what());
        }
    }
    detail::write_text(fs::path(a.out) / "diagnostics_misfit.csv", mis.str());
    detail::write_text(fs::path(a.out) / "diagnostics_summary.txt", sum.str());
    std::cout << sum.str();
    return 0;
}

std::vector<std::pair<double, double>> column_pairs(const CsvTable& t, const std::string& x, const std::string& y) {
    const auto xs = t.numbers(x), ys = t.numbers(y);
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (!std::isnan(xs[i]) && !std::isnan(ys[i])) out.emplace_back(xs[i], ys[i]);
    return out;
}

int cmd_report(const CommonArgs& a) {
    const ExperimentConfig cfg = load_config(a);
    const fs::path dir(a.out);
    std::vector<SlopeEntry> slopes;
    std::ostringstream os;
    os << "prestrain-plate aggregate report\n";
    os << "gamma: " << cfg.prestrain.gamma << " (energy scaling exponent gamma+2 = " << cfg.prestrain.gamma + 2.0 << ")\n";
    bool any = false;
    if (fs::exists(dir / "report.csv")) {
        any = true;
        const CsvTable t = CsvTable::read((dir / "report.csv").string());
        os << "report.csv rows: " << t.rows.size() << '\n';
        slopes.push_back(make_slope("e3d_recovery", column_pairs(t, "h", "e3d_recovery")));
        const auto mn = column_pairs(t, "h", "e3d_minimized");
        if (!mn.empty()) slopes.push_back(make_slope("e3d_minimized", mn));
        slopes.push_back(make_slope("rotation_misfit", column_pairs(t, "h", "rotation_misfit")));
    }
    if (fs::exists(dir / "recovery_curve.csv")) {
        any = true;
        const CsvTable t = CsvTable::read((dir / "recovery_curve.csv").string());
        os << "recovery_curve.csv rows: " << t.rows.size() << '\n';
        slopes.push_back(make_slope("recovery_abs_error", column_pairs(t, "h", "abs_error")));
    }
    if (fs::exists(dir / "diagnostics_misfit.csv")) {
        any = true;
        const CsvTable t = CsvTable::read((dir / "diagnostics_misfit.csv").string());
        os << "diagnostics_misfit.csv rows: " << t.rows.size() << '\n';
        slopes.push_back(make_slope("diagnostics_rotation_misfit", column_pairs(t, "h", "rotation_misfit")));
    }
    if (fs::exists(dir / "limit_summary.txt")) {
        any = true;
        std::ifstream in(dir / "limit_summary.txt");
        std::string line;
        if (std::getline(in, line)) os << "limit: " << line << '\n';
    }
    if (!any) throw Error("io", "no toolkit outputs found in '" + a.out + "'");
    write_slopes(os, slopes);
    detail::write_text(dir / "summary.txt", os.str());
    std::cout << os.str();
    return 0;
}

std::string one_line(std::string s) {
    std::replace(s.begin(), s.end(), '\n', ' ');
    std::replace(s.begin(), s.end(), '\r', ' ');
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Prestrained thin-film elasticity toolkit", "prestrain-plate"};
    app.require_subcommand(1, 1);
    app.fallthrough();
    CommonArgs args;
    app.add_option("--config", args.config, "configuration file (TOML syntax)")->required()->check(CLI::ExistingFile);
    app.add_option("--out", args.out, "output directory")->required();
    app.add_option("--threads", args.threads, "worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--direct-solve", args.direct, "use the sparse direct solver for the limit problem");

    struct Sub {
        const char* name;
        const char* help;
        int (*run)(const CommonArgs&);
    };
    const Sub subs[] = {
        {"q2-check", "compare closed-form Q2 and c against brute-force relaxation", cmd_q2_check},
        {"limit-min", "minimize the limit functional and export V3", cmd_limit_min},
        {"recovery-sweep", "rescaled recovery-energy curve over the h sweep", cmd_recovery_sweep},
        {"full-min", "3D minimization sweep with report", cmd_full_min},
        {"diagnostics", "curvature fields and rotation misfit", cmd_diagnostics},
        {"report", "aggregate CSV outputs into summary.txt", cmd_report},
    };
    int (*selected)(const CommonArgs&) = nullptr;
    for (const auto& s : subs) app.add_subcommand(s.name, s.help)->callback([&selected, &s] { selected = s.run; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << app.help();
        std::cerr << "error: usage: " << one_line(e.what()) << '\n';
        return 2;
    }

    try {
        return selected(args);
    } catch (const Error& e) {
        std::cerr << "error: " << e.category() << ": " << one_line(e.what()) << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << one_line(e.what()) << '\n';
    }
    return 1;
}
