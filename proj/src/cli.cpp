#include "tamesde/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "tamesde/analysis.hpp"
#include "tamesde/audit.hpp"
#include "tamesde/driving.hpp"
#include "tamesde/scheme.hpp"

namespace tamesde {

namespace {

std::ostream& open_output(const RunConfig& cfg, std::ofstream& file) {
    if (cfg.output_path.empty()) return std::cout;
    file.open(cfg.output_path, std::ios::binary);
    if (!file)
        throw std::invalid_argument("cannot open output file '" +
                                    cfg.output_path + "'");
    return file;
}

void write_meta(std::ostream& out, const RunConfig& cfg) {
    out << "# version " << kVersion << "\n";
    out << "# config_hash " << config_hash(cfg) << "\n";
    out << "# master_seed " << cfg.master_seed << "\n";
}

std::string fmt6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace

RunConfig load_cli_config(const std::string& config_file,
                          const std::string& preset,
                          const CliOverrides& overrides) {
    if (config_file.empty() == preset.empty())
        throw std::invalid_argument(
            "pass exactly one of --config FILE or --preset NAME");
    RunConfig cfg = config_file.empty() ? preset_config(preset)
                                        : parse_config_file(config_file);
    if (overrides.seed) cfg.master_seed = *overrides.seed;
    if (overrides.paths) cfg.n_paths = *overrides.paths;
    if (overrides.threads) cfg.threads = *overrides.threads;
    if (overrides.out) cfg.output_path = *overrides.out;
    cfg.validate();
    return cfg;
}

int cmd_converge(const RunConfig& cfg) {
    const SdeProblem problem = build_problem(cfg);
    const ErrorTable table =
        strong_error(problem, cfg.taming, cfg.h_exponents, cfg.ref_exponent,
                     cfg.n_paths, cfg.master_seed, cfg.p, cfg.threads);

    ErrorTable fit_rows;
    fit_rows.p = table.p;
    for (const ErrorRow& row : table.rows) {
        if (row.rms_error > 0.0) {
            fit_rows.rows.push_back(row);
        } else {
            std::cout << "note: h = " << fmt6(row.h)
                      << " row dropped from the rate fit (coincides with the "
                         "reference; error is exactly zero)\n";
        }
    }
    RateFit fit;
    bool have_fit = false;
    if (fit_rows.rows.size() >= 3) {
        fit = fit_rate(fit_rows);
        have_fit = true;
    } else {
        std::cout << "note: rate fit skipped (needs at least 3 rows with "
                     "nonzero error)\n";
    }

    std::ofstream file;
    std::ostream& out = open_output(cfg, file);
    write_error_csv(out, table, have_fit ? &fit : nullptr,
                    {config_hash(cfg), cfg.master_seed});
    out.flush();
    if (!cfg.output_path.empty())
        std::cout << "wrote " << cfg.output_path << "\n";

    const long long flagged =
        table.rows.empty() ? 0 : table.rows.front().flagged_paths;
    if (have_fit)
        std::cout << "rate fit: slope " << fmt6(fit.slope) << ", intercept "
                  << fmt6(fit.intercept) << ", r2 " << fmt6(fit.r2) << " over "
                  << fit_rows.rows.size() << " rows\n";
    std::cout << "flagged paths: " << flagged << "\n";
    if (flagged > 0 && cfg.taming.mode != TamingMode::Untamed) {
        std::cerr << "error: " << flagged
                  << " paths overflowed in a tamed mode\n";
        return 2;
    }
    return 0;
}

int cmd_simulate(const RunConfig& cfg, long long n, std::uint64_t path_index,
                 bool zero_noise) {
    if (n < 1) throw std::invalid_argument("simulate: --n must be >= 1");
    const SdeProblem problem = build_problem(cfg);
    const double steps_real =
        static_cast<double>(n) * problem.horizon.length();
    const long long steps = std::llround(steps_real);
    if (steps < 1 ||
        std::fabs(steps_real - static_cast<double>(steps)) >
            1e-9 * std::max(1.0, steps_real))
        throw std::invalid_argument(
            "simulate: n does not divide the horizon evenly");

    const DrivingPath path =
        zero_noise
            ? zero_path(problem.horizon, problem.m,
                        problem.jump_model.mark_dim, steps)
            : sample_path({cfg.master_seed, path_index}, problem.jump_model,
                          problem.horizon, problem.m, steps);
    const Trajectory traj = integrate(problem, cfg.taming, n, coarsen(path, 1));

    std::ofstream file;
    std::ostream& out = open_output(cfg, file);
    write_meta(out, cfg);
    out << "# path_index " << path_index << " n " << n
        << (zero_noise ? " zero_noise" : "") << "\n";
    write_trajectory_csv(out, traj);
    out.flush();
    if (!cfg.output_path.empty())
        std::cout << "wrote " << cfg.output_path << "\n";

    if (traj.overflow_flag && cfg.taming.mode != TamingMode::Untamed) {
        std::cerr << "error: trajectory overflowed at step "
                  << traj.overflow_step << " in a tamed mode\n";
        return 2;
    }
    return 0;
}

int cmd_moments(const RunConfig& cfg) {
    if (!(cfg.p >= 2.0))
        throw std::invalid_argument("moments: run.p must be >= 2");
    const SdeProblem problem = build_problem(cfg);
    std::vector<long long> n_list;
    for (int e : cfg.n_exponents) n_list.push_back(1LL << e);
    const ProbeSeries series =
        moment_probe(problem, cfg.taming, n_list, cfg.p, cfg.n_paths,
                     cfg.master_seed, cfg.threads);

    std::ofstream file;
    std::ostream& out = open_output(cfg, file);
    write_meta(out, cfg);
    out << "# sup over grid times of mean |x|^p, p = " << fmt6(cfg.p) << ", "
        << cfg.n_paths << " paths\n";
    out << "n,sup_moment,flagged\n";
    for (std::size_t i = 0; i < series.n_values.size(); ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", series.values[i]);
        out << series.n_values[i] << ',' << buf << ',' << series.flagged[i]
            << "\n";
    }
    out << "# max/min ratio " << fmt6(series.max_min_ratio) << "\n";
    out.flush();
    if (!cfg.output_path.empty())
        std::cout << "wrote " << cfg.output_path << "\n";

    long long flagged = 0;
    for (long long f : series.flagged) flagged += f;
    if (flagged > 0) {
        std::cerr << "error: " << flagged
                  << " paths overflowed during the moment probe\n";
        return 2;
    }
    return 0;
}

namespace {

void print_report(std::ostream& out, const AssumptionReport& report) {
    out << report.assumption << ": " << report.sample_count << " samples, "
        << report.violations.size() << " violations, fitted constant "
        << fmt6(report.fitted_constant);
    if (report.jump_integral_std_error > 0.0)
        out << " (jump integrals by Monte Carlo, se "
            << fmt6(report.jump_integral_std_error) << ")";
    out << (report.passed() ? "  [PASS]" : "  [FAIL]") << "\n";
    const std::size_t show = std::min<std::size_t>(report.violations.size(), 3);
    for (std::size_t i = 0; i < show; ++i) {
        const AuditViolation& v = report.violations[i];
        out << "    violated at t = " << fmt6(v.t) << ", x = " << fmt6(v.x[0]);
        if (!v.xbar.empty()) out << ", xbar = " << fmt6(v.xbar[0]);
        out << ": lhs " << fmt6(v.lhs) << " > rhs " << fmt6(v.rhs) << "\n";
    }
    if (report.violations.size() > show)
        out << "    (" << report.violations.size() - show << " more)\n";
}

}  // namespace

int cmd_audit(const RunConfig& cfg) {
    const SdeProblem problem = build_problem(cfg);
    const auto samples =
        sample_box(problem, cfg.audit_radius,
                   static_cast<std::size_t>(cfg.audit_samples), cfg.master_seed);
    const auto pairs =
        sample_pair_box(problem, cfg.audit_radius,
                        static_cast<std::size_t>(cfg.audit_pairs),
                        cfg.master_seed);

    std::vector<AssumptionReport> reports;
    reports.push_back(audit_monotonicity(problem, cfg.audit_p0, cfg.audit_L,
                                         cfg.audit_M, samples));
    reports.push_back(audit_jump_growth(problem, cfg.audit_p0, cfg.audit_L,
                                        cfg.audit_N, samples));
    reports.push_back(audit_lipschitz_family(problem, "A-7", cfg.audit_p1,
                                             cfg.audit_C7, problem.chi, pairs));
    reports.push_back(audit_lipschitz_family(problem, "A-8", cfg.audit_p8,
                                             cfg.audit_C8, problem.chi, pairs));
    reports.push_back(audit_lipschitz_family(problem, "A-9", 0.0, cfg.audit_C9,
                                             problem.chi, pairs));
    reports.push_back(audit_monotonicity_tamed(problem, cfg.taming, cfg.audit_n,
                                               cfg.audit_p0, cfg.audit_L,
                                               cfg.audit_M, samples));
    for (AssumptionReport& r :
         verify_taming_growth(cfg.taming, problem, cfg.audit_n, cfg.audit_L,
                              cfg.audit_M, samples))
        reports.push_back(std::move(r));
    const CompensatorCheck comp =
        audit_compensator(problem, static_cast<std::size_t>(cfg.audit_mc_samples),
                          cfg.audit_tolerance);

    std::ofstream file;
    std::ostream& out = open_output(cfg, file);
    write_meta(out, cfg);
    out << "# sample box [-" << fmt6(cfg.audit_radius) << ", "
        << fmt6(cfg.audit_radius) << "], p0 = " << fmt6(cfg.audit_p0)
        << ", taming n = " << cfg.audit_n << "\n";
    bool all_pass = true;
    for (const AssumptionReport& report : reports) {
        print_report(out, report);
        all_pass = all_pass && report.passed();
    }
    out << "compensator consistency: max discrepancy "
        << fmt6(comp.max_discrepancy) << " (allowed " << fmt6(comp.max_allowed)
        << ", " << comp.mc_samples << " mark draws)"
        << (comp.passed ? "  [PASS]" : "  [FAIL]") << "\n";
    all_pass = all_pass && comp.passed;
    out << (all_pass ? "all assumptions hold on the sample set\n"
                     : "assumption violations found\n");
    out.flush();
    if (!cfg.output_path.empty())
        std::cout << "wrote " << cfg.output_path << "\n";
    return all_pass ? 0 : 2;
}

}  // namespace tamesde
