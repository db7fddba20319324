#include "tamesde/audit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tamesde {

namespace {

constexpr double kSlackUlps = 64.0;

// lhs > rhs beyond rounding noise of intermediates with magnitude ~ scale.
bool violates(double lhs, double rhs, double scale) {
    const double slack =
        kSlackUlps * std::numeric_limits<double>::epsilon() * std::max(scale, 1.0);
    return lhs > rhs + slack;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double sq_norm(std::span<const double> a) { return dot(a, a); }

bool point_less(const Vec& a, const Vec& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

void sort_violations(std::vector<AuditViolation>& v) {
    std::sort(v.begin(), v.end(), [](const AuditViolation& a, const AuditViolation& b) {
        if (a.t != b.t) return a.t < b.t;
        if (a.x != b.x) return point_less(a.x, b.x);
        return point_less(a.xbar, b.xbar);
    });
}

void track_fitted(double& fitted, double lhs, double rhs_shape) {
    if (rhs_shape > 0.0 && std::isfinite(lhs)) fitted = std::max(fitted, lhs / rhs_shape);
}

// Shared mark cloud for Monte Carlo jump integrals, drawn once per audit from
// a dedicated stream so that reports are deterministic.
constexpr std::uint64_t kAuditSeed = 0x61756431ULL;
constexpr std::size_t kMcMarks = 20000;

struct MarkCloud {
    std::vector<double> marks;  // count x q
    int q = 1;
    std::size_t count = 0;
};

MarkCloud draw_marks(const LevyModel& model, std::size_t count) {
    MarkCloud cloud;
    cloud.q = model.mark_dim;
    cloud.count = count;
    cloud.marks.resize(count * model.mark_dim);
    CounterRng rng(PathSeed{kAuditSeed, 0}, CounterRng::kDomainAudit);
    for (std::size_t i = 0; i < count; ++i)
        model.mark_sampler(rng, std::span<double>(cloud.marks.data() + i * model.mark_dim,
                                                  model.mark_dim));
    return cloud;
}

// int |gamma(t, x, z)|^p nu(dz): closed form when declared, Monte Carlo over
// the shared mark cloud otherwise. std_error accumulates the worst-case MC
// standard error seen by the caller.
double jump_abs_integral(const SdeProblem& problem, const MarkCloud& cloud, double t,
                         std::span<const double> x, double p, double& std_error) {
    if (problem.jump_abs_moment) return problem.jump_abs_moment(t, x, p);
    Vec g(problem.d);
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t i = 0; i < cloud.count; ++i) {
        problem.eval_jump(t, x,
                          std::span<const double>(cloud.marks.data() + i * cloud.q,
                                                  cloud.q),
                          g);
        const double v = pow_moment(state_norm(g), p);
        sum += v;
        sumsq += v * v;
    }
    const double n = static_cast<double>(cloud.count);
    const double mean = sum / n;
    const double var = std::max(0.0, sumsq / n - mean * mean);
    std_error = std::max(std_error,
                         problem.jump_model.intensity * std::sqrt(var / n));
    return problem.jump_model.intensity * mean;
}

double jump_diff_integral(const SdeProblem& problem, const MarkCloud& cloud, double t,
                          std::span<const double> x, std::span<const double> xb,
                          double p, double& std_error) {
    if (problem.jump_diff_moment) return problem.jump_diff_moment(t, x, xb, p);
    Vec g(problem.d), gb(problem.d);
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t i = 0; i < cloud.count; ++i) {
        const std::span<const double> z(cloud.marks.data() + i * cloud.q, cloud.q);
        problem.eval_jump(t, x, z, g);
        problem.eval_jump(t, xb, z, gb);
        for (int j = 0; j < problem.d; ++j) g[j] -= gb[j];
        const double v = pow_moment(state_norm(g), p);
        sum += v;
        sumsq += v * v;
    }
    const double n = static_cast<double>(cloud.count);
    const double mean = sum / n;
    const double var = std::max(0.0, sumsq / n - mean * mean);
    std_error = std::max(std_error,
                         problem.jump_model.intensity * std::sqrt(var / n));
    return problem.jump_model.intensity * mean;
}

bool needs_mc(const SdeProblem& problem, bool diff) {
    return diff ? !problem.jump_diff_moment : !problem.jump_abs_moment;
}

}  // namespace

std::vector<SamplePoint> sample_box(const SdeProblem& problem, double R,
                                    std::size_t count, std::uint64_t seed) {
    if (!(R > 0.0)) throw std::invalid_argument("sample_box: R must be > 0");
    if (count == 0) throw std::invalid_argument("sample_box: count must be > 0");
    const Horizon& hz = problem.horizon;
    std::vector<SamplePoint> points;
    points.reserve(count + 2 * problem.d + 1);
    // Axis extremes and the origin come first; growth failures concentrate
    // at the box edge.
    for (int i = 0; i < problem.d; ++i) {
        SamplePoint lo{hz.t0, Vec(problem.d, 0.0)};
        lo.x[i] = -R;
        SamplePoint hi{hz.t1, Vec(problem.d, 0.0)};
        hi.x[i] = R;
        points.push_back(std::move(lo));
        points.push_back(std::move(hi));
    }
    points.push_back(SamplePoint{hz.t0, Vec(problem.d, 0.0)});
    CounterRng rng(PathSeed{seed, 0}, CounterRng::kDomainAudit);
    while (points.size() < count + 2 * problem.d + 1) {
        SamplePoint p;
        p.t = hz.t0 + rng.next_double() * hz.length();
        p.x.resize(problem.d);
        for (int i = 0; i < problem.d; ++i)
            p.x[i] = (2.0 * rng.next_double() - 1.0) * R;
        points.push_back(std::move(p));
    }
    return points;
}

std::vector<std::pair<SamplePoint, SamplePoint>> sample_pair_box(
    const SdeProblem& problem, double R, std::size_t count, std::uint64_t seed) {
    auto base = sample_box(problem, R, count, seed);
    CounterRng rng(PathSeed{seed, 1}, CounterRng::kDomainAudit);
    std::vector<std::pair<SamplePoint, SamplePoint>> pairs;
    pairs.reserve(base.size() + 1);
    for (auto& p : base) {
        SamplePoint q;
        q.t = p.t;
        q.x.resize(problem.d);
        for (int i = 0; i < problem.d; ++i)
            q.x[i] = (2.0 * rng.next_double() - 1.0) * R;
        pairs.emplace_back(std::move(p), std::move(q));
    }
    // One coincident pair: the x = xbar edge case must always be sampled.
    SamplePoint same{problem.horizon.t0, Vec(problem.d, R / 2.0)};
    pairs.emplace_back(same, same);
    return pairs;
}

namespace {

AssumptionReport monotonicity_impl(const SdeProblem& problem,
                                   const TamingConfig* taming, long long n,
                                   double p0, double L, double M,
                                   const std::vector<SamplePoint>& samples) {
    if (!(p0 >= 2.0))
        throw std::invalid_argument("audit_monotonicity: p0 must be >= 2");
    if (samples.empty())
        throw std::invalid_argument("audit_monotonicity: empty sample set");
    problem.validate();
    AssumptionReport report;
    report.assumption = taming ? "B-2" : "A-2";
    report.sample_count = samples.size();
    report.parameters = {{"p0", p0}, {"L", L}, {"M", M}};
    if (taming) report.parameters["n"] = static_cast<double>(n);
    MarkCloud cloud;
    if (needs_mc(problem, false)) cloud = draw_marks(problem.jump_model, kMcMarks);
    Vec b(problem.d), s(problem.d * problem.m);
    for (const auto& pt : samples) {
        problem.eval_drift(pt.t, pt.x, b);
        problem.eval_diffusion(pt.t, pt.x, s);
        if (taming) {
            const double denom =
                taming_denominator(*taming, n, state_norm(pt.x), 0.0);
            for (double& v : b) v /= denom;
            for (double& v : s) v /= denom;
        }
        const double drift_term = 2.0 * dot(pt.x, b);
        const double diff_term = (p0 - 1.0) * sq_norm(s);
        const double jump_term = jump_abs_integral(problem, cloud, pt.t, pt.x, 2.0,
                                                   report.jump_integral_std_error);
        const double lhs = std::max(drift_term + diff_term, jump_term);
        const double rhs = L * (M + sq_norm(pt.x));
        const double scale = std::fabs(drift_term) + std::fabs(diff_term) +
                             std::fabs(jump_term) + std::fabs(rhs);
        track_fitted(report.fitted_constant, lhs, M + sq_norm(pt.x));
        if (violates(lhs, rhs, scale))
            report.violations.push_back({pt.t, pt.x, {}, lhs, rhs});
    }
    sort_violations(report.violations);
    return report;
}

}  // namespace

AssumptionReport audit_monotonicity(const SdeProblem& problem, double p0, double L,
                                    double M,
                                    const std::vector<SamplePoint>& samples) {
    return monotonicity_impl(problem, nullptr, 1, p0, L, M, samples);
}

AssumptionReport audit_monotonicity_tamed(const SdeProblem& problem,
                                          const TamingConfig& config, long long n,
                                          double p0, double L, double M,
                                          const std::vector<SamplePoint>& samples) {
    config.validate();
    if (config.mode == TamingMode::Sdde)
        throw std::invalid_argument(
            "audit_monotonicity_tamed: Sdde mode has no delay state here");
    return monotonicity_impl(problem, &config, n, p0, L, M, samples);
}

AssumptionReport audit_jump_growth(const SdeProblem& problem, double p0, double L,
                                   double N,
                                   const std::vector<SamplePoint>& samples) {
    if (!(p0 >= 2.0))
        throw std::invalid_argument("audit_jump_growth: p0 must be >= 2");
    if (samples.empty())
        throw std::invalid_argument("audit_jump_growth: empty sample set");
    problem.validate();
    AssumptionReport report;
    report.assumption = "A-3";
    report.sample_count = samples.size();
    report.parameters = {{"p0", p0}, {"L", L}, {"N", N}};
    MarkCloud cloud;
    if (needs_mc(problem, false)) cloud = draw_marks(problem.jump_model, kMcMarks);
    for (const auto& pt : samples) {
        const double lhs = jump_abs_integral(problem, cloud, pt.t, pt.x, p0,
                                             report.jump_integral_std_error);
        const double shape = N + std::pow(state_norm(pt.x), p0);
        const double rhs = L * shape;
        track_fitted(report.fitted_constant, lhs, shape);
        if (violates(lhs, rhs, std::fabs(lhs) + std::fabs(rhs)))
            report.violations.push_back({pt.t, pt.x, {}, lhs, rhs});
    }
    sort_violations(report.violations);
    return report;
}

AssumptionReport audit_lipschitz_family(
    const SdeProblem& problem, std::string_view which, double p_or_p1, double C,
    double chi, const std::vector<std::pair<SamplePoint, SamplePoint>>& pairs) {
    if (which != "A-7" && which != "A-8" && which != "A-9")
        throw std::invalid_argument("audit_lipschitz_family: unsupported assumption '" +
                                    std::string(which) + "'");
    if (pairs.empty())
        throw std::invalid_argument("audit_lipschitz_family: empty sample set");
    if (!(C > 0.0)) throw std::invalid_argument("audit_lipschitz_family: C must be > 0");
    if (chi < 0.0) throw std::invalid_argument("audit_lipschitz_family: chi must be >= 0");
    problem.validate();
    AssumptionReport report;
    report.assumption = std::string(which);
    report.sample_count = pairs.size();
    report.parameters["C"] = C;
    if (which == "A-7") report.parameters["p1"] = p_or_p1;
    if (which == "A-8") report.parameters["p"] = p_or_p1;
    if (which == "A-9") report.parameters["chi"] = chi;
    MarkCloud cloud;
    if ((which == "A-7" || which == "A-8") && needs_mc(problem, true))
        cloud = draw_marks(problem.jump_model, kMcMarks);

    Vec b(problem.d), bb(problem.d), s(problem.d * problem.m), sb(problem.d * problem.m);
    Vec dx(problem.d), db(problem.d), ds(problem.d * problem.m);
    for (const auto& [pa, pb] : pairs) {
        for (int i = 0; i < problem.d; ++i) dx[i] = pa.x[i] - pb.x[i];
        const double dxn = state_norm(dx);
        double lhs = 0.0, rhs = 0.0, scale = 0.0, shape = 0.0;
        if (which == "A-9") {
            problem.eval_drift(pa.t, pa.x, b);
            problem.eval_drift(pa.t, pb.x, bb);
            for (int i = 0; i < problem.d; ++i) db[i] = b[i] - bb[i];
            lhs = state_norm(db);
            shape = (1.0 + std::pow(state_norm(pa.x), chi) +
                     std::pow(state_norm(pb.x), chi)) *
                    dxn;
            rhs = C * shape;
            scale = lhs + std::fabs(rhs);
        } else if (which == "A-8") {
            lhs = jump_diff_integral(problem, cloud, pa.t, pa.x, pb.x, p_or_p1,
                                     report.jump_integral_std_error);
            shape = pow_moment(dxn, p_or_p1);
            rhs = C * shape;
            scale = std::fabs(lhs) + std::fabs(rhs);
        } else {  // A-7
            problem.eval_drift(pa.t, pa.x, b);
            problem.eval_drift(pa.t, pb.x, bb);
            problem.eval_diffusion(pa.t, pa.x, s);
            problem.eval_diffusion(pa.t, pb.x, sb);
            for (int i = 0; i < problem.d; ++i) db[i] = b[i] - bb[i];
            for (std::size_t i = 0; i < ds.size(); ++i) ds[i] = s[i] - sb[i];
            const double bracket = 2.0 * dot(dx, db) + (p_or_p1 - 1.0) * sq_norm(ds);
            const double jump = jump_diff_integral(problem, cloud, pa.t, pa.x, pb.x,
                                                   2.0, report.jump_integral_std_error);
            lhs = std::max(bracket, jump);
            shape = dxn * dxn;
            rhs = C * shape;
            scale = std::fabs(2.0 * dot(dx, db)) +
                    std::fabs((p_or_p1 - 1.0) * sq_norm(ds)) + std::fabs(jump) +
                    std::fabs(rhs);
        }
        track_fitted(report.fitted_constant, lhs, shape);
        if (violates(lhs, rhs, scale))
            report.violations.push_back({pa.t, pa.x, pb.x, lhs, rhs});
    }
    sort_violations(report.violations);
    return report;
}

CompensatorCheck audit_compensator(const SdeProblem& problem, std::size_t mc_samples,
                                   double tolerance) {
    if (mc_samples < 1000)
        throw std::invalid_argument("audit_compensator: mc_samples must be >= 1000");
    if (!(tolerance > 0.0))
        throw std::invalid_argument("audit_compensator: tolerance must be > 0");
    problem.validate();
    CompensatorCheck check;
    check.mc_samples = mc_samples;
    const MarkCloud cloud = draw_marks(problem.jump_model, mc_samples);
    const Horizon& hz = problem.horizon;
    const double probes_x[] = {0.0, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0};
    const double probes_t[] = {hz.t0, hz.t0 + 0.5 * hz.length(), hz.t1};
    Vec x(problem.d), g(problem.d), declared(problem.d);
    Vec mean(problem.d), var(problem.d);
    for (double t : probes_t) {
        for (double xv : probes_x) {
            std::fill(x.begin(), x.end(), xv);
            std::fill(mean.begin(), mean.end(), 0.0);
            std::fill(var.begin(), var.end(), 0.0);
            for (std::size_t i = 0; i < cloud.count; ++i) {
                problem.eval_jump(
                    t, x,
                    std::span<const double>(cloud.marks.data() + i * cloud.q, cloud.q),
                    g);
                for (int j = 0; j < problem.d; ++j) {
                    mean[j] += g[j];
                    var[j] += g[j] * g[j];
                }
            }
            const double nmc = static_cast<double>(cloud.count);
            problem.eval_compensator(t, x, declared);
            for (int j = 0; j < problem.d; ++j) {
                const double mu = mean[j] / nmc;
                const double v = std::max(0.0, var[j] / nmc - mu * mu);
                const double se = problem.jump_model.intensity * std::sqrt(v / nmc);
                const double disc =
                    std::fabs(problem.jump_model.intensity * mu - declared[j]);
                const double allowed = tolerance * se;
                if (disc > check.max_discrepancy) {
                    check.max_discrepancy = disc;
                    check.max_allowed = allowed;
                    check.worst = SamplePoint{t, x};
                }
                if (disc > allowed) check.passed = false;
            }
        }
    }
    return check;
}

std::vector<AssumptionReport> verify_taming_growth(
    const TamingConfig& config, const SdeProblem& problem, long long n, double L,
    double M, const std::vector<SamplePoint>& samples) {
    config.validate();
    problem.validate();
    if (config.mode == TamingMode::Sdde)
        throw std::invalid_argument(
            "verify_taming_growth: Sdde mode has no delay state here");
    if (samples.empty())
        throw std::invalid_argument("verify_taming_growth: empty sample set");
    if (n < 1) throw std::invalid_argument("verify_taming_growth: n must be >= 1");

    AssumptionReport b4, b5;
    b4.assumption = "B-4";
    b5.assumption = "B-5";
    b4.sample_count = b5.sample_count = samples.size();
    b4.parameters = {{"L", L}, {"M", M}, {"n", static_cast<double>(n)}};
    b5.parameters = {{"L", L}, {"M", M}, {"chi", config.chi}};
    const bool deterministic_variant = config.mode == TamingMode::DeterministicChi;
    const double sqrt_n = std::sqrt(static_cast<double>(n));

    Vec b(problem.d), s(problem.d * problem.m);
    for (const auto& pt : samples) {
        problem.eval_drift(pt.t, pt.x, b);
        problem.eval_diffusion(pt.t, pt.x, s);
        const double xn = state_norm(pt.x);
        const double denom = taming_denominator(config, n, xn, 0.0);
        for (double& v : b) v /= denom;
        for (double& v : s) v /= denom;
        const double bn = state_norm(b);
        const double sn2 = sq_norm(s);

        // B-4: drift bound (mode-dependent form) plus the diffusion bound.
        {
            double lhs, rhs, shape;
            if (deterministic_variant) {
                shape = sqrt_n * (1.0 + xn);
                lhs = bn;
            } else {
                shape = sqrt_n * (M + xn * xn);
                lhs = bn * bn;
            }
            rhs = L * shape;
            track_fitted(b4.fitted_constant, lhs, shape);
            if (violates(lhs, rhs, lhs + std::fabs(rhs)))
                b4.violations.push_back({pt.t, pt.x, {}, lhs, rhs});
            const double dshape = sqrt_n * (M + xn * xn);
            track_fitted(b4.fitted_constant, sn2, dshape);
            if (violates(sn2, L * dshape, sn2 + std::fabs(L * dshape)))
                b4.violations.push_back({pt.t, pt.x, {}, sn2, L * dshape});
        }
        // B-5: polynomial drift bound.
        {
            const double shape = M + std::pow(xn, config.chi + 1.0);
            const double rhs = L * shape;
            track_fitted(b5.fitted_constant, bn, shape);
            if (violates(bn, rhs, bn + std::fabs(rhs)))
                b5.violations.push_back({pt.t, pt.x, {}, bn, rhs});
        }
    }
    sort_violations(b4.violations);
    sort_violations(b5.violations);
    return {std::move(b4), std::move(b5)};
}

}  // namespace tamesde
