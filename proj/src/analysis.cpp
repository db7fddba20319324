#include "tamesde/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "tamesde/driving.hpp"

namespace tamesde {

namespace {

// Paths are processed in fixed blocks of kChunk consecutive indices. Workers
// may claim blocks in any order; every reduction combines per-block partial
// results in block order on one thread, so outputs never depend on the thread
// count or scheduling.
constexpr long long kChunk = 256;

void parallel_blocks(long long n_blocks, int threads,
                     const std::function<void(long long)>& work) {
    threads = std::clamp(threads, 1, 64);
    if (threads == 1 || n_blocks <= 1) {
        for (long long b = 0; b < n_blocks; ++b) work(b);
        return;
    }
    std::atomic<long long> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (;;) {
                    const long long b = next.fetch_add(1);
                    if (b >= n_blocks) break;
                    work(b);
                }
            } catch (...) {
                errors[static_cast<std::size_t>(t)] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

long long block_count(long long n_paths) {
    return (n_paths + kChunk - 1) / kChunk;
}

double diff_norm(std::span<const double> a, std::span<const double> b) {
    if (a.size() == 1) return std::fabs(a[0] - b[0]);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

double root(double mean, double p) {
    if (mean <= 0.0) return 0.0;
    return p == 2.0 ? std::sqrt(mean) : std::pow(mean, 1.0 / p);
}

}  // namespace

ErrorTable strong_error(const SdeProblem& problem, const TamingConfig& taming,
                        std::span<const int> h_exponents, int ref_exponent,
                        long long n_paths, std::uint64_t master_seed, double p,
                        int threads) {
    problem.validate();
    taming.validate();
    if (h_exponents.empty())
        throw std::invalid_argument("strong_error: h_exponents is empty");
    if (n_paths < 1)
        throw std::invalid_argument("strong_error: n_paths must be >= 1");
    if (!(p >= 1.0))
        throw std::invalid_argument("strong_error: p must be >= 1");
    if (ref_exponent < 0 || ref_exponent > 40)
        throw std::invalid_argument(
            "strong_error: ref_exponent must lie in [0, 40]");
    std::vector<int> exps(h_exponents.begin(), h_exponents.end());
    std::sort(exps.begin(), exps.end());
    exps.erase(std::unique(exps.begin(), exps.end()), exps.end());
    if (exps.front() < 0)
        throw std::invalid_argument("strong_error: h exponents must be >= 0");
    if (exps.back() > ref_exponent)
        throw std::invalid_argument(
            "strong_error: ref_exponent must be at least every h exponent");

    const long long n_ref = 1LL << ref_exponent;
    const double length = problem.horizon.length();
    const double fine_real = static_cast<double>(n_ref) * length;
    const long long fine_steps = std::llround(fine_real);
    if (std::fabs(fine_real - static_cast<double>(fine_steps)) >
        1e-9 * std::max(1.0, fine_real))
        throw std::invalid_argument(
            "strong_error: reference grid does not divide the horizon evenly");

    const std::size_t levels = exps.size();
    std::vector<double> slots(static_cast<std::size_t>(n_paths) * levels, 0.0);
    std::vector<char> flagged(static_cast<std::size_t>(n_paths), 0);

    parallel_blocks(block_count(n_paths), threads, [&](long long b) {
        const long long lo = b * kChunk;
        const long long hi = std::min(n_paths, lo + kChunk);
        for (long long i = lo; i < hi; ++i) {
            const DrivingPath path =
                sample_path({master_seed, static_cast<std::uint64_t>(i)},
                            problem.jump_model, problem.horizon, problem.m,
                            fine_steps);
            const CoarseView ref_view = coarsen(path, 1);
            const Trajectory ref = integrate(problem, taming, n_ref, ref_view);
            if (ref.overflow_flag) {
                flagged[static_cast<std::size_t>(i)] = 1;
                continue;
            }
            for (std::size_t l = 0; l < levels; ++l) {
                const long long n = 1LL << exps[l];
                const CoarseView view =
                    coarsen(path, 1LL << (ref_exponent - exps[l]));
                const Trajectory traj = integrate(problem, taming, n, view);
                if (traj.overflow_flag) {
                    flagged[static_cast<std::size_t>(i)] = 1;
                    break;
                }
                slots[static_cast<std::size_t>(i) * levels + l] = pow_moment(
                    diff_norm(ref.final_state(), traj.final_state()), p);
            }
        }
    });

    long long total_flagged = 0;
    for (char f : flagged) total_flagged += f;
    const long long n_used = n_paths - total_flagged;

    ErrorTable table;
    table.p = p;
    table.rows.resize(levels);
    for (std::size_t l = 0; l < levels; ++l) {
        double sum = 0.0, sumsq = 0.0;
        for (long long i = 0; i < n_paths; ++i) {
            if (flagged[static_cast<std::size_t>(i)]) continue;
            const double v = slots[static_cast<std::size_t>(i) * levels + l];
            sum += v;
            sumsq += v * v;
        }
        ErrorRow row;
        row.h = std::ldexp(1.0, -exps[l]);
        row.n_paths = n_used;
        row.flagged_paths = total_flagged;
        if (n_used > 0) {
            const double mean = sum / static_cast<double>(n_used);
            row.rms_error = root(mean, p);
            if (n_used > 1 && mean > 0.0) {
                double var =
                    (sumsq - sum * sum / static_cast<double>(n_used)) /
                    static_cast<double>(n_used - 1);
                var = std::max(var, 0.0);
                const double se_mean =
                    std::sqrt(var / static_cast<double>(n_used));
                row.std_error =
                    se_mean * std::pow(mean, (1.0 - p) / p) / p;
            }
        } else {
            row.rms_error = std::numeric_limits<double>::quiet_NaN();
            row.std_error = std::numeric_limits<double>::quiet_NaN();
        }
        table.rows[l] = row;  // exponents ascend, so h descends
    }
    return table;
}

RateFit fit_rate(const ErrorTable& table) {
    const std::size_t n = table.rows.size();
    if (n < 3) throw std::invalid_argument("fit_rate: need at least 3 rows");
    for (const ErrorRow& row : table.rows)
        if (!(row.rms_error > 0.0))
            throw std::invalid_argument(
                "fit_rate: zero-error rows must be dropped before fitting");
    double sx = 0.0, sy = 0.0;
    for (const ErrorRow& row : table.rows) {
        sx += std::log(row.h);
        sy += std::log(row.rms_error);
    }
    const double mx = sx / static_cast<double>(n);
    const double my = sy / static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const ErrorRow& row : table.rows) {
        const double dx = std::log(row.h) - mx;
        const double dy = std::log(row.rms_error) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0)
        throw std::invalid_argument("fit_rate: all rows share the same h");
    RateFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    const double ss_res = syy - sxy * sxy / sxx;
    fit.r2 = syy == 0.0 ? 1.0 : 1.0 - ss_res / syy;
    return fit;
}

ProbeSeries moment_probe(const SdeProblem& problem, const TamingConfig& taming,
                         std::span<const long long> n_list, double p,
                         long long n_paths, std::uint64_t master_seed,
                         int threads) {
    problem.validate();
    taming.validate();
    if (n_list.empty())
        throw std::invalid_argument("moment_probe: n_list is empty");
    if (!(p >= 2.0))
        throw std::invalid_argument("moment_probe: p must be >= 2");
    if (n_paths < 1)
        throw std::invalid_argument("moment_probe: n_paths must be >= 1");

    ProbeSeries series;
    const double length = problem.horizon.length();
    for (long long n : n_list) {
        const double steps_real = static_cast<double>(n) * length;
        const long long steps = std::llround(steps_real);
        if (std::fabs(steps_real - static_cast<double>(steps)) >
            1e-9 * std::max(1.0, steps_real))
            throw std::invalid_argument(
                "moment_probe: n does not divide the horizon evenly");

        const long long blocks = block_count(n_paths);
        std::vector<std::vector<double>> sums(
            static_cast<std::size_t>(blocks),
            std::vector<double>(static_cast<std::size_t>(steps) + 1, 0.0));
        std::vector<long long> block_flagged(static_cast<std::size_t>(blocks), 0);

        parallel_blocks(blocks, threads, [&](long long b) {
            auto& local = sums[static_cast<std::size_t>(b)];
            const long long lo = b * kChunk;
            const long long hi = std::min(n_paths, lo + kChunk);
            for (long long i = lo; i < hi; ++i) {
                const DrivingPath path =
                    sample_path({master_seed, static_cast<std::uint64_t>(i)},
                                problem.jump_model, problem.horizon, problem.m,
                                steps);
                const Trajectory traj =
                    integrate(problem, taming, n, coarsen(path, 1));
                if (traj.overflow_flag) {
                    ++block_flagged[static_cast<std::size_t>(b)];
                    continue;
                }
                for (long long k = 0; k <= steps; ++k)
                    local[static_cast<std::size_t>(k)] +=
                        pow_moment(state_norm(traj.state(k)), p);
            }
        });

        long long flagged = 0;
        for (long long f : block_flagged) flagged += f;
        const long long n_used = n_paths - flagged;
        double sup = std::numeric_limits<double>::quiet_NaN();
        if (n_used > 0) {
            sup = 0.0;
            for (long long k = 0; k <= steps; ++k) {
                double total = 0.0;
                for (long long b = 0; b < blocks; ++b)
                    total += sums[static_cast<std::size_t>(b)]
                                 [static_cast<std::size_t>(k)];
                sup = std::max(sup, total / static_cast<double>(n_used));
            }
        }
        series.n_values.push_back(n);
        series.values.push_back(sup);
        series.flagged.push_back(flagged);
    }

    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    bool bad = false;
    for (double v : series.values) {
        if (!std::isfinite(v)) bad = true;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    series.max_min_ratio =
        bad ? std::numeric_limits<double>::quiet_NaN() : hi / lo;
    return series;
}

IncrementProbe increment_probe(const SdeProblem& problem,
                               const TamingConfig& taming, long long n,
                               double rho, long long n_paths,
                               std::uint64_t master_seed, int threads) {
    problem.validate();
    taming.validate();
    if (n < 1) throw std::invalid_argument("increment_probe: n must be >= 1");
    if (!(rho >= 2.0))
        throw std::invalid_argument("increment_probe: rho must be >= 2");
    if (n_paths < 1)
        throw std::invalid_argument("increment_probe: n_paths must be >= 1");

    const double length = problem.horizon.length();
    const double steps_real = static_cast<double>(n) * length;
    const long long steps = std::llround(steps_real);
    if (std::fabs(steps_real - static_cast<double>(steps)) >
        1e-9 * std::max(1.0, steps_real))
        throw std::invalid_argument(
            "increment_probe: n does not divide the horizon evenly");

    const int m = problem.m;
    const int q = problem.jump_model.mark_dim;
    const long long blocks = block_count(n_paths);
    std::vector<std::vector<double>> sums(
        static_cast<std::size_t>(blocks),
        std::vector<double>(static_cast<std::size_t>(steps), 0.0));
    std::vector<long long> block_flagged(static_cast<std::size_t>(blocks), 0);

    parallel_blocks(blocks, threads, [&](long long b) {
        auto& local = sums[static_cast<std::size_t>(b)];
        const long long lo = b * kChunk;
        const long long hi = std::min(n_paths, lo + kChunk);
        Vec next;
        for (long long i = lo; i < hi; ++i) {
            const DrivingPath path =
                sample_path({master_seed, static_cast<std::uint64_t>(i)},
                            problem.jump_model, problem.horizon, problem.m,
                            2 * steps);
            const CoarseView view = coarsen(path, 2);
            const Trajectory traj = integrate(problem, taming, n, view);
            if (traj.overflow_flag) {
                ++block_flagged[static_cast<std::size_t>(b)];
                continue;
            }
            for (long long k = 0; k < steps; ++k) {
                StepInputs inputs;
                inputs.t = traj.time(k);
                inputs.h = path.h_fine;  // exactly half the scheme step
                inputs.x_left = traj.state(k);
                inputs.dW = {path.dW.data() +
                                 static_cast<std::size_t>(2 * k) * m,
                             static_cast<std::size_t>(m)};
                // Jumps in the first half-step: within the coarse bucket the
                // fine buckets ascend, so bucket 2k entries form a prefix.
                std::size_t lo_j = view.jump_offsets[static_cast<std::size_t>(k)];
                std::size_t hi_j =
                    view.jump_offsets[static_cast<std::size_t>(k) + 1];
                std::size_t cnt = 0;
                while (lo_j + cnt < hi_j &&
                       path.jump_buckets[lo_j + cnt] == 2 * k)
                    ++cnt;
                inputs.jump_marks = {path.jump_marks.data() + lo_j * q, cnt * q};
                inputs.q = q;
                next = step(problem, taming, n, inputs);
                local[static_cast<std::size_t>(k)] += pow_moment(
                    diff_norm(next, traj.state(k)), rho);
            }
        }
    });

    IncrementProbe probe;
    for (long long f : block_flagged) probe.flagged_paths += f;
    const long long n_used = n_paths - probe.flagged_paths;
    if (n_used > 0) {
        double sup = 0.0;
        for (long long k = 0; k < steps; ++k) {
            double total = 0.0;
            for (long long b = 0; b < blocks; ++b)
                total +=
                    sums[static_cast<std::size_t>(b)][static_cast<std::size_t>(k)];
            sup = std::max(sup, total / static_cast<double>(n_used));
        }
        probe.value = sup;
    } else {
        probe.value = std::numeric_limits<double>::quiet_NaN();
    }
    return probe;
}

void write_error_csv(std::ostream& out, const ErrorTable& table,
                     const RateFit* fit, const OutputMeta& meta) {
    char buf[32];
    out << "# version " << kVersion << "\n";
    out << "# config_hash " << meta.config_hash << "\n";
    out << "# master_seed " << meta.master_seed << "\n";
    out << "h,rms_error,std_error,n_paths,flagged\n";
    for (const ErrorRow& row : table.rows) {
        std::snprintf(buf, sizeof buf, "%.17g", row.h);
        out << buf << ',';
        std::snprintf(buf, sizeof buf, "%.17g", row.rms_error);
        out << buf << ',';
        std::snprintf(buf, sizeof buf, "%.17g", row.std_error);
        out << buf << ',' << row.n_paths << ',' << row.flagged_paths << "\n";
    }
    if (fit != nullptr) {
        std::snprintf(buf, sizeof buf, "%.17g", fit->slope);
        out << "# fit slope=" << buf;
        std::snprintf(buf, sizeof buf, "%.17g", fit->intercept);
        out << " intercept=" << buf;
        std::snprintf(buf, sizeof buf, "%.17g", fit->r2);
        out << " r2=" << buf << "\n";
    }
}

}  // namespace tamesde
