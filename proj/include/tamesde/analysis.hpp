#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tamesde/model.hpp"
#include "tamesde/scheme.hpp"
#include "tamesde/taming.hpp"

namespace tamesde {

struct ErrorRow {
    double h = 0.0;
    double rms_error = 0.0;   // (mean |X_T^ref - X_T^h|^p)^{1/p}
    double std_error = 0.0;   // delta-method standard error of rms_error
    long long n_paths = 0;    // paths actually averaged
    long long flagged_paths = 0;
};

// Rows sorted by h descending. A path that overflows at any resolution
// (reference included) is excluded from every row, so all rows average the
// same path population and the coupling comparison stays like-for-like.
struct ErrorTable {
    std::vector<ErrorRow> rows;
    double p = 2.0;
};

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

// Coupled strong-error estimate: per path index, one driving path at
// 2^ref_exponent fine steps; the reference is the factor-1 integration and
// each h = 2^-e level integrates the coarsened view of the same path.
// h_exponents may include ref_exponent (those rows are exactly zero and must
// be dropped before fit_rate). std_error uses the delta method:
// se(mean)^{1/p} = se(mean) * mean^{(1-p)/p} / p.
//
// Results are byte-identical for any `threads`: workers fill per-path result
// slots and the reduction runs in path-index order on one thread.
ErrorTable strong_error(const SdeProblem& problem, const TamingConfig& taming,
                        std::span<const int> h_exponents, int ref_exponent,
                        long long n_paths, std::uint64_t master_seed,
                        double p = 2.0, int threads = 1);

// OLS of log(rms_error) on log(h). Requires >= 3 rows, all rms_error > 0
// (degenerate zero rows must be dropped by the caller). A table with constant
// rms fits slope 0 with r2 = 1.
RateFit fit_rate(const ErrorTable& table);

// Per-n sup over grid times of the empirical mean of |x^n_t|^p.
struct ProbeSeries {
    std::vector<long long> n_values;
    std::vector<double> values;
    std::vector<long long> flagged;  // flagged paths per n, excluded from means
    double max_min_ratio = 0.0;      // NaN if any value is not finite
};

ProbeSeries moment_probe(const SdeProblem& problem, const TamingConfig& taming,
                         std::span<const long long> n_list, double p,
                         long long n_paths, std::uint64_t master_seed,
                         int threads = 1);

// Empirical sup over step midpoints t = kappa + h/2 of E|x^n_t - x^n_kappa|^rho,
// with x^n_t the scheme's continuous interpolant (drift and diffusion held at
// the left grid point, plus the jumps landing in the first half-step). The
// half-step increment is evaluated through step() on a twice-finer driving
// path so the interpolant arithmetic is the scheme's own.
struct IncrementProbe {
    double value = 0.0;
    long long flagged_paths = 0;
};

IncrementProbe increment_probe(const SdeProblem& problem,
                               const TamingConfig& taming, long long n,
                               double rho, long long n_paths,
                               std::uint64_t master_seed, int threads = 1);

// Provenance stamped into every CSV header.
struct OutputMeta {
    std::string config_hash;
    std::uint64_t master_seed = 0;
};

// Comment lines (version, config hash, seed), the column header
// h,rms_error,std_error,n_paths,flagged, one row per level, then the rate fit
// as a trailing comment when given.
void write_error_csv(std::ostream& out, const ErrorTable& table,
                     const RateFit* fit, const OutputMeta& meta);

}  // namespace tamesde
