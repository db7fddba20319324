#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tamesde/model.hpp"
#include "tamesde/taming.hpp"

namespace tamesde {

// Numerical assumption audits. These are samplers, not provers: a pass means
// the inequality held, up to floating-point slack, at every sampled point.
// Each check allows the left side to exceed the right by
// 64 * eps * (sum of term magnitudes) so that catastrophic cancellation in
// polynomially large intermediates is not reported as a violation; genuine
// violations grow polynomially in |x| and dwarf the slack.

struct SamplePoint {
    double t = 0.0;
    Vec x;
};

struct AuditViolation {
    double t = 0.0;
    Vec x;
    Vec xbar;  // empty for single-point audits
    double lhs = 0.0;
    double rhs = 0.0;
};

struct AssumptionReport {
    std::string assumption;  // "A-2", "A-3", "A-7", "A-8", "A-9", "B-2", "B-4", "B-5"
    std::size_t sample_count = 0;
    std::vector<AuditViolation> violations;  // sorted by (t, x, xbar)
    std::map<std::string, double> parameters;  // the supplied constants
    // Smallest leading constant consistent with the samples (max of
    // lhs / rhs-shape over the sample set); NaN-free even on passes.
    double fitted_constant = 0.0;
    // Worst-case Monte Carlo standard error of any jump integral that had to
    // be estimated (0 when closed forms were available).
    double jump_integral_std_error = 0.0;

    bool passed() const { return violations.empty(); }
};

// Deterministic sample boxes. Both samplers always include the axis extremes
// +-R (and the origin) so that growth violations at the box edge cannot be
// missed by chance.
std::vector<SamplePoint> sample_box(const SdeProblem& problem, double R,
                                    std::size_t count, std::uint64_t seed);
std::vector<std::pair<SamplePoint, SamplePoint>> sample_pair_box(
    const SdeProblem& problem, double R, std::size_t count, std::uint64_t seed);

// Monotonicity-and-growth audit:
//   max(2 x.b(t,x) + (p0 - 1)|sigma(t,x)|^2, int |gamma(t,x,z)|^2 nu(dz))
//     <= L (M + |x|^2).
// Requires p0 >= 2 and a nonempty sample set.
AssumptionReport audit_monotonicity(const SdeProblem& problem, double p0, double L,
                                    double M,
                                    const std::vector<SamplePoint>& samples);

// Same inequality evaluated on the tamed coefficients b^n, sigma^n
// (gamma is never tamed); reported as "B-2".
AssumptionReport audit_monotonicity_tamed(const SdeProblem& problem,
                                          const TamingConfig& config, long long n,
                                          double p0, double L, double M,
                                          const std::vector<SamplePoint>& samples);

// Jump-moment growth: int |gamma(t,x,z)|^{p0} nu(dz) <= L (N + |x|^{p0}).
// Reported as "A-3".
AssumptionReport audit_jump_growth(const SdeProblem& problem, double p0, double L,
                                   double N,
                                   const std::vector<SamplePoint>& samples);

// Pairwise regularity audits. `which` selects the inequality:
//   "A-7": 2 dx.db + (p1 - 1)|dsigma|^2  and  int |dgamma|^2 nu(dz), each
//          <= C |dx|^2 (the unparenthesised "or" is read as max-of-branches)
//   "A-8": int |dgamma|^p nu(dz) <= C |dx|^p        (p = p_or_p1)
//   "A-9": |db| <= C (1 + |x|^chi + |xb|^chi) |dx|
// p_or_p1 is ignored for A-9 and chi for the others. Unsupported ids throw.
AssumptionReport audit_lipschitz_family(
    const SdeProblem& problem, std::string_view which, double p_or_p1, double C,
    double chi, const std::vector<std::pair<SamplePoint, SamplePoint>>& pairs);

// Consistency of the declared compensator with the mark sampler: compares a
// Monte Carlo estimate of intensity * E gamma(t, x, Z) against
// compensator(t, x) at a deterministic probe set. Passes when every
// discrepancy is within tolerance * (standard error of the estimate).
struct CompensatorCheck {
    bool passed = true;
    double max_discrepancy = 0.0;
    double max_allowed = 0.0;
    SamplePoint worst;
    std::size_t mc_samples = 0;
};
CompensatorCheck audit_compensator(const SdeProblem& problem, std::size_t mc_samples,
                                   double tolerance);

// Growth of the tamed drift and diffusion, with user-supplied L, M:
//   reports[0] ("B-4"):
//     Generic2Chi / Untamed: |b^n|^2 <= L n^{1/2} (M + |x|^2) and the same
//       bound for |sigma^n|^2;
//     DeterministicChi: the variant available for deterministic
//       coefficients, |b^n| <= L n^{1/2} (1 + |x|), plus the diffusion bound
//       |sigma^n|^2 <= L n^{1/2} (M + |x|^2).
//   reports[1] ("B-5"): |b^n| <= L (M + |x|^{chi+1}).
// Sdde mode is not supported here (no delay state to evaluate against).
std::vector<AssumptionReport> verify_taming_growth(
    const TamingConfig& config, const SdeProblem& problem, long long n, double L,
    double M, const std::vector<SamplePoint>& samples);

}  // namespace tamesde
