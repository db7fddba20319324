#pragma once

#include <span>
#include <utility>
#include <vector>

#include "tamesde/types.hpp"

namespace tamesde {

// How raw coefficients are rescaled into the scheme coefficients. The jump
// coefficient is never rescaled.
//
//   Generic2Chi       divide drift and diffusion by 1 + n^{-1/2}|x|^{2 chi}
//   DeterministicChi  divide both by 1 + n^{-1/2}|x|^{chi} (the milder
//                     denominator available for deterministic coefficients)
//   Sdde              divide both by 1 + n^{-1/2}(|y|^{2 chi1} + |x|^{2 chi2})
//                     where y is the delayed-state block
//   Untamed           pass-through; exists to demonstrate divergence
//
// Convention: an exponent of exactly zero removes its term from the
// denominator instead of contributing |.|^0 = 1. This makes Sdde with
// chi1 = 0 coincide bit-for-bit with Generic2Chi at chi = chi2, which is the
// natural degenerate-delay limit.
enum class TamingMode { Generic2Chi, DeterministicChi, Sdde, Untamed };

struct TamingConfig {
    TamingMode mode = TamingMode::Generic2Chi;
    double chi = 0.0;   // Generic2Chi / DeterministicChi exponent
    double chi1 = 0.0;  // Sdde delayed-state exponent
    double chi2 = 0.0;  // Sdde current-state exponent

    void validate() const;  // throws std::invalid_argument
};

// Left grid-point map for n steps per unit interval starting at t0.
struct GridMap {
    long long n = 1;
    double t0 = 0.0;
};

// kappa(n, t) = floor(n (t - t0)) / n + t0, evaluated so that the returned
// value g satisfies g <= t < g + 1/n in computed double arithmetic (the
// initial floor is corrected by at most a step in either direction). Throws
// if t < t0 or the grid is invalid.
double kappa(const GridMap& grid, double t);

// n^{-1/2}, the step-dependent scale in every taming denominator.
double taming_scale(long long n);

// The denominator for a state with norm x_norm (and delayed-state norm
// y_norm, ignored outside Sdde mode). Untamed returns exactly 1.
double taming_denominator(const TamingConfig& config, long long n,
                          double x_norm, double y_norm);

// Divide raw coefficient values, already evaluated at (t, x) (and y), by the
// mode's denominator. delay_state must be nonempty in Sdde mode and is
// ignored otherwise.
std::pair<Vec, Vec> tame(const TamingConfig& config, long long n,
                         std::span<const double> x,
                         std::span<const double> raw_drift,
                         std::span<const double> raw_diffusion,
                         std::span<const double> delay_state = {});

}  // namespace tamesde
