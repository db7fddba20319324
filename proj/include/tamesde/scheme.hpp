#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "tamesde/driving.hpp"
#include "tamesde/model.hpp"
#include "tamesde/taming.hpp"
#include "tamesde/types.hpp"

namespace tamesde {

// One integrated path on the scheme grid; states is (steps+1) x d row-major.
// If a step produces a non-finite component the trajectory freezes: the first
// bad grid index is recorded in overflow_step and every state from there on is
// NaN-filled, so a flagged trajectory can never leak plausible-looking numbers
// into statistics.
struct Trajectory {
    long long steps = 0;
    double h = 0.0;
    double t0 = 0.0;
    int d = 1;
    std::vector<double> states;
    bool overflow_flag = false;
    long long overflow_step = -1;

    std::span<const double> state(long long k) const {
        return {states.data() + static_cast<std::size_t>(k) * d,
                static_cast<std::size_t>(d)};
    }
    double time(long long k) const { return t0 + static_cast<double>(k) * h; }
    std::span<const double> final_state() const { return state(steps); }
};

// Everything one Euler step reads. x_left is the state at the left grid point
// kappa(n, t); jump_marks concatenates the marks landing in (t, t+h], q values
// per jump, in time order.
struct StepInputs {
    double t = 0.0;
    double h = 0.0;
    std::span<const double> x_left;
    std::span<const double> dW;
    std::span<const double> jump_marks;
    int q = 1;
};

// One tamed Euler step:
//   x + h b^n(t,x) + sigma^n(t,x) dW + sum_z gamma(t,x,z) - h compensator(t,x)
// where (b^n, sigma^n) are the tamed coefficients and gamma is never tamed.
// Non-finite output is the caller's overflow signal.
Vec step(const SdeProblem& problem, const TamingConfig& taming, long long n,
         const StepInputs& inputs);

// Repeated step() over the view's grid. n is the taming parameter (steps per
// unit time); the view must carry exactly n * (t1 - t0) steps so that the
// scheme grid and the kappa grid coincide. Deterministic: identical
// (problem, taming, n, view) give a bit-identical Trajectory; factor-1 views
// reproduce the reference trajectory exactly.
Trajectory integrate(const SdeProblem& problem, const TamingConfig& taming,
                     long long n, const CoarseView& view);

// Delay variant. At each grid time t the delayed block y = (x_{d_1(t)}, ...,
// x_{d_k(t)}) is assembled from stored grid states, with d_i(t) floored to the
// scheme lattice; values at or below zero read the initial segment (clamped to
// -lookback when flooring lands below it). Delay functions must be
// nondecreasing at grid times, never exceed the lookback window, and never
// exceed the current grid time. Stepping reuses the exact code path of
// integrate, so a degenerate delay (d_1(t) = t on the grid, chi1 = 0)
// reproduces integrate bit-for-bit.
Trajectory integrate_sdde(const SddeProblem& problem, const DelaySpec& delays,
                          const TamingConfig& taming, long long n,
                          const CoarseView& view);

// Columns k,t,x_1..x_d. A flagged trajectory emits only the rows before the
// first non-finite state, then a "# overflow at step K" footer.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

}  // namespace tamesde
