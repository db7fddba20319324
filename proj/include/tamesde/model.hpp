#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tamesde/rng.hpp"
#include "tamesde/types.hpp"

namespace tamesde {

struct Horizon {
    double t0 = 0.0;
    double t1 = 1.0;

    double length() const { return t1 - t0; }
    void validate() const;  // requires 0 <= t0 < t1
};

// Finite-activity jump model: a Poisson clock with rate `intensity` and
// i.i.d. marks. Declared moments are cross-checked against the sampler by
// audit_compensator-style Monte Carlo in the test suite.
struct LevyModel {
    double intensity = 0.0;  // jumps per unit time, > 0
    int mark_dim = 1;
    std::function<void(CounterRng&, std::span<double>)> mark_sampler;
    std::vector<double> mark_mean;      // E z
    double mark_second_moment = 0.0;    // E |z|^2
    // Optional closed form p -> E|z|^p for scalar marks; audits fall back to
    // Monte Carlo when absent.
    std::function<double(double)> mark_abs_moment;

    void validate() const;
};

// Uniform mark law on [a, b) with exact moment metadata.
LevyModel make_uniform_marks(double intensity, double a, double b);

using CoeffFn =
    std::function<void(double t, std::span<const double> x, std::span<double> out)>;
using JumpCoeffFn = std::function<void(double t, std::span<const double> x,
                                       std::span<const double> z, std::span<double> out)>;

// The coefficient triple (drift, diffusion, jump_coeff) of a jump SDE plus
// its jump model, horizon and initial data. `compensator` is the user-declared
// integral of jump_coeff against the jump measure per unit time; a null
// function means identically zero. `chi` is the drift's polynomial growth
// exponent used for taming and for the drift Lipschitz audit.
struct SdeProblem {
    int d = 1;
    int m = 1;
    CoeffFn drift;
    CoeffFn diffusion;       // row-major d x m
    JumpCoeffFn jump_coeff;  // (t, x, z) -> d
    LevyModel jump_model;
    CoeffFn compensator;     // null = zero
    Vec initial_value;
    Horizon horizon;
    double chi = 0.0;

    // Optional closed forms for the jump integrals that appear in the
    // assumption audits. When null, audits estimate them by Monte Carlo over
    // the mark law and report the attendant standard error.
    //   jump_abs_moment(t, x, p)        = int |gamma(t, x, z)|^p nu(dz)
    //   jump_diff_moment(t, x, xb, p)   = int |gamma(t,x,z) - gamma(t,xb,z)|^p nu(dz)
    std::function<double(double, std::span<const double>, double)> jump_abs_moment;
    std::function<double(double, std::span<const double>, std::span<const double>,
                         double)>
        jump_diff_moment;

    void validate() const;
    void eval_drift(double t, std::span<const double> x, std::span<double> out) const;
    void eval_diffusion(double t, std::span<const double> x,
                        std::span<double> out) const;
    void eval_jump(double t, std::span<const double> x, std::span<const double> z,
                   std::span<double> out) const;
    // Writes zeros when no compensator is declared.
    void eval_compensator(double t, std::span<const double> x,
                          std::span<double> out) const;
};

// Delay-aware coefficients take the concatenated delayed-state block
// y = (x_{d_1(t)}, ..., x_{d_k(t)}) of size k*d ahead of the current state.
using DelayCoeffFn = std::function<void(double t, std::span<const double> y,
                                        std::span<const double> x, std::span<double> out)>;
using DelayJumpCoeffFn =
    std::function<void(double t, std::span<const double> y, std::span<const double> x,
                       std::span<const double> z, std::span<double> out)>;

struct SddeProblem {
    int d = 1;
    int m = 1;
    int k = 1;  // number of delay arguments
    DelayCoeffFn drift;
    DelayCoeffFn diffusion;
    DelayJumpCoeffFn jump_coeff;
    LevyModel jump_model;
    DelayCoeffFn compensator;  // null = zero
    Horizon horizon;           // requires t0 = 0; the initial segment lives on [-H, 0]

    void validate() const;
};

// Delay structure: k delay functions d_i(t), each nondecreasing and confined
// to [-H, floor(t/h) h] at grid times, plus the initial segment xi on [-H, 0].
struct DelaySpec {
    int k = 1;
    std::vector<std::function<double(double)>> delays;
    double lookback = 0.0;  // H > 0
    std::function<void(double, std::span<double>)> initial_segment;

    void validate() const;
};

// Built-in problem registry. "cubic-jump" is the cubic-drift, quadratic-noise
// scalar problem with multiplicative uniform jumps:
//   drift x - x^3, diffusion x^2, jump_coeff x z, lambda = 2,
//   z ~ U(-1/4, 1/4), x0 = 1 on [0, 1], chi = 2.
SdeProblem builtin_problem(std::string_view name);
std::vector<std::string> builtin_problem_names();

}  // namespace tamesde
