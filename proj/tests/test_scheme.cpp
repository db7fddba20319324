#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "tamesde/driving.hpp"
#include "tamesde/model.hpp"
#include "tamesde/scheme.hpp"

using namespace tamesde;

namespace {

SdeProblem cubic() { return builtin_problem("cubic-jump"); }

SdeProblem zeros_problem() {
    SdeProblem p;
    p.drift = [](double, std::span<const double>, std::span<double> out) {
        out[0] = 0.0;
    };
    p.diffusion = [](double, std::span<const double>, std::span<double> out) {
        out[0] = 0.0;
    };
    p.jump_coeff = [](double, std::span<const double>, std::span<const double>,
                      std::span<double> out) { out[0] = 0.0; };
    p.jump_model = make_uniform_marks(1.0, -0.5, 0.5);
    p.initial_value = {0.0};
    p.horizon = {0.0, 1.0};
    return p;
}

// Delay-form copy of the builtin problem; the delayed block is ignored, so a
// degenerate delay must reproduce the plain integration exactly.
SddeProblem cubic_sdde() {
    SddeProblem p;
    p.d = 1;
    p.m = 1;
    p.k = 1;
    p.drift = [](double, std::span<const double>, std::span<const double> x,
                 std::span<double> out) { out[0] = x[0] - x[0] * x[0] * x[0]; };
    p.diffusion = [](double, std::span<const double>, std::span<const double> x,
                     std::span<double> out) { out[0] = x[0] * x[0]; };
    p.jump_coeff = [](double, std::span<const double>, std::span<const double> x,
                      std::span<const double> z, std::span<double> out) {
        out[0] = x[0] * z[0];
    };
    p.jump_model = make_uniform_marks(2.0, -0.25, 0.25);
    p.horizon = {0.0, 1.0};
    return p;
}

DelaySpec identity_delay() {
    DelaySpec spec;
    spec.k = 1;
    spec.delays = {[](double t) { return t; }};
    spec.lookback = 1.0;
    spec.initial_segment = [](double, std::span<double> out) { out[0] = 1.0; };
    return spec;
}

const TamingConfig kDet{TamingMode::DeterministicChi, 2.0, 0.0, 0.0};
const TamingConfig kGen{TamingMode::Generic2Chi, 2.0, 0.0, 0.0};
const TamingConfig kOff{TamingMode::Untamed, 0.0, 0.0, 0.0};

}  // namespace

TEST_CASE("step holds the drift fixed point and adds jumps additively") {
    const SdeProblem p = cubic();
    StepInputs in;
    in.t = 0.0;
    in.h = 0.25;
    const Vec x{1.0};
    const Vec no_noise{0.0};
    in.x_left = x;
    in.dW = no_noise;

    // beta(1) = 0 and dW = 0: the state is a fixed point.
    CHECK(step(p, kDet, 4, in) == Vec{1.0});

    // One jump adds gamma(x, z) = x z on top of the drift-free move.
    const Vec one_mark{0.1};
    in.jump_marks = one_mark;
    CHECK(step(p, kDet, 4, in) == Vec{1.0 + 0.1});

    // Multiple jumps are summed in mark order first, then added to the state.
    const Vec two_marks{0.1, -0.2};
    in.jump_marks = two_marks;
    CHECK(step(p, kDet, 4, in) == Vec{1.0 + (1.0 * 0.1 + 1.0 * (-0.2))});
}

TEST_CASE("step applies the taming denominator to drift and diffusion only") {
    const SdeProblem p = cubic();
    StepInputs in;
    in.t = 0.0;
    in.h = 0.5;
    const Vec x{2.0};
    const Vec dw{1.0};
    in.x_left = x;
    in.dW = dw;
    // Tamed drift -3, tamed diffusion 2: 2 + 0.5 (-3) + 2 * 1 = 2.5.
    CHECK(step(p, kDet, 16, in) == Vec{2.0 + 0.5 * -3.0 + 2.0 * 1.0});

    // A jump is not tamed: adding one mark contributes x z undivided.
    const Vec mark{0.25};
    in.jump_marks = mark;
    CHECK(step(p, kDet, 16, in)[0] ==
          doctest::Approx(2.0 + 0.5 * -3.0 + 2.0 + 0.5).epsilon(1e-15));
}

TEST_CASE("step subtracts the compensator even without jump events") {
    SdeProblem p = zeros_problem();
    p.jump_coeff = [](double, std::span<const double>, std::span<const double> z,
                      std::span<double> out) { out[0] = z[0]; };
    p.jump_model = make_uniform_marks(2.0, 0.0, 0.5);
    p.compensator = [](double, std::span<const double>, std::span<double> out) {
        out[0] = 0.5;  // lambda E z
    };
    StepInputs in;
    in.t = 0.0;
    in.h = 0.25;
    const Vec x{2.0};
    const Vec dw{0.0};
    in.x_left = x;
    in.dW = dw;
    CHECK(step(p, kOff, 4, in) == Vec{1.875});
}

TEST_CASE("step leaves the state unchanged for the zero problem") {
    const SdeProblem p = zeros_problem();
    StepInputs in;
    in.t = 0.7;
    in.h = 0.125;
    const Vec x{-3.25};
    const Vec dw{1.7};
    const Vec marks{0.3, -0.1};
    in.x_left = x;
    in.dW = dw;
    in.jump_marks = marks;
    CHECK(step(p, kGen, 8, in) == Vec{-3.25});
}

TEST_CASE("step validates its inputs") {
    const SdeProblem p = cubic();
    StepInputs in;
    in.t = 0.0;
    in.h = 0.25;
    const Vec x{1.0};
    const Vec dw{0.0};
    in.x_left = x;
    in.dW = dw;
    CHECK_THROWS_AS(step(p, TamingConfig{TamingMode::Sdde, 0, 0, 1}, 4, in),
                    std::invalid_argument);
    CHECK_THROWS_AS(step(p, kDet, 0, in), std::invalid_argument);
    StepInputs bad_h = in;
    bad_h.h = 0.0;
    CHECK_THROWS_AS(step(p, kDet, 4, bad_h), std::invalid_argument);
    StepInputs bad_x = in;
    const Vec x2{1.0, 2.0};
    bad_x.x_left = x2;
    CHECK_THROWS_AS(step(p, kDet, 4, bad_x), std::invalid_argument);
    StepInputs ragged = in;
    const Vec marks{0.1, 0.2, 0.3};
    ragged.jump_marks = marks;
    ragged.q = 2;
    CHECK_THROWS_AS(step(p, kDet, 4, ragged), std::invalid_argument);
}

TEST_CASE("integrate keeps the drift fixed point on a silent path") {
    const DrivingPath path = zero_path({0.0, 1.0}, 1, 1, 4);
    const Trajectory traj = integrate(cubic(), kDet, 4, coarsen(path, 1));
    CHECK_FALSE(traj.overflow_flag);
    REQUIRE(traj.steps == 4);
    for (long long k = 0; k <= 4; ++k) CHECK(traj.state(k)[0] == 1.0);
    CHECK(traj.time(2) == 0.5);
    CHECK(traj.final_state()[0] == 1.0);
}

TEST_CASE("untamed iteration diverges exactly as the hand iterate") {
    SdeProblem p = cubic();
    p.initial_value = {4.0};
    p.horizon = {0.0, 2.5};  // n = 4 gives h = 0.25 over 10 steps
    const DrivingPath path = zero_path(p.horizon, 1, 1, 10);
    const Trajectory traj = integrate(p, kOff, 4, coarsen(path, 1));
    CHECK(traj.state(0)[0] == 4.0);
    CHECK(traj.state(1)[0] == -11.0);
    CHECK(traj.state(2)[0] == 319.0);
    CHECK(traj.state(3)[0] == -8115041.0);
    CHECK(traj.overflow_flag);
    CHECK(traj.overflow_step == 7);
    for (long long k = traj.overflow_step; k <= traj.steps; ++k)
        CHECK(std::isnan(traj.state(k)[0]));
}

TEST_CASE("tamed iteration from the same start stays bounded for 10^4 steps") {
    SdeProblem p = cubic();
    p.initial_value = {4.0};
    p.horizon = {0.0, 2500.0};  // n = 4: h = 0.25, 10^4 steps
    const DrivingPath path = zero_path(p.horizon, 1, 1, 10000);
    const Trajectory traj = integrate(p, kDet, 4, coarsen(path, 1));
    CHECK_FALSE(traj.overflow_flag);
    for (long long k = 0; k <= traj.steps; ++k)
        REQUIRE(std::fabs(traj.state(k)[0]) <= 10.0);
}

TEST_CASE("integration is deterministic and couples across resolutions") {
    const SdeProblem p = cubic();
    const DrivingPath path =
        sample_path({42, 0}, p.jump_model, p.horizon, 1, 256);
    const Trajectory a = integrate(p, kDet, 256, coarsen(path, 1));
    const Trajectory b = integrate(p, kDet, 256, coarsen(path, 1));
    CHECK(a.states == b.states);
    CHECK_FALSE(a.overflow_flag);

    // The coarse run moves on the same noise, so it lands near, but not on,
    // the fine run.
    const Trajectory c = integrate(p, kDet, 64, coarsen(path, 4));
    CHECK(c.final_state()[0] != a.final_state()[0]);
    CHECK(std::fabs(c.final_state()[0] - a.final_state()[0]) < 1.0);
}

TEST_CASE("integrate validates the view against problem and n") {
    const SdeProblem p = cubic();
    const DrivingPath path = zero_path({0.0, 1.0}, 1, 1, 8);
    const CoarseView view = coarsen(path, 1);
    CHECK_THROWS_AS(integrate(p, kDet, 16, view), std::invalid_argument);
    CHECK_THROWS_AS(integrate(p, kDet, 0, view), std::invalid_argument);
    CHECK_THROWS_AS(integrate(p, TamingConfig{TamingMode::Sdde, 0, 0, 1}, 8, view),
                    std::invalid_argument);

    SdeProblem shifted = cubic();
    shifted.horizon = {0.0, 2.0};
    CHECK_THROWS_AS(integrate(shifted, kDet, 4, view), std::invalid_argument);

    const DrivingPath wide = zero_path({0.0, 1.0}, 2, 1, 8);
    CHECK_THROWS_AS(integrate(p, kDet, 8, coarsen(wide, 1)), std::invalid_argument);

    const DrivingPath marks2 = zero_path({0.0, 1.0}, 1, 2, 8);
    CHECK_THROWS_AS(integrate(p, kDet, 8, coarsen(marks2, 1)),
                    std::invalid_argument);
}

TEST_CASE("a non-finite initial value freezes the trajectory at step 0") {
    SdeProblem p = cubic();
    p.initial_value = {std::nan("")};
    const DrivingPath path = zero_path({0.0, 1.0}, 1, 1, 4);
    const Trajectory traj = integrate(p, kDet, 4, coarsen(path, 1));
    CHECK(traj.overflow_flag);
    CHECK(traj.overflow_step == 0);
    CHECK(std::isnan(traj.state(0)[0]));
}

TEST_CASE("degenerate delay reproduces the plain integration bit-for-bit") {
    const SdeProblem plain = cubic();
    const DrivingPath path =
        sample_path({42, 1}, plain.jump_model, plain.horizon, 1, 64);
    const CoarseView view = coarsen(path, 1);

    const Trajectory reference = integrate(plain, kGen, 64, view);
    const TamingConfig sdde_taming{TamingMode::Sdde, 0.0, 0.0, 2.0};
    const Trajectory delayed =
        integrate_sdde(cubic_sdde(), identity_delay(), sdde_taming, 64, view);

    CHECK_FALSE(reference.overflow_flag);
    CHECK(delayed.states == reference.states);
    CHECK(delayed.overflow_flag == reference.overflow_flag);
}

TEST_CASE("a frozen delay pins the delayed block to the initial segment") {
    SddeProblem p = cubic_sdde();
    p.drift = [](double, std::span<const double> y, std::span<const double>,
                 std::span<double> out) { out[0] = y[0]; };
    p.diffusion = [](double, std::span<const double>, std::span<const double>,
                     std::span<double> out) { out[0] = 0.0; };

    DelaySpec spec;
    spec.k = 1;
    spec.lookback = 0.5;
    spec.delays = {[](double) { return -0.5; }};
    const double c = 2.5;
    spec.initial_segment = [c](double, std::span<double> out) { out[0] = c; };

    const DrivingPath path = zero_path({0.0, 1.0}, 1, 1, 8);
    const Trajectory traj =
        integrate_sdde(p, spec, kOff, 8, coarsen(path, 1));
    // x_{k+1} = x_k + h c with x_0 = xi(0) = c.
    double expected = c;
    CHECK(traj.state(0)[0] == expected);
    for (long long k = 1; k <= 8; ++k) {
        expected = expected + 0.125 * c;
        CHECK(traj.state(k)[0] == expected);
    }
}

TEST_CASE("one-step-lag linear drift matches the direct recurrence") {
    SddeProblem p = cubic_sdde();
    p.drift = [](double, std::span<const double> y, std::span<const double> x,
                 std::span<double> out) { out[0] = y[0] - x[0]; };
    p.diffusion = [](double, std::span<const double>, std::span<const double>,
                     std::span<double> out) { out[0] = 0.0; };
    p.jump_coeff = [](double, std::span<const double>, std::span<const double>,
                      std::span<const double>, std::span<double> out) {
        out[0] = 0.0;
    };

    const double h = 0.125;
    DelaySpec spec;
    spec.k = 1;
    spec.lookback = 1.0;
    spec.delays = {[h](double t) { return std::floor(t / h) * h - h; }};
    spec.initial_segment = [](double, std::span<double> out) { out[0] = 1.0; };

    const DrivingPath path = zero_path({0.0, 1.0}, 1, 1, 8);
    const TamingConfig sdde_taming{TamingMode::Sdde, 0.0, 0.0, 0.0};
    const Trajectory traj =
        integrate_sdde(p, spec, sdde_taming, 8, coarsen(path, 1));

    // Two-term recurrence: x_{k+1} = x_k + h (x_{k-1} - x_k), x_{-1} = x_0 = 1.
    double prev = 1.0, cur = 1.0;
    CHECK(traj.state(0)[0] == cur);
    for (long long k = 0; k < 8; ++k) {
        const double next = cur + h * (prev - cur);
        prev = cur;
        cur = next;
        CHECK(std::fabs(traj.state(k + 1)[0] - cur) <= 1e-12);
    }
}

TEST_CASE("delay validation rejects out-of-window and non-monotone delays") {
    const SddeProblem p = cubic_sdde();
    const DrivingPath path = zero_path({0.0, 1.0}, 1, 1, 8);
    const CoarseView view = coarsen(path, 1);
    const TamingConfig sdde_taming{TamingMode::Sdde, 0.0, 0.0, 2.0};

    DelaySpec beyond = identity_delay();
    beyond.delays = {[](double) { return -2.0; }};  // lookback is 1
    CHECK_THROWS_WITH_AS(integrate_sdde(p, beyond, sdde_taming, 8, view),
                         doctest::Contains("lookback"), std::invalid_argument);

    DelaySpec future = identity_delay();
    future.delays = {[](double t) { return t + 0.5; }};
    CHECK_THROWS_WITH_AS(integrate_sdde(p, future, sdde_taming, 8, view),
                         doctest::Contains("future"), std::invalid_argument);

    DelaySpec decreasing = identity_delay();
    decreasing.delays = {[](double t) { return -t; }};
    CHECK_THROWS_WITH_AS(integrate_sdde(p, decreasing, sdde_taming, 8, view),
                         doctest::Contains("decreases"), std::invalid_argument);

    DelaySpec wrong_k = identity_delay();
    wrong_k.k = 2;
    wrong_k.delays = {[](double t) { return t; }, [](double t) { return t; }};
    CHECK_THROWS_AS(integrate_sdde(p, wrong_k, sdde_taming, 8, view),
                    std::invalid_argument);
}

TEST_CASE("trajectory CSV lists grid rows and flags overflow") {
    const DrivingPath path = zero_path({0.0, 1.0}, 1, 1, 2);
    const Trajectory traj = integrate(cubic(), kDet, 2, coarsen(path, 1));
    std::ostringstream out;
    write_trajectory_csv(out, traj);
    CHECK(out.str() == "k,t,x_1\n0,0,1\n1,0.5,1\n2,1,1\n");

    SdeProblem p = cubic();
    p.initial_value = {4.0};
    p.horizon = {0.0, 2.5};
    const DrivingPath long_path = zero_path(p.horizon, 1, 1, 10);
    const Trajectory diverged = integrate(p, kOff, 4, coarsen(long_path, 1));
    std::ostringstream flagged;
    write_trajectory_csv(flagged, diverged);
    const std::string text = flagged.str();
    CHECK(text.find("# overflow at step 7") != std::string::npos);
    CHECK(text.find("-8115041") != std::string::npos);
    CHECK(text.find("nan") == std::string::npos);
}
