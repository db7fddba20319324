#include "tamesde/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace tamesde {

namespace {

// The single source of stepping arithmetic. Both public integrators and
// step() funnel through this so the floating-point operation order is
// identical everywhere; the degenerate-delay reduction relies on it.
void step_core(std::span<const double> x, double h, int d, int m,
               const Vec& drift, const Vec& diffusion,
               std::span<const double> dW, const Vec& jump_sum,
               const Vec& comp, std::span<double> next) {
    for (int i = 0; i < d; ++i) {
        double acc = x[i] + h * drift[i];
        for (int j = 0; j < m; ++j)
            acc += diffusion[static_cast<std::size_t>(i) * m + j] * dW[j];
        acc += jump_sum[i];
        acc -= h * comp[i];
        next[i] = acc;
    }
}

// Per-step evaluation callbacks writing into the shared scratch vectors.
// run_loop itself never inspects which kind of problem it is integrating.
struct StepHooks {
    std::function<void(double t, std::span<const double> x)> eval_coeffs;
    std::function<double(std::span<const double> x)> denominator;
    std::function<void(double t, std::span<const double> x,
                       std::span<const double> z)>
        eval_jump;
    std::function<void(double t, std::span<const double> x)> eval_comp;
    Vec drift, diffusion, gamma, comp;
};

void freeze_from(Trajectory& traj, long long first_bad) {
    traj.overflow_flag = true;
    traj.overflow_step = first_bad;
    std::fill(traj.states.begin() +
                  static_cast<std::ptrdiff_t>(first_bad) * traj.d,
              traj.states.end(), std::numeric_limits<double>::quiet_NaN());
}

void run_loop(const CoarseView& view, int d, int m, std::span<const double> x0,
              StepHooks& hooks, Trajectory& traj) {
    traj.steps = view.steps;
    traj.h = view.h;
    traj.t0 = view.t0;
    traj.d = d;
    traj.states.assign(static_cast<std::size_t>(view.steps + 1) * d, 0.0);
    std::copy(x0.begin(), x0.end(), traj.states.begin());
    if (!all_finite(x0)) {
        freeze_from(traj, 0);
        return;
    }

    hooks.drift.assign(d, 0.0);
    hooks.diffusion.assign(static_cast<std::size_t>(d) * m, 0.0);
    hooks.gamma.assign(d, 0.0);
    hooks.comp.assign(d, 0.0);
    Vec jump_sum(d, 0.0);

    for (long long k = 0; k < view.steps; ++k) {
        const double t = view.t0 + static_cast<double>(k) * view.h;
        const std::span<const double> x{
            traj.states.data() + static_cast<std::size_t>(k) * d,
            static_cast<std::size_t>(d)};

        hooks.eval_coeffs(t, x);
        const double denom = hooks.denominator(x);
        if (denom != 1.0) {
            for (double& v : hooks.drift) v /= denom;
            for (double& v : hooks.diffusion) v /= denom;
        }

        std::fill(jump_sum.begin(), jump_sum.end(), 0.0);
        if (!view.jump_offsets.empty()) {
            for (std::size_t j = view.jump_offsets[static_cast<std::size_t>(k)];
                 j < view.jump_offsets[static_cast<std::size_t>(k) + 1]; ++j) {
                hooks.eval_jump(t, x, view.mark(j));
                for (int i = 0; i < d; ++i) jump_sum[i] += hooks.gamma[i];
            }
        }
        hooks.eval_comp(t, x);

        const std::span<const double> dW{
            view.dW.data() + static_cast<std::size_t>(k) * m,
            static_cast<std::size_t>(m)};
        const std::span<double> next{
            traj.states.data() + static_cast<std::size_t>(k + 1) * d,
            static_cast<std::size_t>(d)};
        step_core(x, view.h, d, m, hooks.drift, hooks.diffusion, dW, jump_sum,
                  hooks.comp, next);
        if (!all_finite(next)) {
            freeze_from(traj, k + 1);
            return;
        }
    }
}

void check_view(const CoarseView& view, const Horizon& horizon, int m,
                long long n) {
    if (n < 1) throw std::invalid_argument("integrate: n must be >= 1");
    if (view.path == nullptr)
        throw std::invalid_argument("integrate: view is not bound to a path");
    if (view.m != m)
        throw std::invalid_argument(
            "integrate: Brownian dimension of the path view does not match the "
            "problem");
    if (view.t0 != horizon.t0 || view.path->t1 != horizon.t1)
        throw std::invalid_argument(
            "integrate: path view horizon does not match the problem horizon");
    const double expected = static_cast<double>(n) * horizon.length();
    const long long rounded = std::llround(expected);
    if (rounded != view.steps ||
        std::fabs(expected - static_cast<double>(rounded)) >
            1e-9 * std::max(1.0, expected))
        throw std::invalid_argument(
            "integrate: view step count must equal n times the horizon length");
}

}  // namespace

Vec step(const SdeProblem& problem, const TamingConfig& taming, long long n,
         const StepInputs& inputs) {
    problem.validate();
    taming.validate();
    if (taming.mode == TamingMode::Sdde)
        throw std::invalid_argument(
            "step: Sdde taming needs a delayed state; use integrate_sdde");
    if (n < 1) throw std::invalid_argument("step: n must be >= 1");
    if (!(inputs.h > 0.0)) throw std::invalid_argument("step: h must be > 0");
    if (inputs.x_left.size() != static_cast<std::size_t>(problem.d) ||
        inputs.dW.size() != static_cast<std::size_t>(problem.m))
        throw std::invalid_argument("step: input sizes do not match the problem");
    if (inputs.q < 1 || inputs.jump_marks.size() % inputs.q != 0)
        throw std::invalid_argument("step: jump mark block has a ragged size");

    const int d = problem.d, m = problem.m;
    Vec drift(d), diffusion(static_cast<std::size_t>(d) * m), gamma(d),
        jump_sum(d, 0.0), comp(d);
    problem.eval_drift(inputs.t, inputs.x_left, drift);
    problem.eval_diffusion(inputs.t, inputs.x_left, diffusion);
    const double denom =
        taming_denominator(taming, n, state_norm(inputs.x_left), 0.0);
    if (denom != 1.0) {
        for (double& v : drift) v /= denom;
        for (double& v : diffusion) v /= denom;
    }
    const std::size_t count = inputs.jump_marks.size() / inputs.q;
    for (std::size_t j = 0; j < count; ++j) {
        problem.eval_jump(inputs.t, inputs.x_left,
                          inputs.jump_marks.subspan(j * inputs.q,
                                                    static_cast<std::size_t>(inputs.q)),
                          gamma);
        for (int i = 0; i < d; ++i) jump_sum[i] += gamma[i];
    }
    problem.eval_compensator(inputs.t, inputs.x_left, comp);

    Vec next(d);
    step_core(inputs.x_left, inputs.h, d, m, drift, diffusion, inputs.dW,
              jump_sum, comp, next);
    return next;
}

Trajectory integrate(const SdeProblem& problem, const TamingConfig& taming,
                     long long n, const CoarseView& view) {
    problem.validate();
    taming.validate();
    if (taming.mode == TamingMode::Sdde)
        throw std::invalid_argument(
            "integrate: Sdde taming needs a delayed state; use integrate_sdde");
    check_view(view, problem.horizon, problem.m, n);
    if (view.path->q != problem.jump_model.mark_dim)
        throw std::invalid_argument(
            "integrate: mark dimension of the path does not match the problem");

    StepHooks hooks;
    hooks.eval_coeffs = [&](double t, std::span<const double> x) {
        problem.eval_drift(t, x, hooks.drift);
        problem.eval_diffusion(t, x, hooks.diffusion);
    };
    hooks.denominator = [&](std::span<const double> x) {
        return taming_denominator(taming, n, state_norm(x), 0.0);
    };
    hooks.eval_jump = [&](double t, std::span<const double> x,
                          std::span<const double> z) {
        problem.eval_jump(t, x, z, hooks.gamma);
    };
    hooks.eval_comp = [&](double t, std::span<const double> x) {
        problem.eval_compensator(t, x, hooks.comp);
    };

    Trajectory traj;
    run_loop(view, problem.d, problem.m, problem.initial_value, hooks, traj);
    return traj;
}

namespace {

// Floor s to the lattice {j h}: returns j with j h <= s < (j+1) h in computed
// arithmetic. The initial floor is corrected by stepping, the same policy as
// kappa().
long long lattice_floor(double s, double h) {
    long long j = static_cast<long long>(std::floor(s / h));
    while ((static_cast<double>(j) + 1.0) * h <= s) ++j;
    while (static_cast<double>(j) * h > s) --j;
    return j;
}

}  // namespace

Trajectory integrate_sdde(const SddeProblem& problem, const DelaySpec& delays,
                          const TamingConfig& taming, long long n,
                          const CoarseView& view) {
    problem.validate();
    delays.validate();
    taming.validate();
    if (delays.k != problem.k)
        throw std::invalid_argument(
            "integrate_sdde: delay count does not match the problem");
    check_view(view, problem.horizon, problem.m, n);
    if (view.path->q != problem.jump_model.mark_dim)
        throw std::invalid_argument(
            "integrate_sdde: mark dimension of the path does not match the "
            "problem");

    const int d = problem.d, m = problem.m, kdel = problem.k;
    const double h = view.h;
    const double H = delays.lookback;

    Trajectory traj;
    Vec x0(d);
    delays.initial_segment(0.0, x0);

    Vec y(static_cast<std::size_t>(kdel) * d, 0.0);
    std::vector<double> prev_delay(kdel, -std::numeric_limits<double>::infinity());
    const double tol = 1e-9;

    auto assemble_y = [&](double t) {
        for (int i = 0; i < kdel; ++i) {
            const double s = delays.delays[i](t);
            if (s < prev_delay[i])
                throw std::invalid_argument(
                    "integrate_sdde: delay function " + std::to_string(i + 1) +
                    " decreases at t = " + std::to_string(t));
            prev_delay[i] = s;
            if (s < -H - tol * std::max(1.0, H))
                throw std::invalid_argument(
                    "integrate_sdde: delay function " + std::to_string(i + 1) +
                    " exceeds the lookback window at t = " + std::to_string(t));
            if (s > t + tol * std::max(1.0, std::fabs(t)))
                throw std::invalid_argument(
                    "integrate_sdde: delay function " + std::to_string(i + 1) +
                    " looks into the future at t = " + std::to_string(t));
            const std::span<double> block{y.data() +
                                              static_cast<std::size_t>(i) * d,
                                          static_cast<std::size_t>(d)};
            const long long j = lattice_floor(s, h);
            if (j >= 0) {
                const double* row =
                    traj.states.data() + static_cast<std::size_t>(j) * d;
                std::copy(row, row + d, block.begin());
            } else {
                const double s_latt =
                    std::max(static_cast<double>(j) * h, -H);
                delays.initial_segment(s_latt, block);
            }
        }
    };

    StepHooks hooks;
    hooks.eval_coeffs = [&](double t, std::span<const double> x) {
        assemble_y(t);
        problem.drift(t, y, x, hooks.drift);
        problem.diffusion(t, y, x, hooks.diffusion);
    };
    hooks.denominator = [&](std::span<const double> x) {
        return taming_denominator(taming, n, state_norm(x), state_norm(y));
    };
    hooks.eval_jump = [&](double t, std::span<const double> x,
                          std::span<const double> z) {
        problem.jump_coeff(t, y, x, z, hooks.gamma);
    };
    hooks.eval_comp = [&](double t, std::span<const double> x) {
        if (problem.compensator)
            problem.compensator(t, y, x, hooks.comp);
        else
            std::fill(hooks.comp.begin(), hooks.comp.end(), 0.0);
    };

    run_loop(view, d, m, x0, hooks, traj);
    return traj;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
    out << "k,t";
    for (int i = 1; i <= trajectory.d; ++i) out << ",x_" << i;
    out << "\n";
    const long long last =
        trajectory.overflow_flag ? trajectory.overflow_step : trajectory.steps + 1;
    char buf[32];
    for (long long k = 0; k < last; ++k) {
        out << k;
        std::snprintf(buf, sizeof buf, "%.17g", trajectory.time(k));
        out << ',' << buf;
        for (double v : trajectory.state(k)) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << ',' << buf;
        }
        out << "\n";
    }
    if (trajectory.overflow_flag)
        out << "# overflow at step " << trajectory.overflow_step << "\n";
}

}  // namespace tamesde
