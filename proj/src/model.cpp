#include "tamesde/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace tamesde {

void Horizon::validate() const {
    if (!(t0 >= 0.0) || !(t0 < t1))
        throw std::invalid_argument("Horizon: requires 0 <= t0 < t1");
}

void LevyModel::validate() const {
    if (!(intensity > 0.0))
        throw std::invalid_argument("LevyModel: intensity must be > 0");
    if (mark_dim < 1)
        throw std::invalid_argument("LevyModel: mark_dim must be >= 1");
    if (!mark_sampler)
        throw std::invalid_argument("LevyModel: mark_sampler is required");
    if (mark_mean.size() != static_cast<std::size_t>(mark_dim))
        throw std::invalid_argument("LevyModel: mark_mean must have mark_dim entries");
    if (!(mark_second_moment >= 0.0))
        throw std::invalid_argument("LevyModel: mark_second_moment must be >= 0");
}

// Mean of |z|^p over [a, b], exact for any p > -1.
static double uniform_abs_moment(double a, double b, double p) {
    const double q = p + 1.0;
    auto primitive = [&](double v) { return std::pow(std::fabs(v), q) / q; };
    double integral;
    if (a >= 0.0)
        integral = primitive(b) - primitive(a);
    else if (b <= 0.0)
        integral = primitive(a) - primitive(b);
    else
        integral = primitive(a) + primitive(b);
    return integral / (b - a);
}

LevyModel make_uniform_marks(double intensity, double a, double b) {
    if (!(a < b)) throw std::invalid_argument("make_uniform_marks: requires a < b");
    LevyModel model;
    model.intensity = intensity;
    model.mark_dim = 1;
    model.mark_sampler = [a, b](CounterRng& rng, std::span<double> out) {
        out[0] = a + rng.next_double() * (b - a);
    };
    model.mark_mean = {(a + b) / 2.0};
    model.mark_second_moment = (a * a + a * b + b * b) / 3.0;
    model.mark_abs_moment = [a, b](double p) { return uniform_abs_moment(a, b, p); };
    return model;
}

void SdeProblem::validate() const {
    if (d < 1 || m < 1)
        throw std::invalid_argument("SdeProblem: requires d >= 1 and m >= 1");
    if (!drift || !diffusion || !jump_coeff)
        throw std::invalid_argument(
            "SdeProblem: drift, diffusion and jump_coeff are required");
    if (initial_value.size() != static_cast<std::size_t>(d))
        throw std::invalid_argument("SdeProblem: initial_value must have d entries");
    if (chi < 0.0) throw std::invalid_argument("SdeProblem: chi must be >= 0");
    horizon.validate();
    jump_model.validate();
}

void SdeProblem::eval_drift(double t, std::span<const double> x,
                            std::span<double> out) const {
    drift(t, x, out);
}

void SdeProblem::eval_diffusion(double t, std::span<const double> x,
                                std::span<double> out) const {
    diffusion(t, x, out);
}

void SdeProblem::eval_jump(double t, std::span<const double> x,
                           std::span<const double> z, std::span<double> out) const {
    jump_coeff(t, x, z, out);
}

void SdeProblem::eval_compensator(double t, std::span<const double> x,
                                  std::span<double> out) const {
    if (compensator) {
        compensator(t, x, out);
    } else {
        std::fill(out.begin(), out.end(), 0.0);
    }
}

void SddeProblem::validate() const {
    if (d < 1 || m < 1 || k < 1)
        throw std::invalid_argument("SddeProblem: requires d, m, k >= 1");
    if (!drift || !diffusion || !jump_coeff)
        throw std::invalid_argument(
            "SddeProblem: drift, diffusion and jump_coeff are required");
    horizon.validate();
    if (horizon.t0 != 0.0)
        throw std::invalid_argument(
            "SddeProblem: delay problems are supported on horizons starting at 0");
    jump_model.validate();
}

void DelaySpec::validate() const {
    if (k < 1) throw std::invalid_argument("DelaySpec: k must be >= 1");
    if (delays.size() != static_cast<std::size_t>(k))
        throw std::invalid_argument("DelaySpec: need exactly k delay functions");
    for (const auto& fn : delays)
        if (!fn) throw std::invalid_argument("DelaySpec: null delay function");
    if (!(lookback > 0.0))
        throw std::invalid_argument("DelaySpec: lookback must be > 0");
    if (!initial_segment)
        throw std::invalid_argument("DelaySpec: initial_segment is required");
}

SdeProblem builtin_problem(std::string_view name) {
    if (name == "cubic-jump") {
        SdeProblem p;
        p.d = 1;
        p.m = 1;
        p.drift = [](double, std::span<const double> x, std::span<double> out) {
            out[0] = x[0] - x[0] * x[0] * x[0];
        };
        p.diffusion = [](double, std::span<const double> x, std::span<double> out) {
            out[0] = x[0] * x[0];
        };
        p.jump_coeff = [](double, std::span<const double> x,
                          std::span<const double> z, std::span<double> out) {
            out[0] = x[0] * z[0];
        };
        p.jump_model = make_uniform_marks(2.0, -0.25, 0.25);
        // Symmetric marks: the jump integral of x z vanishes.
        p.compensator = nullptr;
        p.initial_value = {1.0};
        p.horizon = {0.0, 1.0};
        p.chi = 2.0;
        const auto abs_moment = p.jump_model.mark_abs_moment;
        const double lambda = p.jump_model.intensity;
        p.jump_abs_moment = [abs_moment, lambda](double, std::span<const double> x,
                                                 double q) {
            return lambda * abs_moment(q) * std::pow(std::fabs(x[0]), q);
        };
        p.jump_diff_moment = [abs_moment, lambda](double, std::span<const double> x,
                                                  std::span<const double> xb,
                                                  double q) {
            return lambda * abs_moment(q) * std::pow(std::fabs(x[0] - xb[0]), q);
        };
        return p;
    }
    throw std::invalid_argument("builtin_problem: unknown problem '" +
                                std::string(name) + "'");
}

std::vector<std::string> builtin_problem_names() { return {"cubic-jump"}; }

}  // namespace tamesde
