#include "tamesde/taming.hpp"

#include <cmath>
#include <stdexcept>

namespace tamesde {

void TamingConfig::validate() const {
    if (chi < 0.0 || chi1 < 0.0 || chi2 < 0.0)
        throw std::invalid_argument("TamingConfig: exponents must be >= 0");
}

double kappa(const GridMap& grid, double t) {
    if (grid.n < 1) throw std::invalid_argument("kappa: grid.n must be >= 1");
    if (!(t >= grid.t0))
        throw std::invalid_argument("kappa: t must satisfy t >= t0");
    const double n = static_cast<double>(grid.n);
    auto point = [&](long long j) {
        return grid.t0 + static_cast<double>(j) / n;
    };
    long long k = static_cast<long long>(std::floor(n * (t - grid.t0)));
    if (k < 0) k = 0;
    // The scaled floor can be off by one in either direction once rounding
    // is involved; correct it so that point(k) <= t < point(k + 1) holds in
    // computed arithmetic.
    while (point(k + 1) <= t) ++k;
    while (k > 0 && point(k) > t) --k;
    return point(k);
}

double taming_scale(long long n) {
    return 1.0 / std::sqrt(static_cast<double>(n));
}

namespace {

// |v|^e with the zero-exponent term-drop convention.
inline double pow_term(double v, double e) {
    return e == 0.0 ? 0.0 : std::pow(v, e);
}

}  // namespace

double taming_denominator(const TamingConfig& config, long long n,
                          double x_norm, double y_norm) {
    if (n < 1) throw std::invalid_argument("taming: n must be >= 1");
    double excess;
    switch (config.mode) {
        case TamingMode::Untamed:
            return 1.0;
        case TamingMode::Generic2Chi:
            excess = pow_term(x_norm, 2.0 * config.chi);
            break;
        case TamingMode::DeterministicChi:
            excess = pow_term(x_norm, config.chi);
            break;
        case TamingMode::Sdde: {
            double acc = 0.0;
            acc += pow_term(y_norm, 2.0 * config.chi1);
            acc += pow_term(x_norm, 2.0 * config.chi2);
            excess = acc;
            break;
        }
        default:
            throw std::invalid_argument("taming: unknown mode");
    }
    // Single shared expression: every mode rounds 1 + scale * excess the
    // same way, which the degenerate-delay reduction relies on.
    return 1.0 + taming_scale(n) * excess;
}

std::pair<Vec, Vec> tame(const TamingConfig& config, long long n,
                         std::span<const double> x,
                         std::span<const double> raw_drift,
                         std::span<const double> raw_diffusion,
                         std::span<const double> delay_state) {
    config.validate();
    if (config.mode == TamingMode::Sdde && delay_state.empty())
        throw std::invalid_argument("tame: Sdde mode requires a delay state");
    const double x_norm = state_norm(x);
    const double y_norm = delay_state.empty() ? 0.0 : state_norm(delay_state);
    const double denom = taming_denominator(config, n, x_norm, y_norm);
    Vec drift(raw_drift.begin(), raw_drift.end());
    Vec diffusion(raw_diffusion.begin(), raw_diffusion.end());
    if (denom != 1.0) {
        for (double& v : drift) v /= denom;
        for (double& v : diffusion) v /= denom;
    }
    return {std::move(drift), std::move(diffusion)};
}

}  // namespace tamesde
