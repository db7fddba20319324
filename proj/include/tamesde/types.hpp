#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace tamesde {

inline constexpr std::string_view kVersion = "1.0.0";

using Vec = std::vector<double>;

// Euclidean norm of a state vector. Single-component states take the fabs
// shortcut so scalar problems see |x| with no intermediate squaring.
inline double state_norm(std::span<const double> x) {
    if (x.size() == 1) return std::fabs(x[0]);
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

inline bool all_finite(std::span<const double> x) {
    for (double v : x)
        if (!std::isfinite(v)) return false;
    return true;
}

// |v|^p with a fast path for the dominant p = 2 case. Using one helper
// everywhere keeps moment estimates bit-identical across call sites.
inline double pow_moment(double v, double p) {
    return p == 2.0 ? v * v : std::pow(v, p);
}

// FNV-1a, used to fingerprint configurations in output headers.
inline std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace tamesde
