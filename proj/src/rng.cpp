#include "tamesde/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tamesde {

namespace {

constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

inline void philox_round(std::uint64_t c[4], const std::uint64_t k[2]) {
    const unsigned __int128 p0 = static_cast<unsigned __int128>(kMul0) * c[0];
    const unsigned __int128 p1 = static_cast<unsigned __int128>(kMul1) * c[2];
    const std::uint64_t hi0 = static_cast<std::uint64_t>(p0 >> 64);
    const std::uint64_t lo0 = static_cast<std::uint64_t>(p0);
    const std::uint64_t hi1 = static_cast<std::uint64_t>(p1 >> 64);
    const std::uint64_t lo1 = static_cast<std::uint64_t>(p1);
    c[0] = hi1 ^ c[1] ^ k[0];
    c[1] = lo1;
    c[2] = hi0 ^ c[3] ^ k[1];
    c[3] = lo0;
}

}  // namespace

void philox4x64(const std::uint64_t counter[4], const std::uint64_t key[2],
                std::uint64_t out[4]) {
    std::uint64_t c[4] = {counter[0], counter[1], counter[2], counter[3]};
    std::uint64_t k[2] = {key[0], key[1]};
    philox_round(c, k);
    for (int r = 1; r < 10; ++r) {
        k[0] += kWeyl0;
        k[1] += kWeyl1;
        philox_round(c, k);
    }
    out[0] = c[0];
    out[1] = c[1];
    out[2] = c[2];
    out[3] = c[3];
}

CounterRng::CounterRng(PathSeed seed, std::uint64_t domain)
    : key_{seed.master_seed, seed.path_index},
      ctr_{0, 0, domain, 0},
      pos_(4) {}

void CounterRng::refill() {
    philox4x64(ctr_, key_, buf_);
    if (++ctr_[0] == 0) ++ctr_[1];
    pos_ = 0;
}

std::uint64_t CounterRng::next_u64() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
}

double CounterRng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double CounterRng::next_gaussian() {
    if (has_cached_gauss_) {
        has_cached_gauss_ = false;
        return cached_gauss_;
    }
    const double u1 = next_double();
    const double u2 = next_double();
    // 1 - u1 lies in (0, 1], so the log is finite.
    const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    cached_gauss_ = r * std::sin(theta);
    has_cached_gauss_ = true;
    return r * std::cos(theta);
}

long long CounterRng::next_poisson(double mean) {
    if (!(mean >= 0.0) || mean > 500.0)
        throw std::invalid_argument(
            "CounterRng::next_poisson: mean must lie in [0, 500]");
    const double limit = std::exp(-mean);
    long long k = 0;
    double prod = 1.0;
    for (;;) {
        prod *= next_double();
        if (prod <= limit) return k;
        ++k;
    }
}

}  // namespace tamesde
