#pragma once

#include <cstdint>
#include <span>

namespace tamesde {

// Identifies one independent random stream. Streams for distinct
// (master_seed, path_index) pairs never share Philox blocks, so paths can be
// generated in any order, or concurrently, with identical results.
struct PathSeed {
    std::uint64_t master_seed = 0;
    std::uint64_t path_index = 0;
};

// One Philox4x64-10 block: encrypt `counter` under `key` into `out`.
// Round constants follow the reference implementation of the Random123
// family, so the raw output stream can be cross-checked against other
// Philox4x64 implementations with the same key/counter layout.
void philox4x64(const std::uint64_t counter[4], const std::uint64_t key[2],
                std::uint64_t out[4]);

// Counter-based stream. key = (master_seed, path_index); counter word 2 holds
// a domain tag so that logically separate consumers (Brownian increments,
// jump data, audit sampling) draw from disjoint block sets. Counter word 0
// advances per block with carry into word 1.
class CounterRng {
  public:
    static constexpr std::uint64_t kDomainBrownian = 0;
    static constexpr std::uint64_t kDomainJumps = 1;
    static constexpr std::uint64_t kDomainAudit = 2;

    CounterRng(PathSeed seed, std::uint64_t domain);

    std::uint64_t next_u64();

    // Uniform on [0, 1), 53-bit resolution.
    double next_double();

    // Standard Gaussian via Box-Muller; pairs are cached, so draws come in a
    // fixed order regardless of how callers interleave other draw types.
    double next_gaussian();

    // Poisson count by inversion of the product of uniforms. Restricted to
    // mean <= 500 so exp(-mean) stays a normal double.
    long long next_poisson(double mean);

  private:
    void refill();

    std::uint64_t key_[2];
    std::uint64_t ctr_[4];
    std::uint64_t buf_[4];
    int pos_;
    bool has_cached_gauss_ = false;
    double cached_gauss_ = 0.0;
};

}  // namespace tamesde
