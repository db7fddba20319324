#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "tamesde/model.hpp"
#include "tamesde/rng.hpp"

namespace tamesde {

// One realization of the driving noise over [t0, t1]: Brownian increments at
// the finest grid plus the exact compound-Poisson jump events. All coarser
// resolutions are views over this object, so every step size shares the same
// underlying path.
//
// Jump bucketing: jump j lies in the half-open fine interval
// (t0 + bucket[j] h, t0 + (bucket[j]+1) h]. Buckets are derived from the raw
// uniform draw, not the rounded time, so the assignment is exact.
struct DrivingPath {
    long long fine_steps = 0;
    int m = 1;  // Brownian dimension
    int q = 1;  // mark dimension
    double t0 = 0.0;
    double t1 = 1.0;
    double h_fine = 0.0;
    std::vector<double> dW;  // fine_steps x m, step-major; each entry ~ N(0, h_fine)
    std::vector<double> jump_times;        // ascending, in (t0, t1]
    std::vector<long long> jump_buckets;   // ascending, in [0, fine_steps)
    std::vector<double> jump_marks;        // jump_count x q, in time order

    std::size_t jump_count() const { return jump_times.size(); }
};

// Draws a full path. Consumption order is fixed: the Brownian stream
// (domain 0) yields the dW entries in step-major order; the jump stream
// (domain 1) yields the Poisson count, then the jump times, then the marks
// in time order. Jump data therefore depends only on (seed, model, horizon),
// not on fine_steps. Requires fine_steps to be a power of two and
// intensity * (t1 - t0) <= 500.
DrivingPath sample_path(const PathSeed& seed, const LevyModel& model,
                        const Horizon& horizon, int m, long long fine_steps);

// A silent path: dW = 0 and no jumps. Step count is unrestricted, which
// makes deterministic iterations with arbitrary step counts possible.
DrivingPath zero_path(const Horizon& horizon, int m, int q, long long steps);

// Coarse view over a path: steps = fine_steps / factor. Each coarse
// increment is the sum of its factor fine increments, accumulated
// left-to-right; jumps are binned by shifting their fine bucket. The view
// references the path's jump storage, which must outlive it.
struct CoarseView {
    const DrivingPath* path = nullptr;
    long long steps = 0;
    long long factor = 1;
    int m = 1;
    double t0 = 0.0;
    double h = 0.0;
    std::vector<double> dW;                  // steps x m
    std::vector<std::size_t> jump_offsets;   // steps + 1; CSR row starts

    std::span<const double> mark(std::size_t jump_index) const {
        return {path->jump_marks.data() + jump_index * path->q,
                static_cast<std::size_t>(path->q)};
    }
};

// factor must be a power of two dividing fine_steps; factor 1 is the
// identity view.
CoarseView coarsen(const DrivingPath& path, long long factor);

// Binary path dump for debugging. Layout (native-endian):
//   "TSD1" magic, then fine_steps (i64), m (i32), q (i32), t0, t1 (f64),
//   dW (fine_steps*m f64), jump_count (u64), times, buckets (i64), marks.
void dump_path(std::ostream& out, const DrivingPath& path);
DrivingPath load_path(std::istream& in);

}  // namespace tamesde
