#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "tamesde/driving.hpp"
#include "tamesde/model.hpp"

using namespace tamesde;

namespace {

const LevyModel kMarks = make_uniform_marks(2.0, -0.25, 0.25);
const Horizon kUnit{0.0, 1.0};

bool paths_equal(const DrivingPath& a, const DrivingPath& b) {
    return a.fine_steps == b.fine_steps && a.m == b.m && a.q == b.q &&
           a.t0 == b.t0 && a.t1 == b.t1 && a.h_fine == b.h_fine &&
           a.dW == b.dW && a.jump_times == b.jump_times &&
           a.jump_buckets == b.jump_buckets && a.jump_marks == b.jump_marks;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
        sab += (a[i] - ma) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("sample_path is deterministic in the seed") {
    const DrivingPath a = sample_path({42, 3}, kMarks, kUnit, 1, 256);
    const DrivingPath b = sample_path({42, 3}, kMarks, kUnit, 1, 256);
    CHECK(paths_equal(a, b));
    const DrivingPath c = sample_path({42, 4}, kMarks, kUnit, 1, 256);
    CHECK_FALSE(paths_equal(a, c));
}

TEST_CASE("sample_path validates its inputs") {
    CHECK_THROWS_AS(sample_path({0, 0}, kMarks, kUnit, 1, 100),
                    std::invalid_argument);  // not a power of two
    CHECK_THROWS_AS(sample_path({0, 0}, kMarks, kUnit, 0, 128),
                    std::invalid_argument);
    CHECK_THROWS_AS(sample_path({0, 0}, make_uniform_marks(600.0, 0.0, 1.0),
                                kUnit, 1, 128),
                    std::invalid_argument);  // mean jump count over 500
    CHECK_THROWS_AS(sample_path({0, 0}, kMarks, Horizon{1.0, 1.0}, 1, 128),
                    std::invalid_argument);
}

TEST_CASE("sample_path shape: increments, jump order, bucket range") {
    const DrivingPath path = sample_path({7, 0}, kMarks, Horizon{0.5, 2.5}, 2, 64);
    CHECK(path.fine_steps == 64);
    CHECK(path.m == 2);
    CHECK(path.q == 1);
    CHECK(path.h_fine == 2.0 / 64.0);
    CHECK(path.dW.size() == 128);
    CHECK(path.jump_marks.size() == path.jump_count());
    for (std::size_t i = 0; i < path.jump_count(); ++i) {
        REQUIRE(path.jump_times[i] > path.t0);
        REQUIRE(path.jump_times[i] <= path.t1);
        REQUIRE(path.jump_buckets[i] >= 0);
        REQUIRE(path.jump_buckets[i] < path.fine_steps);
        if (i > 0) {
            REQUIRE(path.jump_times[i] >= path.jump_times[i - 1]);
            REQUIRE(path.jump_buckets[i] >= path.jump_buckets[i - 1]);
        }
        // The bucket must contain its time: t in (t0 + b h, t0 + (b+1) h].
        const double lo = path.t0 + path.jump_buckets[i] * path.h_fine;
        const double hi = path.t0 + (path.jump_buckets[i] + 1) * path.h_fine;
        REQUIRE(path.jump_times[i] > lo - 1e-12);
        REQUIRE(path.jump_times[i] <= hi + 1e-12);
    }
}

TEST_CASE("jump data does not depend on the grid resolution") {
    const DrivingPath coarse = sample_path({99, 12}, kMarks, kUnit, 1, 16);
    const DrivingPath fine = sample_path({99, 12}, kMarks, kUnit, 1, 4096);
    CHECK(coarse.jump_times == fine.jump_times);
    CHECK(coarse.jump_marks == fine.jump_marks);
    // Buckets refine consistently: the fine bucket maps onto the coarse one.
    REQUIRE(coarse.jump_buckets.size() == fine.jump_buckets.size());
    for (std::size_t i = 0; i < coarse.jump_buckets.size(); ++i)
        CHECK(fine.jump_buckets[i] / (4096 / 16) == coarse.jump_buckets[i]);
}

TEST_CASE("driving statistics: increment variance, jump count, mark moments") {
    const int paths = 2000;
    const long long steps = 64;
    double sumsq = 0.0;
    long long jump_total = 0;
    double mark_sum = 0.0, mark_sumsq = 0.0;
    long long mark_count = 0;
    for (int i = 0; i < paths; ++i) {
        const DrivingPath p =
            sample_path({2718, static_cast<std::uint64_t>(i)}, kMarks, kUnit, 1, steps);
        for (double v : p.dW) sumsq += v * v;
        jump_total += static_cast<long long>(p.jump_count());
        for (double z : p.jump_marks) {
            mark_sum += z;
            mark_sumsq += z * z;
            ++mark_count;
        }
    }
    const double var = sumsq / (static_cast<double>(paths) * steps);
    CHECK(std::fabs(var - 1.0 / 64.0) < 0.001);
    const double mean_jumps = static_cast<double>(jump_total) / paths;
    CHECK(std::fabs(mean_jumps - 2.0) < 3.0 * std::sqrt(2.0 / paths));
    CHECK(std::fabs(mark_sum / mark_count) < 0.01);
    CHECK(std::fabs(mark_sumsq / mark_count - 1.0 / 48.0) < 0.002);
}

TEST_CASE("near-zero intensity produces jump-free paths with intact dW") {
    const LevyModel rare = make_uniform_marks(1e-9, -0.25, 0.25);
    const DrivingPath p = sample_path({5, 5}, rare, kUnit, 1, 128);
    CHECK(p.jump_count() == 0);
    const DrivingPath q = sample_path({5, 5}, kMarks, kUnit, 1, 128);
    CHECK(p.dW == q.dW);  // Brownian stream is independent of the jump model
}

TEST_CASE("independent streams decorrelate") {
    const long long steps = 16384;
    const DrivingPath a = sample_path({1000, 0}, kMarks, kUnit, 1, steps);
    const DrivingPath b = sample_path({1000, 1}, kMarks, kUnit, 1, steps);
    const DrivingPath c = sample_path({1001, 0}, kMarks, kUnit, 1, steps);
    CHECK(std::fabs(correlation(a.dW, b.dW)) < 0.03);
    CHECK(std::fabs(correlation(a.dW, c.dW)) < 0.03);
}

TEST_CASE("coarsen sums increments exactly and partitions the jumps") {
    const DrivingPath path = sample_path({11, 2}, kMarks, kUnit, 1, 8);

    const CoarseView identity = coarsen(path, 1);
    CHECK(identity.steps == 8);
    CHECK(identity.dW == path.dW);

    const CoarseView full = coarsen(path, 8);
    REQUIRE(full.steps == 1);
    double acc = 0.0;
    for (double v : path.dW) acc += v;
    CHECK(full.dW[0] == acc);  // left-to-right accumulation, bit-exact
    CHECK(full.jump_offsets == std::vector<std::size_t>{0, path.jump_count()});

    const CoarseView half = coarsen(path, 4);
    REQUIRE(half.steps == 2);
    CHECK(half.dW[0] == path.dW[0] + path.dW[1] + path.dW[2] + path.dW[3]);
    CHECK(half.dW[1] == path.dW[4] + path.dW[5] + path.dW[6] + path.dW[7]);

    // CSR rows partition the jump list and respect the bucket mapping.
    REQUIRE(half.jump_offsets.size() == 3);
    CHECK(half.jump_offsets[0] == 0);
    CHECK(half.jump_offsets[2] == path.jump_count());
    for (long long k = 0; k < half.steps; ++k)
        for (std::size_t j = half.jump_offsets[k]; j < half.jump_offsets[k + 1]; ++j)
            CHECK(path.jump_buckets[j] / 4 == k);
}

TEST_CASE("coarsen preserves the Brownian endpoint at every factor") {
    const DrivingPath path = sample_path({13, 8}, kMarks, kUnit, 1, 1024);
    const CoarseView reference = coarsen(path, 1024);
    for (long long factor : {1LL, 2LL, 32LL, 512LL}) {
        const CoarseView view = coarsen(path, factor);
        double acc = 0.0;
        for (double v : view.dW) acc += v;
        CHECK(std::fabs(acc - reference.dW[0]) < 1e-12);
        CHECK(view.jump_offsets.back() == path.jump_count());
    }
}

TEST_CASE("coarsen rejects invalid factors") {
    const DrivingPath path = sample_path({1, 1}, kMarks, kUnit, 1, 64);
    CHECK_THROWS_AS(coarsen(path, 3), std::invalid_argument);
    CHECK_THROWS_AS(coarsen(path, 128), std::invalid_argument);
    CHECK_THROWS_AS(coarsen(path, 0), std::invalid_argument);
}

TEST_CASE("zero_path carries no noise and allows arbitrary step counts") {
    const DrivingPath p = zero_path(Horizon{0.0, 2.5}, 1, 1, 10);
    CHECK(p.fine_steps == 10);
    CHECK(p.h_fine == 0.25);
    CHECK(p.jump_count() == 0);
    for (double v : p.dW) CHECK(v == 0.0);
    const CoarseView view = coarsen(p, 1);
    CHECK(view.steps == 10);
    CHECK_THROWS_AS(zero_path(kUnit, 1, 1, 0), std::invalid_argument);
}

TEST_CASE("path dump and load round-trips bit-exactly") {
    const DrivingPath path = sample_path({21, 4}, kMarks, Horizon{0.25, 1.75}, 2, 32);
    std::stringstream buffer(std::ios::in | std::ios::out | std::ios::binary);
    dump_path(buffer, path);
    const DrivingPath loaded = load_path(buffer);
    CHECK(paths_equal(path, loaded));
}

TEST_CASE("load_path rejects corrupt streams") {
    std::stringstream wrong(std::ios::in | std::ios::out | std::ios::binary);
    wrong << "XXXX";
    CHECK_THROWS_AS(load_path(wrong), std::invalid_argument);

    const DrivingPath path = sample_path({21, 4}, kMarks, kUnit, 1, 32);
    std::stringstream buffer(std::ios::in | std::ios::out | std::ios::binary);
    dump_path(buffer, path);
    const std::string bytes = buffer.str();
    std::stringstream truncated(bytes.substr(0, bytes.size() - 8),
                                std::ios::in | std::ios::binary);
    CHECK_THROWS_AS(load_path(truncated), std::invalid_argument);
}
