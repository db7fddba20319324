#include "tamesde/driving.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace tamesde {

namespace {

bool is_power_of_two(long long v) { return v > 0 && (v & (v - 1)) == 0; }

}  // namespace

DrivingPath sample_path(const PathSeed& seed, const LevyModel& model,
                        const Horizon& horizon, int m, long long fine_steps) {
    horizon.validate();
    model.validate();
    if (m < 1) throw std::invalid_argument("sample_path: m must be >= 1");
    if (!is_power_of_two(fine_steps))
        throw std::invalid_argument(
            "sample_path: fine_steps must be a power of two (dyadic refinement)");
    const double span = horizon.length();
    const double mean_jumps = model.intensity * span;
    if (mean_jumps > 500.0)
        throw std::invalid_argument(
            "sample_path: intensity * horizon length exceeds the Poisson sampler "
            "limit of 500");

    DrivingPath path;
    path.fine_steps = fine_steps;
    path.m = m;
    path.q = model.mark_dim;
    path.t0 = horizon.t0;
    path.t1 = horizon.t1;
    path.h_fine = span / static_cast<double>(fine_steps);

    CounterRng brownian(seed, CounterRng::kDomainBrownian);
    const double scale = std::sqrt(path.h_fine);
    path.dW.resize(static_cast<std::size_t>(fine_steps) * m);
    for (double& v : path.dW) v = scale * brownian.next_gaussian();

    CounterRng jumps(seed, CounterRng::kDomainJumps);
    const long long count = jumps.next_poisson(mean_jumps);
    // Times via t = t1 - v (t1 - t0) with v uniform on [0, 1), so times fall
    // in (t0, t1]. The bucket is computed from v directly: with fine_steps a
    // power of two, v * fine_steps is exact, making the half-open binning
    // exact as well.
    std::vector<double> v(count);
    for (double& u : v) u = jumps.next_double();
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
    path.jump_times.resize(count);
    path.jump_buckets.resize(count);
    path.jump_marks.resize(static_cast<std::size_t>(count) * path.q);
    const double fs = static_cast<double>(fine_steps);
    for (long long i = 0; i < count; ++i) {
        const double u = v[order[i]];
        path.jump_times[i] = horizon.t1 - u * span;
        path.jump_buckets[i] =
            fine_steps - 1 - static_cast<long long>(std::floor(u * fs));
    }
    for (long long i = 0; i < count; ++i)
        model.mark_sampler(jumps,
                           std::span<double>(path.jump_marks.data() + i * path.q,
                                             path.q));
    return path;
}

DrivingPath zero_path(const Horizon& horizon, int m, int q, long long steps) {
    horizon.validate();
    if (m < 1 || q < 1 || steps < 1)
        throw std::invalid_argument("zero_path: m, q and steps must be >= 1");
    DrivingPath path;
    path.fine_steps = steps;
    path.m = m;
    path.q = q;
    path.t0 = horizon.t0;
    path.t1 = horizon.t1;
    path.h_fine = horizon.length() / static_cast<double>(steps);
    path.dW.assign(static_cast<std::size_t>(steps) * m, 0.0);
    return path;
}

CoarseView coarsen(const DrivingPath& path, long long factor) {
    if (!is_power_of_two(factor))
        throw std::invalid_argument("coarsen: factor must be a power of two");
    if (path.fine_steps % factor != 0)
        throw std::invalid_argument("coarsen: factor must divide fine_steps");
    CoarseView view;
    view.path = &path;
    view.factor = factor;
    view.steps = path.fine_steps / factor;
    view.m = path.m;
    view.t0 = path.t0;
    view.h = (path.t1 - path.t0) / static_cast<double>(view.steps);
    view.dW.resize(static_cast<std::size_t>(view.steps) * path.m);
    // Exact left-to-right summation of the fine increments.
    for (long long k = 0; k < view.steps; ++k) {
        for (int j = 0; j < path.m; ++j) {
            double acc = 0.0;
            const long long base = k * factor;
            for (long long i = 0; i < factor; ++i)
                acc += path.dW[static_cast<std::size_t>(base + i) * path.m + j];
            view.dW[static_cast<std::size_t>(k) * path.m + j] = acc;
        }
    }
    view.jump_offsets.assign(static_cast<std::size_t>(view.steps) + 1, 0);
    for (long long bucket : path.jump_buckets)
        ++view.jump_offsets[static_cast<std::size_t>(bucket / factor) + 1];
    for (std::size_t k = 1; k < view.jump_offsets.size(); ++k)
        view.jump_offsets[k] += view.jump_offsets[k - 1];
    return view;
}

namespace {

template <typename T>
void write_raw(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_raw(std::istream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
}

template <typename T>
void write_vec(std::ostream& out, const std::vector<T>& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <typename T>
void read_vec(std::istream& in, std::vector<T>& v, std::size_t count) {
    v.resize(count);
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(count * sizeof(T)));
}

constexpr char kMagic[4] = {'T', 'S', 'D', '1'};

}  // namespace

void dump_path(std::ostream& out, const DrivingPath& path) {
    out.write(kMagic, 4);
    write_raw(out, path.fine_steps);
    write_raw(out, path.m);
    write_raw(out, path.q);
    write_raw(out, path.t0);
    write_raw(out, path.t1);
    write_vec(out, path.dW);
    const std::uint64_t count = path.jump_count();
    write_raw(out, count);
    write_vec(out, path.jump_times);
    write_vec(out, path.jump_buckets);
    write_vec(out, path.jump_marks);
}

DrivingPath load_path(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw std::invalid_argument("load_path: bad magic (expected TSD1)");
    DrivingPath path;
    read_raw(in, path.fine_steps);
    read_raw(in, path.m);
    read_raw(in, path.q);
    read_raw(in, path.t0);
    read_raw(in, path.t1);
    if (path.fine_steps < 1 || path.m < 1 || path.q < 1)
        throw std::invalid_argument("load_path: corrupt header");
    path.h_fine = (path.t1 - path.t0) / static_cast<double>(path.fine_steps);
    read_vec(in, path.dW, static_cast<std::size_t>(path.fine_steps) * path.m);
    std::uint64_t count = 0;
    read_raw(in, count);
    read_vec(in, path.jump_times, count);
    read_vec(in, path.jump_buckets, count);
    read_vec(in, path.jump_marks, count * path.q);
    if (!in) throw std::invalid_argument("load_path: truncated stream");
    return path;
}

}  // namespace tamesde
