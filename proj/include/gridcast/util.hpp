#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <thread>
#include <vector>

namespace gridcast {

// splitmix64 step; used to derive independent substream seeds from a base seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    return splitmix64(base ^ splitmix64(stream + 1));
}

inline std::mt19937_64 make_rng(std::uint64_t base, std::uint64_t stream = 0) {
    return std::mt19937_64(derive_seed(base, stream));
}

// Uniform in (0,1), open on both ends. Pinned bit mapping, independent of
// the standard library's distribution adaptors.
inline double uniform_open(std::mt19937_64& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

// Uniform integer in [0, n); n >= 1. Rejection on the top bits keeps the
// draw unbiased and the stream pinned.
inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = rng();
    while (v >= limit) v = rng();
    return v % n;
}

// Pairwise summation: deterministic and accurate regardless of how the
// per-element values were produced.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 16) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

inline double mean_of(std::span<const double> v) {
    return v.empty() ? 0.0 : pairwise_sum(v) / static_cast<double>(v.size());
}

int worker_count();  // GRIDCAST_WORKERS env or hardware concurrency

// Runs fn(i) for i in [0, n). Chunks are contiguous; fn must only write to
// slots owned by its index so the result is identical for any worker count.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, int workers = -1) {
    if (workers < 0) workers = worker_count();
    if (workers <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t nthreads = std::min<std::size_t>(workers, n);
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) {
        pool.emplace_back([&, t] {
            const std::size_t lo = n * t / nthreads;
            const std::size_t hi = n * (t + 1) / nthreads;
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace gridcast
