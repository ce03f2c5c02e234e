#pragma once

#include <cmath>
#include <cstdint>
#include <vector>
#include <random>

namespace rliq {

/// Independent generator for one Monte Carlo path, keyed by (seed, stream, path).
inline std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t path) {
  auto lo = [](std::uint64_t x) { return static_cast<std::uint32_t>(x); };
  auto hi = [](std::uint64_t x) { return static_cast<std::uint32_t>(x >> 32); };
  std::seed_seq seq{lo(seed), hi(seed), lo(stream), hi(stream), lo(path), hi(path)};
  return std::mt19937_64(seq);
}

/// Pairwise sum of x[lo, hi) in a fixed order.
template <class Vec>
double pairwise_sum(const Vec& x, std::size_t lo, std::size_t hi) {
  if (hi - lo <= 64) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += x[i];
    return s;
  }
  const std::size_t mid = lo + (hi - lo) / 2;
  return pairwise_sum(x, lo, mid) + pairwise_sum(x, mid, hi);
}

/// Mean and standard error of per-path values.
struct SampleStats {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;
};

template <class Vec>
SampleStats sample_stats(const Vec& x) {
  SampleStats s;
  s.n = static_cast<std::size_t>(x.size());
  if (s.n == 0) return s;
  s.mean = pairwise_sum(x, 0, s.n) / s.n;
  if (s.n < 2) return s;
  std::vector<double> dev(s.n);
  for (std::size_t i = 0; i < s.n; ++i) dev[i] = (x[i] - s.mean) * (x[i] - s.mean);
  s.stderr_ = std::sqrt(pairwise_sum(dev, 0, s.n) / (s.n - 1) / s.n);
  return s;
}

}  // namespace rliq
