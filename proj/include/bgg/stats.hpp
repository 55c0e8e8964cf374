// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <vector>

#include <boost/math/distributions/normal.hpp>

namespace bgg {

struct Interval {
  double low = 0.0;
  double high = 0.0;

  bool contains(double v) const { return low <= v && v <= high; }
  bool overlaps(const Interval& o) const { return low <= o.high && o.low <= high; }

  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Two-sided standard normal quantile for a confidence level in (0, 1).
inline double z_for_level(double level) {
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("confidence level must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(),
                               0.5 + level / 2.0);
}

/// Wilson score interval for `successes` out of `trials` at z standard errors.
inline Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z) {
  if (trials == 0) throw std::invalid_argument("wilson_interval needs trials > 0");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  // Clamp so the interval always brackets the point estimate despite rounding.
  return {std::clamp(std::min(centre - half, p), 0.0, 1.0),
          std::clamp(std::max(centre + half, p), 0.0, 1.0)};
}

inline unsigned resolve_workers(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Evaluates fn(i) for i in [0, count) into a vector. Each slot depends only
/// on its index, so the result is identical for any worker count.
template <class T, class Fn>
std::vector<T> parallel_map(std::uint64_t count, unsigned workers, Fn&& fn) {
  std::vector<T> out(count);
  workers = static_cast<unsigned>(
      std::min<std::uint64_t>(resolve_workers(workers), std::max<std::uint64_t>(count, 1)));
  if (workers <= 1) {
    for (std::uint64_t i = 0; i < count; ++i) out[i] = fn(i);
    return out;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  const std::uint64_t chunk = (count + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::uint64_t begin = w * chunk;
    const std::uint64_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&out, &fn, begin, end] {
      for (std::uint64_t i = begin; i < end; ++i) out[i] = fn(i);
    });
  }
  pool.clear();  // join before handing the slots back
  return out;
}

}  // namespace bgg
