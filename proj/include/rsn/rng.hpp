#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_set>
#include <vector>

#include "rsn/types.hpp"

namespace rsn {

// Stream ids keep independent random consumers from sharing a sequence.
enum Stream : std::uint64_t {
  kStreamSketch = 0,
  kStreamSigmaMax = 1,
  kStreamDiagnostics = 2,
  kStreamData = 3,
};

/// Counter-keyed splitmix64 generator.
///
/// A generator opened with the same (seed, stream, counter) triple always
/// produces the same sequence, so the sketch drawn at iteration k can be
/// replayed without replaying iterations 0..k-1.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    state_ = mix(seed + kGamma * (stream + 1));
    state_ = mix(state_ ^ mix(counter + kGamma));
  }

  std::uint64_t next_u64() {
    state_ += kGamma;
    return mix(state_);
  }

  /// Uniform draw in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; caches the second value of each pair.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * kPi * uniform();
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  /// Unbiased integer in [0, n) by rejection.
  std::uint64_t uniform_below(std::uint64_t n) {
    if (n == 0) throw DimensionMismatch("uniform_below: n must be positive");
    std::uint64_t rem = (0 - n) % n;  // 2^64 mod n
    std::uint64_t z;
    do {
      z = next_u64();
    } while (z < rem);
    return z % n;
  }

  /// s distinct indices from {0, .., d-1}, sorted ascending (Floyd's method).
  std::vector<Index> sorted_subset(Index d, Index s) {
    if (s < 1 || s > d) throw DimensionMismatch("sorted_subset: need 1 <= s <= d");
    std::unordered_set<std::uint64_t> chosen;
    for (std::uint64_t j = static_cast<std::uint64_t>(d - s); j < static_cast<std::uint64_t>(d); ++j) {
      std::uint64_t t = uniform_below(j + 1);
      chosen.insert(chosen.count(t) ? j : t);
    }
    std::vector<Index> out(chosen.begin(), chosen.end());
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
  static constexpr double kPi = 3.141592653589793238462643383279502884;

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace rsn
