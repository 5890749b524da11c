#pragma once

// Philox4x32-10 (Salmon et al., SC'11) and the normal draws built on it.
// A draw is a pure function of (key, counter), so paths can be generated in
// any order on any number of threads.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace skewdiff {

using Philox4x32Ctr = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

namespace detail {

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace detail

inline Philox4x32Ctr philox4x32_10(Philox4x32Ctr c, Philox4x32Key k) noexcept {
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      k[0] += detail::kPhiloxW0;
      k[1] += detail::kPhiloxW1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    detail::mulhilo(detail::kPhiloxM0, c[0], hi0, lo0);
    detail::mulhilo(detail::kPhiloxM1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
  return c;
}

/// 64 random bits to a double in (0, 1); never returns 0 or 1, so log() is safe.
inline double u01_open(std::uint32_t hi, std::uint32_t lo) noexcept {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32 | lo) >> 12;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}

/// Two independent standard normals by Box-Muller from one Philox block.
inline std::array<double, 2> box_muller(const Philox4x32Ctr& r) noexcept {
  const double u1 = u01_open(r[0], r[1]);
  const double u2 = u01_open(r[2], r[3]);
  const double rad = std::sqrt(-2.0 * std::log(u1));
  const double th = 2.0 * std::numbers::pi * u2;
  return {rad * std::cos(th), rad * std::sin(th)};
}

/// Counter words: (block index, path low, path high, stream).
class PathNoise {
 public:
  PathNoise(std::uint64_t seed, std::uint64_t path, std::uint32_t stream) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        path_lo_(static_cast<std::uint32_t>(path)),
        path_hi_(static_cast<std::uint32_t>(path >> 32)),
        stream_(stream) {}

  Philox4x32Ctr block(std::uint64_t index) const noexcept {
    return philox4x32_10({static_cast<std::uint32_t>(index), path_lo_, path_hi_, stream_}, key_);
  }

  std::array<double, 2> normal_pair(std::uint64_t index) const noexcept {
    return box_muller(block(index));
  }

  /// Normal number k of the path: pair k/2, component k%2.
  double normal(std::uint64_t k) noexcept {
    const std::uint64_t pair = k >> 1;
    if (pair != cached_) {
      cache_ = normal_pair(pair);
      cached_ = pair;
    }
    return cache_[k & 1];
  }

  double uniform(std::uint64_t index) const noexcept {
    const auto r = block(index);
    return u01_open(r[0], r[1]);
  }

 private:
  Philox4x32Key key_;
  std::uint32_t path_lo_;
  std::uint32_t path_hi_;
  std::uint32_t stream_;
  std::uint64_t cached_ = ~std::uint64_t{0};
  std::array<double, 2> cache_{};
};

}  // namespace skewdiff
