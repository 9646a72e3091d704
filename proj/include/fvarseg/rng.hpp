#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <vector>

namespace fvarseg {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
///
/// Streams are addressed by a 64-bit key; the 128-bit counter advances by one
/// per block of four 32-bit outputs. Seeds for sub-streams are derived with
/// `derive_seed`, so every (master seed, label, index) path names one stream:
///
///   master --derive("chi"|"xi"|"calibration"|...)--> module --derive(i)--> replicate
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key) noexcept {
    constexpr std::uint32_t kM0 = 0xD2511F53u;
    constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u;
    constexpr std::uint32_t kW1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += kW0;
      key[1] += kW1;
    }
    return ctr;
  }
};

/// SplitMix64 finaliser, used for seed derivation.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// FNV-1a over a label, for named sub-streams.
[[nodiscard]] constexpr std::uint64_t label_hash(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept {
  return mix64(parent ^ mix64(index + 0x632BE59BD9B4E019ull));
}

[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t parent, std::string_view label) noexcept {
  return derive_seed(parent, label_hash(label));
}

/// Sequential draws from one Philox stream.
///
/// uniform(): 53-bit mantissa from two 32-bit words, in [0, 1).
/// normal(): Box-Muller on (1 - u1, u2), both variates used in turn.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  std::uint32_t next_u32() noexcept {
    if (pos_ == 4) refill();
    return buf_[pos_++];
  }

  double uniform() noexcept {
    const std::uint64_t a = next_u32() >> 5;  // 27 bits
    const std::uint64_t b = next_u32() >> 6;  // 26 bits
    return static_cast<double>((a << 26) | b) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  bool bernoulli(double prob) noexcept { return uniform() < prob; }

  /// Uniform integer in [0, bound) by rejection.
  std::uint32_t below(std::uint32_t bound) noexcept {
    if (bound <= 1) return 0;
    const std::uint32_t limit = static_cast<std::uint32_t>(-bound) % bound;
    for (;;) {
      const std::uint64_t m = static_cast<std::uint64_t>(next_u32()) * bound;
      if (static_cast<std::uint32_t>(m) >= limit) return static_cast<std::uint32_t>(m >> 32);
    }
  }

  /// k distinct indices from {0, ..., n-1}, sorted ascending.
  std::vector<int> subset(int n, int k) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (int i = 0; i < k; ++i) {
      const int j = i + static_cast<int>(below(static_cast<std::uint32_t>(n - i)));
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    idx.resize(static_cast<std::size_t>(k));
    std::sort(idx.begin(), idx.end());
    return idx;
  }

 private:
  void refill() noexcept {
    buf_ = Philox4x32::block(ctr_, key_);
    pos_ = 0;
    for (auto& w : ctr_) {
      if (++w != 0) break;
    }
  }

  Philox4x32::Key key_;
  Philox4x32::Counter ctr_{0, 0, 0, 0};
  Philox4x32::Counter buf_{};
  int pos_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace fvarseg
