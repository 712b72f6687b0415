#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace lgcp {

/// Philox4x64-10 counter-based generator (Salmon et al., Random123).
///
/// The key is (seed, stream); the 256-bit counter is advanced once per block
/// of four outputs, incremented before the block is generated. This matches
/// numpy's `Philox` bit generator for the same key and starting counter, so
/// every (seed, stream) pair identifies an independent, reproducible sequence
/// without shared state.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream = 0) : key_{seed, stream} {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (used_ == 4) {
      increment();
      block_ = bijection(counter_, key_);
      used_ = 0;
    }
    return block_[used_++];
  }

  /// Uniform double in [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  static std::array<std::uint64_t, 4> bijection(std::array<std::uint64_t, 4> ctr,
                                                std::array<std::uint64_t, 2> key) {
    constexpr std::uint64_t m0 = 0xD2E7470EE14C6C93ULL;
    constexpr std::uint64_t m1 = 0xCA5A826395121157ULL;
    constexpr std::uint64_t w0 = 0x9E3779B97F4A7C15ULL;
    constexpr std::uint64_t w1 = 0xBB67AE8584CAA73BULL;
    for (int round = 0; round < 10; ++round) {
      const unsigned __int128 p0 = static_cast<unsigned __int128>(m0) * ctr[0];
      const unsigned __int128 p1 = static_cast<unsigned __int128>(m1) * ctr[2];
      const auto hi0 = static_cast<std::uint64_t>(p0 >> 64);
      const auto lo0 = static_cast<std::uint64_t>(p0);
      const auto hi1 = static_cast<std::uint64_t>(p1 >> 64);
      const auto lo1 = static_cast<std::uint64_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += w0;
      key[1] += w1;
    }
    return ctr;
  }

 private:
  void increment() {
    for (auto& word : counter_) {
      if (++word != 0) break;
    }
  }

  std::array<std::uint64_t, 2> key_;
  std::array<std::uint64_t, 4> counter_{};
  std::array<std::uint64_t, 4> block_{};
  int used_ = 4;
};

}  // namespace lgcp
