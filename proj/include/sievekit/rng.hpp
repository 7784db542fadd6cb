#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). A draw is a
// pure function of (key, counter), so sample i of a run keyed by `seed`
// produces the same numbers no matter which thread evaluates it.

#include <array>
#include <cstdint>

namespace sievekit {

class Philox4x32 {
public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeylA;
        key[1] += kWeylB;
      }
      const std::uint64_t p0 = std::uint64_t{kMulA} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMulB} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

private:
  static constexpr std::uint32_t kMulA = 0xD2511F53;
  static constexpr std::uint32_t kMulB = 0xCD9E8D57;
  static constexpr std::uint32_t kWeylA = 0x9E3779B9;
  static constexpr std::uint32_t kWeylB = 0xBB67AE85;
};

/// Random stream for one sample: keyed by the run seed, addressed by the
/// sample index. Each block yields two 53-bit uniforms.
class SampleStream {
public:
  SampleStream(std::uint64_t seed, std::uint64_t sample_index)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        index_(sample_index) {}

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    if (cached_ == 0) {
      const Philox4x32::Counter ctr{static_cast<std::uint32_t>(index_),
                                    static_cast<std::uint32_t>(index_ >> 32),
                                    block_, 0};
      out_ = Philox4x32::block(ctr, key_);
      ++block_;
      cached_ = 2;
    }
    const std::size_t base = cached_ == 2 ? 0 : 2;
    --cached_;
    const std::uint64_t bits = (std::uint64_t{out_[base]} << 32) | out_[base + 1];
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
  }

private:
  Philox4x32::Key key_;
  std::uint64_t index_;
  std::uint32_t block_ = 0;
  Philox4x32::Counter out_{};
  int cached_ = 0;
};

} // namespace sievekit
