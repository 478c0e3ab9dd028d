#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace fractalnet {

// SplitMix64 finalizer (Steele, Lea, Flood 2014). Used to derive child seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Deterministic child seed for (parent, a, b).
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(splitmix64(splitmix64(parent) ^ a) ^ (b + 0x632BE59BD9B4E019ull));
}

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// A pure function of (counter, key): the same 128-bit counter under the same
/// key always yields the same 128 bits, independent of call order.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit constexpr Philox4x32(Key key) : key_(key) {}
  explicit constexpr Philox4x32(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  constexpr Counter operator()(Counter ctr) const {
    Key key = key_;
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  Key key_;
};

// Maps 64 random bits to a double in the open interval (0, 1).
constexpr double open_unit_interval(std::uint64_t bits) {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

// Standard normal draw addressed by a 128-bit counter (Box-Muller, cosine branch).
inline double counter_normal(const Philox4x32& gen, const Philox4x32::Counter& ctr) {
  const auto out = gen(ctr);
  const double u1 = open_unit_interval((std::uint64_t{out[0]} << 32) | out[1]);
  const double u2 = open_unit_interval((std::uint64_t{out[2]} << 32) | out[3]);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace fractalnet
