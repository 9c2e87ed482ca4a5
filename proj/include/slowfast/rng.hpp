#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace slowfast {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Every draw is a
// pure function of (key, counter), so substreams can be generated in any order
// or in parallel with identical results.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit Philox4x32(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  Counter operator()(Counter ctr) const {
    Key k = key_;
    for (int round = 0; round < 10; ++round) {
      ctr = single_round(ctr, k);
      k[0] += kWeyl0;
      k[1] += kWeyl1;
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static Counter single_round(const Counter& c, const Key& k) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
    return {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
            static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
  }

  Key key_;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Stream identifiers for the roles that consume noise in an experiment.
enum class StreamRole : std::uint32_t {
  kTruth = 1,
  kParticle = 2,
  kObservationReference = 3,
  kProbe = 4,
  kTest = 5,
};

inline std::uint64_t make_stream_id(StreamRole role, std::uint64_t replication, std::uint64_t index) {
  std::uint64_t h = splitmix64(static_cast<std::uint64_t>(role));
  h = splitmix64(h ^ replication);
  return splitmix64(h ^ (index * 0x9E3779B97F4A7C15ull));
}

// Standard normal draws addressed by (stream, cell, channel, component).
class GaussianSource {
 public:
  GaussianSource(std::uint64_t seed, std::uint64_t stream) : philox_(seed), stream_(stream) {}

  // Fills out[0..count) with independent N(0,1) values for the given cell and channel.
  void fill(std::int64_t cell, std::uint32_t channel, double* out, std::size_t count) const {
    for (std::size_t pair = 0; pair * 2 < count; ++pair) {
      const auto r = philox_({static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32),
                              static_cast<std::uint32_t>(cell),
                              (channel << 24) | static_cast<std::uint32_t>(pair)});
      const double u1 = to_unit_open_left(r[0], r[1]);
      const double u2 = to_unit_open_left(r[2], r[3]);
      const double radius = std::sqrt(-2.0 * std::log(u1));
      const double angle = 2.0 * std::numbers::pi * u2;
      out[2 * pair] = radius * std::cos(angle);
      if (2 * pair + 1 < count) out[2 * pair + 1] = radius * std::sin(angle);
    }
  }

  double normal(std::int64_t cell, std::uint32_t channel, std::uint32_t component) const {
    double buf[2];
    const auto r = philox_({static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32),
                            static_cast<std::uint32_t>(cell), (channel << 24) | (component / 2)});
    const double u1 = to_unit_open_left(r[0], r[1]);
    const double u2 = to_unit_open_left(r[2], r[3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    buf[0] = radius * std::cos(angle);
    buf[1] = radius * std::sin(angle);
    return buf[component % 2];
  }

  // Uniform on [0, 1) for probing and test draws.
  double uniform(std::int64_t cell, std::uint32_t channel, std::uint32_t component) const {
    const auto r = philox_({static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32),
                            static_cast<std::uint32_t>(cell), (channel << 24) | component});
    return 1.0 - to_unit_open_left(r[0], r[1]);
  }

 private:
  // 53-bit uniform on (0, 1].
  static double to_unit_open_left(std::uint32_t lo, std::uint32_t hi) {
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
    return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
  }

  Philox4x32 philox_;
  std::uint64_t stream_;
};

}  // namespace slowfast
