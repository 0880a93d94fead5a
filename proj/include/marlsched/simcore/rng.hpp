#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

namespace marlsched::simcore {

// 64-bit FNV-1a over a stream name, used to derive independent sub-stream
// seeds from one base seed. Keeping arrivals, fading and exploration on
// separate streams means e.g. an extra fading draw never shifts the arrival
// process of an otherwise identical run.
constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (char c : s) {
    h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
    h *= 1099511628211ull;
  }
  return h;
}

// Deterministic random stream. Samplers are written out explicitly because
// the <random> distribution objects are implementation-defined; with a fixed
// (seed, call sequence) this class produces identical values everywhere.
class RngStream {
 public:
  RngStream() : eng_(0) {}
  explicit RngStream(std::uint64_t seed) : eng_(seed) {}
  RngStream(std::uint64_t base_seed, std::string_view stream)
      : eng_(base_seed ^ fnv1a64(stream)) {}

  // Uniform on [0, 1) with 53 random mantissa bits.
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer on [0, n), n >= 1.
  std::uint64_t uniform_int(std::uint64_t n) {
    auto v = static_cast<std::uint64_t>(uniform01() * static_cast<double>(n));
    return v < n ? v : n - 1;
  }

  // Box-Muller; consumes exactly two uniforms per call.
  double normal(double mean = 0.0, double stddev = 1.0) {
    const double u1 = 1.0 - uniform01();  // (0, 1], keeps log finite
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Knuth's product method; fine for the small rates used here.
  int poisson(double lambda) {
    const double limit = std::exp(-lambda);
    int k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform01();
    } while (p > limit);
    return k - 1;
  }

  bool operator==(const RngStream&) const = default;

 private:
  std::mt19937_64 eng_;
};

}  // namespace marlsched::simcore
