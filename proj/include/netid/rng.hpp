#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace netid {

// splitmix64 mixing step; used to derive independent substream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Seed for substream (a, b) of a master seed. Streams for distinct (a, b)
// pairs are decorrelated by two rounds of splitmix64.
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t a,
                                    std::uint64_t b) {
  std::uint64_t s = splitmix64(master);
  s = splitmix64(s ^ (a * 0x9E3779B97F4A7C15ULL + 1));
  s = splitmix64(s ^ (b * 0xC2B2AE3D27D4EB4FULL + 1));
  return s;
}

// Deterministic normal generator: mt19937_64 + Box-Muller with a cached
// spare. Avoids std::normal_distribution, whose output sequence is
// implementation-defined; this one is bit-identical across platforms.
class NormalRng {
 public:
  explicit NormalRng(std::uint64_t seed) : gen_(seed) {}

  double uniform01() {  // in (0, 1]
    const double u = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    return u > 0.0 ? u : 0x1.0p-53;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace netid
