#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace svct {

/// Configuration / usage problems (bad geometry, invalid levels, bad flags).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent data (truncated files, shape mismatches).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Numerical failure (non-finite values where finite ones are required).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// HU display window shared by normalization, PNG export and SSIM.
inline constexpr double kHuWindowLo = -1000.0;
inline constexpr double kHuWindowHi = 2000.0;
inline constexpr double kHuWindowRange = kHuWindowHi - kHuWindowLo;

// Linear attenuation of water at ~70 keV, cm^-1.
inline constexpr double kMuWater = 0.19;

// The projector works in water-relative attenuation so that the whole
// project/reconstruct pipeline is a linear operator: delta-mu = HU * kHuToMu.
// (Absolute attenuation would be mu_water * (1 + HU/1000) = mu_water + delta-mu;
// the constant water baseline is dropped as a calibration convention.)
inline constexpr double kHuToMu = kMuWater / 1000.0;
inline constexpr double kMuToHu = 1000.0 / kMuWater;

inline double normalize_hu(double hu) { return (hu - kHuWindowLo) / kHuWindowRange; }
inline double denormalize_hu(double z) { return z * kHuWindowRange + kHuWindowLo; }

/// Deterministic uniform/normal stream on top of mt19937_64.
///
/// std::uniform_real_distribution is not bit-reproducible across standard
/// libraries, so all sampling is derived from raw engine output here.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : gen_(seed) {}

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi], both inclusive.
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(uniform() * (static_cast<double>(hi) - lo + 1.0));
  }

  /// Standard normal via Box-Muller.
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * M_PI * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<int>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

/// FNV-1a 64-bit hash, used for config provenance lines in CSV outputs.
inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace svct
