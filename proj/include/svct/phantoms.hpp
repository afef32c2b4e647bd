#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "svct/common.hpp"
#include "svct/image.hpp"

namespace svct {

inline constexpr double kDefaultFovCm = 40.0;
inline constexpr double kPhantomMinHu = -1000.0;
inline constexpr double kPhantomMaxHu = 3000.0;

/// Ellipse in normalized coordinates: the image square maps to [-1, 1] per
/// axis (x right, y up). `value` is in the generator's native intensity units.
struct Ellipse {
  double cx = 0.0;
  double cy = 0.0;
  double a = 1.0;    // semi-axis along the ellipse x axis
  double b = 1.0;    // semi-axis along the ellipse y axis
  double phi = 0.0;  // CCW rotation, radians
  double value = 0.0;

  bool contains(double nx, double ny) const {
    const double dx = nx - cx;
    const double dy = ny - cy;
    const double c = std::cos(phi);
    const double s = std::sin(phi);
    const double u = dx * c + dy * s;
    const double v = -dx * s + dy * c;
    return (u * u) / (a * a) + (v * v) / (b * b) <= 1.0;
  }
};

/// Sum of intensities of the ellipses covering a normalized point; `covered`
/// reports whether any ellipse contains it.
inline double ellipse_sum_at(const std::vector<Ellipse>& ellipses, double nx,
                             double ny, bool* covered = nullptr) {
  double sum = 0.0;
  bool hit = false;
  for (const Ellipse& e : ellipses) {
    if (e.contains(nx, ny)) {
      sum += e.value;
      hit = true;
    }
  }
  if (covered)
    *covered = hit;
  return sum;
}

inline constexpr int kPhantomSupersample = 4;

namespace detail {

/// Rasterize with 4x4 supersampling. `to_hu(sum, covered)` maps the summed
/// ellipse intensity of one subsample to HU; results are clamped to the
/// generator output range and averaged per pixel.
template <typename ToHu>
Image rasterize_ellipses(int width, int height, double pixel_size,
                         const std::vector<Ellipse>& ellipses, ToHu&& to_hu) {
  if (width < 16 || height < 16)
    throw ConfigError("phantom: grid must be at least 16x16");
  if (pixel_size <= 0.0)
    throw ConfigError("phantom: pixel size must be positive");

  constexpr int s = kPhantomSupersample;
  Image img(height, width, pixel_size);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      double acc = 0.0;
      for (int sy = 0; sy < s; ++sy) {
        const double v_img = r + (sy + 0.5) / s;
        const double ny = 1.0 - 2.0 * v_img / height;
        for (int sx = 0; sx < s; ++sx) {
          const double u_img = c + (sx + 0.5) / s;
          const double nx = 2.0 * u_img / width - 1.0;
          bool covered = false;
          const double sum = ellipse_sum_at(ellipses, nx, ny, &covered);
          acc += std::clamp(to_hu(sum, covered), kPhantomMinHu, kPhantomMaxHu);
        }
      }
      img.data(r, c) = static_cast<float>(acc / (s * s));
    }
  }
  return img;
}

}  // namespace detail

/// The classic 10-ellipse head phantom with the original high-contrast
/// intensities (outer shell 2.0, interior ~1.02).
inline const std::vector<Ellipse>& shepp_logan_ellipses() {
  static const std::vector<Ellipse> es = [] {
    auto deg = [](double d) { return d * M_PI / 180.0; };
    return std::vector<Ellipse>{
        {0.0, 0.0, 0.69, 0.92, 0.0, 2.0},
        {0.0, -0.0184, 0.6624, 0.874, 0.0, -0.98},
        {0.22, 0.0, 0.11, 0.31, deg(-18.0), -0.02},
        {-0.22, 0.0, 0.16, 0.41, deg(18.0), -0.02},
        {0.0, 0.35, 0.21, 0.25, 0.0, 0.01},
        {0.0, 0.1, 0.046, 0.046, 0.0, 0.01},
        {0.0, -0.1, 0.046, 0.046, 0.0, 0.01},
        {-0.08, -0.605, 0.046, 0.023, 0.0, 0.01},
        {0.0, -0.606, 0.023, 0.023, 0.0, 0.01},
        {0.06, -0.605, 0.023, 0.046, 0.0, 0.01},
    };
  }();
  return es;
}

/// Affine map from summed Shepp-Logan intensity to HU: 0 (background) -> air
/// at -1000, 2 (skull) -> 2000.
inline double shepp_logan_intensity_to_hu(double v) {
  return 1500.0 * v - 1000.0;
}

inline Image shepp_logan(int width, int height, double pixel_size = 0.0) {
  if (pixel_size <= 0.0)
    pixel_size = kDefaultFovCm / width;
  return detail::rasterize_ellipses(
      width, height, pixel_size, shepp_logan_ellipses(),
      [](double sum, bool) { return shepp_logan_intensity_to_hu(sum); });
}

/// Seed-deterministic phantom: n random ellipses whose HU values sum where
/// they overlap, over an air background. Uncovered pixels stay at -1000 HU;
/// covered pixels are the clamped sum of covering ellipse HUs.
inline Image random_ellipse_phantom(std::uint64_t seed, int width, int height,
                                    int n_ellipses, double pixel_size = 0.0) {
  if (n_ellipses < 1)
    throw ConfigError("phantom: need at least one ellipse");
  if (pixel_size <= 0.0)
    pixel_size = kDefaultFovCm / width;

  RandomStream rng(seed);
  std::vector<Ellipse> ellipses;
  ellipses.reserve(static_cast<std::size_t>(n_ellipses));
  for (int i = 0; i < n_ellipses; ++i) {
    Ellipse e;
    e.cx = rng.uniform(-0.5, 0.5);
    e.cy = rng.uniform(-0.5, 0.5);
    e.a = rng.uniform(0.08, 0.35);
    e.b = rng.uniform(0.08, 0.35);
    e.phi = rng.uniform(0.0, M_PI);
    e.value = rng.uniform(-200.0, 1500.0);
    ellipses.push_back(e);
  }
  return detail::rasterize_ellipses(
      width, height, pixel_size, ellipses,
      [](double sum, bool covered) { return covered ? sum : -1000.0; });
}

}  // namespace svct
