#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "svct/common.hpp"
#include "svct/image.hpp"
#include "svct/sinogram.hpp"

namespace svct {

namespace detail {

/// Dense attenuation plane in world-aligned grid coordinates with bilinear
/// sampling; values outside the grid are zero.
struct PlaneSampler {
  const Eigen::ArrayXXd& plane;  // height x width
  int width, height;
  double pixel_size;

  /// Sample at world position (x, y), cm.
  double operator()(double x, double y) const {
    const double col = x / pixel_size + 0.5 * (width - 1);
    const double row = 0.5 * (height - 1) - y / pixel_size;
    const double cf = std::floor(col);
    const double rf = std::floor(row);
    const int c0 = static_cast<int>(cf);
    const int r0 = static_cast<int>(rf);
    if (c0 < -1 || c0 >= width || r0 < -1 || r0 >= height)
      return 0.0;
    const double wc = col - cf;
    const double wr = row - rf;
    auto at = [&](int r, int c) -> double {
      return (r >= 0 && r < height && c >= 0 && c < width) ? plane(r, c) : 0.0;
    };
    return (1.0 - wr) * ((1.0 - wc) * at(r0, c0) + wc * at(r0, c0 + 1)) +
           wr * ((1.0 - wc) * at(r0 + 1, c0) + wc * at(r0 + 1, c0 + 1));
  }
};

/// Entry/exit ray parameters against the circle |S + s*d| = radius.
/// Returns false if the ray misses the circle.
inline bool clip_to_circle(double sx, double sy, double dx, double dy,
                           double radius, double& s0, double& s1) {
  const double b = sx * dx + sy * dy;
  const double c = sx * sx + sy * sy - radius * radius;
  const double disc = b * b - c;  // |d| == 1
  if (disc <= 0.0)
    return false;
  const double root = std::sqrt(disc);
  s0 = -b - root;
  s1 = -b + root;
  if (s1 <= 0.0)
    return false;
  s0 = std::max(s0, 0.0);
  return s1 > s0;
}

}  // namespace detail

/// Fan-beam Radon transform: for every (view, detector) pair, the discrete
/// line integral of the water-relative attenuation of `img` along the ray
/// from the source to the detector element.
///
/// Ray-driven with midpoint sampling at a fixed step of half a pixel and
/// bilinear interpolation; accumulation is in double, so the operator is
/// linear to within one float rounding of the output. Pure and deterministic.
template <typename Scalar>
SinogramT<Scalar> forward_project(const ImageT<Scalar>& img,
                                  const FanGeometry& geom) {
  img.validate();
  geom.validate();
  geom.require_covers(img.support_radius());

  // Convert to attenuation once; marching samples this plane.
  Eigen::ArrayXXd mu = img.data.template cast<double>() * kHuToMu;
  const detail::PlaneSampler sampler{mu, img.width(), img.height(), img.pixel_size};

  const double march_radius = img.support_radius() + 2.0 * img.pixel_size;
  const double step_max = 0.5 * img.pixel_size;
  const double r_src = geom.source_to_isocenter;

  SinogramT<Scalar> sino(geom);
  for (int v = 0; v < geom.num_views(); ++v) {
    const double beta = geom.angles[static_cast<std::size_t>(v)];
    const double cb = std::cos(beta), sb = std::sin(beta);
    const double srcx = r_src * cb, srcy = r_src * sb;
    // Central ray direction and detector axis.
    const double cx = -cb, cy = -sb;
    const double tx = -sb, ty = cb;
    for (int d = 0; d < geom.num_detectors; ++d) {
      const double u = geom.detector_offset(d);
      // Unit direction from source through detector element d.
      const double len = std::hypot(geom.source_to_detector, u);
      const double dx = (geom.source_to_detector * cx + u * tx) / len;
      const double dy = (geom.source_to_detector * cy + u * ty) / len;

      double s0 = 0.0, s1 = 0.0;
      if (!detail::clip_to_circle(srcx, srcy, dx, dy, march_radius, s0, s1))
        continue;
      const int n_steps = static_cast<int>(std::ceil((s1 - s0) / step_max));
      const double ds = (s1 - s0) / n_steps;
      double acc = 0.0;
      double s = s0 + 0.5 * ds;
      for (int k = 0; k < n_steps; ++k, s += ds)
        acc += sampler(srcx + s * dx, srcy + s * dy);
      sino.data(v, d) = static_cast<Scalar>(acc * ds);
    }
  }
  return sino;
}

/// Exact transpose of forward_project (ray-driven splatting): backprojection
/// without filtering, in attenuation units per HU-to-mu scaling. Satisfies
/// <A x, y> == <x, A^T y> up to float rounding.
template <typename Scalar>
ImageT<Scalar> backproject_transpose(const SinogramT<Scalar>& sino, int out_width,
                                     int out_height, double pixel_size) {
  sino.validate();
  const FanGeometry& geom = sino.geometry;

  ImageT<double> tmp(out_height, out_width, pixel_size);
  Eigen::ArrayXXd& acc = tmp.data;
  const double march_radius = tmp.support_radius() + 2.0 * pixel_size;
  const double step_max = 0.5 * pixel_size;
  const double r_src = geom.source_to_isocenter;
  const int W = out_width, H = out_height;

  for (int v = 0; v < geom.num_views(); ++v) {
    const double beta = geom.angles[static_cast<std::size_t>(v)];
    const double cb = std::cos(beta), sb = std::sin(beta);
    const double srcx = r_src * cb, srcy = r_src * sb;
    const double cx = -cb, cy = -sb;
    const double tx = -sb, ty = cb;
    for (int d = 0; d < geom.num_detectors; ++d) {
      const double val = static_cast<double>(sino.data(v, d)) * kHuToMu;
      const double u = geom.detector_offset(d);
      const double len = std::hypot(geom.source_to_detector, u);
      const double dx = (geom.source_to_detector * cx + u * tx) / len;
      const double dy = (geom.source_to_detector * cy + u * ty) / len;

      double s0 = 0.0, s1 = 0.0;
      if (!detail::clip_to_circle(srcx, srcy, dx, dy, march_radius, s0, s1))
        continue;
      const int n_steps = static_cast<int>(std::ceil((s1 - s0) / step_max));
      const double ds = (s1 - s0) / n_steps;
      const double w = val * ds;
      double s = s0 + 0.5 * ds;
      for (int k = 0; k < n_steps; ++k, s += ds) {
        const double x = srcx + s * dx, y = srcy + s * dy;
        const double col = x / pixel_size + 0.5 * (W - 1);
        const double row = 0.5 * (H - 1) - y / pixel_size;
        const double cf = std::floor(col), rf = std::floor(row);
        const int c0 = static_cast<int>(cf), r0 = static_cast<int>(rf);
        if (c0 < -1 || c0 >= W || r0 < -1 || r0 >= H)
          continue;
        const double wc = col - cf, wr = row - rf;
        if (r0 >= 0 && c0 >= 0) acc(r0, c0) += w * (1.0 - wr) * (1.0 - wc);
        if (r0 >= 0 && c0 + 1 < W) acc(r0, c0 + 1) += w * (1.0 - wr) * wc;
        if (r0 + 1 < H && c0 >= 0) acc(r0 + 1, c0) += w * wr * (1.0 - wc);
        if (r0 + 1 < H && c0 + 1 < W) acc(r0 + 1, c0 + 1) += w * wr * wc;
      }
    }
  }

  ImageT<Scalar> out(out_height, out_width, pixel_size);
  out.data = acc.template cast<Scalar>();
  return out;
}

}  // namespace svct
