#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <vector>

#include "svct/common.hpp"
#include "svct/fft_util.hpp"
#include "svct/image.hpp"
#include "svct/sinogram.hpp"

namespace svct {

namespace detail {

/// Frequency response of the discrete Ram-Lak kernel for sample spacing `a`,
/// zero-padded to length m (m >= 2 * n avoids circular-convolution wraparound
/// for rows of length n).
///
/// Spatial taps (Kak & Slaney): h[0] = 1/(4 a^2), h[n] = -1/(pi n a)^2 for odd
/// n, zero for even n; using the FFT of the sampled kernel rather than |f|
/// keeps the DC response correct.
inline std::vector<std::complex<double>> ramp_filter_response(int n, int m,
                                                              double a) {
  std::vector<double> h(static_cast<std::size_t>(m), 0.0);
  h[0] = 1.0 / (4.0 * a * a);
  for (int k = 1; k < n; k += 2) {
    const double v = -1.0 / (M_PI * M_PI * k * k * a * a);
    h[static_cast<std::size_t>(k)] = v;
    h[static_cast<std::size_t>(m - k)] = v;
  }
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> response;
  fft.fwd(response, h);
  return response;
}

}  // namespace detail

/// Fan-beam filtered backprojection onto a square-pixel grid, mapped back to
/// Hounsfield units. Deterministic; pixel-driven with linear detector
/// interpolation.
///
/// Uses the flat-detector weighting scheme on the virtual detector through
/// the isocenter: cosine pre-weight r_so/sqrt(r_so^2 + s^2), Ram-Lak filtered
/// rows, inverse-square distance weight (r_so/l)^2, and an angular step of
/// 2pi/num_views halved because a full-scan fan measures every line twice.
template <typename Scalar>
ImageT<Scalar> fbp_reconstruct(const SinogramT<Scalar>& sino, int out_width,
                               int out_height, double pixel_size) {
  if (sino.geometry.angles.empty())
    throw DataError("fbp: empty angle set");
  sino.validate();
  if (out_width <= 0 || out_height <= 0 || pixel_size <= 0.0)
    throw ConfigError("fbp: invalid output grid");

  const FanGeometry& geom = sino.geometry;
  const int n_views = geom.num_views();
  const int n_det = geom.num_detectors;
  const double r_so = geom.source_to_isocenter;
  const double iso_scale = r_so / geom.source_to_detector;
  const double a = geom.detector_spacing * iso_scale;  // spacing at isocenter

  const int m = next_pow2_at_least(2 * n_det);
  const auto ramp = detail::ramp_filter_response(n_det, m, a);

  // Cosine weights on the virtual detector.
  Eigen::ArrayXd cos_w(n_det);
  Eigen::ArrayXd s_pos(n_det);
  for (int d = 0; d < n_det; ++d) {
    const double s = geom.detector_offset(d) * iso_scale;
    s_pos(d) = s;
    cos_w(d) = r_so / std::sqrt(r_so * r_so + s * s);
  }

  // Filter every view row: q = a * ((g * cos_w) conv ramp).
  Eigen::ArrayXXd filtered(n_views, n_det);
  {
    Eigen::FFT<double> fft;
    std::vector<double> row(static_cast<std::size_t>(m));
    std::vector<std::complex<double>> freq;
    for (int v = 0; v < n_views; ++v) {
      for (int d = 0; d < n_det; ++d)
        row[static_cast<std::size_t>(d)] =
            static_cast<double>(sino.data(v, d)) * cos_w(d);
      std::fill(row.begin() + n_det, row.end(), 0.0);
      fft.fwd(freq, row);
      for (int k = 0; k < m; ++k)
        freq[static_cast<std::size_t>(k)] *= ramp[static_cast<std::size_t>(k)];
      fft.inv(row, freq);
      for (int d = 0; d < n_det; ++d)
        filtered(v, d) = a * row[static_cast<std::size_t>(d)];
    }
  }

  std::vector<double> cos_b(static_cast<std::size_t>(n_views));
  std::vector<double> sin_b(static_cast<std::size_t>(n_views));
  for (int v = 0; v < n_views; ++v) {
    cos_b[static_cast<std::size_t>(v)] = std::cos(geom.angles[static_cast<std::size_t>(v)]);
    sin_b[static_cast<std::size_t>(v)] = std::sin(geom.angles[static_cast<std::size_t>(v)]);
  }

  const double ang_step = M_PI / n_views;  // (2pi/n) / 2 for the full scan
  const double inv_a = 1.0 / a;
  const double center = 0.5 * (n_det - 1);

  ImageT<Scalar> out(out_height, out_width, pixel_size);
  for (int r = 0; r < out_height; ++r) {
    const double y = (0.5 * (out_height - 1) - r) * pixel_size;
    for (int c = 0; c < out_width; ++c) {
      const double x = (c - 0.5 * (out_width - 1)) * pixel_size;
      double acc = 0.0;
      for (int v = 0; v < n_views; ++v) {
        const double cb = cos_b[static_cast<std::size_t>(v)];
        const double sb = sin_b[static_cast<std::size_t>(v)];
        const double l = r_so - (x * cb + y * sb);
        if (l <= 1e-9)
          continue;  // pixel at or behind the source
        const double rel = r_so / l;
        const double s = (-x * sb + y * cb) * rel;
        const double idx = s * inv_a + center;
        if (idx < 0.0 || idx > n_det - 1)
          continue;
        const int d0 = std::min(static_cast<int>(idx), n_det - 2);
        const double w = idx - d0;
        const double q = (1.0 - w) * filtered(v, d0) + w * filtered(v, d0 + 1);
        acc += rel * rel * q;
      }
      out.data(r, c) = static_cast<Scalar>(acc * ang_step * kMuToHu);
    }
  }
  return out;
}

}  // namespace svct
