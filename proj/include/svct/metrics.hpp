#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>

#include "svct/common.hpp"
#include "svct/fft_util.hpp"
#include "svct/image.hpp"

namespace svct {

inline constexpr double kPsnrCap = 99.0;  // reported for identical images

template <typename Scalar>
double mse(const ImageT<Scalar>& a, const ImageT<Scalar>& b) {
  require_same_shape(a, b, "mse");
  const Eigen::ArrayXXd d =
      a.data.template cast<double>() - b.data.template cast<double>();
  return (d * d).mean();
}

/// Root-mean-square error in the images' own units (HU for this toolkit).
template <typename Scalar>
double rmse_hu(const ImageT<Scalar>& a, const ImageT<Scalar>& b) {
  return std::sqrt(mse(a, b));
}

/// 10*log10(range^2 / MSE). Identical images are capped at kPsnrCap rather
/// than +inf so CSV outputs stay finite; callers can detect the exact case via
/// rmse == 0.
template <typename Scalar>
double psnr(const ImageT<Scalar>& a, const ImageT<Scalar>& b,
            double data_range) {
  if (data_range <= 0.0)
    throw ConfigError("psnr: data_range must be positive");
  const double m = mse(a, b);
  if (m == 0.0)
    return kPsnrCap;
  const double v = 10.0 * std::log10(data_range * data_range / m);
  return std::min(v, kPsnrCap);
}

/// PSNR with the toolkit's fixed reporting convention: the [-1000, 2000] HU
/// display window taken as the data range.
template <typename Scalar>
double psnr_hu(const ImageT<Scalar>& a, const ImageT<Scalar>& b) {
  return psnr(a, b, kHuWindowRange);
}

namespace detail {

inline Eigen::VectorXd gaussian_window(int size, double sigma) {
  Eigen::VectorXd w(size);
  const double c = 0.5 * (size - 1);
  for (int i = 0; i < size; ++i)
    w(i) = std::exp(-0.5 * std::pow((i - c) / sigma, 2.0));
  w /= w.sum();
  return w;
}

/// Separable valid-region filtering: output is (rows-size+1) x (cols-size+1).
inline Eigen::ArrayXXd filter_valid(const Eigen::ArrayXXd& img,
                                    const Eigen::VectorXd& w) {
  const int size = static_cast<int>(w.size());
  const int vr = static_cast<int>(img.rows()) - size + 1;
  const int vc = static_cast<int>(img.cols()) - size + 1;
  Eigen::ArrayXXd tmp(vr, img.cols());
  tmp.setZero();
  for (int k = 0; k < size; ++k)
    tmp += w(k) * img.block(k, 0, vr, img.cols());
  Eigen::ArrayXXd out(vr, vc);
  out.setZero();
  for (int k = 0; k < size; ++k)
    out += w(k) * tmp.block(0, k, vr, vc);
  return out;
}

}  // namespace detail

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

/// Mean local SSIM over the [-1000, 2000] HU window normalized to [0, 1],
/// 11x11 Gaussian weighting (sigma 1.5), statistics over the valid region
/// only. Range [-1, 1]; returns exactly 1 for identical inputs.
template <typename Scalar>
double compute_ssim(const ImageT<Scalar>& a, const ImageT<Scalar>& b) {
  require_same_shape(a, b, "ssim");
  if (a.height() < kSsimWindow || a.width() < kSsimWindow)
    throw ConfigError("ssim: image smaller than the 11x11 window");

  const Eigen::ArrayXXd x =
      (a.data.template cast<double>() - kHuWindowLo) / kHuWindowRange;
  const Eigen::ArrayXXd y =
      (b.data.template cast<double>() - kHuWindowLo) / kHuWindowRange;

  const Eigen::VectorXd w = detail::gaussian_window(kSsimWindow, kSsimSigma);
  const Eigen::ArrayXXd mu_x = detail::filter_valid(x, w);
  const Eigen::ArrayXXd mu_y = detail::filter_valid(y, w);
  const Eigen::ArrayXXd var_x = detail::filter_valid(x * x, w) - mu_x * mu_x;
  const Eigen::ArrayXXd var_y = detail::filter_valid(y * y, w) - mu_y * mu_y;
  const Eigen::ArrayXXd cov = detail::filter_valid(x * y, w) - mu_x * mu_y;

  constexpr double c1 = (kSsimK1 * 1.0) * (kSsimK1 * 1.0);
  constexpr double c2 = (kSsimK2 * 1.0) * (kSsimK2 * 1.0);
  const Eigen::ArrayXXd num =
      (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2);
  const Eigen::ArrayXXd den =
      (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2);
  return (num / den).mean();
}

/// Fraction of spectral energy (|F|^2, DC included in the total) in the radial
/// band [0.25, 0.75] x Nyquist. High for streaky images, 0 for constants.
template <typename Scalar>
double streak_energy(const ImageT<Scalar>& img) {
  if (img.width() != img.height())
    throw ConfigError("streak_energy: square image required");
  const int n = img.width();

  Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic> f(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      f(r, c) = std::complex<double>(static_cast<double>(img.data(r, c)), 0.0);
  fft2_inplace(f);

  double total = 0.0;
  double band = 0.0;
  for (int r = 0; r < n; ++r) {
    const double fy = (r <= n / 2 ? r : r - n) / static_cast<double>(n);
    for (int c = 0; c < n; ++c) {
      const double fx = (c <= n / 2 ? c : c - n) / static_cast<double>(n);
      const double e = std::norm(f(r, c));
      total += e;
      const double rho = std::hypot(fx, fy);  // cycles/sample, Nyquist = 0.5
      if (rho >= 0.125 && rho <= 0.375)
        band += e;
    }
  }
  if (total == 0.0)
    return 0.0;
  return band / total;
}

/// Fraction of FFT bins inside the streak band; the white-noise expectation of
/// streak_energy.
inline double streak_band_fraction(int n) {
  if (n <= 0)
    throw ConfigError("streak_band_fraction: size must be positive");
  int count = 0;
  for (int r = 0; r < n; ++r) {
    const double fy = (r <= n / 2 ? r : r - n) / static_cast<double>(n);
    for (int c = 0; c < n; ++c) {
      const double fx = (c <= n / 2 ? c : c - n) / static_cast<double>(n);
      const double rho = std::hypot(fx, fy);
      if (rho >= 0.125 && rho <= 0.375)
        ++count;
    }
  }
  return static_cast<double>(count) / (static_cast<double>(n) * n);
}

}  // namespace svct
