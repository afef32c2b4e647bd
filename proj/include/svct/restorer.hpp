#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "svct/common.hpp"
#include "svct/image.hpp"
#include "svct/severity.hpp"

namespace svct {

/// Behavioral interface: estimate the clean image from a severity-t input.
/// Implementations must preserve the grid and return finite values.
class Restorer {
 public:
  virtual ~Restorer() = default;
  virtual Image restore(const Image& x, int t) const = 0;
};

/// Test oracle: returns the ground truth regardless of input.
inline Image oracle_restore(const Image& x, int /*t*/,
                            const Image& ground_truth) {
  require_same_grid(x, ground_truth, "oracle_restore");
  return ground_truth;
}

class OracleRestorer final : public Restorer {
 public:
  explicit OracleRestorer(Image ground_truth)
      : ground_truth_(std::move(ground_truth)) {}
  Image restore(const Image& x, int t) const override {
    return oracle_restore(x, t, ground_truth_);
  }

 private:
  Image ground_truth_;
};

class IdentityRestorer final : public Restorer {
 public:
  Image restore(const Image& x, int /*t*/) const override { return x; }
};

/// Oracle plus an injected perturbation field whose amplitude is indexed by
/// the call counter: call k returns ground_truth + amplitudes[min(k, last)] *
/// field. Lets tests script how quickly consecutive estimates stabilize.
class NoisyOracleRestorer final : public Restorer {
 public:
  NoisyOracleRestorer(Image ground_truth, Image field,
                      std::vector<double> amplitudes)
      : ground_truth_(std::move(ground_truth)), field_(std::move(field)),
        amplitudes_(std::move(amplitudes)) {
    require_same_grid(ground_truth_, field_, "noisy_oracle");
    if (amplitudes_.empty())
      throw ConfigError("noisy_oracle: need at least one amplitude");
  }

  Image restore(const Image& x, int /*t*/) const override {
    require_same_grid(x, ground_truth_, "noisy_oracle");
    const std::size_t k = std::min(calls_, amplitudes_.size() - 1);
    ++calls_;
    Image out = ground_truth_;
    out.data += static_cast<float>(amplitudes_[k]) * field_.data;
    return out;
  }

  int calls() const { return static_cast<int>(calls_); }
  void reset_calls() const { calls_ = 0; }

 private:
  Image ground_truth_;
  Image field_;
  std::vector<double> amplitudes_;
  mutable std::size_t calls_ = 0;
};

// ---------------------------------------------------------------------------
// Reference trainable restorer: a 3-layer convolutional residual network on
// the [0,1]-normalized HU window, conditioned on the severity level by a
// learned per-level bias added to the first layer's channels.
// ---------------------------------------------------------------------------

struct RestorerArch {
  int channels = 16;
  int levels = 1 + static_cast<int>(SeverityMap::defaults().views_per_level.size());
  int kernel = 3;

  int taps() const { return kernel * kernel; }
  int conv1_w_count() const { return channels * taps(); }
  int conv1_b_count() const { return channels; }
  int level_count() const { return levels * channels; }
  int conv2_w_count() const { return channels * channels * taps(); }
  int conv2_b_count() const { return channels; }
  int conv3_w_count() const { return channels * taps(); }
  int conv3_b_count() const { return 1; }

  int conv1_w_off() const { return 0; }
  int conv1_b_off() const { return conv1_w_off() + conv1_w_count(); }
  int level_off() const { return conv1_b_off() + conv1_b_count(); }
  int conv2_w_off() const { return level_off() + level_count(); }
  int conv2_b_off() const { return conv2_w_off() + conv2_w_count(); }
  int conv3_w_off() const { return conv2_b_off() + conv2_b_count(); }
  int conv3_b_off() const { return conv3_w_off() + conv3_w_count(); }
  int param_count() const { return conv3_b_off() + conv3_b_count(); }

  void validate() const {
    if (channels < 1 || levels < 1 || kernel < 1 || kernel % 2 == 0)
      throw ConfigError("restorer: invalid architecture");
  }

  bool operator==(const RestorerArch& o) const {
    return channels == o.channels && levels == o.levels && kernel == o.kernel;
  }
};

struct RestorerState {
  RestorerArch arch;
  Eigen::VectorXd theta;

  void validate() const {
    arch.validate();
    if (theta.size() != arch.param_count())
      throw ConfigError("restorer: parameter count does not match architecture");
    if (!theta.allFinite())
      throw NumericError("restorer: non-finite parameters");
  }
};

/// Random first/middle layers (He-scaled), zero final layer so the network is
/// exactly the identity map at initialization.
inline RestorerState init_reference_restorer(std::uint64_t seed,
                                             RestorerArch arch = {}) {
  arch.validate();
  RestorerState s;
  s.arch = arch;
  s.theta = Eigen::VectorXd::Zero(arch.param_count());
  RandomStream rng(seed);
  const double s1 = std::sqrt(2.0 / arch.taps());
  for (int i = 0; i < arch.conv1_w_count(); ++i)
    s.theta(arch.conv1_w_off() + i) = s1 * rng.normal();
  const double s2 = std::sqrt(2.0 / (arch.taps() * arch.channels));
  for (int i = 0; i < arch.conv2_w_count(); ++i)
    s.theta(arch.conv2_w_off() + i) = s2 * rng.normal();
  return s;
}

namespace detail {

/// dst(r,c) += w * src(r+dy, c+dx) over the in-range region (zero padding).
inline void add_shifted(Eigen::ArrayXXd& dst, const Eigen::ArrayXXd& src,
                        int dy, int dx, double w) {
  const int h = static_cast<int>(dst.rows());
  const int wd = static_cast<int>(dst.cols());
  const int r0 = std::max(0, -dy);
  const int r1 = std::min(h, h - dy);
  const int c0 = std::max(0, -dx);
  const int c1 = std::min(wd, wd - dx);
  if (r1 <= r0 || c1 <= c0)
    return;
  dst.block(r0, c0, r1 - r0, c1 - c0) +=
      w * src.block(r0 + dy, c0 + dx, r1 - r0, c1 - c0);
}

/// sum_{r,c} a(r,c) * b(r+dy, c+dx) over the in-range region.
inline double dot_shifted(const Eigen::ArrayXXd& a, const Eigen::ArrayXXd& b,
                          int dy, int dx) {
  const int h = static_cast<int>(a.rows());
  const int wd = static_cast<int>(a.cols());
  const int r0 = std::max(0, -dy);
  const int r1 = std::min(h, h - dy);
  const int c0 = std::max(0, -dx);
  const int c1 = std::min(wd, wd - dx);
  if (r1 <= r0 || c1 <= c0)
    return 0.0;
  return (a.block(r0, c0, r1 - r0, c1 - c0) *
          b.block(r0 + dy, c0 + dx, r1 - r0, c1 - c0))
      .sum();
}

}  // namespace detail

/// Intermediate activations kept for the backward pass.
struct NetCache {
  Eigen::ArrayXXd u;
  std::vector<Eigen::ArrayXXd> z1, a1, z2, a2;
  Eigen::ArrayXXd y;
};

/// Forward pass in normalized units: y = u + f_theta(u, t).
inline Eigen::ArrayXXd reference_forward(const RestorerState& state,
                                         const Eigen::ArrayXXd& u, int t,
                                         NetCache* cache = nullptr) {
  state.validate();
  const RestorerArch& a = state.arch;
  if (t < 0 || t >= a.levels)
    throw ConfigError("restorer: severity level out of range");
  const int C = a.channels;
  const int K = a.kernel;
  const int half = K / 2;
  const Eigen::VectorXd& th = state.theta;

  std::vector<Eigen::ArrayXXd> z1(C), a1(C), z2(C), a2(C);
  for (int o = 0; o < C; ++o) {
    Eigen::ArrayXXd acc = Eigen::ArrayXXd::Zero(u.rows(), u.cols());
    for (int ky = 0; ky < K; ++ky)
      for (int kx = 0; kx < K; ++kx)
        detail::add_shifted(acc, u, ky - half, kx - half,
                            th(a.conv1_w_off() + o * a.taps() + ky * K + kx));
    acc += th(a.conv1_b_off() + o) + th(a.level_off() + t * C + o);
    z1[o] = acc;
    a1[o] = acc.max(0.0);
  }
  for (int o = 0; o < C; ++o) {
    Eigen::ArrayXXd acc = Eigen::ArrayXXd::Zero(u.rows(), u.cols());
    for (int i = 0; i < C; ++i)
      for (int ky = 0; ky < K; ++ky)
        for (int kx = 0; kx < K; ++kx)
          detail::add_shifted(
              acc, a1[i], ky - half, kx - half,
              th(a.conv2_w_off() + (o * C + i) * a.taps() + ky * K + kx));
    acc += th(a.conv2_b_off() + o);
    z2[o] = acc;
    a2[o] = acc.max(0.0);
  }
  Eigen::ArrayXXd r = Eigen::ArrayXXd::Zero(u.rows(), u.cols());
  for (int i = 0; i < C; ++i)
    for (int ky = 0; ky < K; ++ky)
      for (int kx = 0; kx < K; ++kx)
        detail::add_shifted(r, a2[i], ky - half, kx - half,
                            th(a.conv3_w_off() + i * a.taps() + ky * K + kx));
  r += th(a.conv3_b_off());
  Eigen::ArrayXXd y = u + r;

  if (cache) {
    cache->u = u;
    cache->z1 = std::move(z1);
    cache->a1 = std::move(a1);
    cache->z2 = std::move(z2);
    cache->a2 = std::move(a2);
    cache->y = y;
  }
  return y;
}

/// Accumulates dL/dtheta into `grad` given dL/dy from a forward pass with the
/// same state, level, and cache.
inline void reference_backward(const RestorerState& state, const NetCache& cc,
                               int t, const Eigen::ArrayXXd& dy,
                               Eigen::VectorXd& grad) {
  const RestorerArch& a = state.arch;
  if (grad.size() != a.param_count())
    throw ConfigError("restorer: gradient size mismatch");
  const int C = a.channels;
  const int K = a.kernel;
  const int half = K / 2;
  const Eigen::VectorXd& th = state.theta;

  // Final layer: y = u + conv3(a2) + b3.
  grad(a.conv3_b_off()) += dy.sum();
  std::vector<Eigen::ArrayXXd> da2(C);
  for (int i = 0; i < C; ++i)
    da2[i] = Eigen::ArrayXXd::Zero(dy.rows(), dy.cols());
  for (int i = 0; i < C; ++i) {
    for (int ky = 0; ky < K; ++ky)
      for (int kx = 0; kx < K; ++kx) {
        const int dyy = ky - half;
        const int dxx = kx - half;
        grad(a.conv3_w_off() + i * a.taps() + ky * K + kx) +=
            detail::dot_shifted(dy, cc.a2[i], dyy, dxx);
        detail::add_shifted(da2[i], dy, -dyy, -dxx,
                            th(a.conv3_w_off() + i * a.taps() + ky * K + kx));
      }
  }

  std::vector<Eigen::ArrayXXd> dz2(C);
  for (int o = 0; o < C; ++o)
    dz2[o] = da2[o] * (cc.z2[o] > 0.0).cast<double>();

  std::vector<Eigen::ArrayXXd> da1(C);
  for (int i = 0; i < C; ++i)
    da1[i] = Eigen::ArrayXXd::Zero(dy.rows(), dy.cols());
  for (int o = 0; o < C; ++o) {
    grad(a.conv2_b_off() + o) += dz2[o].sum();
    for (int i = 0; i < C; ++i)
      for (int ky = 0; ky < K; ++ky)
        for (int kx = 0; kx < K; ++kx) {
          const int dyy = ky - half;
          const int dxx = kx - half;
          const int w_idx = a.conv2_w_off() + (o * C + i) * a.taps() + ky * K + kx;
          grad(w_idx) += detail::dot_shifted(dz2[o], cc.a1[i], dyy, dxx);
          detail::add_shifted(da1[i], dz2[o], -dyy, -dxx, th(w_idx));
        }
  }

  for (int o = 0; o < C; ++o) {
    const Eigen::ArrayXXd dz1 = da1[o] * (cc.z1[o] > 0.0).cast<double>();
    const double bias_grad = dz1.sum();
    grad(a.conv1_b_off() + o) += bias_grad;
    grad(a.level_off() + t * C + o) += bias_grad;
    for (int ky = 0; ky < K; ++ky)
      for (int kx = 0; kx < K; ++kx)
        grad(a.conv1_w_off() + o * a.taps() + ky * K + kx) +=
            detail::dot_shifted(dz1, cc.u, ky - half, kx - half);
  }
}

template <typename Scalar>
Eigen::ArrayXXd normalize_hu_plane(const ImageT<Scalar>& img) {
  return (img.data.template cast<double>() - kHuWindowLo) / kHuWindowRange;
}

/// Run the reference network on an HU image.
inline Image reference_restore(const RestorerState& state, const Image& x,
                               int t) {
  const Eigen::ArrayXXd y = reference_forward(state, normalize_hu_plane(x), t);
  if (!y.allFinite())
    throw NumericError("restorer: non-finite activations");
  Image out(x.height(), x.width(), x.pixel_size);
  out.data = (y * kHuWindowRange + kHuWindowLo).cast<float>();
  return out;
}

class ReferenceRestorer final : public Restorer {
 public:
  explicit ReferenceRestorer(RestorerState state) : state_(std::move(state)) {
    state_.validate();
  }
  Image restore(const Image& x, int t) const override {
    return reference_restore(state_, x, t);
  }
  const RestorerState& state() const { return state_; }

 private:
  RestorerState state_;
};

}  // namespace svct
