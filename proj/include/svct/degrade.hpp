#pragma once

#include "svct/common.hpp"
#include "svct/fbp.hpp"
#include "svct/geometry.hpp"
#include "svct/image.hpp"
#include "svct/projector.hpp"
#include "svct/severity.hpp"

namespace svct {

/// Everything needed to evaluate the angular-subsampling degradation:
/// a fan template (angles filled in per level), the severity map, and the
/// image grid the operator is defined on.
struct DegradeConfig {
  FanSpec fan{};
  SeverityMap severity = SeverityMap::defaults();
  int width = 0;
  int height = 0;
  double pixel_size = 0.0;

  void validate() const {
    fan.validate();
    severity.validate();
    if (width <= 0 || height <= 0 || pixel_size <= 0.0)
      throw ConfigError("degrade: invalid image grid spec");
  }

  double support_radius() const {
    return 0.5 * pixel_size * std::hypot(static_cast<double>(width),
                                         static_cast<double>(height));
  }

  /// Geometry actually used for an n-view scan of this grid.
  FanGeometry geometry_for_views(int n_views) const {
    return fan.with_views(n_views, support_radius());
  }

  static DegradeConfig for_grid(int width, int height, double pixel_size,
                                FanSpec fan = {},
                                SeverityMap severity = SeverityMap::defaults()) {
    DegradeConfig cfg;
    cfg.fan = fan;
    cfg.severity = std::move(severity);
    cfg.width = width;
    cfg.height = height;
    cfg.pixel_size = pixel_size;
    cfg.validate();
    return cfg;
  }

  template <typename Scalar>
  static DegradeConfig for_image(const ImageT<Scalar>& img, FanSpec fan = {},
                                 SeverityMap severity = SeverityMap::defaults()) {
    return for_grid(img.width(), img.height(), img.pixel_size, fan,
                    std::move(severity));
  }
};

template <typename Scalar>
void require_matches_grid(const ImageT<Scalar>& img, const DegradeConfig& cfg) {
  if (img.width() != cfg.width || img.height() != cfg.height ||
      img.pixel_size != cfg.pixel_size)
    throw ConfigError("degrade: image does not match configured grid");
}

/// Reconstruct from an n-view scan of `x` on its own grid. The building block
/// of `degrade`, exposed for view-count overrides.
template <typename Scalar>
ImageT<Scalar> resample_through_views(const ImageT<Scalar>& x, int n_views,
                                      const DegradeConfig& cfg) {
  require_matches_grid(x, cfg);
  const FanGeometry geom = cfg.geometry_for_views(n_views);
  const SinogramT<Scalar> sino = forward_project(x, geom);
  return fbp_reconstruct(sino, cfg.width, cfg.height, cfg.pixel_size);
}

/// Deterministic severity-t degradation: project at the level's view count and
/// reconstruct. Level 0 is the identity by definition.
template <typename Scalar>
ImageT<Scalar> degrade(const ImageT<Scalar>& x, int t,
                       const DegradeConfig& cfg) {
  cfg.validate();
  require_matches_grid(x, cfg);
  const int n_views = cfg.severity.views_at_level(t);  // throws on bad t
  if (n_views == kIdentityViews)
    return x;
  return resample_through_views(x, n_views, cfg);
}

}  // namespace svct
