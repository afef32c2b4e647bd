#pragma once

#include <cmath>
#include <vector>

#include "svct/common.hpp"

namespace svct {

/// Equally spaced gantry angles over [0, 2pi), first view anchored at 0.
inline std::vector<double> angle_set(int n_views) {
  if (n_views < 1)
    throw ConfigError("angle_set: need at least one view");
  std::vector<double> angles(static_cast<std::size_t>(n_views));
  for (int i = 0; i < n_views; ++i)
    angles[static_cast<std::size_t>(i)] = (2.0 * M_PI * i) / n_views;
  return angles;
}

/// Fan-beam scanner description with a flat, equally spaced detector.
///
/// The source rotates on a circle of radius source_to_isocenter around the
/// origin; at gantry angle beta it sits at S = r_so * (cos b, sin b). The flat
/// detector is perpendicular to the central ray at distance source_to_detector
/// from the source, with element centers at u_i = (i - (N-1)/2) * spacing
/// along (-sin b, cos b).
struct FanGeometry {
  double source_to_detector = 0.0;   // cm
  double source_to_isocenter = 0.0;  // cm
  int num_detectors = 0;
  double detector_spacing = 0.0;  // cm, on the physical detector
  std::vector<double> angles;     // radians, strictly increasing in [0, 2pi)

  int num_views() const { return static_cast<int>(angles.size()); }

  /// Offset of detector element i from the central ray, cm.
  double detector_offset(int i) const {
    return (i - 0.5 * (num_detectors - 1)) * detector_spacing;
  }

  /// Half fan angle subtended by the detector edges.
  double half_fan_angle() const {
    const double edge = 0.5 * num_detectors * detector_spacing;
    return std::atan2(edge, source_to_detector);
  }

  /// Radius of the largest isocentered circle every view sees completely.
  double covered_radius() const {
    return source_to_isocenter * std::sin(half_fan_angle());
  }

  void validate() const {
    if (num_detectors <= 0)
      throw ConfigError("geometry: num_detectors must be positive");
    if (detector_spacing <= 0.0)
      throw ConfigError("geometry: detector_spacing must be positive");
    if (!(source_to_isocenter > 0.0) ||
        !(source_to_isocenter < source_to_detector))
      throw ConfigError("geometry: need 0 < source_to_isocenter < source_to_detector");
    if (angles.empty())
      throw ConfigError("geometry: empty angle set");
    double prev = -1.0;
    for (double a : angles) {
      if (!(a >= 0.0) || !(a < 2.0 * M_PI))
        throw ConfigError("geometry: angles must lie in [0, 2pi)");
      if (a <= prev)
        throw ConfigError("geometry: angles must be strictly increasing");
      prev = a;
    }
  }

  /// Coverage precondition: the fan subtends a support circle of the given
  /// radius from every view.
  void require_covers(double support_radius_cm) const {
    if (support_radius_cm >= source_to_isocenter)
      throw ConfigError("geometry: support circle reaches the source orbit");
    if (covered_radius() + 1e-9 < support_radius_cm)
      throw ConfigError("geometry: detector does not cover the image support circle");
  }
};

/// Geometry template without angles; detector_spacing <= 0 means "derive from
/// the grid so the fan covers its support circle".
struct FanSpec {
  double source_to_detector = 59.5;   // cm
  double source_to_isocenter = 42.5;  // cm
  int num_detectors = 672;
  double detector_spacing = 0.0;  // <= 0: auto

  void validate() const {
    if (num_detectors <= 0)
      throw ConfigError("geometry: num_detectors must be positive");
    if (!(source_to_isocenter > 0.0) ||
        !(source_to_isocenter < source_to_detector))
      throw ConfigError("geometry: need 0 < source_to_isocenter < source_to_detector");
  }

  /// Spacing that makes the detector cover a support circle of radius r with
  /// a small margin.
  double spacing_for_support(double support_radius_cm) const {
    if (support_radius_cm >= source_to_isocenter)
      throw ConfigError("geometry: support circle reaches the source orbit");
    const double gamma = std::asin(support_radius_cm / source_to_isocenter);
    const double half_width = 1.02 * source_to_detector * std::tan(gamma);
    return 2.0 * half_width / num_detectors;
  }

  FanGeometry with_angles(std::vector<double> angles,
                          double support_radius_cm) const {
    FanGeometry g;
    g.source_to_detector = source_to_detector;
    g.source_to_isocenter = source_to_isocenter;
    g.num_detectors = num_detectors;
    g.detector_spacing = detector_spacing > 0.0
                             ? detector_spacing
                             : spacing_for_support(support_radius_cm);
    g.angles = std::move(angles);
    g.validate();
    g.require_covers(support_radius_cm);
    return g;
  }

  FanGeometry with_views(int n_views, double support_radius_cm) const {
    return with_angles(angle_set(n_views), support_radius_cm);
  }
};

}  // namespace svct
