#pragma once

#include <Eigen/Dense>

#include "svct/common.hpp"
#include "svct/geometry.hpp"

namespace svct {

/// Stack of fan-beam line integrals, one row per gantry angle.
/// Values are water-relative attenuation-lengths (dimensionless).
template <typename Scalar>
struct SinogramT {
  using Plane = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  FanGeometry geometry;
  Plane data;  // num_views x num_detectors

  SinogramT() = default;
  explicit SinogramT(FanGeometry geom)
      : geometry(std::move(geom)),
        data(Plane::Zero(geometry.num_views(), geometry.num_detectors)) {}

  int num_views() const { return static_cast<int>(data.rows()); }
  int num_detectors() const { return static_cast<int>(data.cols()); }

  void validate() const {
    geometry.validate();
    if (num_views() != geometry.num_views() ||
        num_detectors() != geometry.num_detectors)
      throw DataError("sinogram: data shape inconsistent with geometry");
    if (!data.allFinite())
      throw NumericError("sinogram: non-finite samples");
  }
};

using Sinogram = SinogramT<float>;

}  // namespace svct
