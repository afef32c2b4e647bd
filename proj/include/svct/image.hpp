#pragma once

#include <Eigen/Dense>

#include "svct/common.hpp"

namespace svct {

/// 2-D scalar field in Hounsfield units on a square-pixel grid.
///
/// data(row, col) is stored row-major; row 0 is the top of the image and the
/// world y axis points up, so world coordinates of a pixel center are
///   x = (col - (width-1)/2) * pixel_size
///   y = ((height-1)/2 - row) * pixel_size
template <typename Scalar>
struct ImageT {
  using Plane = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  Plane data;
  double pixel_size = 1.0;  // cm per pixel

  ImageT() = default;
  ImageT(int height, int width, double pixel_size_cm)
      : data(Plane::Zero(height, width)), pixel_size(pixel_size_cm) {}

  int width() const { return static_cast<int>(data.cols()); }
  int height() const { return static_cast<int>(data.rows()); }

  /// Circumradius of the pixel grid in cm; any grid content lies inside it.
  double support_radius() const {
    return 0.5 * std::hypot(width() * pixel_size, height() * pixel_size);
  }

  bool same_grid(const ImageT& other) const {
    return width() == other.width() && height() == other.height() &&
           pixel_size == other.pixel_size;
  }

  void validate() const {
    if (width() <= 0 || height() <= 0)
      throw DataError("image: empty grid");
    if (pixel_size <= 0.0)
      throw DataError("image: pixel size must be positive");
    if (!data.allFinite())
      throw NumericError("image: non-finite pixel values");
  }
};

using Image = ImageT<float>;

template <typename Scalar>
void require_same_grid(const ImageT<Scalar>& a, const ImageT<Scalar>& b,
                       const char* what) {
  if (!a.same_grid(b))
    throw DataError(std::string(what) + ": image grids do not match");
}

template <typename Scalar>
void require_same_shape(const ImageT<Scalar>& a, const ImageT<Scalar>& b,
                        const char* what) {
  if (a.width() != b.width() || a.height() != b.height())
    throw DataError(std::string(what) + ": image dimensions do not match");
}

}  // namespace svct
