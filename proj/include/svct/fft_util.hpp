#pragma once

#include <complex>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace svct {

inline int next_pow2_at_least(int n) {
  int m = 1;
  while (m < n)
    m <<= 1;
  return m;
}

/// Forward complex FFT of each row, then each column, in place.
inline void fft2_inplace(
    Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic>& grid) {
  Eigen::FFT<double> fft;
  const auto rows = grid.rows();
  const auto cols = grid.cols();
  std::vector<std::complex<double>> in, out;
  for (Eigen::Index r = 0; r < rows; ++r) {
    in.assign(grid.row(r).begin(), grid.row(r).end());
    fft.fwd(out, in);
    for (Eigen::Index c = 0; c < cols; ++c)
      grid(r, c) = out[static_cast<std::size_t>(c)];
  }
  for (Eigen::Index c = 0; c < cols; ++c) {
    in.resize(static_cast<std::size_t>(rows));
    for (Eigen::Index r = 0; r < rows; ++r)
      in[static_cast<std::size_t>(r)] = grid(r, c);
    fft.fwd(out, in);
    for (Eigen::Index r = 0; r < rows; ++r)
      grid(r, c) = out[static_cast<std::size_t>(r)];
  }
}

}  // namespace svct
