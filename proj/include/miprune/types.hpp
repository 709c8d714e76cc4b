#pragma once

#include <Eigen/Dense>

namespace miprune {

using Index = Eigen::Index;

// Row-major dense matrices: matches the row-major on-disk layouts and keeps
// per-sample rows contiguous.
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatF = Mat<float>;
using MatD = Mat<double>;
using VecF = Vec<float>;
using VecD = Vec<double>;
using VecI = Vec<int>;

}  // namespace miprune
