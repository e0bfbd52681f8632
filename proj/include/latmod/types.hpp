#pragma once

#include <Eigen/Dense>

namespace latmod {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
/// K x n array of samples; one row per time instant, rows contiguous.
using Samples = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace latmod
