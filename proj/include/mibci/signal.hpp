#pragma once

#include <Eigen/Dense>

namespace mibci {

/// channels x samples, each channel contiguous in memory.
using Signal = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

}  // namespace mibci
