#pragma once

#include <Eigen/Core>

namespace mpcc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Infinity-norm residuals of the KKT system at a primal-dual point.
struct KktResidual {
  double stationarity = 0.0;
  double feasibility = 0.0;
  double complementarity = 0.0;

  double max() const {
    return std::max(stationarity, std::max(feasibility, complementarity));
  }
};

}  // namespace mpcc
