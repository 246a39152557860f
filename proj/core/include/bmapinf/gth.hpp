#pragma once

#include <Eigen/Dense>

namespace bmapinf {

// Stationary vector of an irreducible generator by Grassmann-Taksar-Heyman
// state reduction. Only off-diagonal entries are read; no subtraction is
// ever performed, so every component comes out positive. The matrix is
// taken by value and destroyed.
Eigen::VectorXd gth_stationary(Eigen::MatrixXd q);

}  // namespace bmapinf
