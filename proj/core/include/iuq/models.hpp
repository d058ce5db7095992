#pragma once

#include <Eigen/Dense>

#include "iuq/types.hpp"

namespace iuq {

/// y = S theta + B x + c. Calibration nominal is the zero vector.
ModelSpec make_affine_model(Eigen::MatrixXd S, Eigen::MatrixXd B, Eigen::VectorXd c);

/// Convenience: y = S theta (B = 0, c = 0).
ModelSpec make_linear_model(Eigen::MatrixXd S);

/// Scalar y = theta1 * exp(theta2 * x), x the single design value.
/// Nominal is (1, 1).
ModelSpec make_scalar_exp_model();

/// Reflood-like heater rod model: cladding temperature trace T(t) at a
/// measurement elevation, driven by two dimensionless multipliers with
/// nominal 1: theta1 scales the pre-quench wall heat transfer coefficient,
/// theta2 scales the quench front speed. The design point is
/// (elevation m, initial cladding temperature K). Fixed-step RK4, h = 0.05 s,
/// output every 4 s over 0..400 s (101 samples).
ModelSpec make_reflood_model();

}  // namespace iuq
