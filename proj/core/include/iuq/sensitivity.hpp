#pragma once

#include "iuq/types.hpp"

namespace iuq {

/// Central differences (y(theta0 + h_i e_i) - y(theta0 - h_i e_i)) / (2 h_i)
/// with h_i = rel_step * max(|theta0_i|, 1).
/// Default rel_step: 1e-4 for smooth analytic models; use 1e-2 for the
/// reflood ODE model (its solver noise floor is higher).
SensitivityMatrix finite_difference_sensitivity(const ModelSpec& model,
                                                const DesignPoint& x,
                                                const CalibrationVector& theta0,
                                                double rel_step = 1e-4);

}  // namespace iuq
