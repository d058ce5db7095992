#pragma once

#include <Eigen/Dense>
#include <functional>

namespace iuq {

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Derivative-free simplex minimizer for small smooth problems.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0, double initial_step = 0.5,
                             double tol = 1e-10, int max_iter = 2000);

}  // namespace iuq
