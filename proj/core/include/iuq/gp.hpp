#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "iuq/types.hpp"

namespace iuq {

/// Power-exponential kernel hyperparameters:
///   k(a, b) = sigma2 * exp(-sum_i (|a_i - b_i| / omega_i)^p_i)
struct GpHyper {
  double beta = 0.0;        // constant-mean coefficient (profiled)
  double sigma2 = 1.0;      // process variance (profiled)
  Eigen::VectorXd omega;    // length-scales, > 0
  Eigen::VectorXd p;        // roughness exponents in (0, 2]
};

struct GpConfig {
  int n_starts = 5;           // multi-start count for the length-scale search
  double nugget_rel = 1e-8;   // relative diagonal jitter on the correlation
  double dedup_tol = 1e-10;   // duplicate-input rejection tolerance
  Eigen::VectorXd p;          // roughness per input; empty = all 2 (smooth)
};

class GpModel {
 public:
  struct Prediction {
    double mean = 0.0;
    double variance = 0.0;
  };

  Prediction predict(const Eigen::VectorXd& point) const;

  const GpHyper& hyper() const { return hyper_; }
  double nugget() const { return nugget_; }
  Eigen::Index input_dim() const { return x_mean_.size(); }
  double loglik() const { return loglik_; }

  friend GpModel gp_fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& outputs,
                        const GpConfig& config);

 private:
  Eigen::MatrixXd xs_;       // standardized training inputs
  Eigen::VectorXd y_;        // raw training outputs
  Eigen::VectorXd x_mean_, x_sd_;
  GpHyper hyper_;
  Eigen::LLT<Eigen::MatrixXd> chol_;  // of the nugget-jittered correlation
  Eigen::VectorXd alpha_;             // R^-1 (y - beta 1)
  double nugget_ = 0.0;
  double loglik_ = 0.0;
  bool constant_ = false;
};

/// Fit a constant-mean GP by maximizing the concentrated marginal
/// log-likelihood over the length-scales (beta and sigma2 are profiled in
/// closed form). Multi-start simplex search; roughness fixed per config.
GpModel gp_fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& outputs,
               const GpConfig& config = {});

}  // namespace iuq
