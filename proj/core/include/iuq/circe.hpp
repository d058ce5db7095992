#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "iuq/stats.hpp"
#include "iuq/types.hpp"

namespace iuq {

/// Change-of-variable from the zero-nominal parameter theta to the
/// dimensionless multiplier p: additive gives p = 1 + theta, exponential
/// gives p = exp(theta). Both satisfy f(0) = 1 and f'(0) = 1.
double change_of_variable(ParamTransform kind, double theta);

struct CirceOptions {
  bool estimate_bias = false;
  int max_iter = 10000;
  double tol = 1e-8;            // relative, on the Sigma_theta diagonal and b
  Eigen::VectorXd sigma0_diag;  // starting diagonal; empty = identity
};

struct CirceInputs {
  Eigen::VectorXd residuals;      // d_j = yE_j - yM_j
  Eigen::MatrixXd sensitivities;  // J x I, dyM_j / dtheta_i
  Eigen::VectorXd noise_vars;     // eps_j^2; may be all zero
  CirceOptions options;

  void validate() const;
};

struct CirceEstimate {
  GaussianParamSpec spec;  // mean = b, var = Sigma_theta diagonal
  int iterations = 0;
  bool converged = false;
  std::vector<double> loglik_trace;  // per-iteration log-likelihood
  std::vector<std::string> warnings;

  // Filled by iterative_circe only.
  int outer_iterations = 0;
  std::vector<Eigen::VectorXd> outer_bias_trace;
};

/// Covariance-only estimation with the bias fixed at zero. Starts from the
/// identity (or options.sigma0_diag) and iterates the E-M covariance update
/// until the diagonal stabilizes. Returns the diagonal Sigma_theta.
CirceEstimate circe_no_bias(const CirceInputs& in);

/// Joint (b, Sigma_theta) estimation: each sweep updates the covariance via
/// the E-M step at the current bias, then solves the normal equations for
/// the new bias. Converged when both stabilize below tol.
CirceEstimate circe_with_bias(const CirceInputs& in);

/// Log-likelihood of the residuals under (b, sigma_diag):
/// sum_j log N(d_j; s_j.b, eps_j^2 + s_j' Sigma s_j).
double circe_loglik(const Eigen::VectorXd& residuals, const Eigen::MatrixXd& S,
                    const Eigen::VectorXd& noise_vars, const Eigen::VectorXd& b,
                    const Eigen::VectorXd& sigma_diag);

struct IterativeCirceConfig {
  int outer_max = 10;
  double outer_tol = 1e-4;  // on the bias increment, absolute
  double rel_step = 1e-4;   // finite-difference step for sensitivities
  CirceOptions em;          // inner E-M options (estimate_bias forced on)
};

/// Re-expands the linearization at the current bias estimate and reruns
/// standard CIRCE until the incremental bias is small. Running past
/// outer_max yields a non-converged result, not an error.
CirceEstimate iterative_circe(const ModelSpec& model,
                              const std::vector<ExperimentRecord>& experiments,
                              const CalibrationVector& theta_start,
                              const IterativeCirceConfig& config);

/// One experiment's contribution to the MLE/MAP likelihood:
/// residual ~ N(S mu, S Sigma_theta S' + noise_cov).
struct MleMapBlock {
  Eigen::VectorXd residual;
  Eigen::MatrixXd sensitivity;
  Eigen::MatrixXd noise_cov;
};

/// Conjugate prior: independent normal on each mean component and inverse
/// gamma on each variance.
struct ConjugatePrior {
  Eigen::VectorXd mean_loc;    // normal prior location for mu
  Eigen::VectorXd mean_var;    // normal prior variance for mu
  Eigen::VectorXd var_shape;   // inverse-gamma a per parameter
  Eigen::VectorXd var_scale;   // inverse-gamma b per parameter
};

/// E-M maximization of the summed block log-likelihood over (mu, Sigma_theta
/// diagonal); with a prior the target is the log-posterior (MAP), without it
/// the plain likelihood (MLE).
CirceEstimate mle_map_estimate(const std::vector<MleMapBlock>& blocks,
                               const std::optional<ConjugatePrior>& prior,
                               const CirceOptions& options = {});

struct LinearityAssessment {
  double max_relative_deviation = 0.0;  // model vs tangent plane at b +- 2 sigma
  bool advisory = false;                // true above the 5% threshold
};

/// Evaluate the model at b +- 2 sigma per parameter (mapped through the
/// spec's transform) and compare against the tangent-plane prediction.
/// Deviations above 5% of the output scale flag a re-run advisory.
LinearityAssessment assess_linearity(const ModelSpec& model, const DesignPoint& x,
                                     const GaussianParamSpec& estimate,
                                     double rel_step = 1e-4);

/// Pick the change-of-variable whose 95% interval yields the smaller
/// linearity deviation; ties go to additive.
ParamTransform select_transform(const ModelSpec& model, const DesignPoint& x,
                                const GaussianParamSpec& estimate, double rel_step = 1e-4);

}  // namespace iuq
