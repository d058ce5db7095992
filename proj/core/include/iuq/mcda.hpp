#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "iuq/mcmc.hpp"
#include "iuq/stats.hpp"
#include "iuq/types.hpp"

namespace iuq {

enum class McdaRoute { Deterministic, Probabilistic };

struct McdaPosterior {
  Eigen::VectorXd theta_post;
  Eigen::MatrixXd sigma_theta_post;
  Eigen::MatrixXd sigma_y_post;
  double alpha = 1.0;
  McdaRoute route = McdaRoute::Deterministic;
  std::optional<McmcChain> chain;
  std::vector<std::string> warnings;
};

struct LinearityReport {
  Eigen::VectorXd r_squared;  // per QoI, tangent-plane fit over probe points
  McdaRoute route = McdaRoute::Deterministic;
  double threshold = 0.99;
};

/// Probe the model within theta_prior +/- 2 sigma and regress each QoI on the
/// tangent plane from finite-difference sensitivities; the deterministic
/// route is taken only when every QoI's R^2 clears the threshold.
LinearityReport linearity_test(const ModelSpec& model, const DesignPoint& x,
                               const CalibrationVector& theta_prior,
                               const Eigen::MatrixXd& sigma_theta_prior, int n_probe,
                               double threshold = 0.99, std::uint64_t seed = 777);

/// Regularized linear update: gain
///   K = (S' Se^-1 S + a^2 St^-1)^-1 S' Se^-1,
/// posterior mean theta_prior + K d, posterior parameter covariance by the
/// explicit expansion ignoring parameter-QoI cross terms. Pure algebra; the
/// QoI covariance is left for the caller to sandwich with updated
/// sensitivities.
struct McdaUpdate {
  Eigen::VectorXd theta_post;
  Eigen::MatrixXd sigma_theta_post;
  Eigen::MatrixXd gain;
};

McdaUpdate mcda_update(const Eigen::VectorXd& residual, const Eigen::MatrixXd& S,
                       const Eigen::VectorXd& theta_prior,
                       const Eigen::MatrixXd& sigma_theta_prior,
                       const Eigen::MatrixXd& sigma_eps, double alpha);

/// Full deterministic route: update, then recompute sensitivities at the
/// posterior mean and sandwich the QoI covariance.
McdaPosterior mcda_deterministic(const ModelSpec& model, const DesignPoint& x,
                                 const CalibrationVector& theta_prior,
                                 const Eigen::MatrixXd& sigma_theta_prior,
                                 const Eigen::MatrixXd& sigma_eps,
                                 const Eigen::VectorXd& y_obs, double alpha);

/// L-curve selection: mismatch and regularization cost terms per alpha;
/// alpha* sits at the maximum discrete curvature of the log-log curve. A flat
/// curve falls back to alpha* = 1 with a warning.
struct LCurveResult {
  double alpha_star = 1.0;
  Eigen::VectorXd alphas, mismatch, regularization;
  std::vector<std::string> warnings;
};

LCurveResult select_alpha_lcurve(const Eigen::VectorXd& residual, const Eigen::MatrixXd& S,
                                 const Eigen::VectorXd& theta_prior,
                                 const Eigen::MatrixXd& sigma_theta_prior,
                                 const Eigen::MatrixXd& sigma_eps,
                                 const Eigen::VectorXd& alpha_grid);

/// Probabilistic route: MCMC over the Gaussian prior x Gaussian likelihood
/// posterior (full density, log-determinant terms included), no bias term.
McdaPosterior mcda_probabilistic(const ModelSpec& model,
                                 const std::vector<ExperimentRecord>& experiments,
                                 const CalibrationVector& theta_prior,
                                 const Eigen::MatrixXd& sigma_theta_prior,
                                 const McmcConfig& mcmc);

}  // namespace iuq
