#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "iuq/rng.hpp"
#include "iuq/types.hpp"

namespace iuq {

struct McmcConfig {
  int length = 20000;           // total draws including burn-in
  double burn_in = 0.2;         // fraction discarded, in [0, 0.9]
  Eigen::MatrixXd proposal_cov; // empty = 0.1^2 * I
  bool adapt = true;            // adaptive-Metropolis covariance tracking
  int adapt_start = 1000;       // draws before adaptation kicks in
  RngStream rng{12345, 0};

  void validate() const;
};

struct McmcChain {
  Eigen::MatrixXd samples;  // post-burn-in, one row per draw
  double acceptance_rate = 0.0;
  Eigen::VectorXd ess;      // per-parameter effective sample size
  std::vector<double> log_density_trace;
  int nonfinite_proposals = 0;
  std::vector<std::string> warnings;
};

/// Random-walk Metropolis-Hastings with Gaussian proposals. With adaptation
/// on, the proposal covariance follows the empirical chain covariance scaled
/// by 2.38^2 / d once adapt_start draws have accumulated. Fully reproducible
/// from the config's rng stream.
McmcChain mh_sample(const std::function<double(const Eigen::VectorXd&)>& log_target,
                    const Eigen::VectorXd& init, const McmcConfig& config);

struct McmcDiagnostics {
  double acceptance_rate = 0.0;
  Eigen::VectorXd ess;
  Eigen::VectorXd split_half_z;  // mean discrepancy in MC-standard-error units
  std::vector<std::string> warnings;
};

/// Initial-positive-sequence ESS estimate from the sample autocorrelation
/// (truncated at the first negative lag), plus a split-half mean check.
McmcDiagnostics diagnostics(const McmcChain& chain);

/// ESS of a single series; exposed for reuse in tests.
double effective_sample_size(const Eigen::VectorXd& series);

}  // namespace iuq
