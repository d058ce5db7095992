#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "iuq/gp.hpp"
#include "iuq/mcmc.hpp"
#include "iuq/stats.hpp"
#include "iuq/types.hpp"

namespace iuq {

/// Independent per-parameter prior: uniform(lo, hi) or normal(mean, sd).
struct PriorComponent {
  enum class Kind { Uniform, Normal };
  Kind kind = Kind::Normal;
  double a = 0.0;  // lo or mean
  double b = 1.0;  // hi or sd
};

struct PriorSpec {
  std::vector<PriorComponent> params;

  void validate() const;
  Eigen::Index size() const { return static_cast<Eigen::Index>(params.size()); }
  double log_pdf(const Eigen::VectorXd& theta) const;  // -inf outside support
  Eigen::VectorXd mean() const;
  Eigen::VectorXd sd() const;
  /// Latin-hypercube style stratified draws over the prior support
  /// (uniforms span [lo, hi]; normals span mean +/- 3 sd).
  Eigen::MatrixXd space_filling(int n, RngStream rng) const;
};

/// Per-experiment bias term: GPs over the design space, one per QoI slot,
/// trained on residuals at a reference calibration point.
struct BiasGpSet {
  std::vector<GpModel> per_qoi;
  std::vector<std::size_t> train_idx, heldout_idx;
  Eigen::MatrixXd design_lo_hi;  // 2 x dim_x training range, for extrapolation flags
};

BiasGpSet train_bias_gp(const ModelSpec& model,
                        const std::vector<ExperimentRecord>& experiments,
                        const CalibrationVector& theta_ref, double split_fraction);

/// Per-experiment surrogate: GPs over theta, one per QoI slot.
struct SurrogateSet {
  std::vector<std::vector<GpModel>> per_experiment;  // [experiment][qoi]
  double validation_rmse = 0.0;
  double output_range = 0.0;
};

/// theta -> (mean prediction, code-uncertainty variance) for one experiment.
using Predictor = std::function<void(const Eigen::VectorXd& theta, std::size_t experiment,
                                     Eigen::VectorXd& mean, Eigen::VectorXd& code_var)>;

/// Assemble the log posterior: log prior + sum_e log N(yE - m(theta) - delta;
/// 0, Sigma_exp + Sigma_bias + Sigma_code). The bias mean/variance are frozen
/// per experiment; the code variance follows the predictor.
std::function<double(const Eigen::VectorXd&)> build_log_posterior(
    const PriorSpec& prior, const std::vector<ExperimentRecord>& experiments,
    const Predictor& predictor, const BiasGpSet* bias);

struct MbaOptions {
  bool use_surrogate = false;
  bool use_bias = false;
  int surrogate_budget = 0;     // 0 = 10 * parameter count
  double bias_split = 0.8;
  std::optional<Eigen::VectorXd> theta_ref;  // bias reference; default prior mean
  McmcConfig mcmc;
};

struct MbaResult {
  McmcChain chain;
  Eigen::VectorXd mean, sd, ci_lo, ci_hi;  // per-parameter marginals
  Eigen::MatrixXd correlation;
  std::vector<std::string> warnings;
};

/// The modular pipeline: optional surrogate fit over the prior support,
/// optional bias training on a data split, posterior assembly, MCMC, and
/// marginal summaries with equal-tailed 95% credible intervals.
MbaResult mba_iuq(const ModelSpec& model, const std::vector<ExperimentRecord>& experiments,
                  const PriorSpec& prior, const MbaOptions& options);

}  // namespace iuq
