#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "iuq/stats.hpp"
#include "iuq/types.hpp"

namespace iuq {

/// How forward-UQ parameter samples are produced.
struct ParamSampler {
  enum class Kind { Gaussian, Uniform, Chain };
  Kind kind = Kind::Gaussian;
  GaussianParamSpec gaussian;   // Kind::Gaussian, mapped through its transform
  Eigen::VectorXd lo, hi;       // Kind::Uniform, direct model-space ranges
  Eigen::MatrixXd chain;        // Kind::Chain, one theta row per draw (model space)

  void validate(Eigen::Index n_params) const;
};

struct PredictionBand {
  DesignPoint design;
  Eigen::VectorXd lo, median, hi;  // 2.5 / 50 / 97.5 percentiles per QoI
  std::optional<Eigen::VectorXd> times;
};

struct FuqResult {
  std::vector<PredictionBand> bands;
  int n_failures = 0;
  int n_samples = 0;
};

/// Sample parameters, evaluate the model at every design, and reduce to
/// percentile bands. Evaluations fan out across `jobs` workers; draws are
/// made up front so results are independent of the worker count. Model
/// failures beyond 1% of samples abort the run.
FuqResult forward_uq(const ModelSpec& model, const ParamSampler& sampler,
                     const std::vector<DesignPoint>& designs, int n_samples,
                     RngStream rng, int jobs = 1);

struct EnvelopeReport {
  std::vector<double> per_design_coverage;  // fraction of data inside the band
  double overall_coverage = 0.0;
  double target = 0.95;
  bool pass = false;
  std::vector<double> mean_band_width;  // per design
};

/// Count data points inside the [lo, hi] band, pointwise across every QoI
/// slot; pass iff the pooled fraction meets the target.
EnvelopeReport envelope_check(const FuqResult& bands,
                              const std::vector<ExperimentRecord>& experiments,
                              double target = 0.95);

struct SampleAdjustOptions {
  int n_samples = 125;
  int max_rounds = 8;
  double expansion = 1.25;  // per-side half-width factor
  double target = 0.95;
  RngStream rng{2024, 0};
  int jobs = 1;
};

struct SampleAdjustRound {
  Eigen::VectorXd lo, hi;
  double coverage = 0.0;
};

struct SampleAdjustResult {
  Eigen::VectorXd lo, hi;  // final ranges
  std::vector<SampleAdjustRound> rounds;
  bool converged = false;
};

/// The empirical loop: uniform sampling over the current ranges, forward UQ,
/// envelope comparison, and directional range expansion where the data
/// escape the band. Ranges only ever grow.
SampleAdjustResult sample_adjust_iuq(const ModelSpec& model,
                                     const std::vector<ExperimentRecord>& experiments,
                                     Eigen::VectorXd lo, Eigen::VectorXd hi,
                                     const SampleAdjustOptions& options = {});

}  // namespace iuq
