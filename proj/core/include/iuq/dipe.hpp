#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "iuq/types.hpp"

namespace iuq {

/// Empirical coverage fraction versus a single parameter, read as a CDF.
struct CoverageCurve {
  Eigen::VectorXd theta;     // ascending
  Eigen::VectorXd coverage;  // P(theta) in [0, 1]
  bool monotone = false;

  void validate() const;
};

/// Fraction of data points strictly above the simulated value at the same
/// abscissa. Ties count as not above.
double coverage_rate(const QoIVector& sim, const QoIVector& data);

/// Run the model across the theta grid (one calibration parameter varied,
/// the others held at nominal) and average coverage_rate over all
/// experiments. The monotone flag allows a 0.02 wiggle band.
CoverageCurve dipe_pseudo_cdf(const ModelSpec& model,
                              const std::vector<ExperimentRecord>& experiments,
                              Eigen::Index parameter, const Eigen::VectorXd& theta_grid);

struct DipeBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Invert the pseudo-CDF at the two levels (linear interpolation). The curve
/// is first orientation-normalized so it is non-decreasing; a non-monotone
/// curve is refused, and an unbracketed level reports the attainable range.
DipeBounds dipe_bounds(const CoverageCurve& curve, double lo_level = 0.025,
                       double hi_level = 0.975);

/// Raster of coverage values over a 2-D parameter grid. Explicitly not a
/// joint CDF; exposed for visual exploration of two-parameter cases only.
struct CoverageRaster {
  Eigen::VectorXd theta_a, theta_b;
  Eigen::MatrixXd coverage;  // rows follow theta_a, cols theta_b
  std::string caveat = "not a joint CDF";
};

CoverageRaster dipe_coverage_raster(const ModelSpec& model,
                                    const std::vector<ExperimentRecord>& experiments,
                                    Eigen::Index param_a, const Eigen::VectorXd& grid_a,
                                    Eigen::Index param_b, const Eigen::VectorXd& grid_b);

}  // namespace iuq
