#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "iuq/types.hpp"

namespace iuq {

/// A time trace of one QoI; times strictly increasing.
struct TimeSeriesSignal {
  Eigen::VectorXd times;
  Eigen::VectorXd values;
  std::string label;

  void validate() const;
};

/// Linear resampling onto a uniform grid of 2^m points over the signal span.
TimeSeriesSignal resample_pow2(const TimeSeriesSignal& signal, int m);

/// Pick the resampling exponent: smallest m with 2^m >= n, clamped to [3, 14].
int default_fft_exponent(Eigen::Index n);

/// Average Amplitude: ratio of the summed FFT magnitudes of the error trace
/// (model minus data) to those of the data trace, both resampled to 2^m
/// uniform points over the overlapping time span. Dimensionless; 0 for a
/// perfect match, 1 when the error is as large as the signal itself.
double average_amplitude(const TimeSeriesSignal& model_signal,
                         const TimeSeriesSignal& exp_signal, int m);

/// Weighted global AA over several QoIs: AAG = sum_z w_z AA_z with
/// w_z = W_z / sum(W).
double global_AA(const std::vector<double>& aa, const Eigen::VectorXd& weights);

/// Criterion quantity CR = (AAG_SE + AAG_SR - AAG_RE) / (1 - AAG_SE), where
/// S/R/E mark the perturbed (sensitivity) run, the reference run, and the
/// experimental data.
double criterion_CR(double aag_se, double aag_sr, double aag_re);

enum class IpremStatus { BothBounds, UpperOnly, LowerOnly, None };

struct IpremParameterResult {
  Eigen::Index parameter = 0;
  IpremStatus status = IpremStatus::None;
  std::optional<double> lower, upper;
  Eigen::VectorXd grid;       // perturbation values, ascending
  Eigen::VectorXd cr;         // CR at each grid node
  std::vector<std::string> warnings;
};

/// Classify a CR profile against the threshold eta and extract the bounds by
/// linear interpolation between grid nodes. Crossings nearest the nominal on
/// each side win; extra crossings are logged. Monotone profiles follow the
/// single-bound shapes: decreasing gives an upper bound only, increasing a
/// lower bound only.
IpremParameterResult extract_bounds(const Eigen::VectorXd& grid, const Eigen::VectorXd& cr,
                                    double nominal, double eta);

/// One-at-a-time perturbation grid for parameter `parameter`; the other
/// calibration entries stay at the model nominal.
struct IpremGrid {
  Eigen::Index parameter = 0;
  Eigen::VectorXd values;  // ascending, bracketing the nominal
};

struct IpremOptions {
  double eta = 0.22;
  int m = 0;  // resampling exponent; 0 = auto from the raw sample count
};

struct IpremResult {
  std::vector<IpremParameterResult> per_parameter;
  double aag_re = 0.0;  // reference-vs-experiment global AA
};

/// Range-of-variation quantification: run the model across each parameter's
/// grid, form AA/AAG against the experimental traces and the reference
/// (nominal) run, evaluate CR, and extract the bounds. Each experiment
/// contributes one time-series QoI with the matching weight entry.
IpremResult iprem_quantify(const ModelSpec& model,
                           const std::vector<ExperimentRecord>& experiments,
                           const Eigen::VectorXd& weights,
                           const std::vector<IpremGrid>& grids,
                           const IpremOptions& options = {});

}  // namespace iuq
