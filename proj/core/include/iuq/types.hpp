#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace iuq {

/// Bad input caught before any numerics ran.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A model evaluation produced non-finite output or could not run.
class ModelFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical method failed (singular system, divergence, unbracketed level, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Experiment-defining inputs (boundary/initial conditions); known exactly.
struct DesignPoint {
  Eigen::VectorXd values;
  std::vector<std::string> labels;

  void validate() const;
};

/// The calibration target: multipliers or shifts inside the model closures.
struct CalibrationVector {
  Eigen::VectorXd values;
  std::vector<std::string> labels;

  void validate() const;
  Eigen::Index size() const { return values.size(); }
};

enum class OutputKind { ScalarSet, TimeSeries };

/// Model output; time stamps present (and strictly increasing) for time-series kind.
struct QoIVector {
  Eigen::VectorXd values;
  std::optional<Eigen::VectorXd> times;

  void validate() const;
  Eigen::Index size() const { return values.size(); }
};

/// A deterministic computer model. The evaluator must be pure: identical
/// inputs give bit-identical outputs, and the output length is fixed per
/// design point.
struct ModelSpec {
  std::function<QoIVector(const DesignPoint&, const CalibrationVector&)> evaluator;
  OutputKind output_kind = OutputKind::ScalarSet;
  CalibrationVector nominal;
  std::string name;
};

/// One observation: where it was taken, what was measured, how noisy.
struct ExperimentRecord {
  DesignPoint design;
  QoIVector observed;
  Eigen::VectorXd noise_var;  // diagonal of the measurement covariance

  void validate() const;
};

/// J x I matrix of dQoI_j / dtheta_i at a fixed evaluation point.
struct SensitivityMatrix {
  Eigen::MatrixXd entries;
  CalibrationVector evaluation_point;
  Eigen::VectorXd step_sizes;
};

/// Checked wrapper around ModelSpec::evaluator: validates dimensions against
/// the model declaration and rejects non-finite output.
QoIVector evaluate_model(const ModelSpec& model, const DesignPoint& x,
                         const CalibrationVector& theta);

}  // namespace iuq
