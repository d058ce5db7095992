#include "iuq/types.hpp"

#include <sstream>

namespace iuq {

namespace {

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

void check_labels(std::size_t n_values, const std::vector<std::string>& labels,
                  const char* what) {
  if (!labels.empty() && labels.size() != n_values) {
    std::ostringstream os;
    os << what << ": " << n_values << " values but " << labels.size() << " labels";
    throw ValidationError(os.str());
  }
}

}  // namespace

void DesignPoint::validate() const {
  check_labels(static_cast<std::size_t>(values.size()), labels, "DesignPoint");
  if (!all_finite(values)) throw ValidationError("DesignPoint: non-finite value");
}

void CalibrationVector::validate() const {
  check_labels(static_cast<std::size_t>(values.size()), labels, "CalibrationVector");
  if (!all_finite(values)) throw ValidationError("CalibrationVector: non-finite value");
}

void QoIVector::validate() const {
  if (!all_finite(values)) throw ValidationError("QoIVector: non-finite value");
  if (times) {
    if (times->size() != values.size())
      throw ValidationError("QoIVector: times/values length mismatch");
    for (Eigen::Index i = 1; i < times->size(); ++i)
      if ((*times)(i) <= (*times)(i - 1))
        throw ValidationError("QoIVector: time stamps not strictly increasing");
  }
}

void ExperimentRecord::validate() const {
  design.validate();
  observed.validate();
  if (noise_var.size() != observed.values.size())
    throw ValidationError("ExperimentRecord: noise_var/observed dimension mismatch");
  if ((noise_var.array() < 0.0).any())
    throw ValidationError("ExperimentRecord: negative noise variance");
}

QoIVector evaluate_model(const ModelSpec& model, const DesignPoint& x,
                         const CalibrationVector& theta) {
  x.validate();
  theta.validate();
  if (model.nominal.size() > 0 && theta.size() != model.nominal.size()) {
    std::ostringstream os;
    os << "evaluate_model: model '" << model.name << "' expects "
       << model.nominal.size() << " calibration parameters, got " << theta.size();
    throw ValidationError(os.str());
  }
  QoIVector out = model.evaluator(x, theta);
  if (!out.values.allFinite()) {
    std::ostringstream os;
    os << "model '" << model.name << "' produced non-finite output at x=[";
    for (Eigen::Index i = 0; i < x.values.size(); ++i)
      os << (i ? "," : "") << x.values(i);
    os << "], theta=[";
    for (Eigen::Index i = 0; i < theta.values.size(); ++i)
      os << (i ? "," : "") << theta.values(i);
    os << "]";
    throw ModelFailure(os.str());
  }
  if (model.output_kind == OutputKind::TimeSeries && !out.times)
    throw ModelFailure("model '" + model.name + "' declared time-series but returned no time stamps");
  out.validate();
  return out;
}

}  // namespace iuq
