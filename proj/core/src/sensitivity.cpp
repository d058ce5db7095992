#include "iuq/sensitivity.hpp"

#include <cmath>
#include <sstream>

namespace iuq {

SensitivityMatrix finite_difference_sensitivity(const ModelSpec& model,
                                                const DesignPoint& x,
                                                const CalibrationVector& theta0,
                                                double rel_step) {
  if (!(rel_step > 0.0))
    throw ValidationError("finite_difference_sensitivity: rel_step must be > 0");
  const Eigen::Index n_param = theta0.size();

  SensitivityMatrix result;
  result.evaluation_point = theta0;
  result.step_sizes.resize(n_param);

  for (Eigen::Index i = 0; i < n_param; ++i) {
    const double h = rel_step * std::max(std::abs(theta0.values(i)), 1.0);
    result.step_sizes(i) = h;

    CalibrationVector up = theta0, dn = theta0;
    up.values(i) += h;
    dn.values(i) -= h;

    QoIVector y_up, y_dn;
    try {
      y_up = evaluate_model(model, x, up);
      y_dn = evaluate_model(model, x, dn);
    } catch (const ModelFailure& e) {
      std::ostringstream os;
      os << "finite_difference_sensitivity: model failed while perturbing parameter "
         << i << (theta0.labels.empty() ? "" : " (" + theta0.labels[i] + ")") << ": "
         << e.what();
      throw ModelFailure(os.str());
    }

    if (i == 0) result.entries.resize(y_up.size(), n_param);
    Eigen::VectorXd col = (y_up.values - y_dn.values) / (2.0 * h);
    if (!col.allFinite()) {
      std::ostringstream os;
      os << "finite_difference_sensitivity: non-finite difference for parameter " << i;
      throw NumericalError(os.str());
    }
    result.entries.col(i) = col;
  }
  return result;
}

}  // namespace iuq
