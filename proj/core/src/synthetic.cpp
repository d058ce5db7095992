#include "iuq/synthetic.hpp"

namespace iuq {

std::vector<ExperimentRecord> generate_synthetic_experiments(
    const ModelSpec& model, const GaussianParamSpec& truth,
    const std::vector<DesignPoint>& designs, const Eigen::VectorXd& noise_sd,
    std::uint64_t seed) {
  truth.validate();
  if ((noise_sd.array() < 0.0).any())
    throw ValidationError("generate_synthetic_experiments: negative noise_sd");

  std::vector<ExperimentRecord> records;
  records.reserve(designs.size());
  const RngStream root{seed, 0};

  for (std::size_t k = 0; k < designs.size(); ++k) {
    auto eng = root.split(k).engine();
    std::normal_distribution<double> gauss(0.0, 1.0);

    Eigen::VectorXd theta(truth.mean.size());
    for (Eigen::Index i = 0; i < theta.size(); ++i)
      theta(i) = truth.mean(i) + std::sqrt(truth.var(i)) * gauss(eng);

    const CalibrationVector cal = to_model_space(truth, model.nominal, theta);
    QoIVector y = evaluate_model(model, designs[k], cal);

    ExperimentRecord rec;
    rec.design = designs[k];
    rec.noise_var.resize(y.size());
    for (Eigen::Index j = 0; j < y.size(); ++j) {
      const double sd = noise_sd.size() == 1 ? noise_sd(0) : noise_sd(j);
      y.values(j) += sd * gauss(eng);
      rec.noise_var(j) = sd * sd;
    }
    rec.observed = std::move(y);
    rec.validate();
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace iuq
