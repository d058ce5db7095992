#include "iuq/mba.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

namespace iuq {

void PriorSpec::validate() const {
  if (params.empty()) throw ValidationError("PriorSpec: empty");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    if (p.kind == PriorComponent::Kind::Uniform && !(p.a < p.b))
      throw ValidationError("PriorSpec: uniform needs lo < hi at parameter " +
                            std::to_string(i));
    if (p.kind == PriorComponent::Kind::Normal && !(p.b > 0.0))
      throw ValidationError("PriorSpec: normal needs sd > 0 at parameter " +
                            std::to_string(i));
  }
}

double PriorSpec::log_pdf(const Eigen::VectorXd& theta) const {
  if (theta.size() != size()) throw ValidationError("PriorSpec::log_pdf: size mismatch");
  double lp = 0.0;
  for (Eigen::Index i = 0; i < size(); ++i) {
    const auto& p = params[static_cast<std::size_t>(i)];
    if (p.kind == PriorComponent::Kind::Uniform) {
      if (theta(i) < p.a || theta(i) > p.b)
        return -std::numeric_limits<double>::infinity();
      lp += -std::log(p.b - p.a);
    } else {
      const double z = (theta(i) - p.a) / p.b;
      lp += -0.5 * z * z - std::log(p.b) - 0.5 * std::log(2.0 * std::numbers::pi);
    }
  }
  return lp;
}

Eigen::VectorXd PriorSpec::mean() const {
  Eigen::VectorXd out(size());
  for (Eigen::Index i = 0; i < size(); ++i) {
    const auto& p = params[static_cast<std::size_t>(i)];
    out(i) = p.kind == PriorComponent::Kind::Uniform ? 0.5 * (p.a + p.b) : p.a;
  }
  return out;
}

Eigen::VectorXd PriorSpec::sd() const {
  Eigen::VectorXd out(size());
  for (Eigen::Index i = 0; i < size(); ++i) {
    const auto& p = params[static_cast<std::size_t>(i)];
    out(i) = p.kind == PriorComponent::Kind::Uniform
                 ? (p.b - p.a) / std::sqrt(12.0)
                 : p.b;
  }
  return out;
}

Eigen::MatrixXd PriorSpec::space_filling(int n, RngStream rng) const {
  validate();
  if (n < 1) throw ValidationError("PriorSpec::space_filling: n must be >= 1");
  auto eng = rng.engine();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd out(n, size());
  for (Eigen::Index i = 0; i < size(); ++i) {
    const auto& p = params[static_cast<std::size_t>(i)];
    double lo, hi;
    if (p.kind == PriorComponent::Kind::Uniform) {
      lo = p.a;
      hi = p.b;
    } else {
      lo = p.a - 3.0 * p.b;
      hi = p.a + 3.0 * p.b;
    }
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), eng);
    for (int k = 0; k < n; ++k) {
      const double u = (perm[k] + unif(eng)) / static_cast<double>(n);
      out(k, i) = lo + u * (hi - lo);
    }
  }
  return out;
}

BiasGpSet train_bias_gp(const ModelSpec& model,
                        const std::vector<ExperimentRecord>& experiments,
                        const CalibrationVector& theta_ref, double split_fraction) {
  if (experiments.size() < 6)
    throw ValidationError(
        "train_bias_gp: need at least 6 experiments; disable the bias term instead");
  if (!(split_fraction > 0.5 && split_fraction < 0.95))
    throw ValidationError("train_bias_gp: split_fraction must lie in (0.5, 0.95)");

  const auto n = experiments.size();
  const auto n_train =
      static_cast<std::size_t>(std::lround(split_fraction * static_cast<double>(n)));

  BiasGpSet out;
  for (std::size_t k = 0; k < n; ++k)
    (k < n_train ? out.train_idx : out.heldout_idx).push_back(k);

  const Eigen::Index dim_x = experiments[0].design.values.size();
  const Eigen::Index n_qoi = experiments[0].observed.size();
  Eigen::MatrixXd X(static_cast<Eigen::Index>(n_train), dim_x);
  Eigen::MatrixXd resid(static_cast<Eigen::Index>(n_train), n_qoi);
  for (std::size_t k = 0; k < n_train; ++k) {
    const auto& rec = experiments[out.train_idx[k]];
    X.row(static_cast<Eigen::Index>(k)) = rec.design.values.transpose();
    const QoIVector y = evaluate_model(model, rec.design, theta_ref);
    resid.row(static_cast<Eigen::Index>(k)) = (rec.observed.values - y.values).transpose();
  }
  out.design_lo_hi.resize(2, dim_x);
  out.design_lo_hi.row(0) = X.colwise().minCoeff();
  out.design_lo_hi.row(1) = X.colwise().maxCoeff();

  out.per_qoi.reserve(static_cast<std::size_t>(n_qoi));
  for (Eigen::Index j = 0; j < n_qoi; ++j)
    out.per_qoi.push_back(gp_fit(X, resid.col(j)));
  return out;
}

std::function<double(const Eigen::VectorXd&)> build_log_posterior(
    const PriorSpec& prior, const std::vector<ExperimentRecord>& experiments,
    const Predictor& predictor, const BiasGpSet* bias) {
  prior.validate();
  if (experiments.empty()) throw ValidationError("build_log_posterior: no experiments");

  // Freeze the bias predictions per experiment (they depend on x only).
  std::vector<Eigen::VectorXd> delta_mean(experiments.size()), bias_var(experiments.size());
  for (std::size_t e = 0; e < experiments.size(); ++e) {
    const Eigen::Index n_qoi = experiments[e].observed.size();
    delta_mean[e] = Eigen::VectorXd::Zero(n_qoi);
    bias_var[e] = Eigen::VectorXd::Zero(n_qoi);
    if (bias) {
      if (static_cast<Eigen::Index>(bias->per_qoi.size()) != n_qoi)
        throw ValidationError("build_log_posterior: bias GP count/QoI mismatch");
      for (Eigen::Index j = 0; j < n_qoi; ++j) {
        const auto pred = bias->per_qoi[static_cast<std::size_t>(j)].predict(
            experiments[e].design.values);
        delta_mean[e](j) = pred.mean;
        bias_var[e](j) = pred.variance;
      }
    }
  }

  return [=, &experiments](const Eigen::VectorXd& theta) -> double {
    double lp = prior.log_pdf(theta);
    if (!std::isfinite(lp)) return -std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < experiments.size(); ++e) {
      const auto& rec = experiments[e];
      Eigen::VectorXd mean, code_var;
      try {
        predictor(theta, e, mean, code_var);
      } catch (const ModelFailure&) {
        return -std::numeric_limits<double>::infinity();
      }
      const Eigen::VectorXd resid = rec.observed.values - mean - delta_mean[e];
      const Eigen::VectorXd var = rec.noise_var + bias_var[e] + code_var;
      for (Eigen::Index j = 0; j < resid.size(); ++j) {
        const double v = std::max(var(j), 1e-300);
        lp += -0.5 * (std::log(2.0 * std::numbers::pi * v) + resid(j) * resid(j) / v);
      }
    }
    return lp;
  };
}

namespace {

SurrogateSet fit_surrogates(const ModelSpec& model,
                            const std::vector<ExperimentRecord>& experiments,
                            const PriorSpec& prior, int budget, RngStream rng,
                            std::vector<std::string>& warnings) {
  const Eigen::Index I = prior.size();
  const int n_total = std::max(budget, static_cast<int>(10 * I));
  const int n_valid = std::max(2, n_total / 5);
  const int n_train = n_total;
  const Eigen::MatrixXd train_theta = prior.space_filling(n_train, rng);
  const Eigen::MatrixXd valid_theta = prior.space_filling(n_valid, rng.split(1));

  SurrogateSet out;
  double sq_err = 0.0;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  Eigen::Index n_err = 0;

  for (std::size_t e = 0; e < experiments.size(); ++e) {
    const Eigen::Index n_qoi = experiments[e].observed.size();
    Eigen::MatrixXd outputs(n_train, n_qoi);
    CalibrationVector cal = model.nominal;
    for (int k = 0; k < n_train; ++k) {
      cal.values = train_theta.row(k).transpose();
      outputs.row(k) = evaluate_model(model, experiments[e].design, cal).values.transpose();
    }
    lo = std::min(lo, outputs.minCoeff());
    hi = std::max(hi, outputs.maxCoeff());

    std::vector<GpModel> gps;
    gps.reserve(static_cast<std::size_t>(n_qoi));
    for (Eigen::Index j = 0; j < n_qoi; ++j)
      gps.push_back(gp_fit(train_theta, outputs.col(j)));

    for (int k = 0; k < n_valid; ++k) {
      cal.values = valid_theta.row(k).transpose();
      const QoIVector truth = evaluate_model(model, experiments[e].design, cal);
      for (Eigen::Index j = 0; j < n_qoi; ++j) {
        const double err =
            gps[static_cast<std::size_t>(j)].predict(cal.values).mean - truth.values(j);
        sq_err += err * err;
        ++n_err;
      }
    }
    out.per_experiment.push_back(std::move(gps));
  }

  out.output_range = hi - lo;
  out.validation_rmse = std::sqrt(sq_err / std::max<Eigen::Index>(1, n_err));
  if (out.output_range > 0.0 && out.validation_rmse > 0.1 * out.output_range) {
    std::ostringstream os;
    os << "surrogate validation RMSE " << out.validation_rmse << " exceeds 10% of the "
       << "output range " << out.output_range << "; increase the training budget";
    throw NumericalError(os.str());
  }
  if (out.output_range == 0.0)
    warnings.push_back("surrogate trained on constant outputs");
  return out;
}

}  // namespace

MbaResult mba_iuq(const ModelSpec& model, const std::vector<ExperimentRecord>& experiments,
                  const PriorSpec& prior, const MbaOptions& options) {
  prior.validate();
  if (experiments.empty()) throw ValidationError("mba_iuq: no experiments");
  if (prior.size() != model.nominal.size())
    throw ValidationError("mba_iuq: prior/model parameter count mismatch");

  MbaResult result;

  BiasGpSet bias;
  const BiasGpSet* bias_ptr = nullptr;
  std::vector<ExperimentRecord> iuq_records;
  if (options.use_bias) {
    CalibrationVector theta_ref = model.nominal;
    theta_ref.values = options.theta_ref ? *options.theta_ref : prior.mean();
    bias = train_bias_gp(model, experiments, theta_ref, options.bias_split);
    for (const auto k : bias.heldout_idx) iuq_records.push_back(experiments[k]);
    bias_ptr = &bias;
  } else {
    iuq_records = experiments;
  }

  SurrogateSet surrogate;
  Predictor predictor;
  if (options.use_surrogate) {
    surrogate = fit_surrogates(model, iuq_records, prior, options.surrogate_budget,
                               options.mcmc.rng.split(101), result.warnings);
    const auto* sur = &surrogate;
    predictor = [sur](const Eigen::VectorXd& theta, std::size_t e, Eigen::VectorXd& mean,
                      Eigen::VectorXd& code_var) {
      const auto& gps = sur->per_experiment[e];
      mean.resize(static_cast<Eigen::Index>(gps.size()));
      code_var.resize(mean.size());
      for (Eigen::Index j = 0; j < mean.size(); ++j) {
        const auto p = gps[static_cast<std::size_t>(j)].predict(theta);
        mean(j) = p.mean;
        code_var(j) = p.variance;
      }
    };
  } else {
    const ModelSpec* m = &model;
    const auto* recs = &iuq_records;
    predictor = [m, recs](const Eigen::VectorXd& theta, std::size_t e,
                          Eigen::VectorXd& mean, Eigen::VectorXd& code_var) {
      CalibrationVector cal = m->nominal;
      cal.values = theta;
      mean = evaluate_model(*m, (*recs)[e].design, cal).values;
      code_var = Eigen::VectorXd::Zero(mean.size());
    };
  }

  const auto log_post = build_log_posterior(prior, iuq_records, predictor, bias_ptr);

  McmcConfig mcmc = options.mcmc;
  if (mcmc.proposal_cov.size() == 0) {
    const Eigen::VectorXd sd = prior.sd();
    mcmc.proposal_cov = (0.25 * sd.array().square()).matrix().asDiagonal();
  }
  Eigen::VectorXd init = prior.mean();
  result.chain = mh_sample(log_post, init, mcmc);
  for (const auto& w : result.chain.warnings) result.warnings.push_back(w);

  const Eigen::MatrixXd& s = result.chain.samples;
  const Eigen::Index I = prior.size();
  result.mean = s.colwise().mean().transpose();
  result.sd.resize(I);
  result.ci_lo.resize(I);
  result.ci_hi.resize(I);
  for (Eigen::Index i = 0; i < I; ++i) {
    const Eigen::VectorXd col = s.col(i);
    result.sd(i) = std::sqrt((col.array() - result.mean(i)).square().sum() /
                             static_cast<double>(col.size() - 1));
    std::vector<double> v(col.data(), col.data() + col.size());
    result.ci_lo(i) = quantile(v, 0.025);
    result.ci_hi(i) = quantile(v, 0.975);
  }
  const Eigen::MatrixXd centered = s.rowwise() - result.mean.transpose();
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(s.rows() - 1);
  result.correlation.resize(I, I);
  for (Eigen::Index i = 0; i < I; ++i)
    for (Eigen::Index j = 0; j < I; ++j) {
      const double d = std::sqrt(cov(i, i) * cov(j, j));
      result.correlation(i, j) = d > 0.0 ? cov(i, j) / d : (i == j ? 1.0 : 0.0);
    }
  return result;
}

}  // namespace iuq
