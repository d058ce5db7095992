#include "iuq/circe.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "iuq/sensitivity.hpp"

namespace iuq {

namespace {

constexpr double kVarianceFloor = 1e-30;  // clamp for X when all eps_j = 0

struct ColumnCheck {
  std::vector<std::string> warnings;
  int collinear_a = -1, collinear_b = -1;
};

ColumnCheck check_columns(const Eigen::MatrixXd& S) {
  ColumnCheck out;
  const Eigen::Index I = S.cols();
  for (Eigen::Index i = 0; i < I; ++i) {
    if (S.col(i).norm() == 0.0) {
      std::ostringstream os;
      os << "sensitivity column " << i << " is identically zero; sigma_" << i
         << " is unidentifiable";
      out.warnings.push_back(os.str());
    }
  }
  for (Eigen::Index a = 0; a < I; ++a) {
    for (Eigen::Index b = a + 1; b < I; ++b) {
      const double na = S.col(a).norm(), nb = S.col(b).norm();
      if (na == 0.0 || nb == 0.0) continue;
      const double cosine = std::abs(S.col(a).dot(S.col(b))) / (na * nb);
      if (cosine > 0.999) {
        std::ostringstream os;
        os << "sensitivity columns " << a << " and " << b
           << " are nearly collinear (|cosine| = " << cosine << ")";
        out.warnings.push_back(os.str());
        out.collinear_a = static_cast<int>(a);
        out.collinear_b = static_cast<int>(b);
      }
    }
  }
  return out;
}

// One E-M sweep of the covariance update at fixed bias. Returns the new
// diagonal (the M-step for the diagonal-constrained family keeps only the
// diagonal of the full posterior second-moment average).
Eigen::VectorXd em_covariance_sweep(const Eigen::VectorXd& d, const Eigen::MatrixXd& S,
                                    const Eigen::VectorXd& eps2, const Eigen::VectorXd& b,
                                    const Eigen::VectorXd& sigma_diag, bool* clamped) {
  const Eigen::Index J = d.size();
  const Eigen::Index I = S.cols();
  Eigen::MatrixXd accum = Eigen::MatrixXd::Zero(I, I);
  for (Eigen::Index j = 0; j < J; ++j) {
    const Eigen::VectorXd s = S.row(j).transpose();
    const Eigen::VectorXd sigma_s = sigma_diag.asDiagonal() * s;
    double x = eps2(j) + s.dot(sigma_s);
    if (x < kVarianceFloor) {
      x = kVarianceFloor;
      if (clamped) *clamped = true;
    }
    const double centered = d(j) - s.dot(b);
    const Eigen::MatrixXd y = sigma_s * sigma_s.transpose();
    accum += (y / x) * (centered * centered / x - 1.0);
  }
  Eigen::VectorXd next = sigma_diag + accum.diagonal() / static_cast<double>(J);
  return next.cwiseMax(0.0);
}

Eigen::VectorXd marginal_vars(const Eigen::MatrixXd& S, const Eigen::VectorXd& eps2,
                              const Eigen::VectorXd& sigma_diag, bool* clamped) {
  Eigen::VectorXd x(S.rows());
  for (Eigen::Index j = 0; j < S.rows(); ++j) {
    const Eigen::VectorXd s = S.row(j).transpose();
    x(j) = eps2(j) + s.dot(sigma_diag.asDiagonal() * s);
    if (x(j) < kVarianceFloor) {
      x(j) = kVarianceFloor;
      if (clamped) *clamped = true;
    }
  }
  return x;
}

}  // namespace

double change_of_variable(ParamTransform kind, double theta) {
  return kind == ParamTransform::Additive ? 1.0 + theta : std::exp(theta);
}

void CirceInputs::validate() const {
  const Eigen::Index J = residuals.size();
  if (sensitivities.rows() != J)
    throw ValidationError("CirceInputs: residuals/sensitivities row mismatch");
  if (noise_vars.size() != J)
    throw ValidationError("CirceInputs: residuals/noise_vars mismatch");
  if ((noise_vars.array() < 0.0).any())
    throw ValidationError("CirceInputs: negative noise variance");
  if (!residuals.allFinite() || !sensitivities.allFinite() || !noise_vars.allFinite())
    throw ValidationError("CirceInputs: non-finite entry");
  if (options.sigma0_diag.size() != 0 && options.sigma0_diag.size() != sensitivities.cols())
    throw ValidationError("CirceInputs: sigma0_diag dimension mismatch");
}

double circe_loglik(const Eigen::VectorXd& d, const Eigen::MatrixXd& S,
                    const Eigen::VectorXd& eps2, const Eigen::VectorXd& b,
                    const Eigen::VectorXd& sigma_diag) {
  const Eigen::VectorXd x = marginal_vars(S, eps2, sigma_diag, nullptr);
  double ll = -0.5 * static_cast<double>(d.size()) * std::log(2.0 * std::numbers::pi);
  for (Eigen::Index j = 0; j < d.size(); ++j) {
    const double centered = d(j) - S.row(j).dot(b);
    ll += -0.5 * std::log(x(j)) - 0.5 * centered * centered / x(j);
  }
  return ll;
}

namespace {

CirceEstimate run_circe(const CirceInputs& in, bool with_bias) {
  in.validate();
  const Eigen::Index J = in.residuals.size();
  const Eigen::Index I = in.sensitivities.cols();

  CirceEstimate est;
  const ColumnCheck cols = check_columns(in.sensitivities);
  est.warnings = cols.warnings;
  if (J < I) est.warnings.push_back("fewer QoIs than parameters; estimates may be weak");
  if (I > 3)
    est.warnings.push_back("more than 3 parameters; the method is recommended for I <= 3");

  Eigen::VectorXd sigma = in.options.sigma0_diag.size() == in.sensitivities.cols() &&
                                  in.options.sigma0_diag.size() > 0
                              ? in.options.sigma0_diag
                              : Eigen::VectorXd::Ones(I);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(I);
  bool clamped = false;

  int m = 0;
  for (; m < in.options.max_iter; ++m) {
    const Eigen::VectorXd sigma_next = em_covariance_sweep(in.residuals, in.sensitivities,
                                                           in.noise_vars, b, sigma, &clamped);
    if (!sigma_next.allFinite())
      throw NumericalError("CIRCE E-M diverged: non-finite covariance");

    Eigen::VectorXd b_next = b;
    if (with_bias) {
      const Eigen::VectorXd x = marginal_vars(in.sensitivities, in.noise_vars, sigma_next, &clamped);
      Eigen::MatrixXd A = Eigen::MatrixXd::Zero(I, I);
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(I);
      for (Eigen::Index j = 0; j < J; ++j) {
        const Eigen::VectorXd s = in.sensitivities.row(j).transpose();
        A += s * s.transpose() / x(j);
        rhs += s * in.residuals(j) / x(j);
      }
      Eigen::LLT<Eigen::MatrixXd> llt(A);
      if (llt.info() != Eigen::Success) {
        std::ostringstream os;
        os << "singular normal equations for the bias";
        if (cols.collinear_a >= 0)
          os << "; sensitivity columns " << cols.collinear_a << " and " << cols.collinear_b
             << " are collinear";
        throw NumericalError(os.str());
      }
      b_next = llt.solve(rhs);
    }

    est.loglik_trace.push_back(
        circe_loglik(in.residuals, in.sensitivities, in.noise_vars, b_next, sigma_next));

    double rel_change = 0.0;
    for (Eigen::Index i = 0; i < I; ++i) {
      const double scale = std::max(std::abs(sigma(i)), std::abs(sigma_next(i)));
      if (scale > 0.0)
        rel_change = std::max(rel_change, std::abs(sigma_next(i) - sigma(i)) / scale);
      rel_change = std::max(rel_change,
                            std::abs(b_next(i) - b(i)) / std::max(std::abs(b_next(i)), 1.0));
    }
    sigma = sigma_next;
    b = b_next;
    if (rel_change < in.options.tol) {
      est.converged = true;
      ++m;
      break;
    }
  }

  if (clamped)
    est.warnings.push_back(
        "marginal variance clamped at floor (all eps_j = 0 with tiny residuals)");

  est.iterations = m;
  est.spec.mean = b;
  est.spec.var = sigma;
  return est;
}

}  // namespace

CirceEstimate circe_no_bias(const CirceInputs& in) {
  if (in.options.estimate_bias)
    throw ValidationError("circe_no_bias called with estimate_bias set");
  return run_circe(in, false);
}

CirceEstimate circe_with_bias(const CirceInputs& in) {
  return run_circe(in, true);
}

CirceEstimate iterative_circe(const ModelSpec& model,
                              const std::vector<ExperimentRecord>& experiments,
                              const CalibrationVector& theta_start,
                              const IterativeCirceConfig& config) {
  if (config.outer_max < 1)
    throw ValidationError("iterative_circe: outer_max must be >= 1");
  if (experiments.empty()) throw ValidationError("iterative_circe: no experiments");

  CalibrationVector expansion = theta_start;
  CirceEstimate last;
  std::vector<Eigen::VectorXd> bias_trace;
  int outer = 0;
  bool outer_converged = false;

  for (; outer < config.outer_max; ++outer) {
    // Stack residuals, sensitivities, noise variances across experiments.
    std::vector<Eigen::VectorXd> res_blocks;
    std::vector<Eigen::MatrixXd> sens_blocks;
    std::vector<Eigen::VectorXd> noise_blocks;
    Eigen::Index total = 0;
    for (const auto& rec : experiments) {
      const QoIVector y = evaluate_model(model, rec.design, expansion);
      const SensitivityMatrix sm =
          finite_difference_sensitivity(model, rec.design, expansion, config.rel_step);
      res_blocks.push_back(rec.observed.values - y.values);
      sens_blocks.push_back(sm.entries);
      noise_blocks.push_back(rec.noise_var);
      total += y.size();
    }
    CirceInputs in;
    in.residuals.resize(total);
    in.sensitivities.resize(total, theta_start.size());
    in.noise_vars.resize(total);
    Eigen::Index row = 0;
    for (std::size_t k = 0; k < res_blocks.size(); ++k) {
      const Eigen::Index n = res_blocks[k].size();
      in.residuals.segment(row, n) = res_blocks[k];
      in.sensitivities.middleRows(row, n) = sens_blocks[k];
      in.noise_vars.segment(row, n) = noise_blocks[k];
      row += n;
    }
    in.options = config.em;
    in.options.estimate_bias = true;

    last = circe_with_bias(in);
    const Eigen::VectorXd increment = last.spec.mean;
    expansion.values += increment;
    bias_trace.push_back(expansion.values - theta_start.values);

    if (increment.cwiseAbs().maxCoeff() < config.outer_tol) {
      outer_converged = true;
      ++outer;
      break;
    }
  }

  last.outer_iterations = outer;
  last.outer_bias_trace = std::move(bias_trace);
  last.converged = last.converged && outer_converged;
  last.spec.mean = expansion.values - theta_start.values;
  if (!outer_converged)
    last.warnings.push_back("outer iteration budget exhausted before bias stabilized");
  return last;
}

CirceEstimate mle_map_estimate(const std::vector<MleMapBlock>& blocks,
                               const std::optional<ConjugatePrior>& prior,
                               const CirceOptions& options) {
  if (blocks.empty()) throw ValidationError("mle_map_estimate: no blocks");
  const Eigen::Index I = blocks[0].sensitivity.cols();
  Eigen::Index total_rows = 0;
  for (const auto& blk : blocks) {
    if (blk.sensitivity.cols() != I || blk.residual.size() != blk.sensitivity.rows() ||
        blk.noise_cov.rows() != blk.residual.size() ||
        blk.noise_cov.cols() != blk.residual.size())
      throw ValidationError("mle_map_estimate: inconsistent block dimensions");
    total_rows += blk.residual.size();
  }
  if (prior) {
    if (prior->mean_loc.size() != I || prior->mean_var.size() != I ||
        prior->var_shape.size() != I || prior->var_scale.size() != I)
      throw ValidationError("mle_map_estimate: prior dimension mismatch");
  }

  CirceEstimate est;
  {
    Eigen::MatrixXd stacked(total_rows, I);
    Eigen::Index row = 0;
    for (const auto& blk : blocks) {
      stacked.middleRows(row, blk.sensitivity.rows()) = blk.sensitivity;
      row += blk.sensitivity.rows();
    }
    const ColumnCheck cols = check_columns(stacked);
    est.warnings = cols.warnings;
    for (Eigen::Index i = 0; i < I; ++i) {
      if (stacked.col(i).norm() == 0.0) continue;
    }
  }

  const auto n = static_cast<double>(blocks.size());
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(I);
  Eigen::VectorXd sigma = Eigen::VectorXd::Ones(I);

  auto objective = [&](const Eigen::VectorXd& m, const Eigen::VectorXd& s2) {
    double ll = 0.0;
    for (const auto& blk : blocks) {
      const Eigen::MatrixXd C =
          blk.sensitivity * s2.asDiagonal() * blk.sensitivity.transpose() + blk.noise_cov;
      ll += log_mvn_pdf(blk.residual, blk.sensitivity * m, C);
    }
    if (prior) {
      for (Eigen::Index i = 0; i < I; ++i) {
        ll += -0.5 * (m(i) - prior->mean_loc(i)) * (m(i) - prior->mean_loc(i)) /
              prior->mean_var(i);
        const double v = std::max(s2(i), kVarianceFloor);
        ll += -(prior->var_shape(i) + 1.0) * std::log(v) - prior->var_scale(i) / v;
      }
    }
    return ll;
  };

  int it = 0;
  for (; it < options.max_iter; ++it) {
    // E-step: posterior mean/cov of each block's latent parameter vector.
    Eigen::VectorXd mean_sum = Eigen::VectorXd::Zero(I);
    std::vector<Eigen::VectorXd> block_means;
    Eigen::VectorXd second_moment_diag = Eigen::VectorXd::Zero(I);
    std::vector<Eigen::VectorXd> cond_var_diag;
    block_means.reserve(blocks.size());
    for (const auto& blk : blocks) {
      const Eigen::MatrixXd sigma_st = sigma.asDiagonal() * blk.sensitivity.transpose();
      const Eigen::MatrixXd C = blk.sensitivity * sigma_st + blk.noise_cov;
      const auto llt = cholesky_with_nugget(C);
      const Eigen::VectorXd innov = blk.residual - blk.sensitivity * mu;
      const Eigen::VectorXd m_e = mu + sigma_st * llt.solve(innov);
      const Eigen::MatrixXd V_e =
          Eigen::MatrixXd(sigma.asDiagonal()) - sigma_st * llt.solve(sigma_st.transpose());
      block_means.push_back(m_e);
      mean_sum += m_e;
      cond_var_diag.push_back(V_e.diagonal().cwiseMax(0.0));
    }

    // M-step for the mean (conditional on the current variances).
    Eigen::VectorXd mu_next(I);
    for (Eigen::Index i = 0; i < I; ++i) {
      const double s2 = std::max(sigma(i), kVarianceFloor);
      if (prior) {
        const double prec = n / s2 + 1.0 / prior->mean_var(i);
        mu_next(i) = (mean_sum(i) / s2 + prior->mean_loc(i) / prior->mean_var(i)) / prec;
      } else {
        mu_next(i) = mean_sum(i) / n;
      }
    }

    // M-step for the variances.
    for (std::size_t e = 0; e < blocks.size(); ++e) {
      const Eigen::VectorXd dev = block_means[e] - mu_next;
      second_moment_diag += cond_var_diag[e] + dev.cwiseProduct(dev);
    }
    Eigen::VectorXd sigma_next(I);
    for (Eigen::Index i = 0; i < I; ++i) {
      const double s = second_moment_diag(i) / n;
      if (prior) {
        sigma_next(i) = (2.0 * prior->var_scale(i) + n * s) /
                        (2.0 * prior->var_shape(i) + 2.0 + n);
      } else {
        sigma_next(i) = s;
      }
    }

    est.loglik_trace.push_back(objective(mu_next, sigma_next));

    double rel_change = 0.0;
    for (Eigen::Index i = 0; i < I; ++i) {
      const double scale = std::max(std::abs(sigma(i)), std::abs(sigma_next(i)));
      if (scale > 0.0)
        rel_change = std::max(rel_change, std::abs(sigma_next(i) - sigma(i)) / scale);
      rel_change = std::max(rel_change,
                            std::abs(mu_next(i) - mu(i)) / std::max(std::abs(mu_next(i)), 1.0));
    }
    mu = mu_next;
    sigma = sigma_next;
    if (rel_change < options.tol) {
      est.converged = true;
      ++it;
      break;
    }
  }

  est.iterations = it;
  est.spec.mean = mu;
  est.spec.var = sigma;
  return est;
}

LinearityAssessment assess_linearity(const ModelSpec& model, const DesignPoint& x,
                                     const GaussianParamSpec& estimate, double rel_step) {
  estimate.validate();
  const CalibrationVector center = to_model_space(estimate, model.nominal, estimate.mean);
  const QoIVector y0 = evaluate_model(model, x, center);
  const SensitivityMatrix sm = finite_difference_sensitivity(model, x, center, rel_step);

  double scale = y0.values.cwiseAbs().maxCoeff();
  double max_dev = 0.0;
  for (Eigen::Index i = 0; i < estimate.mean.size(); ++i) {
    const double sd = std::sqrt(estimate.var(i));
    for (const double sign : {-1.0, 1.0}) {
      Eigen::VectorXd theta = estimate.mean;
      theta(i) += sign * 2.0 * sd;
      const CalibrationVector probe = to_model_space(estimate, model.nominal, theta);
      const QoIVector y = evaluate_model(model, x, probe);
      const Eigen::VectorXd tangent =
          y0.values + sm.entries * (probe.values - center.values);
      scale = std::max(scale, y.values.cwiseAbs().maxCoeff());
      max_dev = std::max(max_dev, (y.values - tangent).cwiseAbs().maxCoeff());
    }
  }
  LinearityAssessment out;
  out.max_relative_deviation = scale > 0.0 ? max_dev / scale : 0.0;
  out.advisory = out.max_relative_deviation > 0.05;
  return out;
}

ParamTransform select_transform(const ModelSpec& model, const DesignPoint& x,
                                const GaussianParamSpec& estimate, double rel_step) {
  GaussianParamSpec additive = estimate;
  additive.transform.assign(estimate.mean.size(), ParamTransform::Additive);
  GaussianParamSpec exponential = estimate;
  exponential.transform.assign(estimate.mean.size(), ParamTransform::Exponential);
  const double dev_add = assess_linearity(model, x, additive, rel_step).max_relative_deviation;
  const double dev_exp =
      assess_linearity(model, x, exponential, rel_step).max_relative_deviation;
  return dev_exp < dev_add ? ParamTransform::Exponential : ParamTransform::Additive;
}

}  // namespace iuq
