#include "iuq/mcda.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "iuq/sensitivity.hpp"

namespace iuq {

LinearityReport linearity_test(const ModelSpec& model, const DesignPoint& x,
                               const CalibrationVector& theta_prior,
                               const Eigen::MatrixXd& sigma_theta_prior, int n_probe,
                               double threshold, std::uint64_t seed) {
  if (n_probe < 8) throw ValidationError("linearity_test: need at least 8 probe points");
  const Eigen::Index I = theta_prior.size();
  if (sigma_theta_prior.rows() != I || sigma_theta_prior.cols() != I)
    throw ValidationError("linearity_test: covariance dimension mismatch");

  const QoIVector y0 = evaluate_model(model, x, theta_prior);
  const SensitivityMatrix sm = finite_difference_sensitivity(model, x, theta_prior);
  const Eigen::Index J = y0.size();

  // Stratified probes: evenly spread quantiles per parameter, shuffled
  // per-dimension so the points fill the +/- 2 sigma box.
  auto eng = RngStream{seed, 0}.engine();
  Eigen::MatrixXd probes(n_probe, I);
  const Eigen::VectorXd sd = sigma_theta_prior.diagonal().cwiseSqrt();
  for (Eigen::Index i = 0; i < I; ++i) {
    std::vector<double> levels(n_probe);
    for (int k = 0; k < n_probe; ++k)
      levels[k] = -2.0 + 4.0 * (k + 0.5) / static_cast<double>(n_probe);
    std::shuffle(levels.begin(), levels.end(), eng);
    for (int k = 0; k < n_probe; ++k)
      probes(k, i) = theta_prior.values(i) + levels[k] * sd(i);
  }

  Eigen::MatrixXd actual(n_probe, J), tangent(n_probe, J);
  for (int k = 0; k < n_probe; ++k) {
    CalibrationVector theta = theta_prior;
    theta.values = probes.row(k).transpose();
    const QoIVector y = evaluate_model(model, x, theta);
    actual.row(k) = y.values.transpose();
    tangent.row(k) =
        (y0.values + sm.entries * (theta.values - theta_prior.values)).transpose();
  }

  LinearityReport rep;
  rep.threshold = threshold;
  rep.r_squared.resize(J);
  for (Eigen::Index j = 0; j < J; ++j) {
    const double mean = actual.col(j).mean();
    const double ss_tot = (actual.col(j).array() - mean).square().sum();
    const double ss_res = (actual.col(j) - tangent.col(j)).squaredNorm();
    rep.r_squared(j) = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
  }
  rep.route = (rep.r_squared.minCoeff() >= threshold) ? McdaRoute::Deterministic
                                                      : McdaRoute::Probabilistic;
  return rep;
}

McdaUpdate mcda_update(const Eigen::VectorXd& residual, const Eigen::MatrixXd& S,
                       const Eigen::VectorXd& theta_prior,
                       const Eigen::MatrixXd& sigma_theta_prior,
                       const Eigen::MatrixXd& sigma_eps, double alpha) {
  const Eigen::Index J = residual.size(), I = theta_prior.size();
  if (S.rows() != J || S.cols() != I)
    throw ValidationError("mcda_update: sensitivity dimension mismatch");
  if (sigma_eps.rows() != J || sigma_eps.cols() != J)
    throw ValidationError("mcda_update: noise covariance dimension mismatch");
  if (sigma_theta_prior.rows() != I || sigma_theta_prior.cols() != I)
    throw ValidationError("mcda_update: prior covariance dimension mismatch");
  if (alpha < 0.0) throw ValidationError("mcda_update: alpha must be >= 0");

  Eigen::LLT<Eigen::MatrixXd> eps_llt(sigma_eps);
  if (eps_llt.info() != Eigen::Success)
    throw NumericalError("mcda_update: noise covariance not positive definite");
  Eigen::LLT<Eigen::MatrixXd> prior_llt(sigma_theta_prior);
  if (prior_llt.info() != Eigen::Success)
    throw NumericalError("mcda_update: prior covariance not positive definite");

  const Eigen::MatrixXd St_Seinv = eps_llt.solve(S).transpose();  // S' Se^-1
  const Eigen::MatrixXd normal =
      St_Seinv * S +
      alpha * alpha * prior_llt.solve(Eigen::MatrixXd::Identity(I, I));
  Eigen::LLT<Eigen::MatrixXd> normal_llt(normal);
  if (normal_llt.info() != Eigen::Success)
    throw NumericalError("mcda_update: singular regularized normal matrix");

  McdaUpdate out;
  out.gain = normal_llt.solve(St_Seinv);
  out.theta_post = theta_prior + out.gain * residual;
  const Eigen::MatrixXd KS_St = out.gain * S * sigma_theta_prior;
  out.sigma_theta_post =
      sigma_theta_prior - KS_St.transpose() - KS_St +
      out.gain * (sigma_eps + S * sigma_theta_prior * S.transpose()) * out.gain.transpose();
  return out;
}

McdaPosterior mcda_deterministic(const ModelSpec& model, const DesignPoint& x,
                                 const CalibrationVector& theta_prior,
                                 const Eigen::MatrixXd& sigma_theta_prior,
                                 const Eigen::MatrixXd& sigma_eps,
                                 const Eigen::VectorXd& y_obs, double alpha) {
  const QoIVector y_prior = evaluate_model(model, x, theta_prior);
  if (y_obs.size() != y_prior.size())
    throw ValidationError("mcda_deterministic: observation/QoI length mismatch");
  const SensitivityMatrix sm = finite_difference_sensitivity(model, x, theta_prior);

  const McdaUpdate upd = mcda_update(y_obs - y_prior.values, sm.entries,
                                     theta_prior.values, sigma_theta_prior, sigma_eps, alpha);

  McdaPosterior post;
  post.alpha = alpha;
  post.route = McdaRoute::Deterministic;
  post.theta_post = upd.theta_post;
  post.sigma_theta_post = upd.sigma_theta_post;

  CalibrationVector theta_post_cal = theta_prior;
  theta_post_cal.values = upd.theta_post;
  const SensitivityMatrix sm_post = finite_difference_sensitivity(model, x, theta_post_cal);
  post.sigma_y_post = sm_post.entries * upd.sigma_theta_post * sm_post.entries.transpose();
  return post;
}

LCurveResult select_alpha_lcurve(const Eigen::VectorXd& residual, const Eigen::MatrixXd& S,
                                 const Eigen::VectorXd& theta_prior,
                                 const Eigen::MatrixXd& sigma_theta_prior,
                                 const Eigen::MatrixXd& sigma_eps,
                                 const Eigen::VectorXd& alpha_grid) {
  const Eigen::Index n = alpha_grid.size();
  if (n < 20) throw ValidationError("select_alpha_lcurve: need at least 20 alpha nodes");
  for (Eigen::Index k = 1; k < n; ++k)
    if (!(alpha_grid(k) > alpha_grid(k - 1)) || !(alpha_grid(0) > 0.0))
      throw ValidationError("select_alpha_lcurve: alpha grid must be positive ascending");
  if (alpha_grid(n - 1) / alpha_grid(0) < 1e4)
    throw ValidationError("select_alpha_lcurve: alpha grid must span >= 4 decades");

  Eigen::LLT<Eigen::MatrixXd> eps_llt(sigma_eps);
  Eigen::LLT<Eigen::MatrixXd> prior_llt(sigma_theta_prior);
  if (eps_llt.info() != Eigen::Success || prior_llt.info() != Eigen::Success)
    throw NumericalError("select_alpha_lcurve: covariance not positive definite");

  LCurveResult out;
  out.alphas = alpha_grid;
  out.mismatch.resize(n);
  out.regularization.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const McdaUpdate upd = mcda_update(residual, S, theta_prior, sigma_theta_prior,
                                       sigma_eps, alpha_grid(k));
    const Eigen::VectorXd dtheta = upd.theta_post - theta_prior;
    const Eigen::VectorXd mis = residual - S * dtheta;
    out.mismatch(k) = mis.dot(eps_llt.solve(mis));
    out.regularization(k) = dtheta.dot(prior_llt.solve(dtheta));
  }

  // Corner of the log-log curve: maximum three-point discrete curvature with
  // the L orientation (mismatch picking up while the regularization term is
  // still settling; a counterclockwise turn of the traversal). Near-zero
  // segments in flat stretches carry only roundoff and are skipped.
  const double floor_val = 1e-300;
  double best_curv = 0.0;
  Eigen::Index best_k = -1;
  for (Eigen::Index k = 1; k + 1 < n; ++k) {
    const auto lx = [&](Eigen::Index i) { return std::log(out.mismatch(i) + floor_val); };
    const auto ly = [&](Eigen::Index i) {
      return std::log(out.regularization(i) + floor_val);
    };
    const double x1 = lx(k) - lx(k - 1), y1 = ly(k) - ly(k - 1);
    const double x2 = lx(k + 1) - lx(k), y2 = ly(k + 1) - ly(k);
    const double len1 = x1 * x1 + y1 * y1, len2 = x2 * x2 + y2 * y2;
    if (len1 < 1e-4 || len2 < 1e-4) continue;  // < 0.01 log-units: flat stretch
    const double cross = x1 * y2 - y1 * x2;
    const double denom = std::pow(len1, 0.75) * std::pow(len2, 0.75);
    if (denom <= 0.0 || cross <= 0.0) continue;
    const double curv = cross / denom;
    if (curv > best_curv) {
      best_curv = curv;
      best_k = k;
    }
  }
  if (best_k < 0 || best_curv < 1e-10) {
    out.alpha_star = 1.0;
    out.warnings.push_back("degenerate flat L-curve; falling back to alpha = 1");
  } else {
    out.alpha_star = alpha_grid(best_k);
  }
  return out;
}

McdaPosterior mcda_probabilistic(const ModelSpec& model,
                                 const std::vector<ExperimentRecord>& experiments,
                                 const CalibrationVector& theta_prior,
                                 const Eigen::MatrixXd& sigma_theta_prior,
                                 const McmcConfig& mcmc) {
  if (experiments.empty()) throw ValidationError("mcda_probabilistic: no experiments");
  if (mcmc.length < 10000)
    throw ValidationError("mcda_probabilistic: chain length must be >= 10000");
  Eigen::LLT<Eigen::MatrixXd> prior_llt(sigma_theta_prior);
  if (prior_llt.info() != Eigen::Success)
    throw NumericalError("mcda_probabilistic: prior covariance not positive definite");

  const Eigen::VectorXd prior_mean = theta_prior.values;
  auto log_post = [&](const Eigen::VectorXd& theta) {
    double lp = log_mvn_pdf(theta, prior_mean, sigma_theta_prior);
    CalibrationVector cal = theta_prior;
    cal.values = theta;
    for (const auto& rec : experiments) {
      QoIVector y;
      try {
        y = evaluate_model(model, rec.design, cal);
      } catch (const ModelFailure&) {
        return -std::numeric_limits<double>::infinity();
      }
      lp += log_mvn_pdf(rec.observed.values, y.values,
                        Eigen::MatrixXd(rec.noise_var.asDiagonal()));
    }
    return lp;
  };

  McdaPosterior post;
  post.route = McdaRoute::Probabilistic;
  post.chain = mh_sample(log_post, prior_mean, mcmc);
  const Eigen::MatrixXd& s = post.chain->samples;
  post.theta_post = s.colwise().mean().transpose();
  const Eigen::MatrixXd centered = s.rowwise() - post.theta_post.transpose();
  post.sigma_theta_post =
      centered.transpose() * centered / static_cast<double>(s.rows() - 1);
  post.warnings = post.chain->warnings;

  // QoI covariance by the sandwich rule at the chain mean, first design.
  CalibrationVector cal = theta_prior;
  cal.values = post.theta_post;
  const SensitivityMatrix sm =
      finite_difference_sensitivity(model, experiments.front().design, cal);
  post.sigma_y_post = sm.entries * post.sigma_theta_post * sm.entries.transpose();
  return post;
}

}  // namespace iuq
