#include "iuq/mcmc.hpp"

#include <cmath>
#include <limits>

#include "iuq/stats.hpp"

namespace iuq {

void McmcConfig::validate() const {
  if (length < 1000) throw ValidationError("McmcConfig: length must be >= 1000");
  if (burn_in < 0.0 || burn_in > 0.9)
    throw ValidationError("McmcConfig: burn_in must lie in [0, 0.9]");
  if (adapt_start < 10) throw ValidationError("McmcConfig: adapt_start too small");
}

McmcChain mh_sample(const std::function<double(const Eigen::VectorXd&)>& log_target,
                    const Eigen::VectorXd& init, const McmcConfig& config) {
  config.validate();
  const Eigen::Index d = init.size();
  if (d == 0) throw ValidationError("mh_sample: empty initial state");

  double lp = log_target(init);
  if (!std::isfinite(lp))
    throw ValidationError("mh_sample: log target not finite at the initial state");

  Eigen::MatrixXd prop_cov = config.proposal_cov.size() > 0
                                 ? config.proposal_cov
                                 : Eigen::MatrixXd(0.01 * Eigen::MatrixXd::Identity(d, d));
  if (prop_cov.rows() != d || prop_cov.cols() != d)
    throw ValidationError("mh_sample: proposal covariance dimension mismatch");
  Eigen::MatrixXd chol = cholesky_with_nugget(prop_cov).matrixL();

  auto eng = config.rng.engine();
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  McmcChain out;
  Eigen::MatrixXd all(config.length, d);
  Eigen::VectorXd x = init;
  int accepted = 0;
  const double scale = 2.38 * 2.38 / static_cast<double>(d);

  // Running moments for the adaptive covariance.
  Eigen::VectorXd run_mean = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd run_m2 = Eigen::MatrixXd::Zero(d, d);

  out.log_density_trace.reserve(config.length);
  for (int t = 0; t < config.length; ++t) {
    Eigen::VectorXd z(d);
    for (Eigen::Index i = 0; i < d; ++i) z(i) = gauss(eng);
    const Eigen::VectorXd cand = x + chol * z;

    double lp_cand = log_target(cand);
    if (std::isnan(lp_cand)) {
      ++out.nonfinite_proposals;
      lp_cand = -std::numeric_limits<double>::infinity();
    }
    if (std::log(unif(eng)) < lp_cand - lp) {
      x = cand;
      lp = lp_cand;
      ++accepted;
    }
    all.row(t) = x.transpose();
    out.log_density_trace.push_back(lp);

    const auto n = static_cast<double>(t + 1);
    const Eigen::VectorXd delta = x - run_mean;
    run_mean += delta / n;
    run_m2 += delta * (x - run_mean).transpose();

    if (config.adapt && t + 1 >= config.adapt_start && (t + 1) % 100 == 0) {
      const Eigen::MatrixXd emp = run_m2 / (n - 1.0);
      Eigen::MatrixXd adapted = scale * emp;
      adapted.diagonal().array() += 1e-12 * (1.0 + adapted.diagonal().array().abs());
      Eigen::LLT<Eigen::MatrixXd> llt(adapted);
      if (llt.info() == Eigen::Success) chol = llt.matrixL();
    }
  }

  const auto burn = static_cast<Eigen::Index>(config.burn_in * config.length);
  out.samples = all.bottomRows(config.length - burn);
  out.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(config.length);
  out.ess.resize(d);
  for (Eigen::Index i = 0; i < d; ++i)
    out.ess(i) = effective_sample_size(out.samples.col(i));

  if (out.acceptance_rate < 0.15)
    out.warnings.push_back("acceptance rate below 0.15; consider shrinking the proposal");
  else if (out.acceptance_rate > 0.5)
    out.warnings.push_back("acceptance rate above 0.5; consider widening the proposal");
  if (out.nonfinite_proposals > 0)
    out.warnings.push_back(std::to_string(out.nonfinite_proposals) +
                           " proposals had non-finite log density and were rejected");
  return out;
}

double effective_sample_size(const Eigen::VectorXd& series) {
  const Eigen::Index n = series.size();
  if (n < 2) return 1.0;
  const double mean = series.mean();
  const Eigen::VectorXd c = series.array() - mean;
  const double var = c.squaredNorm() / static_cast<double>(n);
  if (var <= 0.0) return 1.0;

  double rho_sum = 0.0;
  for (Eigen::Index lag = 1; lag < n; ++lag) {
    const double cov =
        c.head(n - lag).dot(c.tail(n - lag)) / static_cast<double>(n);
    const double rho = cov / var;
    if (rho <= 0.0) break;
    rho_sum += rho;
  }
  const double ess = static_cast<double>(n) / (1.0 + 2.0 * rho_sum);
  return std::max(1.0, std::min(ess, static_cast<double>(n)));
}

McmcDiagnostics diagnostics(const McmcChain& chain) {
  if (chain.samples.rows() == 0) throw ValidationError("diagnostics: empty chain");
  const Eigen::Index n = chain.samples.rows(), d = chain.samples.cols();
  McmcDiagnostics out;
  out.acceptance_rate = chain.acceptance_rate;
  out.ess.resize(d);
  out.split_half_z.resize(d);

  const Eigen::Index half = n / 2;
  for (Eigen::Index i = 0; i < d; ++i) {
    const Eigen::VectorXd col = chain.samples.col(i);
    out.ess(i) = effective_sample_size(col);
    const double m1 = col.head(half).mean();
    const double m2 = col.tail(n - half).mean();
    const double var = (col.array() - col.mean()).square().sum() /
                       std::max<double>(1.0, static_cast<double>(n - 1));
    const double se = std::sqrt(var / std::max(1.0, out.ess(i)));
    out.split_half_z(i) = se > 0.0 ? std::abs(m1 - m2) / se : 0.0;
    if (var == 0.0) out.warnings.push_back("parameter " + std::to_string(i) +
                                           ": chain is constant; mixing failed");
  }
  if (chain.acceptance_rate <= 0.0 || chain.acceptance_rate >= 1.0)
    out.warnings.push_back("degenerate acceptance rate");
  return out;
}

}  // namespace iuq
