#include "iuq/gp.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "iuq/optim.hpp"

namespace iuq {

namespace {

double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                   const Eigen::VectorXd& omega, const Eigen::VectorXd& p) {
  double expo = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    expo += std::pow(std::abs(a(i) - b(i)) / omega(i), p(i));
  return std::exp(-expo);
}

Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& xs, const Eigen::VectorXd& omega,
                                   const Eigen::VectorXd& p, double nugget) {
  const Eigen::Index n = xs.rows();
  Eigen::MatrixXd R(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    R(i, i) = 1.0 + nugget;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      R(i, j) = correlation(xs.row(i), xs.row(j), omega, p);
      R(j, i) = R(i, j);
    }
  }
  return R;
}

struct Profiled {
  double beta = 0.0, sigma2 = 0.0, loglik = -std::numeric_limits<double>::infinity();
  bool ok = false;
  Eigen::LLT<Eigen::MatrixXd> chol;
};

Profiled profile_fit(const Eigen::MatrixXd& xs, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& omega, const Eigen::VectorXd& p,
                     double nugget) {
  Profiled out;
  const Eigen::Index n = xs.rows();
  const Eigen::MatrixXd R = correlation_matrix(xs, omega, p, nugget);
  out.chol.compute(R);
  if (out.chol.info() != Eigen::Success) return out;

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd Riy = out.chol.solve(y);
  const Eigen::VectorXd Ri1 = out.chol.solve(ones);
  const double denom = ones.dot(Ri1);
  if (denom <= 0.0) return out;
  out.beta = ones.dot(Riy) / denom;
  const Eigen::VectorXd resid = y - out.beta * ones;
  out.sigma2 = resid.dot(out.chol.solve(resid)) / static_cast<double>(n);
  if (out.sigma2 <= 0.0 || !std::isfinite(out.sigma2)) return out;

  double logdet = 0.0;
  const auto& L = out.chol.matrixLLT();
  for (Eigen::Index i = 0; i < n; ++i) logdet += 2.0 * std::log(L(i, i));
  out.loglik = -0.5 * static_cast<double>(n) *
                   (std::log(out.sigma2) + 1.0 + std::log(2.0 * std::numbers::pi_v<double>)) -
               0.5 * logdet;
  out.ok = std::isfinite(out.loglik);
  return out;
}

}  // namespace

GpModel gp_fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& outputs,
               const GpConfig& config) {
  const Eigen::Index n = inputs.rows(), dim = inputs.cols();
  if (n < 4) throw ValidationError("gp_fit: need at least 4 training points");
  if (outputs.size() != n) throw ValidationError("gp_fit: input/output count mismatch");
  if (!inputs.allFinite() || !outputs.allFinite())
    throw ValidationError("gp_fit: non-finite training data");

  GpModel m;
  m.x_mean_ = inputs.colwise().mean();
  m.x_sd_.resize(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const double sd = std::sqrt(
        (inputs.col(i).array() - m.x_mean_(i)).square().sum() / static_cast<double>(n - 1));
    m.x_sd_(i) = sd > 0.0 ? sd : 1.0;
  }
  m.xs_ = (inputs.rowwise() - m.x_mean_.transpose()).array().rowwise() /
          m.x_sd_.transpose().array();
  m.y_ = outputs;

  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if ((m.xs_.row(i) - m.xs_.row(j)).norm() < config.dedup_tol) {
        std::ostringstream os;
        os << "gp_fit: training inputs " << i << " and " << j << " are duplicates";
        throw ValidationError(os.str());
      }

  m.hyper_.p = config.p.size() == dim ? config.p : Eigen::VectorXd::Constant(dim, 2.0);
  if ((m.hyper_.p.array() <= 0.0).any() || (m.hyper_.p.array() > 2.0).any())
    throw ValidationError("gp_fit: roughness exponents must lie in (0, 2]");
  m.nugget_ = config.nugget_rel;

  const double y_var = (outputs.array() - outputs.mean()).square().sum() /
                       static_cast<double>(n - 1);
  if (y_var == 0.0) {
    // Constant process: predictions collapse to the constant.
    m.constant_ = true;
    m.hyper_.beta = outputs(0);
    m.hyper_.sigma2 = m.nugget_;
    m.hyper_.omega = Eigen::VectorXd::Ones(dim);
    return m;
  }

  auto neg_concentrated = [&](const Eigen::VectorXd& log_omega) {
    const Eigen::VectorXd omega = log_omega.array().exp();
    const Profiled pf = profile_fit(m.xs_, m.y_, omega, m.hyper_.p, m.nugget_);
    return pf.ok ? -pf.loglik : std::numeric_limits<double>::max();
  };

  // Multi-start over log length-scales; starts ladder across the plausible
  // range for standardized inputs.
  double best_val = std::numeric_limits<double>::max();
  Eigen::VectorXd best_log_omega;
  const int n_starts = std::max(1, config.n_starts);
  for (int s = 0; s < n_starts; ++s) {
    const double w0 = 0.1 * std::pow(10.0, 1.5 * s / std::max(1, n_starts - 1));
    const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(dim, std::log(w0));
    const NelderMeadResult r = nelder_mead(neg_concentrated, x0, 0.7, 1e-9, 400);
    if (r.value < best_val) {
      best_val = r.value;
      best_log_omega = r.x;
    }
  }
  if (!std::isfinite(best_val) || best_val == std::numeric_limits<double>::max())
    throw NumericalError("gp_fit: likelihood optimization failed at every start");

  m.hyper_.omega = best_log_omega.array().exp();
  const Profiled pf = profile_fit(m.xs_, m.y_, m.hyper_.omega, m.hyper_.p, m.nugget_);
  if (!pf.ok) throw NumericalError("gp_fit: final correlation matrix not factorizable");
  m.hyper_.beta = pf.beta;
  m.hyper_.sigma2 = pf.sigma2;
  m.chol_ = pf.chol;
  m.loglik_ = pf.loglik;
  m.alpha_ = m.chol_.solve((m.y_.array() - m.hyper_.beta).matrix().eval());
  return m;
}

GpModel::Prediction GpModel::predict(const Eigen::VectorXd& point) const {
  if (point.size() != x_mean_.size())
    throw ValidationError("GpModel::predict: input dimension mismatch");
  Prediction out;
  if (constant_) {
    out.mean = hyper_.beta;
    out.variance = 0.0;
    return out;
  }
  const Eigen::VectorXd z =
      (point - x_mean_).array() / x_sd_.array();
  const Eigen::Index n = xs_.rows();
  Eigen::VectorXd r(n);
  for (Eigen::Index i = 0; i < n; ++i)
    r(i) = correlation(xs_.row(i), z, hyper_.omega, hyper_.p);
  out.mean = hyper_.beta + r.dot(alpha_);
  const double reduction = r.dot(chol_.solve(r));
  out.variance = std::max(0.0, hyper_.sigma2 * (1.0 - reduction));
  return out;
}

}  // namespace iuq
