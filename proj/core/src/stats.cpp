#include "iuq/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace iuq {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::mt19937_64 RngStream::engine() const {
  std::uint64_t s = seed;
  const std::uint64_t a = splitmix64(s);
  s ^= stream * 0x9e3779b97f4a7c15ULL;
  const std::uint64_t b = splitmix64(s);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

RngStream RngStream::split(std::uint64_t substream) const {
  std::uint64_t s = stream ^ (substream + 0x632be59bd9b4e019ULL);
  return RngStream{seed, splitmix64(s)};
}

void GaussianParamSpec::validate() const {
  if (mean.size() != var.size())
    throw ValidationError("GaussianParamSpec: mean/var dimension mismatch");
  if ((var.array() < 0.0).any())
    throw ValidationError("GaussianParamSpec: negative variance");
  if (!transform.empty() && static_cast<Eigen::Index>(transform.size()) != mean.size())
    throw ValidationError("GaussianParamSpec: transform list length mismatch");
  if (!mean.allFinite() || !var.allFinite())
    throw ValidationError("GaussianParamSpec: non-finite entry");
}

ParamTransform GaussianParamSpec::transform_of(Eigen::Index i) const {
  return transform.empty() ? ParamTransform::Additive : transform[static_cast<std::size_t>(i)];
}

double apply_transform(ParamTransform kind, double nominal, double theta) {
  switch (kind) {
    case ParamTransform::Additive:
      return nominal + theta;
    case ParamTransform::Exponential:
      return nominal * std::exp(theta);
  }
  return nominal + theta;
}

CalibrationVector to_model_space(const GaussianParamSpec& spec,
                                 const CalibrationVector& nominal,
                                 const Eigen::VectorXd& theta) {
  if (theta.size() != nominal.size())
    throw ValidationError("to_model_space: dimension mismatch");
  CalibrationVector out = nominal;
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    out.values(i) = apply_transform(spec.transform_of(i), nominal.values(i), theta(i));
  return out;
}

CovMatrix::CovMatrix(Eigen::MatrixXd m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols()) throw ValidationError("CovMatrix: not square");
  const double scale = std::max(m_.cwiseAbs().maxCoeff(), 1.0);
  if ((m_ - m_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw ValidationError("CovMatrix: not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m_, Eigen::EigenvaluesOnly);
  psd_ = es.eigenvalues().minCoeff() >= -1e-10 * std::max(m_.trace(), 0.0) - 1e-300;
  if (!psd_) throw ValidationError("CovMatrix: not positive semidefinite");
}

Eigen::LLT<Eigen::MatrixXd> cholesky_with_nugget(const Eigen::MatrixXd& cov) {
  const Eigen::Index k = cov.rows();
  const double nugget = 1e-10 * cov.trace() / static_cast<double>(k);
  Eigen::MatrixXd stabilized = cov;
  stabilized.diagonal().array() += std::max(nugget, 0.0);
  Eigen::LLT<Eigen::MatrixXd> llt(stabilized);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(stabilized, Eigen::EigenvaluesOnly);
    std::ostringstream os;
    os << "covariance not positive definite after nugget; smallest eigenvalue "
       << es.eigenvalues().minCoeff();
    throw NumericalError(os.str());
  }
  return llt;
}

double log_mvn_pdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                   const Eigen::MatrixXd& cov) {
  if (x.size() != mean.size() || cov.rows() != x.size() || cov.cols() != x.size())
    throw ValidationError("log_mvn_pdf: dimension mismatch");
  const auto llt = cholesky_with_nugget(cov);
  const Eigen::VectorXd d = x - mean;
  const Eigen::VectorXd w = llt.matrixL().solve(d);
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < cov.rows(); ++i)
    log_det += 2.0 * std::log(llt.matrixL()(i, i));
  const double k = static_cast<double>(x.size());
  return -0.5 * (k * std::log(2.0 * std::numbers::pi) + log_det + w.squaredNorm());
}

Eigen::MatrixXd draw_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                         RngStream rng, int n) {
  if (cov.rows() != mean.size() || cov.cols() != mean.size())
    throw ValidationError("draw_mvn: dimension mismatch");
  const Eigen::Index k = mean.size();
  Eigen::MatrixXd out(n, k);
  if (cov.isZero(0.0)) {
    for (int r = 0; r < n; ++r) out.row(r) = mean.transpose();
    return out;
  }
  const auto llt = cholesky_with_nugget(cov);
  const Eigen::MatrixXd L = llt.matrixL();
  auto eng = rng.engine();
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd z(k);
  for (int r = 0; r < n; ++r) {
    for (Eigen::Index i = 0; i < k; ++i) z(i) = gauss(eng);
    out.row(r) = (mean + L * z).transpose();
  }
  return out;
}

Eigen::VectorXd solve_spd(const Eigen::MatrixXd& A, const Eigen::VectorXd& rhs) {
  if (A.rows() != A.cols() || A.rows() != rhs.size())
    throw ValidationError("solve_spd: dimension mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success)
    throw NumericalError("solve_spd: matrix is not positive definite");
  return llt.solve(rhs);
}

double quantile(std::vector<double> v, double p) {
  if (v.empty()) throw ValidationError("quantile: empty sample");
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

}  // namespace iuq
