#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "iuq/rng.hpp"
#include "iuq/types.hpp"

namespace iuq {

/// Parameter-to-model-space map. With nominal value n:
///   Additive:     value = n + theta      (multipliers: p = 1 + theta)
///   Exponential:  value = n * exp(theta) (multipliers: p = exp(theta))
/// Both satisfy f(0) = n and f'(0) matches the additive slope at theta = 0.
enum class ParamTransform { Additive, Exponential };

/// Gaussian law for the calibration parameters in theta-space, with the
/// change-of-variable kind used to map draws onto the model's parameters.
struct GaussianParamSpec {
  Eigen::VectorXd mean;                   // bias vector b
  Eigen::VectorXd var;                    // diagonal of Sigma_theta
  std::vector<ParamTransform> transform;  // per parameter; may be empty (= all Additive)

  void validate() const;
  ParamTransform transform_of(Eigen::Index i) const;
};

/// Map a theta-space value onto the model parameter with the given nominal.
double apply_transform(ParamTransform kind, double nominal, double theta);

/// Apply the spec's per-parameter transform around the model nominal.
CalibrationVector to_model_space(const GaussianParamSpec& spec,
                                 const CalibrationVector& nominal,
                                 const Eigen::VectorXd& theta);

/// Dense symmetric PSD matrix with checked invariants.
class CovMatrix {
 public:
  explicit CovMatrix(Eigen::MatrixXd m);

  const Eigen::MatrixXd& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }
  bool positive_semidefinite() const { return psd_; }

 private:
  Eigen::MatrixXd m_;
  bool psd_ = false;
};

/// log N(x; mean, cov) including the -1/2 log|Sigma| term. The covariance is
/// stabilized with the standard nugget (1e-10 * trace / dim on the diagonal)
/// before factorization; still-indefinite input is an error.
double log_mvn_pdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                   const Eigen::MatrixXd& cov);

/// n rows of N(mean, cov) via Cholesky-with-nugget; reproducible from rng.
Eigen::MatrixXd draw_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                         RngStream rng, int n);

/// Solve A x = rhs for symmetric positive definite A.
Eigen::VectorXd solve_spd(const Eigen::MatrixXd& A, const Eigen::VectorXd& rhs);

/// Cholesky factor of cov + nugget*I; throws NumericalError (reporting the
/// smallest eigenvalue) when the repaired matrix is still not PD.
Eigen::LLT<Eigen::MatrixXd> cholesky_with_nugget(const Eigen::MatrixXd& cov);

/// Equal-tailed empirical quantile (linear interpolation between order stats).
double quantile(std::vector<double> v, double p);

}  // namespace iuq
