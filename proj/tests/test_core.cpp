#include <doctest.h>

#include <cmath>

#include "iuq/models.hpp"
#include "iuq/rng.hpp"
#include "iuq/sensitivity.hpp"
#include "iuq/stats.hpp"
#include "iuq/synthetic.hpp"

using namespace iuq;

TEST_CASE("rng streams are reproducible and distinct") {
  auto a1 = RngStream{42, 0}.engine();
  auto a2 = RngStream{42, 0}.engine();
  auto b = RngStream{42, 1}.engine();
  CHECK(a1() == a2());
  CHECK(a1() != b());
  const RngStream child = RngStream{42, 0}.split(3);
  CHECK(child.seed == 42);
  CHECK(child.stream != 0);
}

TEST_CASE("transforms agree at zero and move as declared") {
  CHECK(apply_transform(ParamTransform::Additive, 2.0, 0.0) == doctest::Approx(2.0));
  CHECK(apply_transform(ParamTransform::Exponential, 2.0, 0.0) == doctest::Approx(2.0));
  CHECK(apply_transform(ParamTransform::Additive, 2.0, 0.3) == doctest::Approx(2.3));
  CHECK(apply_transform(ParamTransform::Exponential, 2.0, 0.3) ==
        doctest::Approx(2.0 * std::exp(0.3)));
}

TEST_CASE("finite differences recover an affine Jacobian exactly") {
  Eigen::MatrixXd S(3, 2);
  S << 1.0, 2.0, -0.5, 4.0, 3.0, 0.0;
  const ModelSpec model = make_linear_model(S);
  DesignPoint x;
  const SensitivityMatrix sm = finite_difference_sensitivity(model, x, model.nominal);
  CHECK((sm.entries - S).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("central differences are second order on exp") {
  // Richardson check: halving the relative step shrinks the error ~4x.
  const ModelSpec model = make_scalar_exp_model();
  DesignPoint x;
  x.values.resize(1);
  x.values << 0.7;
  CalibrationVector at = model.nominal;

  const double exact = 0.7 * std::exp(0.7);  // d y / d theta2 at (1, 1)
  const double e1 =
      std::abs(finite_difference_sensitivity(model, x, at, 1e-2).entries(0, 1) - exact);
  const double e2 =
      std::abs(finite_difference_sensitivity(model, x, at, 5e-3).entries(0, 1) - exact);
  CHECK(e1 / e2 > 3.0);
  CHECK(e1 / e2 < 5.0);
}

TEST_CASE("evaluate_model rejects non-finite output with context") {
  ModelSpec bad;
  bad.nominal.values = Eigen::VectorXd::Ones(1);
  bad.evaluator = [](const DesignPoint&, const CalibrationVector&) {
    QoIVector q;
    q.values.resize(1);
    q.values << std::nan("");
    return q;
  };
  DesignPoint x;
  CHECK_THROWS_AS(evaluate_model(bad, x, bad.nominal), ModelFailure);
}

TEST_CASE("synthetic generation: moments track the truth spec") {
  Eigen::MatrixXd S(1, 1);
  S << 1.0;
  const ModelSpec model = make_linear_model(S);
  GaussianParamSpec truth;
  truth.mean.resize(1);
  truth.mean << 0.5;
  truth.var.resize(1);
  truth.var << 0.04;

  std::vector<DesignPoint> designs(2000);
  Eigen::VectorXd noise_sd(1);
  noise_sd << 0.01;
  const auto records = generate_synthetic_experiments(model, truth, designs, noise_sd, 7);

  double sum = 0.0, sum2 = 0.0;
  for (const auto& rec : records) {
    sum += rec.observed.values(0);
    sum2 += rec.observed.values(0) * rec.observed.values(0);
    CHECK(rec.noise_var(0) == doctest::Approx(1e-4));
  }
  const double mean = sum / 2000.0;
  const double var = sum2 / 2000.0 - mean * mean;
  CHECK(mean == doctest::Approx(0.5).epsilon(0.05));
  CHECK(var == doctest::Approx(0.04 + 1e-4).epsilon(0.15));
}

TEST_CASE("synthetic generation is seed-stable") {
  Eigen::MatrixXd S(2, 1);
  S << 1.0, 2.0;
  const ModelSpec model = make_linear_model(S);
  GaussianParamSpec truth;
  truth.mean = Eigen::VectorXd::Zero(1);
  truth.var = Eigen::VectorXd::Ones(1);
  std::vector<DesignPoint> designs(3);
  Eigen::VectorXd noise_sd(1);
  noise_sd << 0.1;
  const auto a = generate_synthetic_experiments(model, truth, designs, noise_sd, 99);
  const auto b = generate_synthetic_experiments(model, truth, designs, noise_sd, 99);
  for (std::size_t k = 0; k < a.size(); ++k)
    CHECK(a[k].observed.values == b[k].observed.values);
}

TEST_CASE("reflood model: monotone cooldown after quench at the probe elevation") {
  const ModelSpec model = make_reflood_model();
  DesignPoint x;
  x.values.resize(2);
  x.values << 2.0, 1100.0;
  const QoIVector y = evaluate_model(model, x, model.nominal);
  REQUIRE(y.times.has_value());
  CHECK(y.size() == 101);
  CHECK(y.values(0) == doctest::Approx(1100.0).epsilon(0.05));
  // Temperature must have dropped sharply by the end of the transient.
  CHECK(y.values(y.size() - 1) < 700.0);
  // A faster quench front cools the elevation sooner.
  CalibrationVector fast = model.nominal;
  fast.values(1) = 1.5;
  const QoIVector yf = evaluate_model(model, x, fast);
  CHECK(yf.values.sum() < y.values.sum());
}

TEST_CASE("quantile interpolates order statistics") {
  std::vector<double> v = {4.0, 1.0, 3.0, 2.0};
  CHECK(quantile(v, 0.0) == doctest::Approx(1.0));
  CHECK(quantile(v, 1.0) == doctest::Approx(4.0));
  CHECK(quantile(v, 0.5) == doctest::Approx(2.5));
}

TEST_CASE("log_mvn_pdf matches the scalar normal density") {
  Eigen::VectorXd x(1), m(1);
  Eigen::MatrixXd c(1, 1);
  x << 1.3;
  m << 0.8;
  c << 0.25;
  const double expect =
      -0.5 * std::log(2.0 * M_PI * 0.25) - 0.5 * (0.5 * 0.5) / 0.25;
  CHECK(log_mvn_pdf(x, m, c) == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("covariance checks catch asymmetry and indefiniteness") {
  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 0.2, 0.3, 1.0;
  CHECK_THROWS_AS(CovMatrix{asym}, ValidationError);
  Eigen::MatrixXd indef(2, 2);
  indef << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(CovMatrix{indef}, ValidationError);
}
