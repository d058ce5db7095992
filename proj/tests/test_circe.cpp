#include <doctest.h>

#include <cmath>
#include <random>

#include "iuq/circe.hpp"
#include "iuq/models.hpp"
#include "iuq/rng.hpp"
#include "iuq/synthetic.hpp"

using namespace iuq;

namespace {

// Independent dense grid-search maximizer of the marginal log-likelihood for
// the 1-parameter problem, refined once around the coarse optimum.
std::pair<double, double> grid_oracle(const Eigen::VectorXd& d, const Eigen::MatrixXd& S,
                                      const Eigen::VectorXd& eps2) {
  auto search = [&](double b_lo, double b_hi, double v_lo, double v_hi, int n) {
    double best = -1e300, bb = 0.0, bv = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double b = b_lo + (b_hi - b_lo) * i / static_cast<double>(n);
      for (int j = 0; j <= n; ++j) {
        const double v = v_lo + (v_hi - v_lo) * j / static_cast<double>(n);
        Eigen::VectorXd bvec(1), vvec(1);
        bvec << b;
        vvec << v;
        const double ll = circe_loglik(d, S, eps2, bvec, vvec);
        if (ll > best) {
          best = ll;
          bb = b;
          bv = v;
        }
      }
    }
    return std::pair<double, double>{bb, bv};
  };
  auto [b1, v1] = search(-1.0, 2.0, 1e-4, 0.5, 300);
  return search(b1 - 0.02, b1 + 0.02, std::max(1e-6, v1 - 0.01), v1 + 0.01, 200);
}

CirceInputs one_param_problem(int J, double b_true, double var_true, double noise_sd,
                              std::uint64_t seed) {
  auto eng = RngStream{seed, 0}.engine();
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.5, 2.0);
  CirceInputs in;
  in.residuals.resize(J);
  in.sensitivities.resize(J, 1);
  in.noise_vars.resize(J);
  for (int j = 0; j < J; ++j) {
    const double s = unif(eng);
    const double theta = b_true + std::sqrt(var_true) * gauss(eng);
    in.sensitivities(j, 0) = s;
    in.residuals(j) = s * theta + noise_sd * gauss(eng);
    in.noise_vars(j) = noise_sd * noise_sd;
  }
  return in;
}

}  // namespace

TEST_CASE("with-bias estimates match the dense grid-search oracle") {
  CirceInputs in = one_param_problem(200, 0.5, 0.04, 0.05, 11);
  in.options.estimate_bias = true;
  const CirceEstimate est = circe_with_bias(in);
  CHECK(est.converged);
  const auto [b_star, v_star] = grid_oracle(in.residuals, in.sensitivities, in.noise_vars);
  CHECK(std::abs(est.spec.mean(0) - b_star) < 1e-2);
  CHECK(std::abs(est.spec.var(0) - v_star) < 5e-3);
}

TEST_CASE("no-bias variance matches a grid oracle with the bias pinned at zero") {
  CirceInputs in = one_param_problem(200, 0.0, 0.09, 0.02, 5);
  const CirceEstimate est = circe_no_bias(in);
  CHECK(est.converged);
  CHECK(est.spec.mean(0) == 0.0);
  // 1-D grid over the variance only.
  double best = -1e300, v_star = 0.0;
  for (int j = 0; j <= 40000; ++j) {
    const double v = 1e-4 + (0.5 - 1e-4) * j / 40000.0;
    const double ll = circe_loglik(in.residuals, in.sensitivities, in.noise_vars,
                                   Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, v));
    if (ll > best) {
      best = ll;
      v_star = v;
    }
  }
  CHECK(std::abs(est.spec.var(0) - v_star) < 5e-3);
}

TEST_CASE("E-M log-likelihood trace never decreases across 50 random problems") {
  std::mt19937_64 meta(2718);
  int violations = 0;
  for (int rep = 0; rep < 50; ++rep) {
    std::uniform_int_distribution<int> pick_j(20, 80), pick_i(1, 3);
    const int J = pick_j(meta), I = pick_i(meta);
    auto eng = RngStream{static_cast<std::uint64_t>(rep), 77}.engine();
    std::normal_distribution<double> gauss(0.0, 1.0);
    CirceInputs in;
    in.residuals.resize(J);
    in.sensitivities.resize(J, I);
    in.noise_vars.resize(J);
    for (int j = 0; j < J; ++j) {
      for (int i = 0; i < I; ++i) in.sensitivities(j, i) = gauss(eng);
      in.residuals(j) = 0.5 * gauss(eng);
      in.noise_vars(j) = 0.01 * (1.0 + 0.5 * std::abs(gauss(eng)));
    }
    in.options.estimate_bias = (rep % 2 == 1);
    const CirceEstimate est =
        in.options.estimate_bias ? circe_with_bias(in) : circe_no_bias(in);
    for (std::size_t m = 1; m < est.loglik_trace.size(); ++m)
      if (est.loglik_trace[m] < est.loglik_trace[m - 1] - 1e-8) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("MLE with scalar blocks agrees with the joint estimator to 1e-6") {
  CirceInputs in = one_param_problem(120, 0.3, 0.02, 0.04, 23);
  in.options.estimate_bias = true;
  in.options.tol = 1e-12;
  const CirceEstimate joint = circe_with_bias(in);

  std::vector<MleMapBlock> blocks;
  for (Eigen::Index j = 0; j < in.residuals.size(); ++j) {
    MleMapBlock blk;
    blk.residual = in.residuals.segment(j, 1);
    blk.sensitivity = in.sensitivities.row(j);
    blk.noise_cov = in.noise_vars.segment(j, 1).asDiagonal();
    blocks.push_back(std::move(blk));
  }
  CirceOptions opts;
  opts.tol = 1e-12;
  const CirceEstimate em = mle_map_estimate(blocks, std::nullopt, opts);

  CHECK(std::abs(em.spec.mean(0) - joint.spec.mean(0)) < 1e-6);
  CHECK(std::abs(em.spec.var(0) - joint.spec.var(0)) < 1e-6);
}

TEST_CASE("MAP with a tight prior returns the prior values") {
  CirceInputs in = one_param_problem(50, 0.4, 0.02, 0.05, 31);
  std::vector<MleMapBlock> blocks;
  for (Eigen::Index j = 0; j < in.residuals.size(); ++j) {
    MleMapBlock blk;
    blk.residual = in.residuals.segment(j, 1);
    blk.sensitivity = in.sensitivities.row(j);
    blk.noise_cov = in.noise_vars.segment(j, 1).asDiagonal();
    blocks.push_back(std::move(blk));
  }
  ConjugatePrior prior;
  prior.mean_loc = Eigen::VectorXd::Constant(1, -0.7);
  prior.mean_var = Eigen::VectorXd::Constant(1, 1e-12);
  // Inverse-gamma concentrated at 0.123: mode = b / (a + 1).
  prior.var_shape = Eigen::VectorXd::Constant(1, 1e8);
  prior.var_scale = Eigen::VectorXd::Constant(1, 0.123 * (1e8 + 1.0));
  const CirceEstimate est = mle_map_estimate(blocks, prior, {});
  CHECK(est.spec.mean(0) == doctest::Approx(-0.7).epsilon(1e-4));
  CHECK(est.spec.var(0) == doctest::Approx(0.123).epsilon(1e-2));
}

TEST_CASE("collinear sensitivity columns raise the warning and singular bias errors") {
  CirceInputs in;
  const int J = 30;
  auto eng = RngStream{3, 3}.engine();
  std::normal_distribution<double> gauss(0.0, 1.0);
  in.residuals.resize(J);
  in.sensitivities.resize(J, 2);
  in.noise_vars = Eigen::VectorXd::Constant(J, 0.01);
  for (int j = 0; j < J; ++j) {
    const double s = gauss(eng);
    in.sensitivities(j, 0) = s;
    in.sensitivities(j, 1) = 2.0 * s;  // exactly collinear
    in.residuals(j) = s + 0.1 * gauss(eng);
  }
  const CirceEstimate est = circe_no_bias(in);
  bool warned = false;
  for (const auto& w : est.warnings)
    if (w.find("collinear") != std::string::npos) warned = true;
  CHECK(warned);

  in.options.estimate_bias = true;
  CHECK_THROWS_AS(circe_with_bias(in), NumericalError);
}

TEST_CASE("zero measurement noise with tiny residuals is clamped and flagged") {
  CirceInputs in;
  in.residuals = Eigen::VectorXd::Zero(10);
  in.sensitivities = Eigen::MatrixXd::Zero(10, 1);
  in.noise_vars = Eigen::VectorXd::Zero(10);
  const CirceEstimate est = circe_no_bias(in);
  bool flagged = false;
  for (const auto& w : est.warnings)
    if (w.find("clamp") != std::string::npos) flagged = true;
  CHECK(flagged);
}

TEST_CASE("input validation rejects mismatched shapes and negative noise") {
  CirceInputs in;
  in.residuals = Eigen::VectorXd::Zero(5);
  in.sensitivities = Eigen::MatrixXd::Ones(4, 1);
  in.noise_vars = Eigen::VectorXd::Zero(5);
  CHECK_THROWS_AS(circe_no_bias(in), ValidationError);
  in.sensitivities = Eigen::MatrixXd::Ones(5, 1);
  in.noise_vars(2) = -1.0;
  CHECK_THROWS_AS(circe_no_bias(in), ValidationError);
}

TEST_CASE("more than three parameters draws the advisory") {
  CirceInputs in;
  const int J = 40;
  auto eng = RngStream{8, 1}.engine();
  std::normal_distribution<double> gauss(0.0, 1.0);
  in.residuals.resize(J);
  in.sensitivities.resize(J, 4);
  in.noise_vars = Eigen::VectorXd::Constant(J, 0.02);
  for (int j = 0; j < J; ++j) {
    for (int i = 0; i < 4; ++i) in.sensitivities(j, i) = gauss(eng);
    in.residuals(j) = gauss(eng);
  }
  const CirceEstimate est = circe_no_bias(in);
  bool advisory = false;
  for (const auto& w : est.warnings)
    if (w.find("3 parameters") != std::string::npos) advisory = true;
  CHECK(advisory);
}

TEST_CASE("iterative re-expansion recovers a large bias on the exponential model") {
  const ModelSpec model = make_scalar_exp_model();
  // Truth: theta = (1.4, 1.0); the amplitude is far from the nominal 1.0, so
  // one linearization is not enough.
  GaussianParamSpec truth;
  truth.mean.resize(2);
  truth.mean << 0.4, 0.0;
  truth.var.resize(2);
  truth.var << 1e-4, 1e-4;

  std::vector<DesignPoint> designs;
  for (int k = 0; k < 30; ++k) {
    DesignPoint x;
    x.values.resize(1);
    x.values << 0.1 + 0.05 * k;
    designs.push_back(std::move(x));
  }
  Eigen::VectorXd noise_sd(1);
  noise_sd << 0.01;
  const auto records =
      generate_synthetic_experiments(model, truth, designs, noise_sd, 321);

  IterativeCirceConfig cfg;
  cfg.outer_max = 20;
  const CirceEstimate est = iterative_circe(model, records, model.nominal, cfg);
  CHECK(est.outer_iterations > 1);
  CHECK(est.spec.mean(0) == doctest::Approx(0.4).epsilon(0.1));
  CHECK(std::abs(est.spec.mean(1)) < 0.1);
  // The accumulated-bias trace must approach its final value monotonically
  // in the last steps (stabilized outer loop).
  REQUIRE(est.outer_bias_trace.size() >= 2);
  const auto& last = est.outer_bias_trace.back();
  const auto& prev = est.outer_bias_trace[est.outer_bias_trace.size() - 2];
  CHECK((last - prev).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("linearity assessment separates affine from strongly curved models") {
  Eigen::MatrixXd S(3, 1);
  S << 1.0, -2.0, 0.5;
  const ModelSpec affine = make_linear_model(S);
  DesignPoint x;
  GaussianParamSpec spec;
  spec.mean = Eigen::VectorXd::Zero(1);
  spec.var = Eigen::VectorXd::Constant(1, 0.25);
  const LinearityAssessment lin = assess_linearity(affine, x, spec);
  CHECK(lin.max_relative_deviation < 1e-10);
  CHECK_FALSE(lin.advisory);

  const ModelSpec curved = make_scalar_exp_model();
  DesignPoint xe;
  xe.values.resize(1);
  xe.values << 3.0;
  GaussianParamSpec wide;
  wide.mean = Eigen::VectorXd::Zero(2);
  wide.var = Eigen::VectorXd::Constant(2, 0.25);
  const LinearityAssessment nl = assess_linearity(curved, xe, wide);
  CHECK(nl.advisory);
}

TEST_CASE("change of variable matches its defining identities") {
  CHECK(change_of_variable(ParamTransform::Additive, 0.0) == doctest::Approx(1.0));
  CHECK(change_of_variable(ParamTransform::Exponential, 0.0) == doctest::Approx(1.0));
  CHECK(change_of_variable(ParamTransform::Additive, 0.2) == doctest::Approx(1.2));
  CHECK(change_of_variable(ParamTransform::Exponential, 0.2) ==
        doctest::Approx(std::exp(0.2)));
}
