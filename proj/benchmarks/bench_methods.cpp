#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "iuq/circe.hpp"
#include "iuq/fuq.hpp"
#include "iuq/gp.hpp"
#include "iuq/mcmc.hpp"
#include "iuq/models.hpp"
#include "iuq/rng.hpp"

namespace {

iuq::CirceInputs circe_problem(int J, int I) {
  std::mt19937_64 eng(99);
  std::normal_distribution<double> gauss(0.0, 1.0);
  iuq::CirceInputs in;
  in.sensitivities = Eigen::MatrixXd::NullaryExpr(J, I, [&](auto, auto) { return gauss(eng); });
  Eigen::VectorXd theta(I);
  for (int i = 0; i < I; ++i) theta(i) = 0.3 * gauss(eng);
  in.residuals = in.sensitivities * theta;
  for (int j = 0; j < J; ++j) in.residuals(j) += 0.05 * gauss(eng);
  in.noise_vars = Eigen::VectorXd::Constant(J, 0.05 * 0.05);
  return in;
}

void BM_circe_with_bias(benchmark::State& state) {
  const auto in = circe_problem(static_cast<int>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(iuq::circe_with_bias(in));
}
BENCHMARK(BM_circe_with_bias)->Arg(50)->Arg(200)->Arg(800);

void BM_gp_fit(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 eng(7);
  std::uniform_real_distribution<double> unif(0.0, 3.0);
  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXd y(n);
  for (int k = 0; k < n; ++k) {
    x(k, 0) = unif(eng);
    x(k, 1) = unif(eng);
    y(k) = std::sin(x(k, 0)) + 0.3 * x(k, 1) * x(k, 1);
  }
  for (auto _ : state) benchmark::DoNotOptimize(iuq::gp_fit(x, y));
}
BENCHMARK(BM_gp_fit)->Arg(15)->Arg(40);

void BM_gp_predict(benchmark::State& state) {
  std::mt19937_64 eng(7);
  std::uniform_real_distribution<double> unif(0.0, 3.0);
  Eigen::MatrixXd x(30, 2);
  Eigen::VectorXd y(30);
  for (int k = 0; k < 30; ++k) {
    x(k, 0) = unif(eng);
    x(k, 1) = unif(eng);
    y(k) = std::sin(x(k, 0)) + 0.3 * x(k, 1) * x(k, 1);
  }
  const iuq::GpModel gp = iuq::gp_fit(x, y);
  Eigen::VectorXd pt(2);
  pt << 1.1, 2.2;
  for (auto _ : state) benchmark::DoNotOptimize(gp.predict(pt));
}
BENCHMARK(BM_gp_predict);

void BM_mh_sample(benchmark::State& state) {
  const auto log_target = [](const Eigen::VectorXd& t) { return -0.5 * t.squaredNorm(); };
  iuq::McmcConfig cfg;
  cfg.length = static_cast<int>(state.range(0));
  cfg.rng = iuq::RngStream{42, 0};
  const Eigen::VectorXd init = Eigen::VectorXd::Zero(3);
  for (auto _ : state) benchmark::DoNotOptimize(iuq::mh_sample(log_target, init, cfg));
  state.SetItemsProcessed(state.iterations() * cfg.length);
}
BENCHMARK(BM_mh_sample)->Arg(5000)->Arg(20000);

void BM_forward_uq(benchmark::State& state) {
  Eigen::MatrixXd S(4, 2);
  S << 1.0, 0.5, 0.4, 1.2, -0.8, 0.3, 0.2, -0.6;
  const iuq::ModelSpec model = iuq::make_linear_model(S);
  iuq::ParamSampler sampler;
  sampler.kind = iuq::ParamSampler::Kind::Gaussian;
  sampler.gaussian.mean = Eigen::VectorXd::Zero(2);
  sampler.gaussian.var = Eigen::VectorXd::Constant(2, 0.04);
  std::vector<iuq::DesignPoint> designs(6);
  for (auto& d : designs) d.values = Eigen::VectorXd::Zero(1);
  const int jobs = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(
        iuq::forward_uq(model, sampler, designs, 2000, iuq::RngStream{5, 0}, jobs));
}
BENCHMARK(BM_forward_uq)->Arg(1)->Arg(4);

}  // namespace

BENCHMARK_MAIN();
