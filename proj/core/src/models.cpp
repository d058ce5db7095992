#include "iuq/models.hpp"

#include <cmath>
#include <utility>

namespace iuq {

ModelSpec make_affine_model(Eigen::MatrixXd S, Eigen::MatrixXd B, Eigen::VectorXd c) {
  const Eigen::Index n_theta = S.cols();
  ModelSpec spec;
  spec.name = "affine";
  spec.output_kind = OutputKind::ScalarSet;
  spec.nominal.values = Eigen::VectorXd::Zero(n_theta);
  spec.evaluator = [S = std::move(S), B = std::move(B), c = std::move(c)](
                       const DesignPoint& x, const CalibrationVector& theta) {
    QoIVector out;
    out.values = S * theta.values + c;
    if (B.size() > 0) out.values += B * x.values;
    return out;
  };
  return spec;
}

ModelSpec make_linear_model(Eigen::MatrixXd S) {
  return make_affine_model(std::move(S), Eigen::MatrixXd(), Eigen::VectorXd::Zero(S.rows()));
}

ModelSpec make_scalar_exp_model() {
  ModelSpec spec;
  spec.name = "scalar-exp";
  spec.output_kind = OutputKind::ScalarSet;
  spec.nominal.values = Eigen::Vector2d(1.0, 1.0);
  spec.evaluator = [](const DesignPoint& x, const CalibrationVector& theta) {
    QoIVector out;
    out.values.resize(1);
    out.values(0) = theta.values(0) * std::exp(theta.values(1) * x.values(0));
    return out;
  };
  return spec;
}

namespace {

// Single-node cladding energy balance during reflood. Before the quench
// front reaches the measurement elevation the rod sees weak steam cooling
// (scaled by theta1); after quench the heat transfer jumps. Decay power
// falls off exponentially.
struct RefloodParams {
  double t_sat = 400.0;     // coolant saturation temperature, K
  double q0 = 2.0;          // initial decay-heat rate, K/s
  double q_tau = 150.0;     // decay time constant, s
  double h_pre = 0.008;     // pre-quench cooling coefficient, 1/s
  double h_post = 0.35;     // post-quench cooling coefficient, 1/s
  double v_quench = 0.01;   // nominal quench front speed, m/s
  double t_end = 400.0;     // transient duration, s
  double dt_out = 4.0;      // output sampling period, s
  double h_rk4 = 0.05;      // integrator step, s
};

}  // namespace

ModelSpec make_reflood_model() {
  ModelSpec spec;
  spec.name = "reflood";
  spec.output_kind = OutputKind::TimeSeries;
  spec.nominal.values = Eigen::Vector2d(1.0, 1.0);
  spec.nominal.labels = {"wall_htc_mult", "quench_speed_mult"};
  spec.evaluator = [](const DesignPoint& x, const CalibrationVector& theta) {
    const RefloodParams p;
    const double z_meas = x.values(0);
    const double T0 = x.values.size() > 1 ? x.values(1) : 1100.0;
    const double htc_mult = theta.values(0);
    const double speed_mult = theta.values(1);
    const double t_quench = z_meas / (p.v_quench * std::max(speed_mult, 1e-12));

    auto rhs = [&](double t, double T) {
      const double q = p.q0 * std::exp(-t / p.q_tau);
      const double h = (t < t_quench) ? p.h_pre * htc_mult : p.h_post;
      return q - h * (T - p.t_sat);
    };

    const int n_out = static_cast<int>(p.t_end / p.dt_out) + 1;
    QoIVector out;
    out.values.resize(n_out);
    out.times = Eigen::VectorXd(n_out);

    double T = T0;
    double t = 0.0;
    int k = 0;
    const int steps_per_out = static_cast<int>(p.dt_out / p.h_rk4 + 0.5);
    out.values(k) = T;
    (*out.times)(k) = t;
    ++k;
    while (k < n_out) {
      for (int s = 0; s < steps_per_out; ++s) {
        const double h = p.h_rk4;
        const double k1 = rhs(t, T);
        const double k2 = rhs(t + 0.5 * h, T + 0.5 * h * k1);
        const double k3 = rhs(t + 0.5 * h, T + 0.5 * h * k2);
        const double k4 = rhs(t + h, T + h * k3);
        T += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += h;
      }
      out.values(k) = T;
      (*out.times)(k) = t;
      ++k;
    }
    return out;
  };
  return spec;
}

}  // namespace iuq
