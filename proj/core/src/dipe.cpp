#include "iuq/dipe.hpp"

#include <algorithm>
#include <sstream>

namespace iuq {

void CoverageCurve::validate() const {
  if (theta.size() != coverage.size() || theta.size() < 2)
    throw ValidationError("CoverageCurve: theta/coverage size mismatch or too short");
  for (Eigen::Index i = 1; i < theta.size(); ++i)
    if (!(theta(i) > theta(i - 1)))
      throw ValidationError("CoverageCurve: theta must be strictly increasing");
  if ((coverage.array() < 0.0).any() || (coverage.array() > 1.0).any())
    throw ValidationError("CoverageCurve: coverage outside [0, 1]");
}

double coverage_rate(const QoIVector& sim, const QoIVector& data) {
  if (sim.size() == 0 || data.size() == 0)
    throw ValidationError("coverage_rate: empty input");
  if (sim.size() != data.size())
    throw ValidationError("coverage_rate: length mismatch");
  Eigen::Index above = 0;
  for (Eigen::Index j = 0; j < data.size(); ++j)
    if (data.values(j) > sim.values(j)) ++above;
  return static_cast<double>(above) / static_cast<double>(data.size());
}

namespace {

bool monotone_within_band(const Eigen::VectorXd& p, double band) {
  double run_max = p(0), run_min = p(0);
  bool ok_up = true, ok_down = true;
  for (Eigen::Index i = 1; i < p.size(); ++i) {
    run_max = std::max(run_max, p(i));
    run_min = std::min(run_min, p(i));
    if (p(i) < run_max - band) ok_up = false;
    if (p(i) > run_min + band) ok_down = false;
  }
  return ok_up || ok_down;
}

}  // namespace

CoverageCurve dipe_pseudo_cdf(const ModelSpec& model,
                              const std::vector<ExperimentRecord>& experiments,
                              Eigen::Index parameter, const Eigen::VectorXd& theta_grid) {
  if (experiments.empty()) throw ValidationError("dipe_pseudo_cdf: no experiments");
  if (theta_grid.size() < 5)
    throw ValidationError("dipe_pseudo_cdf: need at least 5 grid nodes");
  for (Eigen::Index i = 1; i < theta_grid.size(); ++i)
    if (!(theta_grid(i) > theta_grid(i - 1)))
      throw ValidationError("dipe_pseudo_cdf: grid must be strictly increasing");
  if (parameter < 0 || parameter >= model.nominal.size())
    throw ValidationError("dipe_pseudo_cdf: parameter index out of range");

  CoverageCurve curve;
  curve.theta = theta_grid;
  curve.coverage.resize(theta_grid.size());
  for (Eigen::Index i = 0; i < theta_grid.size(); ++i) {
    CalibrationVector theta = model.nominal;
    theta.values(parameter) = theta_grid(i);
    double sum = 0.0;
    for (const auto& rec : experiments) {
      const QoIVector sim = evaluate_model(model, rec.design, theta);
      sum += coverage_rate(sim, rec.observed);
    }
    curve.coverage(i) = sum / static_cast<double>(experiments.size());
  }
  curve.monotone = monotone_within_band(curve.coverage, 0.02);
  return curve;
}

DipeBounds dipe_bounds(const CoverageCurve& curve, double lo_level, double hi_level) {
  curve.validate();
  if (!(0.0 < lo_level && lo_level < hi_level && hi_level < 1.0))
    throw ValidationError("dipe_bounds: levels must satisfy 0 < lo < hi < 1");
  if (!curve.monotone)
    throw NumericalError(
        "dipe_bounds: pseudo-CDF is not monotone; refusing to invert percentiles");

  // Orientation-normalize: work with a non-decreasing copy of the curve.
  Eigen::VectorXd p = curve.coverage;
  const Eigen::Index n = p.size();
  if (p(n - 1) < p(0)) p = p.reverse().eval();
  Eigen::VectorXd t = curve.theta;
  const bool reversed = curve.coverage(n - 1) < curve.coverage(0);
  if (reversed) t = t.reverse().eval();

  const double pmin = p.minCoeff(), pmax = p.maxCoeff();
  const auto invert = [&](double level) {
    if (level < pmin || level > pmax) {
      std::ostringstream os;
      os << "dipe_bounds: level " << level << " not bracketed; curve spans [" << pmin
         << ", " << pmax << "] — expand the theta design range";
      throw NumericalError(os.str());
    }
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
      const double a = p(k), b = p(k + 1);
      if ((level >= a && level <= b) || (level <= a && level >= b)) {
        if (a == b) return 0.5 * (t(k) + t(k + 1));
        const double w = (level - a) / (b - a);
        return t(k) + w * (t(k + 1) - t(k));
      }
    }
    return t(n - 1);  // level == pmax at the last node
  };

  const double x1 = invert(lo_level);
  const double x2 = invert(hi_level);
  DipeBounds out;
  out.lower = std::min(x1, x2);
  out.upper = std::max(x1, x2);
  return out;
}

CoverageRaster dipe_coverage_raster(const ModelSpec& model,
                                    const std::vector<ExperimentRecord>& experiments,
                                    Eigen::Index param_a, const Eigen::VectorXd& grid_a,
                                    Eigen::Index param_b, const Eigen::VectorXd& grid_b) {
  if (experiments.empty()) throw ValidationError("dipe_coverage_raster: no experiments");
  if (param_a == param_b)
    throw ValidationError("dipe_coverage_raster: parameters must differ");
  if (param_a < 0 || param_a >= model.nominal.size() || param_b < 0 ||
      param_b >= model.nominal.size())
    throw ValidationError("dipe_coverage_raster: parameter index out of range");

  CoverageRaster out;
  out.theta_a = grid_a;
  out.theta_b = grid_b;
  out.coverage.resize(grid_a.size(), grid_b.size());
  for (Eigen::Index i = 0; i < grid_a.size(); ++i) {
    for (Eigen::Index j = 0; j < grid_b.size(); ++j) {
      CalibrationVector theta = model.nominal;
      theta.values(param_a) = grid_a(i);
      theta.values(param_b) = grid_b(j);
      double sum = 0.0;
      for (const auto& rec : experiments) {
        const QoIVector sim = evaluate_model(model, rec.design, theta);
        sum += coverage_rate(sim, rec.observed);
      }
      out.coverage(i, j) = sum / static_cast<double>(experiments.size());
    }
  }
  return out;
}

}  // namespace iuq
