#include "iuq/iprem.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>
#include <unsupported/Eigen/FFT>

namespace iuq {

void TimeSeriesSignal::validate() const {
  if (times.size() != values.size())
    throw ValidationError("TimeSeriesSignal: times/values length mismatch");
  if (times.size() < 2) throw ValidationError("TimeSeriesSignal: need at least 2 samples");
  for (Eigen::Index i = 1; i < times.size(); ++i)
    if (!(times(i) > times(i - 1)))
      throw ValidationError("TimeSeriesSignal: times must be strictly increasing");
  if (!values.allFinite() || !times.allFinite())
    throw ValidationError("TimeSeriesSignal: non-finite entry");
}

namespace {

double interp_at(const TimeSeriesSignal& s, double t) {
  if (t <= s.times(0)) return s.values(0);
  const Eigen::Index n = s.times.size();
  if (t >= s.times(n - 1)) return s.values(n - 1);
  const double* begin = s.times.data();
  const double* it = std::upper_bound(begin, begin + n, t);
  const Eigen::Index hi = it - begin;
  const double t0 = s.times(hi - 1), t1 = s.times(hi);
  const double w = (t - t0) / (t1 - t0);
  return (1.0 - w) * s.values(hi - 1) + w * s.values(hi);
}

Eigen::VectorXd sample_uniform(const TimeSeriesSignal& s, double t0, double t1, int n) {
  Eigen::VectorXd out(n);
  for (int k = 0; k < n; ++k) {
    const double t = t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(n - 1);
    out(k) = interp_at(s, t);
  }
  return out;
}

double spectrum_sum(const Eigen::VectorXd& v) {
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> freq;
  std::vector<double> time(v.data(), v.data() + v.size());
  fft.fwd(freq, time);
  double sum = 0.0;
  for (const auto& c : freq) sum += std::abs(c);
  return sum;
}

}  // namespace

int default_fft_exponent(Eigen::Index n) {
  int m = 3;
  while ((Eigen::Index{1} << m) < n && m < 14) ++m;
  return m;
}

TimeSeriesSignal resample_pow2(const TimeSeriesSignal& signal, int m) {
  signal.validate();
  if (m < 1 || m > 20) throw ValidationError("resample_pow2: exponent out of range");
  const int n = 1 << m;
  TimeSeriesSignal out;
  out.label = signal.label;
  out.times.resize(n);
  const double t0 = signal.times(0), t1 = signal.times(signal.times.size() - 1);
  for (int k = 0; k < n; ++k)
    out.times(k) = t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(n - 1);
  out.values = sample_uniform(signal, t0, t1, n);
  return out;
}

double average_amplitude(const TimeSeriesSignal& model_signal,
                         const TimeSeriesSignal& exp_signal, int m) {
  model_signal.validate();
  exp_signal.validate();
  const double t0 = std::max(model_signal.times(0), exp_signal.times(0));
  const double t1 = std::min(model_signal.times(model_signal.times.size() - 1),
                             exp_signal.times(exp_signal.times.size() - 1));
  if (!(t1 > t0)) throw ValidationError("average_amplitude: signals do not overlap in time");
  const int n = 1 << m;
  const Eigen::VectorXd ym = sample_uniform(model_signal, t0, t1, n);
  const Eigen::VectorXd ye = sample_uniform(exp_signal, t0, t1, n);
  const double denom = spectrum_sum(ye);
  if (denom == 0.0)
    throw NumericalError("average_amplitude: experimental signal has zero spectrum");
  return spectrum_sum(ym - ye) / denom;
}

double global_AA(const std::vector<double>& aa, const Eigen::VectorXd& weights) {
  if (aa.empty()) throw ValidationError("global_AA: empty QoI set");
  if (static_cast<Eigen::Index>(aa.size()) != weights.size())
    throw ValidationError("global_AA: AA/weight length mismatch");
  if ((weights.array() <= 0.0).any())
    throw ValidationError("global_AA: weights must be positive");
  const double total = weights.sum();
  double out = 0.0;
  for (std::size_t z = 0; z < aa.size(); ++z)
    out += weights(static_cast<Eigen::Index>(z)) / total * aa[z];
  return out;
}

double criterion_CR(double aag_se, double aag_sr, double aag_re) {
  if (aag_se < 0.0 || aag_sr < 0.0 || aag_re < 0.0)
    throw ValidationError("criterion_CR: negative AAG");
  if (aag_se >= 1.0)
    throw ValidationError("criterion_CR: AAG_SE >= 1 makes the denominator nonpositive");
  return (aag_se + aag_sr - aag_re) / (1.0 - aag_se);
}

IpremParameterResult extract_bounds(const Eigen::VectorXd& grid, const Eigen::VectorXd& cr,
                                    double nominal, double eta) {
  if (grid.size() != cr.size() || grid.size() < 2)
    throw ValidationError("extract_bounds: grid/CR size mismatch or too short");
  for (Eigen::Index i = 1; i < grid.size(); ++i)
    if (!(grid(i) > grid(i - 1)))
      throw ValidationError("extract_bounds: grid must be strictly ascending");
  if (!(grid(0) <= nominal && nominal <= grid(grid.size() - 1)))
    throw ValidationError("extract_bounds: grid must bracket the nominal");

  IpremParameterResult res;
  res.grid = grid;
  res.cr = cr;

  std::vector<double> below, above;  // crossings on each side of the nominal
  for (Eigen::Index k = 0; k + 1 < grid.size(); ++k) {
    const double a = cr(k) - eta, b = cr(k + 1) - eta;
    if (a == 0.0 && b == 0.0) continue;
    if (a * b > 0.0) continue;
    const double t = a == b ? 0.0 : a / (a - b);
    const double theta = grid(k) + t * (grid(k + 1) - grid(k));
    (theta < nominal ? below : above).push_back(theta);
  }

  const double mono_tol = 1e-12;
  bool nonincreasing = true, nondecreasing = true;
  for (Eigen::Index k = 1; k < cr.size(); ++k) {
    if (cr(k) > cr(k - 1) + mono_tol) nonincreasing = false;
    if (cr(k) < cr(k - 1) - mono_tol) nondecreasing = false;
  }

  const auto note_extra = [&res](const std::vector<double>& v, const char* side) {
    if (v.size() > 1) {
      std::ostringstream os;
      os << v.size() << " threshold crossings " << side
         << " the nominal; using the one nearest the nominal";
      res.warnings.push_back(os.str());
    }
  };

  if (!below.empty() && !above.empty()) {
    res.status = IpremStatus::BothBounds;
    res.lower = *std::max_element(below.begin(), below.end());
    res.upper = *std::min_element(above.begin(), above.end());
    note_extra(below, "below");
    note_extra(above, "above");
    return res;
  }

  const std::vector<double>& only = below.empty() ? above : below;
  if (only.empty()) {
    res.status = IpremStatus::None;
    res.warnings.push_back("CR never crosses the threshold; reduce eta and retry");
    return res;
  }

  // Single-sided crossing. A profile sliding monotonically through the
  // threshold pins only one end of the range: decreasing profiles cap it from
  // above, increasing ones from below. Otherwise classify by side.
  const double theta = below.empty() ? *std::min_element(only.begin(), only.end())
                                     : *std::max_element(only.begin(), only.end());
  note_extra(only, below.empty() ? "above" : "below");
  if (nonincreasing) {
    res.status = IpremStatus::UpperOnly;
    res.upper = theta;
  } else if (nondecreasing) {
    res.status = IpremStatus::LowerOnly;
    res.lower = theta;
  } else if (below.empty()) {
    res.status = IpremStatus::UpperOnly;
    res.upper = theta;
  } else {
    res.status = IpremStatus::LowerOnly;
    res.lower = theta;
  }
  return res;
}

IpremResult iprem_quantify(const ModelSpec& model,
                           const std::vector<ExperimentRecord>& experiments,
                           const Eigen::VectorXd& weights,
                           const std::vector<IpremGrid>& grids,
                           const IpremOptions& options) {
  if (experiments.empty()) throw ValidationError("iprem_quantify: no experiments");
  if (static_cast<Eigen::Index>(experiments.size()) != weights.size())
    throw ValidationError("iprem_quantify: experiment/weight count mismatch");
  if (model.output_kind != OutputKind::TimeSeries)
    throw ValidationError("iprem_quantify: model must produce time-series output");
  if (!(options.eta > 0.0)) throw ValidationError("iprem_quantify: eta must be positive");

  const auto to_signal = [](const QoIVector& q, const std::string& label) {
    if (!q.times) throw ValidationError("iprem_quantify: QoI lacks time stamps");
    TimeSeriesSignal s;
    s.times = *q.times;
    s.values = q.values;
    s.label = label;
    s.validate();
    return s;
  };

  std::vector<TimeSeriesSignal> exp_signals, ref_signals;
  Eigen::Index max_samples = 0;
  for (const auto& rec : experiments) {
    exp_signals.push_back(to_signal(rec.observed, "exp"));
    const QoIVector ref = evaluate_model(model, rec.design, model.nominal);
    ref_signals.push_back(to_signal(ref, "ref"));
    max_samples = std::max(max_samples, rec.observed.size());
  }
  const int m = options.m > 0 ? options.m : default_fft_exponent(max_samples);

  std::vector<double> aa_re(experiments.size());
  for (std::size_t z = 0; z < experiments.size(); ++z)
    aa_re[z] = average_amplitude(ref_signals[z], exp_signals[z], m);

  IpremResult out;
  out.aag_re = global_AA(aa_re, weights);

  for (const auto& grid : grids) {
    if (grid.parameter < 0 || grid.parameter >= model.nominal.size())
      throw ValidationError("iprem_quantify: grid parameter index out of range");
    const double nominal = model.nominal.values(grid.parameter);
    Eigen::VectorXd cr(grid.values.size());
    for (Eigen::Index j = 0; j < grid.values.size(); ++j) {
      CalibrationVector theta = model.nominal;
      theta.values(grid.parameter) = grid.values(j);
      std::vector<double> aa_se(experiments.size()), aa_sr(experiments.size());
      for (std::size_t z = 0; z < experiments.size(); ++z) {
        const TimeSeriesSignal pert =
            to_signal(evaluate_model(model, experiments[z].design, theta), "pert");
        aa_se[z] = average_amplitude(pert, exp_signals[z], m);
        aa_sr[z] = average_amplitude(pert, ref_signals[z], m);
      }
      cr(j) = criterion_CR(global_AA(aa_se, weights), global_AA(aa_sr, weights), out.aag_re);
    }
    IpremParameterResult res = extract_bounds(grid.values, cr, nominal, options.eta);
    res.parameter = grid.parameter;
    out.per_parameter.push_back(std::move(res));
  }
  return out;
}

}  // namespace iuq
