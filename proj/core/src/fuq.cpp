#include "iuq/fuq.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "iuq/sensitivity.hpp"

namespace iuq {

void ParamSampler::validate(Eigen::Index n_params) const {
  switch (kind) {
    case Kind::Gaussian:
      gaussian.validate();
      if (gaussian.mean.size() != n_params)
        throw ValidationError("ParamSampler: Gaussian spec size mismatch");
      break;
    case Kind::Uniform:
      if (lo.size() != n_params || hi.size() != n_params)
        throw ValidationError("ParamSampler: uniform range size mismatch");
      if ((lo.array() > hi.array()).any())
        throw ValidationError("ParamSampler: uniform range has lo > hi");
      break;
    case Kind::Chain:
      if (chain.rows() < 1 || chain.cols() != n_params)
        throw ValidationError("ParamSampler: chain shape mismatch");
      break;
  }
}

namespace {

Eigen::MatrixXd draw_parameters(const ParamSampler& sampler, const ModelSpec& model,
                                int n_samples, RngStream rng) {
  const Eigen::Index I = model.nominal.size();
  Eigen::MatrixXd out(n_samples, I);
  auto eng = rng.engine();
  switch (sampler.kind) {
    case ParamSampler::Kind::Gaussian: {
      std::normal_distribution<double> gauss(0.0, 1.0);
      for (int k = 0; k < n_samples; ++k) {
        Eigen::VectorXd theta(I);
        for (Eigen::Index i = 0; i < I; ++i)
          theta(i) = sampler.gaussian.mean(i) +
                     std::sqrt(sampler.gaussian.var(i)) * gauss(eng);
        out.row(k) =
            to_model_space(sampler.gaussian, model.nominal, theta).values.transpose();
      }
      break;
    }
    case ParamSampler::Kind::Uniform: {
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      for (int k = 0; k < n_samples; ++k)
        for (Eigen::Index i = 0; i < I; ++i)
          out(k, i) = sampler.lo(i) + unif(eng) * (sampler.hi(i) - sampler.lo(i));
      break;
    }
    case ParamSampler::Kind::Chain: {
      // Thin (or cycle) the chain to the requested count, deterministically.
      const Eigen::Index rows = sampler.chain.rows();
      for (int k = 0; k < n_samples; ++k) {
        const Eigen::Index idx =
            (static_cast<Eigen::Index>(k) * rows) / n_samples % rows;
        out.row(k) = sampler.chain.row(idx);
      }
      break;
    }
  }
  return out;
}

FuqResult propagate(const ModelSpec& model, const ParamSampler& sampler,
                    const std::vector<DesignPoint>& designs, int n_samples,
                    RngStream rng, int jobs) {
  if (designs.empty()) throw ValidationError("forward_uq: no design points");
  sampler.validate(model.nominal.size());
  jobs = std::max(1, jobs);

  const Eigen::MatrixXd params = draw_parameters(sampler, model, n_samples, rng);

  FuqResult result;
  result.n_samples = n_samples;
  std::atomic<int> failures{0};

  for (const auto& design : designs) {
    const QoIVector probe = evaluate_model(model, design, model.nominal);
    const Eigen::Index J = probe.size();
    Eigen::MatrixXd outputs(n_samples, J);
    std::vector<char> ok(static_cast<std::size_t>(n_samples), 0);

    auto worker = [&](int begin, int end) {
      CalibrationVector cal = model.nominal;
      for (int k = begin; k < end; ++k) {
        cal.values = params.row(k).transpose();
        try {
          outputs.row(k) = evaluate_model(model, design, cal).values.transpose();
          ok[static_cast<std::size_t>(k)] = 1;
        } catch (const ModelFailure&) {
          failures.fetch_add(1, std::memory_order_relaxed);
        }
      }
    };
    if (jobs == 1) {
      worker(0, n_samples);
    } else {
      std::vector<std::thread> pool;
      const int chunk = (n_samples + jobs - 1) / jobs;
      for (int w = 0; w < jobs; ++w) {
        const int b = w * chunk, e = std::min(n_samples, b + chunk);
        if (b < e) pool.emplace_back(worker, b, e);
      }
      for (auto& t : pool) t.join();
    }

    PredictionBand band;
    band.design = design;
    band.times = probe.times;
    band.lo.resize(J);
    band.median.resize(J);
    band.hi.resize(J);
    for (Eigen::Index j = 0; j < J; ++j) {
      std::vector<double> col;
      col.reserve(static_cast<std::size_t>(n_samples));
      for (int k = 0; k < n_samples; ++k)
        if (ok[static_cast<std::size_t>(k)]) col.push_back(outputs(k, j));
      if (col.empty()) throw NumericalError("forward_uq: all samples failed");
      band.lo(j) = quantile(col, 0.025);
      band.median(j) = quantile(col, 0.5);
      band.hi(j) = quantile(col, 0.975);
    }
    result.bands.push_back(std::move(band));
  }

  result.n_failures = failures.load();
  if (result.n_failures > n_samples / 100)
    throw NumericalError("forward_uq: model failed on more than 1% of samples (" +
                         std::to_string(result.n_failures) + ")");
  return result;
}

}  // namespace

FuqResult forward_uq(const ModelSpec& model, const ParamSampler& sampler,
                     const std::vector<DesignPoint>& designs, int n_samples,
                     RngStream rng, int jobs) {
  if (n_samples < 200) throw ValidationError("forward_uq: need at least 200 samples");
  return propagate(model, sampler, designs, n_samples, rng, jobs);
}

EnvelopeReport envelope_check(const FuqResult& bands,
                              const std::vector<ExperimentRecord>& experiments,
                              double target) {
  if (bands.bands.size() != experiments.size())
    throw ValidationError("envelope_check: band/experiment count mismatch");

  EnvelopeReport rep;
  rep.target = target;
  Eigen::Index inside_total = 0, n_total = 0;
  for (std::size_t e = 0; e < experiments.size(); ++e) {
    const auto& band = bands.bands[e];
    const auto& data = experiments[e].observed;
    if (band.lo.size() != data.size())
      throw ValidationError("envelope_check: band/data QoI length mismatch");
    Eigen::Index inside = 0;
    double width = 0.0;
    for (Eigen::Index j = 0; j < data.size(); ++j) {
      if (data.values(j) >= band.lo(j) && data.values(j) <= band.hi(j)) ++inside;
      width += band.hi(j) - band.lo(j);
    }
    rep.per_design_coverage.push_back(static_cast<double>(inside) /
                                      static_cast<double>(data.size()));
    rep.mean_band_width.push_back(width / static_cast<double>(data.size()));
    inside_total += inside;
    n_total += data.size();
  }
  rep.overall_coverage =
      static_cast<double>(inside_total) / static_cast<double>(n_total);
  rep.pass = rep.overall_coverage >= target;
  return rep;
}

SampleAdjustResult sample_adjust_iuq(const ModelSpec& model,
                                     const std::vector<ExperimentRecord>& experiments,
                                     Eigen::VectorXd lo, Eigen::VectorXd hi,
                                     const SampleAdjustOptions& options) {
  const Eigen::Index I = model.nominal.size();
  if (lo.size() != I || hi.size() != I)
    throw ValidationError("sample_adjust_iuq: range size mismatch");
  if (!lo.allFinite() || !hi.allFinite() || (lo.array() >= hi.array()).any())
    throw ValidationError("sample_adjust_iuq: initial ranges must be finite with lo < hi");
  if (options.max_rounds < 1)
    throw ValidationError("sample_adjust_iuq: max_rounds must be >= 1");
  if (options.n_samples < 50)
    throw ValidationError("sample_adjust_iuq: need at least 50 samples per round");
  if (experiments.empty()) throw ValidationError("sample_adjust_iuq: no experiments");

  std::vector<DesignPoint> designs;
  designs.reserve(experiments.size());
  for (const auto& rec : experiments) designs.push_back(rec.design);

  // Per-parameter response direction at the midpoint: decides which side of
  // the theta range to grow when the data escape above or below the band.
  CalibrationVector mid = model.nominal;
  mid.values = 0.5 * (lo + hi);
  Eigen::VectorXd direction(I);
  {
    const SensitivityMatrix sm =
        finite_difference_sensitivity(model, designs.front(), mid);
    for (Eigen::Index i = 0; i < I; ++i)
      direction(i) = sm.entries.col(i).sum() >= 0.0 ? 1.0 : -1.0;
  }

  SampleAdjustResult result;
  for (int round = 0; round < options.max_rounds; ++round) {
    ParamSampler sampler;
    sampler.kind = ParamSampler::Kind::Uniform;
    sampler.lo = lo;
    sampler.hi = hi;
    const FuqResult fuq =
        propagate(model, sampler, designs, options.n_samples,
                  options.rng.split(static_cast<std::uint64_t>(round)), options.jobs);

    bool escaped_above = false, escaped_below = false;
    Eigen::Index inside = 0, total = 0;
    for (std::size_t e = 0; e < experiments.size(); ++e) {
      const auto& band = fuq.bands[e];
      const auto& data = experiments[e].observed;
      for (Eigen::Index j = 0; j < data.size(); ++j) {
        if (data.values(j) > band.hi(j)) escaped_above = true;
        else if (data.values(j) < band.lo(j)) escaped_below = true;
        else ++inside;
        ++total;
      }
    }
    SampleAdjustRound log;
    log.lo = lo;
    log.hi = hi;
    log.coverage = static_cast<double>(inside) / static_cast<double>(total);
    result.rounds.push_back(log);

    if (log.coverage >= options.target) {
      result.converged = true;
      break;
    }

    for (Eigen::Index i = 0; i < I; ++i) {
      const double center = 0.5 * (lo(i) + hi(i));
      const bool grow_up = (escaped_above && direction(i) > 0.0) ||
                           (escaped_below && direction(i) < 0.0);
      const bool grow_down = (escaped_below && direction(i) > 0.0) ||
                             (escaped_above && direction(i) < 0.0);
      if (grow_up) hi(i) = center + options.expansion * (hi(i) - center);
      if (grow_down) lo(i) = center - options.expansion * (center - lo(i));
    }
  }

  result.lo = lo;
  result.hi = hi;
  return result;
}

}  // namespace iuq
