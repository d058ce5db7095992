#include "iuq/scenario.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "iuq/circe.hpp"
#include "iuq/dipe.hpp"
#include "iuq/fuq.hpp"
#include "iuq/iprem.hpp"
#include "iuq/mba.hpp"
#include "iuq/mcda.hpp"
#include "iuq/models.hpp"
#include "iuq/sensitivity.hpp"
#include "iuq/synthetic.hpp"

namespace iuq {

namespace {

void check_keys(const ordered_json& obj, const std::set<std::string>& allowed,
                const std::string& path) {
  if (!obj.is_object())
    throw ValidationError("config: expected an object at '" + path + "'");
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key))
      throw ValidationError("config: unknown key '" + path + "." + key + "'");
}

Eigen::VectorXd to_vector(const ordered_json& j, const std::string& path) {
  if (!j.is_array()) throw ValidationError("config: '" + path + "' must be an array");
  Eigen::VectorXd v(j.size());
  Eigen::Index i = 0;
  for (const auto& x : j) {
    if (!x.is_number()) throw ValidationError("config: '" + path + "' must be numeric");
    v(i++) = x.get<double>();
  }
  return v;
}

std::vector<ParamTransform> to_transforms(const ordered_json& j, const std::string& path) {
  std::vector<ParamTransform> out;
  for (const auto& s : j) {
    const std::string name = s.get<std::string>();
    if (name == "additive") out.push_back(ParamTransform::Additive);
    else if (name == "exponential") out.push_back(ParamTransform::Exponential);
    else throw ValidationError("config: '" + path + "' entries must be additive|exponential");
  }
  return out;
}

ordered_json vec_json(const Eigen::VectorXd& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

ordered_json mat_json(const Eigen::MatrixXd& m) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vec_json(m.row(i).transpose()));
  return a;
}

}  // namespace

std::uint64_t fnv1a_hash(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

ScenarioConfig parse_scenario(const ordered_json& j) {
  check_keys(j, {"model", "affine_S", "truth", "designs", "noise_sd", "seed", "method",
                 "method_options", "fuq_samples", "envelope_target"},
             "");
  ScenarioConfig cfg;
  cfg.raw = j;

  if (!j.contains("model")) throw ValidationError("config: missing 'model'");
  cfg.model = j.at("model").get<std::string>();
  if (cfg.model != "affine" && cfg.model != "scalar-exp" && cfg.model != "reflood")
    throw ValidationError("config: 'model' must be affine|scalar-exp|reflood");

  if (cfg.model == "affine") {
    if (!j.contains("affine_S"))
      throw ValidationError("config: missing 'affine_S' for the affine model");
    const auto& rows = j.at("affine_S");
    if (!rows.is_array() || rows.empty())
      throw ValidationError("config: 'affine_S' must be a non-empty array of rows");
    cfg.affine_S.resize(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const Eigen::VectorXd row = to_vector(rows[r], "affine_S");
      if (row.size() != cfg.affine_S.cols())
        throw ValidationError("config: ragged 'affine_S'");
      cfg.affine_S.row(static_cast<Eigen::Index>(r)) = row.transpose();
    }
  }

  if (!j.contains("truth")) throw ValidationError("config: missing 'truth'");
  check_keys(j.at("truth"), {"mean", "var", "transform"}, "truth");
  if (!j.at("truth").contains("mean") || !j.at("truth").contains("var"))
    throw ValidationError("config: 'truth' needs 'mean' and 'var'");
  cfg.truth.mean = to_vector(j.at("truth").at("mean"), "truth.mean");
  cfg.truth.var = to_vector(j.at("truth").at("var"), "truth.var");
  if (j.at("truth").contains("transform"))
    cfg.truth.transform = to_transforms(j.at("truth").at("transform"), "truth.transform");
  cfg.truth.validate();

  if (!j.contains("designs")) throw ValidationError("config: missing 'designs'");
  for (const auto& d : j.at("designs")) {
    DesignPoint x;
    x.values = to_vector(d, "designs");
    cfg.designs.push_back(std::move(x));
  }
  if (cfg.designs.empty()) throw ValidationError("config: 'designs' must be non-empty");

  if (!j.contains("noise_sd")) throw ValidationError("config: missing 'noise_sd'");
  if (j.at("noise_sd").is_number()) {
    cfg.noise_sd.resize(1);
    cfg.noise_sd(0) = j.at("noise_sd").get<double>();
  } else {
    cfg.noise_sd = to_vector(j.at("noise_sd"), "noise_sd");
  }
  if ((cfg.noise_sd.array() < 0.0).any())
    throw ValidationError("config: 'noise_sd' must be nonnegative");

  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("method")) cfg.method = j.at("method").get<std::string>();
  cfg.method_options = ordered_json::object();
  if (j.contains("method_options")) cfg.method_options = j.at("method_options");
  if (j.contains("fuq_samples")) cfg.fuq_samples = j.at("fuq_samples").get<int>();
  if (j.contains("envelope_target"))
    cfg.envelope_target = j.at("envelope_target").get<double>();

  static const std::set<std::string> methods = {
      "", "circe", "circe-bias", "mle-map", "iprem", "dipe", "mcda", "mba",
      "sample-adjust"};
  if (!methods.count(cfg.method))
    throw ValidationError("config: unknown method '" + cfg.method + "'");
  return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path.string());
  ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ValidationError(std::string("config parse failure: ") + e.what());
  }
  return parse_scenario(j);
}

ModelSpec make_scenario_model(const ScenarioConfig& config) {
  if (config.model == "affine") return make_linear_model(config.affine_S);
  if (config.model == "scalar-exp") return make_scalar_exp_model();
  return make_reflood_model();
}

void write_experiments_csv(const std::filesystem::path& path,
                           const std::vector<ExperimentRecord>& records,
                           const std::vector<std::string>& design_labels) {
  if (!design_labels.empty() && design_labels.size() != records.size())
    throw ValidationError("write_experiments_csv: label/record count mismatch");
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open for writing: " + path.string());
  out.precision(17);

  const bool timed = !records.empty() && records.front().observed.times.has_value();
  out << (timed ? "design_label,time_s,qoi_label,value,noise_sd\n"
                : "design_label,qoi_label,value,noise_sd\n");
  for (std::size_t e = 0; e < records.size(); ++e) {
    const std::string label =
        design_labels.empty() ? "d" + std::to_string(e) : design_labels[e];
    const auto& rec = records[e];
    for (Eigen::Index j = 0; j < rec.observed.size(); ++j) {
      out << label << ',';
      if (timed) out << (*rec.observed.times)(j) << ',';
      out << 'q' << j << ',' << rec.observed.values(j) << ','
          << std::sqrt(rec.noise_var(j)) << '\n';
    }
  }
}

std::vector<ExperimentRecord> read_experiments_csv(const std::filesystem::path& path,
                                                   const std::vector<DesignPoint>& designs,
                                                   std::vector<std::string>* labels_out) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open experiments file: " + path.string());
  std::string header;
  if (!std::getline(in, header))
    throw ValidationError("experiments file is empty: " + path.string());
  bool timed;
  if (header == "design_label,time_s,qoi_label,value,noise_sd") timed = true;
  else if (header == "design_label,qoi_label,value,noise_sd") timed = false;
  else throw ValidationError("experiments file has an unrecognized header: " + header);

  struct Partial {
    std::vector<double> times, values, noise_var;
  };
  std::vector<std::string> order;
  std::map<std::string, Partial> groups;

  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    const std::size_t expected = timed ? 5 : 4;
    if (fields.size() != expected)
      throw ValidationError("experiments file line " + std::to_string(line_no) +
                            ": expected " + std::to_string(expected) + " fields");
    const std::string& label = fields[0];
    if (!groups.count(label)) order.push_back(label);
    auto& g = groups[label];
    try {
      std::size_t at = 1;
      if (timed) g.times.push_back(std::stod(fields[at++]));
      ++at;  // qoi_label is positional, regenerated on write
      g.values.push_back(std::stod(fields[at++]));
      const double sd = std::stod(fields[at]);
      g.noise_var.push_back(sd * sd);
    } catch (const std::exception&) {
      throw ValidationError("experiments file line " + std::to_string(line_no) +
                            ": numeric parse failure");
    }
  }
  if (order.size() != designs.size())
    throw ValidationError("experiments file has " + std::to_string(order.size()) +
                          " designs; scenario declares " + std::to_string(designs.size()));

  std::vector<ExperimentRecord> records;
  for (std::size_t e = 0; e < order.size(); ++e) {
    const Partial& g = groups[order[e]];
    ExperimentRecord rec;
    rec.design = designs[e];
    rec.observed.values = Eigen::Map<const Eigen::VectorXd>(
        g.values.data(), static_cast<Eigen::Index>(g.values.size()));
    if (timed)
      rec.observed.times = Eigen::Map<const Eigen::VectorXd>(
          g.times.data(), static_cast<Eigen::Index>(g.times.size()));
    rec.noise_var = Eigen::Map<const Eigen::VectorXd>(
        g.noise_var.data(), static_cast<Eigen::Index>(g.noise_var.size()));
    rec.validate();
    records.push_back(std::move(rec));
  }
  if (labels_out) *labels_out = order;
  return records;
}

void emit_report(const ordered_json& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open report path for writing: " + path.string());
  out << report.dump(2) << '\n';
  if (!out) throw ValidationError("failed writing report: " + path.string());
}

namespace {

struct MethodOutcome {
  ordered_json block;
  ParamSampler sampler;  // how to propagate the quantified uncertainty forward
  bool have_sampler = false;
};

// Stack residuals/sensitivities/noise across experiments at the nominal.
CirceInputs stacked_inputs(const ModelSpec& model,
                           const std::vector<ExperimentRecord>& records) {
  std::vector<Eigen::VectorXd> res, noise;
  std::vector<Eigen::MatrixXd> sens;
  Eigen::Index total = 0;
  for (const auto& rec : records) {
    const QoIVector y = evaluate_model(model, rec.design, model.nominal);
    res.push_back(rec.observed.values - y.values);
    sens.push_back(finite_difference_sensitivity(model, rec.design, model.nominal).entries);
    noise.push_back(rec.noise_var);
    total += y.size();
  }
  CirceInputs in;
  in.residuals.resize(total);
  in.sensitivities.resize(total, model.nominal.size());
  in.noise_vars.resize(total);
  Eigen::Index row = 0;
  for (std::size_t k = 0; k < res.size(); ++k) {
    const Eigen::Index n = res[k].size();
    in.residuals.segment(row, n) = res[k];
    in.sensitivities.middleRows(row, n) = sens[k];
    in.noise_vars.segment(row, n) = noise[k];
    row += n;
  }
  return in;
}

ordered_json warnings_json(const std::vector<std::string>& w) {
  ordered_json a = ordered_json::array();
  for (const auto& s : w) a.push_back(s);
  return a;
}

MethodOutcome run_circe_family(const ScenarioConfig& cfg, const ModelSpec& model,
                               const std::vector<ExperimentRecord>& records) {
  check_keys(cfg.method_options, {"max_iter", "tol"}, "method_options");
  CirceInputs in = stacked_inputs(model, records);
  if (cfg.method_options.contains("max_iter"))
    in.options.max_iter = cfg.method_options.at("max_iter").get<int>();
  if (cfg.method_options.contains("tol"))
    in.options.tol = cfg.method_options.at("tol").get<double>();

  CirceEstimate est;
  if (cfg.method == "circe") {
    est = circe_no_bias(in);
  } else if (cfg.method == "circe-bias") {
    in.options.estimate_bias = true;
    est = circe_with_bias(in);
  } else {  // mle-map: one scalar block per QoI row, flat prior
    std::vector<MleMapBlock> blocks;
    for (Eigen::Index j = 0; j < in.residuals.size(); ++j) {
      MleMapBlock blk;
      blk.residual = in.residuals.segment(j, 1);
      blk.sensitivity = in.sensitivities.row(j);
      blk.noise_cov = in.noise_vars.segment(j, 1).asDiagonal();
      blocks.push_back(std::move(blk));
    }
    est = mle_map_estimate(blocks, std::nullopt, in.options);
  }

  MethodOutcome out;
  out.block["mean"] = vec_json(est.spec.mean);
  out.block["var"] = vec_json(est.spec.var);
  out.block["iterations"] = est.iterations;
  out.block["converged"] = est.converged;
  out.block["warnings"] = warnings_json(est.warnings);

  out.sampler.kind = ParamSampler::Kind::Gaussian;
  out.sampler.gaussian = est.spec;
  out.sampler.gaussian.transform = cfg.truth.transform;
  out.have_sampler = true;
  return out;
}

MethodOutcome run_iprem(const ScenarioConfig& cfg, const ModelSpec& model,
                        const std::vector<ExperimentRecord>& records) {
  check_keys(cfg.method_options, {"eta", "m", "weights", "grids"}, "method_options");
  if (!cfg.method_options.contains("grids"))
    throw ValidationError("config: method_options.grids required for iprem");

  IpremOptions opts;
  if (cfg.method_options.contains("eta")) opts.eta = cfg.method_options.at("eta").get<double>();
  if (cfg.method_options.contains("m")) opts.m = cfg.method_options.at("m").get<int>();

  Eigen::VectorXd weights =
      cfg.method_options.contains("weights")
          ? to_vector(cfg.method_options.at("weights"), "method_options.weights")
          : Eigen::VectorXd::Ones(static_cast<Eigen::Index>(records.size()));

  std::vector<IpremGrid> grids;
  for (const auto& g : cfg.method_options.at("grids")) {
    check_keys(g, {"parameter", "lo", "hi", "n"}, "method_options.grids[]");
    IpremGrid grid;
    grid.parameter = g.at("parameter").get<Eigen::Index>();
    const double lo = g.at("lo").get<double>(), hi = g.at("hi").get<double>();
    const int n = g.at("n").get<int>();
    if (n < 3 || !(lo < hi))
      throw ValidationError("config: iprem grid needs lo < hi and n >= 3");
    grid.values.resize(n);
    for (int k = 0; k < n; ++k)
      grid.values(k) = lo + (hi - lo) * k / static_cast<double>(n - 1);
    grids.push_back(std::move(grid));
  }

  const IpremResult res = iprem_quantify(model, records, weights, grids, opts);

  MethodOutcome out;
  out.block["aag_re"] = res.aag_re;
  ordered_json per = ordered_json::array();
  Eigen::VectorXd lo(model.nominal.size()), hi(model.nominal.size());
  lo = model.nominal.values;
  hi = model.nominal.values;
  for (const auto& p : res.per_parameter) {
    ordered_json b;
    b["parameter"] = p.parameter;
    static const char* names[] = {"both-bounds", "upper-only", "lower-only", "none"};
    b["status"] = names[static_cast<int>(p.status)];
    if (p.lower) b["lower"] = *p.lower;
    if (p.upper) b["upper"] = *p.upper;
    b["warnings"] = warnings_json(p.warnings);
    per.push_back(std::move(b));
    lo(p.parameter) = p.lower ? *p.lower : p.grid(0);
    hi(p.parameter) = p.upper ? *p.upper : p.grid(p.grid.size() - 1);
  }
  out.block["per_parameter"] = std::move(per);

  out.sampler.kind = ParamSampler::Kind::Uniform;
  out.sampler.lo = lo;
  out.sampler.hi = hi;
  out.have_sampler = true;
  return out;
}

MethodOutcome run_dipe(const ScenarioConfig& cfg, const ModelSpec& model,
                       const std::vector<ExperimentRecord>& records) {
  check_keys(cfg.method_options, {"parameter", "lo", "hi", "n"}, "method_options");
  for (const char* key : {"parameter", "lo", "hi", "n"})
    if (!cfg.method_options.contains(key))
      throw ValidationError(std::string("config: method_options.") + key +
                            " required for dipe");
  const auto parameter = cfg.method_options.at("parameter").get<Eigen::Index>();
  const double lo = cfg.method_options.at("lo").get<double>();
  const double hi = cfg.method_options.at("hi").get<double>();
  const int n = cfg.method_options.at("n").get<int>();
  if (n < 5 || !(lo < hi)) throw ValidationError("config: dipe grid needs lo < hi, n >= 5");
  Eigen::VectorXd grid(n);
  for (int k = 0; k < n; ++k) grid(k) = lo + (hi - lo) * k / static_cast<double>(n - 1);

  const CoverageCurve curve = dipe_pseudo_cdf(model, records, parameter, grid);
  const DipeBounds bounds = dipe_bounds(curve);

  MethodOutcome out;
  out.block["parameter"] = parameter;
  out.block["monotone"] = curve.monotone;
  out.block["lower"] = bounds.lower;
  out.block["upper"] = bounds.upper;
  out.block["coverage_curve"] = vec_json(curve.coverage);
  out.block["theta_grid"] = vec_json(curve.theta);

  out.sampler.kind = ParamSampler::Kind::Uniform;
  out.sampler.lo = model.nominal.values;
  out.sampler.hi = model.nominal.values;
  out.sampler.lo(parameter) = bounds.lower;
  out.sampler.hi(parameter) = bounds.upper;
  out.have_sampler = true;
  return out;
}

MethodOutcome run_mcda(const ScenarioConfig& cfg, const ModelSpec& model,
                       const std::vector<ExperimentRecord>& records) {
  check_keys(cfg.method_options, {"alpha", "prior_var"}, "method_options");
  const auto& rec = records.front();
  const Eigen::VectorXd prior_var =
      cfg.method_options.contains("prior_var")
          ? to_vector(cfg.method_options.at("prior_var"), "method_options.prior_var")
          : cfg.truth.var;
  const Eigen::MatrixXd sigma_theta = prior_var.asDiagonal();
  const Eigen::MatrixXd sigma_eps = rec.noise_var.asDiagonal();

  double alpha = 1.0;
  std::vector<std::string> warnings;
  const bool want_lcurve = !cfg.method_options.contains("alpha") ||
                           (cfg.method_options.at("alpha").is_string() &&
                            cfg.method_options.at("alpha").get<std::string>() == "lcurve");
  if (want_lcurve) {
    const QoIVector y0 = evaluate_model(model, rec.design, model.nominal);
    const SensitivityMatrix sm =
        finite_difference_sensitivity(model, rec.design, model.nominal);
    Eigen::VectorXd grid(40);
    for (int k = 0; k < 40; ++k) grid(k) = std::pow(10.0, -3.0 + 6.0 * k / 39.0);
    const LCurveResult lc =
        select_alpha_lcurve(rec.observed.values - y0.values, sm.entries,
                            model.nominal.values, sigma_theta, sigma_eps, grid);
    alpha = lc.alpha_star;
    warnings = lc.warnings;
  } else {
    alpha = cfg.method_options.at("alpha").get<double>();
  }

  const McdaPosterior post =
      mcda_deterministic(model, rec.design, model.nominal, sigma_theta, sigma_eps,
                         rec.observed.values, alpha);

  MethodOutcome out;
  out.block["alpha"] = alpha;
  out.block["route"] = "deterministic";
  out.block["theta_post"] = vec_json(post.theta_post);
  out.block["sigma_theta_post"] = mat_json(post.sigma_theta_post);
  out.block["warnings"] = warnings_json(warnings);

  out.sampler.kind = ParamSampler::Kind::Gaussian;
  out.sampler.gaussian.mean = post.theta_post - model.nominal.values;
  out.sampler.gaussian.var = post.sigma_theta_post.diagonal().cwiseMax(0.0);
  out.sampler.gaussian.transform = cfg.truth.transform;
  out.have_sampler = true;
  return out;
}

MethodOutcome run_mba(const ScenarioConfig& cfg, const ModelSpec& model,
                      const std::vector<ExperimentRecord>& records) {
  check_keys(cfg.method_options,
             {"prior", "use_surrogate", "use_bias", "chain_length", "surrogate_budget"},
             "method_options");
  if (!cfg.method_options.contains("prior"))
    throw ValidationError("config: method_options.prior required for mba");

  PriorSpec prior;
  for (const auto& p : cfg.method_options.at("prior")) {
    check_keys(p, {"kind", "a", "b"}, "method_options.prior[]");
    PriorComponent c;
    const std::string kind = p.at("kind").get<std::string>();
    if (kind == "uniform") c.kind = PriorComponent::Kind::Uniform;
    else if (kind == "normal") c.kind = PriorComponent::Kind::Normal;
    else throw ValidationError("config: prior kind must be uniform|normal");
    c.a = p.at("a").get<double>();
    c.b = p.at("b").get<double>();
    prior.params.push_back(c);
  }

  MbaOptions opts;
  if (cfg.method_options.contains("use_surrogate"))
    opts.use_surrogate = cfg.method_options.at("use_surrogate").get<bool>();
  if (cfg.method_options.contains("use_bias"))
    opts.use_bias = cfg.method_options.at("use_bias").get<bool>();
  if (cfg.method_options.contains("chain_length"))
    opts.mcmc.length = cfg.method_options.at("chain_length").get<int>();
  if (cfg.method_options.contains("surrogate_budget"))
    opts.surrogate_budget = cfg.method_options.at("surrogate_budget").get<int>();
  opts.mcmc.rng = RngStream{cfg.seed, 9000};

  const MbaResult res = mba_iuq(model, records, prior, opts);

  MethodOutcome out;
  out.block["mean"] = vec_json(res.mean);
  out.block["sd"] = vec_json(res.sd);
  out.block["ci_lo"] = vec_json(res.ci_lo);
  out.block["ci_hi"] = vec_json(res.ci_hi);
  out.block["acceptance_rate"] = res.chain.acceptance_rate;
  out.block["ess"] = vec_json(res.chain.ess);
  out.block["warnings"] = warnings_json(res.warnings);

  out.sampler.kind = ParamSampler::Kind::Chain;
  out.sampler.chain = res.chain.samples;
  out.have_sampler = true;
  return out;
}

MethodOutcome run_sample_adjust(const ScenarioConfig& cfg, const ModelSpec& model,
                                const std::vector<ExperimentRecord>& records, int jobs) {
  check_keys(cfg.method_options, {"lo", "hi", "n_samples", "max_rounds", "target"},
             "method_options");
  for (const char* key : {"lo", "hi"})
    if (!cfg.method_options.contains(key))
      throw ValidationError(std::string("config: method_options.") + key +
                            " required for sample-adjust");
  SampleAdjustOptions opts;
  opts.rng = RngStream{cfg.seed, 4000};
  opts.jobs = jobs;
  if (cfg.method_options.contains("n_samples"))
    opts.n_samples = cfg.method_options.at("n_samples").get<int>();
  if (cfg.method_options.contains("max_rounds"))
    opts.max_rounds = cfg.method_options.at("max_rounds").get<int>();
  if (cfg.method_options.contains("target"))
    opts.target = cfg.method_options.at("target").get<double>();

  const SampleAdjustResult res = sample_adjust_iuq(
      model, records, to_vector(cfg.method_options.at("lo"), "method_options.lo"),
      to_vector(cfg.method_options.at("hi"), "method_options.hi"), opts);

  MethodOutcome out;
  out.block["lo"] = vec_json(res.lo);
  out.block["hi"] = vec_json(res.hi);
  out.block["converged"] = res.converged;
  ordered_json rounds = ordered_json::array();
  for (const auto& r : res.rounds) {
    ordered_json b;
    b["lo"] = vec_json(r.lo);
    b["hi"] = vec_json(r.hi);
    b["coverage"] = r.coverage;
    rounds.push_back(std::move(b));
  }
  out.block["rounds"] = std::move(rounds);

  out.sampler.kind = ParamSampler::Kind::Uniform;
  out.sampler.lo = res.lo;
  out.sampler.hi = res.hi;
  out.have_sampler = true;
  return out;
}

void write_bands_csv(const std::filesystem::path& path, const FuqResult& fuq,
                     const std::vector<ExperimentRecord>& records) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open for writing: " + path.string());
  out.precision(17);
  out << "design_label,qoi_label,time_s,band_lo,band_median,band_hi,observed\n";
  for (std::size_t e = 0; e < fuq.bands.size(); ++e) {
    const auto& band = fuq.bands[e];
    for (Eigen::Index j = 0; j < band.lo.size(); ++j) {
      out << 'd' << e << ",q" << j << ',';
      if (band.times) out << (*band.times)(j);
      out << ',' << band.lo(j) << ',' << band.median(j) << ',' << band.hi(j) << ','
          << records[e].observed.values(j) << '\n';
    }
  }
}

}  // namespace

ScenarioOutcome run_scenario(const ScenarioConfig& config,
                             const std::filesystem::path& out_dir, int jobs,
                             bool verbose) {
  std::filesystem::create_directories(out_dir);
  const ModelSpec model = make_scenario_model(config);
  if (config.truth.mean.size() != model.nominal.size())
    throw ValidationError("config: truth dimension does not match the model (" +
                          std::to_string(model.nominal.size()) + " parameters)");

  std::ostringstream hash_hex;
  hash_hex << std::hex << fnv1a_hash(config.raw.dump());

  ordered_json report;
  report["schema_version"] = "1";
  report["scenario"]["config_hash"] = hash_hex.str();
  report["scenario"]["seed"] = config.seed;
  report["scenario"]["model"] = config.model;
  report["scenario"]["method"] = config.method;

  if (verbose) std::cerr << "generating synthetic experiments\n";
  const std::vector<ExperimentRecord> records = generate_synthetic_experiments(
      model, config.truth, config.designs, config.noise_sd, config.seed);
  write_experiments_csv(out_dir / "experiments.csv", records, {});
  report["generation"]["n_experiments"] = records.size();
  report["generation"]["noise_sd"] = vec_json(config.noise_sd);

  report["methods"] = ordered_json::object();
  MethodOutcome method;
  if (!config.method.empty()) {
    if (verbose) std::cerr << "running method " << config.method << "\n";
    if (config.method == "circe" || config.method == "circe-bias" ||
        config.method == "mle-map")
      method = run_circe_family(config, model, records);
    else if (config.method == "iprem") method = run_iprem(config, model, records);
    else if (config.method == "dipe") method = run_dipe(config, model, records);
    else if (config.method == "mcda") method = run_mcda(config, model, records);
    else if (config.method == "mba") method = run_mba(config, model, records);
    else method = run_sample_adjust(config, model, records, jobs);
    report["methods"][config.method] = method.block;
  }

  if (method.have_sampler) {
    if (verbose) std::cerr << "forward UQ with " << config.fuq_samples << " samples\n";
    std::vector<DesignPoint> designs;
    for (const auto& rec : records) designs.push_back(rec.design);
    const FuqResult fuq = forward_uq(model, method.sampler, designs, config.fuq_samples,
                                     RngStream{config.seed, 7000}, jobs);
    write_bands_csv(out_dir / "bands.csv", fuq, records);
    report["forward_uq"]["n_samples"] = fuq.n_samples;
    report["forward_uq"]["n_failures"] = fuq.n_failures;

    const EnvelopeReport env = envelope_check(fuq, records, config.envelope_target);
    report["envelope"]["overall_coverage"] = env.overall_coverage;
    report["envelope"]["target"] = env.target;
    report["envelope"]["pass"] = env.pass;
    ordered_json per = ordered_json::array();
    for (const double c : env.per_design_coverage) per.push_back(c);
    report["envelope"]["per_design_coverage"] = std::move(per);
  }

  ScenarioOutcome outcome;
  outcome.report = report;
  outcome.report_path = out_dir / "report.json";
  emit_report(report, outcome.report_path);
  return outcome;
}

}  // namespace iuq
