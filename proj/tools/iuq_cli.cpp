#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "iuq/fuq.hpp"
#include "iuq/scenario.hpp"
#include "iuq/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

struct GlobalOpts {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 1;
  bool verbose = false;
};

iuq::ScenarioConfig load_with_overrides(const GlobalOpts& g) {
  if (g.config_path.empty())
    throw iuq::ValidationError("--config is required for this subcommand");
  iuq::ScenarioConfig cfg = iuq::load_scenario(g.config_path);
  if (g.seed_set) {
    cfg.seed = g.seed;
    cfg.raw["seed"] = g.seed;
  }
  return cfg;
}

int run_generate(const GlobalOpts& g) {
  const iuq::ScenarioConfig cfg = load_with_overrides(g);
  const iuq::ModelSpec model = iuq::make_scenario_model(cfg);
  const auto records = iuq::generate_synthetic_experiments(model, cfg.truth, cfg.designs,
                                                           cfg.noise_sd, cfg.seed);
  fs::create_directories(g.out_dir);
  iuq::write_experiments_csv(fs::path(g.out_dir) / "experiments.csv", records, {});

  iuq::ordered_json report;
  report["schema_version"] = "1";
  report["scenario"]["config_hash"] = cfg.raw.dump().empty() ? "" : [&] {
    std::ostringstream os;
    os << std::hex << iuq::fnv1a_hash(cfg.raw.dump());
    return os.str();
  }();
  report["scenario"]["seed"] = cfg.seed;
  report["scenario"]["model"] = cfg.model;
  report["generation"]["n_experiments"] = records.size();
  iuq::emit_report(report, fs::path(g.out_dir) / "report.json");
  if (g.verbose)
    std::cerr << "wrote " << records.size() << " experiments to " << g.out_dir << "\n";
  return 0;
}

int run_iuq(const GlobalOpts& g, const std::string& method) {
  iuq::ScenarioConfig cfg = load_with_overrides(g);
  cfg.raw["method"] = method;
  cfg = iuq::parse_scenario(cfg.raw);  // re-validate with the override applied
  iuq::run_scenario(cfg, g.out_dir, g.jobs, g.verbose);
  return 0;
}

// Forward UQ under the truth spec itself: the self-consistency baseline.
int run_fuq_or_envelope(const GlobalOpts& g, bool envelope_only) {
  const iuq::ScenarioConfig cfg = load_with_overrides(g);
  const iuq::ModelSpec model = iuq::make_scenario_model(cfg);
  const auto records = iuq::generate_synthetic_experiments(model, cfg.truth, cfg.designs,
                                                           cfg.noise_sd, cfg.seed);
  std::vector<iuq::DesignPoint> designs;
  for (const auto& rec : records) designs.push_back(rec.design);

  iuq::ParamSampler sampler;
  sampler.kind = iuq::ParamSampler::Kind::Gaussian;
  sampler.gaussian = cfg.truth;
  const iuq::FuqResult fuq = iuq::forward_uq(model, sampler, designs, cfg.fuq_samples,
                                             iuq::RngStream{cfg.seed, 7000}, g.jobs);
  const iuq::EnvelopeReport env = iuq::envelope_check(fuq, records, cfg.envelope_target);

  iuq::ordered_json report;
  report["schema_version"] = "1";
  {
    std::ostringstream os;
    os << std::hex << iuq::fnv1a_hash(cfg.raw.dump());
    report["scenario"]["config_hash"] = os.str();
  }
  report["scenario"]["seed"] = cfg.seed;
  report["scenario"]["model"] = cfg.model;
  report["forward_uq"]["n_samples"] = fuq.n_samples;
  report["forward_uq"]["n_failures"] = fuq.n_failures;
  report["envelope"]["overall_coverage"] = env.overall_coverage;
  report["envelope"]["target"] = env.target;
  report["envelope"]["pass"] = env.pass;

  fs::create_directories(g.out_dir);
  iuq::emit_report(report, fs::path(g.out_dir) / "report.json");
  if (envelope_only || g.verbose)
    std::cout << "envelope coverage " << env.overall_coverage << " (target " << env.target
              << (env.pass ? "): pass\n" : "): fail\n");
  return 0;
}

int run_report(const GlobalOpts& g) {
  const fs::path path = fs::path(g.out_dir) / "report.json";
  std::ifstream in(path);
  if (!in) throw iuq::ValidationError("no report at " + path.string());
  iuq::ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw iuq::ValidationError(std::string("report parse failure: ") + e.what());
  }
  if (!j.contains("schema_version") || j.at("schema_version") != "1")
    throw iuq::ValidationError("report schema version is not \"1\"");
  iuq::emit_report(j, path);  // round-trip rewrite, validating stability
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"inverse uncertainty quantification toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  GlobalOpts g;
  app.add_option("--config", g.config_path, "scenario configuration file (JSON)");
  app.add_option("--out-dir", g.out_dir, "artifact output directory");
  auto* seed_opt = app.add_option("--seed", g.seed, "override the scenario seed");
  app.add_option("--jobs", g.jobs, "worker count for model-evaluation fan-out");
  app.add_flag("--verbose", g.verbose, "progress chatter on stderr");

  auto* cmd_generate = app.add_subcommand("generate", "synthesize experiments only");
  auto* cmd_iuq = app.add_subcommand("iuq", "run one IUQ method end to end");
  std::string method;
  cmd_iuq
      ->add_option("--method", method,
                   "circe|circe-bias|mle-map|iprem|dipe|mcda|mba|sample-adjust")
      ->required();
  auto* cmd_fuq = app.add_subcommand("fuq", "forward UQ under the truth spec");
  auto* cmd_env = app.add_subcommand("envelope", "envelope verification baseline");
  auto* cmd_report = app.add_subcommand("report", "reload and re-emit the report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  g.seed_set = seed_opt->count() > 0;

  try {
    if (cmd_generate->parsed()) return run_generate(g);
    if (cmd_iuq->parsed()) return run_iuq(g, method);
    if (cmd_fuq->parsed()) return run_fuq_or_envelope(g, false);
    if (cmd_env->parsed()) return run_fuq_or_envelope(g, true);
    if (cmd_report->parsed()) return run_report(g);
  } catch (const iuq::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const iuq::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const iuq::ModelFailure& e) {
    std::cerr << "model failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
