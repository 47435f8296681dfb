// kvtune command-line tool.
#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "kvtune/dataset.hpp"
#include "kvtune/domain.hpp"
#include "kvtune/errors.hpp"
#include "kvtune/experiments.hpp"
#include "kvtune/harness.hpp"
#include "kvtune/optimizer.hpp"
#include "kvtune/oracle.hpp"
#include "kvtune/surrogate.hpp"

using namespace kvtune;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitBackend = 3;

struct Common {
  std::uint64_t seed = 0;
  bool single_thread = false;
  int disks = 1;
  int heap_mb = 8192;

  unsigned threads() const { return single_thread ? 1u : std::max(1u, std::thread::hardware_concurrency()); }
  TuningDomain domain() const { return build_cassandra_domain(disks, heap_mb); }
};

struct Context {
  std::string workload = "50:50";
  int nodes = 4;
  int rf = 3;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Master seed");
  cmd->add_flag("--single-thread", c.single_thread, "Run on one thread (bit-reproducible output)");
  cmd->add_option("--disks", c.disks, "Data disks per node")->check(CLI::PositiveNumber);
  cmd->add_option("--heap-mb", c.heap_mb, "JVM heap per node in MB");
}

void add_context(CLI::App* cmd, Context& c) {
  cmd->add_option("--workload", c.workload, "Read:write mix, e.g. 5:95");
  cmd->add_option("--nodes", c.nodes, "Node count");
  cmd->add_option("--rf", c.rf, "Replication factor");
}

const auto kAlgos = CLI::IsMember({"rf", "gbdt"});
const auto kTargets = CLI::IsMember({"throughput", "read_latency", "write_latency"});
const auto kTds = CLI::IsMember({"td1", "td2", "td3", "td4"});
const auto kOpts = CLI::IsMember({"sa", "hc", "exhaustive"});
const auto kBackends = CLI::IsMember({"synthetic", "external"});

SubdomainSpec make_subdomain(SubdomainId id, const Context& c) {
  std::optional<Workload> w;
  std::optional<Physical> ph;
  if (id == SubdomainId::td2 || id == SubdomainId::td4) w = parse_workload(c.workload);
  if (id == SubdomainId::td3 || id == SubdomainId::td4) ph = Physical{c.nodes, c.rf};
  return SubdomainSpec::make(id, w, ph);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  out << text;
}

void emit(const ExperimentReport& report, const std::string& out_path) {
  if (!out_path.empty()) write_text(out_path, report.csv());
  std::cout << report.render_table();
}

// Backend selection shared by generate and compare.
struct BackendChoice {
  std::string kind = "synthetic";
  std::string config_path;
  std::optional<double> sigma;
};

void add_backend(CLI::App* cmd, BackendChoice& b) {
  cmd->add_option("--backend", b.kind, "synthetic or external")->check(kBackends);
  cmd->add_option("--backend-config", b.config_path, "Harness TOML")->check(CLI::ExistingFile);
  cmd->add_option("--sigma", b.sigma, "Relative noise of the synthetic backend")->check(CLI::NonNegativeNumber);
}

HarnessConfig resolve_config(const BackendChoice& b, const Common& c, bool seed_given) {
  HarnessConfig cfg;
  if (!b.config_path.empty()) {
    cfg = load_harness_config(b.config_path);
  } else {
    cfg.disks = c.disks;
    cfg.heap_mb = c.heap_mb;
    cfg.oracle.seed = derive_seed(c.seed, 1);
  }
  cfg.backend = b.kind == "external" ? BackendKind::external : BackendKind::synthetic;
  if (seed_given) cfg.oracle.seed = derive_seed(c.seed, 1);
  if (b.sigma) cfg.oracle.noise_sigma = *b.sigma;
  if (cfg.backend == BackendKind::external && !cfg.external)
    throw ValidationError("--backend external needs --backend-config with an [external] table");
  return cfg;
}

std::unique_ptr<BenchmarkBackend> make_backend(const HarnessConfig& cfg) {
  const auto domain = build_cassandra_domain(cfg.disks, cfg.heap_mb);
  if (cfg.backend == BackendKind::external) return std::make_unique<ExternalBackend>(domain, *cfg.external);
  return std::make_unique<SyntheticBackend>(domain, cfg.oracle);
}

// Reads knob values from a tune report CSV (parameter,value rows).
ConfigurationPoint read_tuned_point(const std::string& path, const TuningDomain& domain, const Workload& w,
                                    const Physical& ph) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read " + path);
  ConfigurationPoint p = default_configuration(domain, w, ph);
  std::vector<bool> seen(domain.size(), false);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    const auto idx = domain.find(line.substr(0, comma));
    if (!idx || !domain.parameter(*idx).tunable()) continue;
    try {
      p[*idx] = std::stoi(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw ValidationError(path + ": bad value for " + domain.parameter(*idx).name);
    }
    seen[*idx] = true;
  }
  for (Param k : kKnobParams)
    if (!seen[k]) throw ValidationError(path + ": missing knob " + domain.parameter(k).name);
  require_valid(domain, p);
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Surrogate-model configuration tuner for replicated key-value stores"};
  app.require_subcommand(1);
  Common common;

  // domain show
  auto* domain_cmd = app.add_subcommand("domain", "Inspect the tuning domain");
  auto* domain_show = domain_cmd->add_subcommand("show", "Print parameters and their domains");
  domain_cmd->require_subcommand(1);
  domain_show->add_option("--disks", common.disks)->check(CLI::PositiveNumber);
  domain_show->add_option("--heap-mb", common.heap_mb);

  // dataset generate | summarize | split
  auto* dataset_cmd = app.add_subcommand("dataset", "Generate, summarize or split datasets");
  dataset_cmd->require_subcommand(1);
  auto* gen_cmd = dataset_cmd->add_subcommand("generate", "Measure sampled configurations");
  std::string out_path, log_path, data_path;
  std::size_t gen_size = 2400;
  std::vector<std::string> excludes;
  BackendChoice backend;
  add_common(gen_cmd, common);
  add_backend(gen_cmd, backend);
  gen_cmd->add_option("--out", out_path, "Dataset CSV")->required();
  gen_cmd->add_option("--size", gen_size, "Examples in the default plan (ignored when the config has cells)");
  gen_cmd->add_option("--exclude", excludes, "Physical designs to leave out, as n:rf");
  gen_cmd->add_option("--log", log_path, "Generation log (JSON lines)");

  auto* sum_cmd = dataset_cmd->add_subcommand("summarize", "Per-cell counts and metric ranges");
  add_common(sum_cmd, common);
  sum_cmd->add_option("--data", data_path, "Dataset CSV")->required()->check(CLI::ExistingFile);
  sum_cmd->add_option("--out", out_path, "Summary CSV");

  auto* split_cmd = dataset_cmd->add_subcommand("split", "Seeded train/test split");
  double fraction = 0.75;
  std::string test_out;
  add_common(split_cmd, common);
  split_cmd->add_option("--data", data_path, "Dataset CSV")->required()->check(CLI::ExistingFile);
  split_cmd->add_option("--out", out_path, "Training CSV")->required();
  split_cmd->add_option("--test-out", test_out, "Test CSV")->required();
  split_cmd->add_option("--fraction", fraction, "Training fraction")->check(CLI::Range(0.0, 1.0));

  // train
  auto* train_cmd = app.add_subcommand("train", "Fit a surrogate model");
  std::string algo = "gbdt";
  std::string target = "throughput";
  std::string td = "td1";
  Context ctx;
  std::size_t budget = 60;
  bool no_tune = false;
  add_common(train_cmd, common);
  add_context(train_cmd, ctx);
  train_cmd->add_option("--data", data_path, "Dataset CSV")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", out_path, "Model file")->required();
  train_cmd->add_option("--algo", algo)->check(kAlgos);
  train_cmd->add_option("--target", target)->check(kTargets);
  train_cmd->add_option("--td", td)->check(kTds);
  train_cmd->add_option("--budget", budget, "Hyperparameter trials")->check(CLI::PositiveNumber);
  train_cmd->add_flag("--no-tune", no_tune, "Use default hyperparameters");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a model on a dataset");
  std::string model_path;
  add_common(eval_cmd, common);
  eval_cmd->add_option("--model", model_path, "Model file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--data", data_path, "Dataset CSV")->required()->check(CLI::ExistingFile);

  // tune
  auto* tune_cmd = app.add_subcommand("tune", "Search knob settings over a model or the synthetic oracle");
  std::string opt = "sa";
  std::size_t search_budget = 5000;
  std::string trace_path;
  std::optional<std::string> tune_target;
  add_common(tune_cmd, common);
  add_context(tune_cmd, ctx);
  tune_cmd->add_option("--model", model_path, "Model file; omit to search the noiseless synthetic oracle")
      ->check(CLI::ExistingFile);
  tune_cmd->add_option("--target", tune_target, "Objective (defaults to the model's target)")
      ->check(kTargets);
  tune_cmd->add_option("--opt", opt)->check(kOpts);
  tune_cmd->add_option("--budget", search_budget, "Objective evaluations")->check(CLI::PositiveNumber);
  tune_cmd->add_option("--out", out_path, "Report CSV");
  tune_cmd->add_option("--trace", trace_path, "Search trace CSV");

  // compare
  auto* cmp_cmd = app.add_subcommand("compare", "Measure a tuned configuration against the default");
  std::string tuned_path;
  std::size_t trials = 5;
  add_common(cmp_cmd, common);
  add_context(cmp_cmd, ctx);
  add_backend(cmp_cmd, backend);
  cmp_cmd->add_option("--tuned", tuned_path, "Report CSV written by tune --out")->required()->check(CLI::ExistingFile);
  cmp_cmd->add_option("--trials", trials)->check(CLI::PositiveNumber);
  cmp_cmd->add_option("--out", out_path, "Report CSV");

  // learning-curve / subdomain-study
  StudyOptions study;
  std::string study_algo = "gbdt";
  std::string study_target = "throughput";
  std::vector<std::string> td_list{"td1", "td2"};
  auto add_study = [&](CLI::App* cmd) {
    add_common(cmd, common);
    cmd->add_option("--data", data_path, "Dataset CSV")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", out_path, "Report CSV");
    cmd->add_option("--algo", study_algo)->check(kAlgos);
    cmd->add_option("--target", study_target)->check(kTargets);
    cmd->add_option("--sizes", study.sizes, "Training sizes")->delimiter(',');
    cmd->add_option("--test-size", study.test_size)->check(CLI::PositiveNumber);
    cmd->add_option("--seeds", study.seeds, "Repetitions per size")->check(CLI::PositiveNumber);
    cmd->add_option("--budget", study.budget, "Hyperparameter trials per fit (0 = defaults)");
  };
  auto* lc_cmd = app.add_subcommand("learning-curve", "Test error against training size");
  add_study(lc_cmd);
  auto* sd_cmd = app.add_subcommand("subdomain-study", "Test error per tuning subdomain");
  add_study(sd_cmd);
  add_context(sd_cmd, ctx);
  sd_cmd->add_option("--td", td_list, "Subdomains")->delimiter(',')->check(kTds);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (domain_show->parsed()) {
      std::cout << describe(common.domain());
    } else if (gen_cmd->parsed()) {
      auto cfg = resolve_config(backend, common, gen_cmd->count("--seed") > 0);
      if (backend.config_path.empty()) cfg.plan = default_plan(gen_size, common.seed);
      for (const auto& e : excludes) {
        const auto colon = e.find(':');
        if (colon == std::string::npos) throw ValidationError("--exclude expects n:rf, got " + e);
        cfg.plan = exclude_physical(std::move(cfg.plan), {std::stoi(e.substr(0, colon)), std::stoi(e.substr(colon + 1))});
      }
      if (common.single_thread) cfg.generation.threads = 1;
      const auto domain = build_cassandra_domain(cfg.disks, cfg.heap_mb);
      auto be = make_backend(cfg);
      const auto result = generate_dataset(*be, domain, cfg.plan, cfg.generation);
      save_csv(result.dataset, out_path);
      if (!log_path.empty()) {
        std::ofstream log(log_path);
        write_log(result.log, log);
      }
      std::cout << "generated " << result.dataset.size() << " examples, " << result.failed() << " failed\n";
      if (result.dataset.empty()) return kExitBackend;
    } else if (sum_cmd->parsed()) {
      const auto summary = summarize(load_csv(common.domain(), data_path));
      std::cout << render_summary(summary);
      if (!out_path.empty()) {
        std::ofstream out(out_path);
        write_summary_csv(summary, out);
      }
    } else if (split_cmd->parsed()) {
      const auto s = split(load_csv(common.domain(), data_path), fraction, common.seed);
      save_csv(s.train, out_path);
      save_csv(s.test, test_out);
      std::cout << "train " << s.train.size() << ", test " << s.test.size() << '\n';
    } else if (train_cmd->parsed()) {
      TrainOptions o;
      o.algorithm = parse_algorithm(algo);
      o.target = parse_target(target);
      o.subdomain = make_subdomain(parse_subdomain_id(td), ctx);
      o.tune = !no_tune;
      o.budget = budget;
      o.seed = common.seed;
      o.threads = common.threads();
      const auto trained = train_surrogate(load_csv(common.domain(), data_path), o);
      save_model(trained.model, out_path);
      const auto& meta = trained.model.metadata();
      std::cout << "trained " << to_string(meta.algorithm) << " on " << meta.n_train << " examples, "
                << meta.columns.size() << " features";
      if (trained.tuning) std::cout << ", validation " << trained.tuning->validation.to_json();
      std::cout << '\n';
    } else if (eval_cmd->parsed()) {
      const auto model = load_model(model_path);
      const auto data = load_csv(model.domain(), data_path);
      const auto projected = filter_and_project(data, model.metadata().subdomain);
      std::cout << evaluate(model, projected.features, projected.examples.targets(model.metadata().target)).to_json()
                << '\n';
    } else if (tune_cmd->parsed()) {
      TuneRequest req{parse_workload(ctx.workload), {ctx.nodes, ctx.rf}, parse_optimizer(opt), search_budget,
                      common.seed};
      TuneOutcome outcome;
      if (!model_path.empty()) {
        const auto model = load_model(model_path);
        if (tune_target && parse_target(*tune_target) != model.metadata().target)
          throw ValidationError("model predicts " + std::string(to_string(model.metadata().target)) + ", not " +
                                *tune_target);
        outcome = tune_with_model(model, req);
      } else {
        const auto domain = common.domain();
        const auto metric = parse_target(tune_target.value_or("throughput"));
        Objective obj{metric, [&](const ConfigurationPoint& p) { return select(noiseless_metrics(domain, p), metric); }};
        outcome = tune_objective(obj, domain, req);
        outcome.report.add_parameter("objective_source", "synthetic_oracle");
      }
      if (!trace_path.empty()) {
        std::ofstream trace(trace_path);
        write_trace_csv(outcome.result, trace);
      }
      emit(outcome.report, out_path);
      if (outcome.extrapolation) std::cerr << "warning: workload/physical design not seen in training\n";
    } else if (cmp_cmd->parsed()) {
      auto cfg = resolve_config(backend, common, cmp_cmd->count("--seed") > 0);
      const auto domain = build_cassandra_domain(cfg.disks, cfg.heap_mb);
      const Workload w = parse_workload(ctx.workload);
      const Physical ph{ctx.nodes, ctx.rf};
      const auto tuned = read_tuned_point(tuned_path, domain, w, ph);
      auto be = make_backend(cfg);
      const auto cmp = compare_configs(*be, default_configuration(domain, w, ph), tuned, trials, common.seed);
      emit(cmp.report, out_path);
    } else if (lc_cmd->parsed() || sd_cmd->parsed()) {
      study.algorithm = parse_algorithm(study_algo);
      study.target = parse_target(study_target);
      study.seed = common.seed;
      study.threads = common.threads();
      if (study.sizes.empty()) study.sizes = lc_cmd->parsed() ? std::vector<std::size_t>{128, 256, 512, 1024, 2048, 4096, 8192}
                                                               : std::vector<std::size_t>{128, 256, 512, 1024};
      if (sd_cmd->parsed() && sd_cmd->count("--test-size") == 0) study.test_size = 250;
      // Subdomain studies fit with default hyperparameters unless asked to tune.
      if (sd_cmd->parsed() && sd_cmd->count("--budget") == 0) study.budget = 0;
      const auto data = load_csv(common.domain(), data_path);
      if (lc_cmd->parsed()) {
        emit(learning_curve(data, study).report, out_path);
      } else {
        std::vector<SubdomainSpec> tds;
        for (const auto& t : td_list) tds.push_back(make_subdomain(parse_subdomain_id(t), ctx));
        emit(subdomain_study(data, tds, study).report, out_path);
      }
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const BackendError& e) {
    std::cerr << "backend error: " << e.what() << '\n';
    return kExitBackend;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
