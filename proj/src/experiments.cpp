#include "kvtune/experiments.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <sstream>

#include "kvtune/errors.hpp"
#include "kvtune/random.hpp"

namespace kvtune {

void ExperimentReport::add_row(std::vector<std::string> row) {
  if (row.size() != columns.size())
    throw std::logic_error("report row has " + std::to_string(row.size()) + " cells, expected " +
                           std::to_string(columns.size()));
  rows.push_back(std::move(row));
}

void ExperimentReport::write_csv(std::ostream& out) const {
  out << "# experiment=" << id << '\n';
  for (const auto& [k, v] : parameters) out << "# " << k << '=' << v << '\n';
  for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
    out << '\n';
  }
}

std::string ExperimentReport::csv() const {
  std::ostringstream os;
  write_csv(os);
  return os.str();
}

std::string ExperimentReport::render_table() const {
  std::ostringstream os;
  os << id << '\n';
  for (const auto& [k, v] : parameters) os << "  " << k << ": " << v << '\n';
  std::vector<std::size_t> width(columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) width[c] = columns[c].size();
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      os << (c ? "  " : "");
      os << std::string(width[c] - cells[c].size(), ' ') << cells[c];
    }
    os << '\n';
  };
  line(columns);
  std::size_t total = 0;
  for (auto w : width) total += w;
  os << std::string(total + 2 * (width.empty() ? 0 : width.size() - 1), '-') << '\n';
  for (const auto& row : rows) line(row);
  return os.str();
}

const CurveMedian& StudyResult::median_at(const std::string& subdomain, std::size_t size) const {
  for (const auto& m : medians)
    if (m.subdomain == subdomain && m.size == size) return m;
  throw std::out_of_range("no median for " + subdomain + " at size " + std::to_string(size));
}

namespace {

std::string join_sizes(const std::vector<std::size_t>& sizes) {
  std::string s;
  for (std::size_t i = 0; i < sizes.size(); ++i) s += (i ? ";" : "") + std::to_string(sizes[i]);
  return s;
}

void validate_study(const StudyOptions& o) {
  if (o.sizes.empty()) throw ValidationError("at least one training size is required");
  if (std::find(o.sizes.begin(), o.sizes.end(), 0u) != o.sizes.end()) throw ValidationError("training sizes must be >= 1");
  if (o.test_size < 1) throw ValidationError("test size must be >= 1");
  if (o.seeds < 1) throw ValidationError("at least one seed is required");
}

void add_study_parameters(ExperimentReport& r, const StudyOptions& o) {
  r.add_parameter("seed", std::to_string(o.seed));
  r.add_parameter("algo", std::string(to_string(o.algorithm)));
  r.add_parameter("target", std::string(to_string(o.target)));
  r.add_parameter("sizes", join_sizes(o.sizes));
  r.add_parameter("test_size", std::to_string(o.test_size));
  r.add_parameter("seeds", std::to_string(o.seeds));
  r.add_parameter("tuning_budget", std::to_string(o.budget));
}

// One subdomain's sweep over (seed, size). `pool` and `test` are already
// filtered to the subdomain.
void sweep(const std::string& label, const SubdomainSpec& subdomain, const Dataset& pool, const Dataset& test,
           const StudyOptions& o, std::uint64_t stream, StudyResult& out) {
  const FeatureMatrix test_x = encode_all(test, subdomain);
  const auto test_y = test.targets(o.target);
  std::map<std::size_t, std::vector<QualityReport>> by_size;
  for (std::size_t s = 0; s < o.seeds; ++s) {
    const std::uint64_t seed_s = derive_seed(derive_seed(o.seed, stream), s + 1);
    for (std::size_t size : o.sizes) {
      const Dataset train = subsample(pool, size, derive_seed(seed_s, size));
      TrainOptions t;
      t.algorithm = o.algorithm;
      t.target = o.target;
      t.subdomain = subdomain;
      t.tune = o.budget > 0;
      t.budget = std::max<std::size_t>(o.budget, 1);
      t.hyperparams = HyperParams::defaults(o.algorithm, seed_s);
      t.seed = seed_s;
      t.threads = o.threads;
      const auto trained = train_surrogate(train, t);
      const auto q = evaluate(trained.model, test_x, test_y);
      out.rows.push_back({label, size, s, q});
      by_size[size].push_back(q);
    }
  }
  for (std::size_t size : o.sizes) {
    const auto& qs = by_size[size];
    std::vector<double> mae, pct, rmse;
    for (const auto& q : qs) {
      mae.push_back(q.mae);
      pct.push_back(q.mae_pct);
      rmse.push_back(q.rmse);
    }
    out.medians.push_back({label, size, median(mae), median(pct), median(rmse)});
  }
}

void fill_rows(StudyResult& r, bool with_subdomain, const std::map<std::string, std::size_t>& widths) {
  auto& rep = r.report;
  rep.columns = {"size", "seed", "mae", "mae_pct", "rmse"};
  if (with_subdomain) rep.columns.insert(rep.columns.begin(), {"td", "width"});
  auto prefix = [&](const std::string& td) {
    std::vector<std::string> row;
    if (with_subdomain) {
      row.push_back(td);
      row.push_back(std::to_string(widths.at(td)));
    }
    return row;
  };
  for (const auto& c : r.rows) {
    auto row = prefix(c.subdomain);
    row.insert(row.end(), {std::to_string(c.size), std::to_string(c.seed_index), format_number(c.quality.mae),
                           format_number(c.quality.mae_pct), format_number(c.quality.rmse)});
    rep.add_row(std::move(row));
  }
  for (const auto& m : r.medians) {
    auto row = prefix(m.subdomain);
    row.insert(row.end(), {std::to_string(m.size), "median", format_number(m.mae), format_number(m.mae_pct),
                           format_number(m.rmse)});
    rep.add_row(std::move(row));
  }
}

}  // namespace

StudyResult learning_curve(const Dataset& data, const StudyOptions& options) {
  validate_study(options);
  const std::size_t largest = *std::max_element(options.sizes.begin(), options.sizes.end());
  if (largest + options.test_size > data.size())
    throw ValidationError("learning curve needs " + std::to_string(largest + options.test_size) +
                          " examples (largest size + test size), dataset has " + std::to_string(data.size()));

  const auto order = shuffled_indices(data.size(), derive_seed(options.seed, 0));
  std::vector<std::size_t> test_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(options.test_size));
  std::vector<std::size_t> pool_idx(order.begin() + static_cast<std::ptrdiff_t>(options.test_size), order.end());
  std::sort(test_idx.begin(), test_idx.end());
  std::sort(pool_idx.begin(), pool_idx.end());

  StudyResult result;
  const auto td1 = SubdomainSpec::make(SubdomainId::td1);
  sweep("td1", td1, data.select(pool_idx), data.select(test_idx), options, 1, result);

  result.report.id = "learning_curve";
  add_study_parameters(result.report, options);
  result.report.add_parameter("n_examples", std::to_string(data.size()));
  fill_rows(result, false, {});
  return result;
}

StudyResult subdomain_study(const Dataset& data, const std::vector<SubdomainSpec>& subdomains,
                            const StudyOptions& options) {
  validate_study(options);
  if (subdomains.empty()) throw ValidationError("at least one subdomain is required");
  const std::size_t largest = *std::max_element(options.sizes.begin(), options.sizes.end());

  StudyResult result;
  std::map<std::string, std::size_t> widths;
  for (std::size_t t = 0; t < subdomains.size(); ++t) {
    const auto& sd = subdomains[t];
    const std::string label(to_string(sd.id));
    if (widths.contains(label)) throw ValidationError("subdomain " + label + " listed twice");
    Dataset filtered = [&] {
      try {
        return filter_and_project(data, sd).examples;
      } catch (const ValidationError&) {
        return Dataset(data.domain());
      }
    }();
    if (largest + options.test_size > filtered.size())
      throw ValidationError("subdomain " + label + " has " + std::to_string(filtered.size()) + " examples, needs " +
                            std::to_string(largest + options.test_size));
    widths[label] = feature_count(sd);
    const auto [pool_idx, test_idx] = split_indices(
        filtered.size(), 1.0 - static_cast<double>(options.test_size) / static_cast<double>(filtered.size()),
        derive_seed(options.seed, 0));
    sweep(label, sd, filtered.select(pool_idx), filtered.select(test_idx), options, t + 1, result);
  }

  result.report.id = "subdomain_study";
  add_study_parameters(result.report, options);
  std::string tds;
  for (const auto& sd : subdomains) {
    std::string d(to_string(sd.id));
    if (sd.workload) d += " workload=" + to_string(*sd.workload);
    if (sd.physical)
      d += " n=" + std::to_string(sd.physical->node_count) + " rf=" + std::to_string(sd.physical->replication_factor);
    tds += (tds.empty() ? "" : ";") + d;
  }
  result.report.add_parameter("subdomains", tds);
  fill_rows(result, true, widths);
  return result;
}

// ---------------------------------------------------------------------------
// tuning

std::string_view to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::sa: return "sa";
    case OptimizerKind::hc: return "hc";
    case OptimizerKind::exhaustive: return "exhaustive";
  }
  return "?";
}

OptimizerKind parse_optimizer(std::string_view text) {
  if (text == "sa") return OptimizerKind::sa;
  if (text == "hc") return OptimizerKind::hc;
  if (text == "exhaustive") return OptimizerKind::exhaustive;
  throw ValidationError("unknown optimizer: " + std::string(text) + " (expected sa, hc or exhaustive)");
}

TuneOutcome tune_objective(const Objective& objective, const TuningDomain& domain, const TuneRequest& request) {
  if (request.budget < 1) throw ValidationError("budget must be >= 1");
  const SearchContext ctx{domain, request.workload, request.physical};
  ctx.validate();
  TuneOutcome out;
  out.target = objective.metric;
  switch (request.optimizer) {
    case OptimizerKind::sa:
      out.result = simulated_annealing(objective, ctx, default_schedule(objective, ctx, request.seed, request.budget));
      break;
    case OptimizerKind::hc:
      out.result = hill_climb(objective, ctx, std::nullopt, request.budget, request.seed);
      break;
    case OptimizerKind::exhaustive:
      out.result = exhaustive_search(objective, ctx);
      break;
  }
  require_valid(domain, out.result.best);

  auto& r = out.report;
  r.id = "tune";
  r.add_parameter("seed", std::to_string(request.seed));
  r.add_parameter("target", std::string(to_string(objective.metric)));
  r.add_parameter("workload", to_string(request.workload));
  r.add_parameter("node_count", std::to_string(request.physical.node_count));
  r.add_parameter("replication_factor", std::to_string(request.physical.replication_factor));
  r.add_parameter("optimizer", std::string(to_string(request.optimizer)));
  r.add_parameter("budget", std::to_string(request.budget));
  r.columns = {"parameter", "value"};
  for (Param k : kKnobParams) r.add_row({domain.parameter(k).name, std::to_string(out.result.best[k])});
  r.add_row({"predicted_" + std::string(to_string(objective.metric)), format_number(out.result.value)});
  r.add_row({"evaluations", std::to_string(out.result.evaluations)});
  r.add_row({"extrapolation", "false"});
  return out;
}

TuneOutcome tune_with_model(const SurrogateModel& model, const TuneRequest& request) {
  const auto& meta = model.metadata();
  if (meta.subdomain.workload && *meta.subdomain.workload != request.workload)
    throw ValidationError("model is fixed to workload " + to_string(*meta.subdomain.workload) + ", requested " +
                          to_string(request.workload));
  if (meta.subdomain.physical && *meta.subdomain.physical != request.physical)
    throw ValidationError("model is fixed to a different physical design");
  const TuningDomain domain = model.domain();
  Objective objective{meta.target, [&](const ConfigurationPoint& p) { return model.predict_point(domain, p); }};
  TuneOutcome out = tune_objective(objective, domain, request);
  out.extrapolation = model.is_extrapolation(request.workload, request.physical);
  out.report.rows.back().back() = out.extrapolation ? "true" : "false";
  out.report.add_parameter("algo", std::string(to_string(meta.algorithm)));
  out.report.add_parameter("subdomain", std::string(to_string(meta.subdomain.id)));
  return out;
}

// ---------------------------------------------------------------------------
// comparison

double improvement_pct(TargetMetric metric, double baseline, double tuned) {
  const double change = 100.0 * (tuned - baseline) / baseline;
  return direction_of(metric) == Direction::maximize ? change : -change;
}

Comparison compare_configs(BenchmarkBackend& backend, const ConfigurationPoint& baseline,
                           const ConfigurationPoint& tuned, std::size_t trials, std::uint64_t first_invocation) {
  if (baseline.workload() != tuned.workload() || baseline.physical() != tuned.physical())
    throw ValidationError("compared configurations must share workload and physical design");
  Comparison c;
  c.baseline = measure_repeated(backend, baseline, trials, first_invocation);
  c.tuned = measure_repeated(backend, tuned, trials, first_invocation);

  auto& r = c.report;
  r.id = "compare";
  r.add_parameter("seed", std::to_string(first_invocation));
  r.add_parameter("trials", std::to_string(trials));
  r.add_parameter("workload", to_string(baseline.workload()));
  r.add_parameter("node_count", std::to_string(baseline.physical().node_count));
  r.add_parameter("replication_factor", std::to_string(baseline.physical().replication_factor));
  r.add_parameter("baseline_failures", std::to_string(c.baseline.failures));
  r.add_parameter("tuned_failures", std::to_string(c.tuned.failures));
  r.columns = {"metric", "baseline", "tuned", "delta_pct"};
  for (auto m : {TargetMetric::throughput, TargetMetric::read_latency, TargetMetric::write_latency}) {
    const double b = select(c.baseline.mean, m);
    const double t = select(c.tuned.mean, m);
    const ComparisonRow row{m, b, t, 100.0 * (t - b) / b};
    c.rows.push_back(row);
    r.add_row({std::string(to_string(m)), format_number(b), format_number(t), format_number(row.delta_pct)});
  }
  return c;
}

}  // namespace kvtune
