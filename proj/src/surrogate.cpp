#include "kvtune/surrogate.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "kvtune/errors.hpp"
#include "kvtune/random.hpp"

namespace kvtune {

using nlohmann::json;
using nlohmann::ordered_json;

SurrogateModel::SurrogateModel(ModelMetadata metadata, Body body)
    : metadata_(std::move(metadata)), body_(std::move(body)) {
  if (metadata_.columns.size() != feature_count(metadata_.subdomain))
    throw ValidationError("model column list does not match its subdomain");
  const bool is_rf = std::holds_alternative<RandomForestModel>(body_);
  if (is_rf != (metadata_.algorithm == Algorithm::random_forest))
    throw ValidationError("model body does not match its algorithm tag");
  if (n_features() != metadata_.columns.size()) throw ValidationError("model width does not match column list");
}

std::size_t SurrogateModel::n_features() const noexcept {
  return std::visit([](const auto& m) { return m.n_features(); }, body_);
}

double predict_body(const SurrogateModel::Body& body, std::span<const double> x) {
  return std::visit([&](const auto& m) { return m.predict(x); }, body);
}

double SurrogateModel::predict(std::span<const double> features) const { return predict_body(body_, features); }

double SurrogateModel::predict_point(const TuningDomain& domain, const ConfigurationPoint& point) const {
  const auto x = encode(domain, metadata_.subdomain, point);
  return predict(x);
}

std::vector<double> SurrogateModel::predict_all(const FeatureMatrix& features) const {
  std::vector<double> out(features.rows);
  for (std::size_t i = 0; i < features.rows; ++i) out[i] = predict(features.row(i));
  return out;
}

bool SurrogateModel::is_extrapolation(const Workload& workload, const Physical& physical) const {
  const TrainingContext key{workload, physical};
  return !std::binary_search(metadata_.training_contexts.begin(), metadata_.training_contexts.end(), key);
}

QualityReport evaluate(const SurrogateModel& model, const FeatureMatrix& features, std::span<const double> targets) {
  return evaluate_predictions(model.predict_all(features), targets);
}

SurrogateModel::Body fit_body(const FeatureMatrix& features, std::span<const double> targets, const HyperParams& hp,
                              unsigned threads) {
  if (hp.algorithm == Algorithm::random_forest)
    return fit_random_forest(features, targets, hp, ForestOptions{true, threads});
  return fit_gbdt(features, targets, hp);
}

// ---------------------------------------------------------------------------
// Hyperparameter search

std::vector<HyperParams> hyperparameter_grid(Algorithm algorithm, std::size_t d, std::uint64_t seed) {
  std::vector<HyperParams> grid;
  const HyperParams base = HyperParams::defaults(algorithm, seed);
  if (algorithm == Algorithm::random_forest) {
    for (int trees : {100, 200, 400})
      for (std::size_t mf : {std::size_t{3}, std::size_t{4}, std::size_t{6}, d})
        for (int leaf : {1, 2, 5, 10})
          for (std::optional<int> depth : {std::optional<int>(8), std::optional<int>(12), std::optional<int>(16),
                                           std::optional<int>()}) {
            HyperParams hp = base;
            hp.n_trees = trees;
            hp.max_features = std::min(mf, d);
            hp.min_samples_leaf = leaf;
            hp.max_depth = depth;
            grid.push_back(hp);
          }
  } else {
    for (int trees : {200, 400, 800})
      for (double rate : {0.05, 0.1, 0.2})
        for (int depth : {3, 4, 6})
          for (int leaf : {1, 5, 10})
            for (double sub : {0.7, 1.0}) {
              HyperParams hp = base;
              hp.n_trees = trees;
              hp.learning_rate = rate;
              hp.max_depth = depth;
              hp.min_samples_leaf = leaf;
              hp.subsample = sub;
              grid.push_back(hp);
            }
  }
  return grid;
}

TuningOutcome tune_hyperparameters(Algorithm algorithm, const FeatureMatrix& features,
                                   std::span<const double> targets, std::size_t budget, std::uint64_t seed,
                                   unsigned threads) {
  if (budget < 1) throw ValidationError("tuning budget must be >= 1");
  if (features.rows < 10) throw ValidationError("hyperparameter tuning needs at least 10 training examples");
  if (targets.size() != features.rows) throw ValidationError("target count does not match feature rows");

  const auto [train_idx, val_idx] = split_indices(features.rows, 0.8, derive_seed(seed, 0));
  auto take = [&](const std::vector<std::size_t>& idx, FeatureMatrix& x, std::vector<double>& y) {
    x = FeatureMatrix(idx.size(), features.cols);
    y.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      std::copy_n(features.row(idx[i]).begin(), features.cols, x.row(i).begin());
      y[i] = targets[idx[i]];
    }
  };
  FeatureMatrix x_train, x_val;
  std::vector<double> y_train, y_val;
  take(train_idx, x_train, y_train);
  take(val_idx, x_val, y_val);

  std::vector<HyperParams> candidates{HyperParams::defaults(algorithm, seed)};
  if (algorithm == Algorithm::random_forest)
    candidates.front().max_features = resolve_max_features(candidates.front(), features.cols);
  auto grid = hyperparameter_grid(algorithm, features.cols, seed);
  SplitMix64 rng(derive_seed(seed, 1));
  fisher_yates(std::span<HyperParams>(grid), rng);
  for (const auto& hp : grid) {
    if (candidates.size() >= budget) break;
    if (std::find(candidates.begin(), candidates.end(), hp) == candidates.end()) candidates.push_back(hp);
  }

  TuningOutcome outcome;
  double best_mae = std::numeric_limits<double>::infinity();
  for (const auto& hp : candidates) {
    const auto body = fit_body(x_train, y_train, hp, threads);
    std::vector<double> pred(x_val.rows);
    for (std::size_t i = 0; i < x_val.rows; ++i) pred[i] = predict_body(body, x_val.row(i));
    const auto report = evaluate_predictions(pred, y_val);
    outcome.trials.push_back({hp, report});
    if (report.mae < best_mae) {
      best_mae = report.mae;
      outcome.best = hp;
      outcome.validation = report;
    }
  }
  return outcome;
}

// ---------------------------------------------------------------------------
// Training

TrainedModel train_surrogate(const Dataset& dataset, const TrainOptions& options) {
  auto projected = filter_and_project(dataset, options.subdomain);
  const auto targets = projected.examples.targets(options.target);

  std::optional<TuningOutcome> tuning;
  HyperParams hp;
  if (options.tune) {
    tuning = tune_hyperparameters(options.algorithm, projected.features, targets, options.budget, options.seed,
                                  options.threads);
    hp = tuning->best;
  } else {
    hp = options.hyperparams.value_or(HyperParams::defaults(options.algorithm, options.seed));
    if (hp.algorithm != options.algorithm) throw ValidationError("hyperparameters are for a different algorithm");
  }
  if (hp.algorithm == Algorithm::random_forest) hp.max_features = resolve_max_features(hp, projected.features.cols);

  ModelMetadata meta;
  meta.algorithm = options.algorithm;
  meta.target = options.target;
  meta.subdomain = options.subdomain;
  meta.columns = projected.columns;
  meta.hyperparams = hp;
  meta.disks = dataset.domain().disks();
  meta.heap_mb = dataset.domain().heap_mb();
  meta.n_train = projected.examples.size();
  std::set<TrainingContext> contexts;
  for (const auto& e : projected.examples.examples()) contexts.insert({e.point.workload(), e.point.physical()});
  meta.training_contexts.assign(contexts.begin(), contexts.end());

  auto body = fit_body(projected.features, targets, hp, options.threads);
  return {SurrogateModel(std::move(meta), std::move(body)), std::move(tuning)};
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

ordered_json hyperparams_to_json(const HyperParams& hp) {
  ordered_json j;
  j["algorithm"] = to_string(hp.algorithm);
  j["max_depth"] = hp.max_depth ? json(*hp.max_depth) : json(nullptr);
  j["min_samples_leaf"] = hp.min_samples_leaf;
  j["min_samples_split"] = hp.min_samples_split;
  j["n_trees"] = hp.n_trees;
  j["max_features"] = hp.max_features;
  j["learning_rate"] = hp.learning_rate;
  j["subsample"] = hp.subsample;
  j["seed"] = hp.seed;
  return j;
}

HyperParams hyperparams_from_json(const json& j) {
  HyperParams hp;
  hp.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
  if (!j.at("max_depth").is_null()) hp.max_depth = j.at("max_depth").get<int>();
  hp.min_samples_leaf = j.at("min_samples_leaf").get<int>();
  hp.min_samples_split = j.at("min_samples_split").get<int>();
  hp.n_trees = j.at("n_trees").get<int>();
  hp.max_features = j.at("max_features").get<std::size_t>();
  hp.learning_rate = j.at("learning_rate").get<double>();
  hp.subsample = j.at("subsample").get<double>();
  hp.seed = j.at("seed").get<std::uint64_t>();
  hp.validate();
  return hp;
}

// Preorder node list; a leaf is [value], a split is [feature, threshold, left, right].
ordered_json tree_to_json(const RegressionTree& tree) {
  ordered_json nodes = ordered_json::array();
  for (const auto& n : tree.nodes()) {
    if (n.is_leaf()) {
      nodes.push_back(ordered_json::array({n.value}));
    } else {
      nodes.push_back(ordered_json::array({n.feature, n.threshold, n.left, n.right}));
    }
  }
  return nodes;
}

RegressionTree tree_from_json(const json& j, std::size_t n_features) {
  std::vector<RegressionTree::Node> nodes;
  nodes.reserve(j.size());
  for (const auto& item : j) {
    RegressionTree::Node n;
    if (item.size() == 1) {
      n.value = item[0].get<double>();
    } else if (item.size() == 4) {
      n.feature = item[0].get<int>();
      n.threshold = item[1].get<double>();
      n.left = item[2].get<std::int32_t>();
      n.right = item[3].get<std::int32_t>();
      if (n.feature < 0) throw ValidationError("model file: negative split feature");
    } else {
      throw ValidationError("model file: malformed tree node");
    }
    nodes.push_back(n);
  }
  return RegressionTree(std::move(nodes), n_features);
}

}  // namespace

std::string to_json(const SurrogateModel& model) {
  const auto& m = model.metadata();
  ordered_json j;
  j["format"] = kModelFormat;
  j["algorithm"] = to_string(m.algorithm);
  j["target"] = to_string(m.target);
  ordered_json sub;
  sub["id"] = to_string(m.subdomain.id);
  sub["workload"] = m.subdomain.workload ? json::array({m.subdomain.workload->read_pct, m.subdomain.workload->write_pct})
                                         : json(nullptr);
  sub["physical"] = m.subdomain.physical
                        ? json::array({m.subdomain.physical->node_count, m.subdomain.physical->replication_factor})
                        : json(nullptr);
  j["subdomain"] = sub;
  j["columns"] = m.columns;
  j["domain"] = {{"disks", m.disks}, {"heap_mb", m.heap_mb}};
  j["hyperparams"] = hyperparams_to_json(m.hyperparams);
  ordered_json contexts = ordered_json::array();
  for (const auto& c : m.training_contexts)
    contexts.push_back({c.workload.read_pct, c.workload.write_pct, c.physical.node_count, c.physical.replication_factor});
  j["training_contexts"] = contexts;
  j["n_train"] = m.n_train;
  j["n_features"] = model.n_features();

  ordered_json trees = ordered_json::array();
  if (const auto* rf = std::get_if<RandomForestModel>(&model.body())) {
    j["max_features"] = rf->max_features();
    for (const auto& t : rf->trees()) trees.push_back(tree_to_json(t));
  } else {
    const auto& gb = std::get<GbdtModel>(model.body());
    j["init_value"] = gb.init_value();
    j["learning_rate"] = gb.learning_rate();
    for (const auto& t : gb.trees()) trees.push_back(tree_to_json(t));
  }
  j["trees"] = std::move(trees);
  return j.dump();
}

SurrogateModel model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (j.value("format", std::string{}) != kModelFormat)
      throw ValidationError("unsupported model format (expected " + std::string(kModelFormat) + ")");
    ModelMetadata m;
    m.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
    m.target = parse_target(j.at("target").get<std::string>());
    const auto& sub = j.at("subdomain");
    std::optional<Workload> wl;
    std::optional<Physical> ph;
    if (!sub.at("workload").is_null()) wl = Workload{sub["workload"][0].get<int>(), sub["workload"][1].get<int>()};
    if (!sub.at("physical").is_null()) ph = Physical{sub["physical"][0].get<int>(), sub["physical"][1].get<int>()};
    m.subdomain = SubdomainSpec::make(parse_subdomain_id(sub.at("id").get<std::string>()), wl, ph);
    m.columns = j.at("columns").get<std::vector<std::string>>();
    m.disks = j.at("domain").at("disks").get<int>();
    m.heap_mb = j.at("domain").at("heap_mb").get<int>();
    m.hyperparams = hyperparams_from_json(j.at("hyperparams"));
    for (const auto& c : j.at("training_contexts"))
      m.training_contexts.push_back({{c[0].get<int>(), c[1].get<int>()}, {c[2].get<int>(), c[3].get<int>()}});
    std::sort(m.training_contexts.begin(), m.training_contexts.end());
    m.n_train = j.at("n_train").get<std::size_t>();
    const auto width = j.at("n_features").get<std::size_t>();

    std::vector<RegressionTree> trees;
    for (const auto& t : j.at("trees")) trees.push_back(tree_from_json(t, width));
    if (m.algorithm == Algorithm::random_forest) {
      return SurrogateModel(std::move(m), RandomForestModel(std::move(trees), j.at("max_features").get<std::size_t>()));
    }
    return SurrogateModel(std::move(m), GbdtModel(j.at("init_value").get<double>(), j.at("learning_rate").get<double>(),
                                                  std::move(trees), width));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const SurrogateModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
  out << to_json(model) << '\n';
  if (!out) throw ValidationError("failed writing " + path.string());
}

SurrogateModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open model file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace kvtune
