#include "kvtune/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "kvtune/errors.hpp"

namespace kvtune {

BinnedMatrix::BinnedMatrix(const FeatureMatrix& features)
    : rows_(features.rows), cols_(features.cols), bins_(features.rows * features.cols), uniques_(features.cols) {
  std::vector<double> column(rows_);
  for (std::size_t c = 0; c < cols_; ++c) {
    for (std::size_t r = 0; r < rows_; ++r) {
      column[r] = features(r, c);
      if (!std::isfinite(column[r])) throw ValidationError("feature matrix contains a non-finite value");
    }
    auto& u = uniques_[c];
    u = column;
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
    for (std::size_t r = 0; r < rows_; ++r)
      bins_[c * rows_ + r] =
          static_cast<std::uint32_t>(std::lower_bound(u.begin(), u.end(), column[r]) - u.begin());
  }
}

RegressionTree::RegressionTree(std::vector<Node> nodes, std::size_t n_features)
    : nodes_(std::move(nodes)), n_features_(n_features) {
  if (nodes_.empty()) throw ValidationError("tree has no nodes");
  const auto n = static_cast<std::int32_t>(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& node = nodes_[i];
    if (node.is_leaf()) continue;
    if (static_cast<std::size_t>(node.feature) >= n_features_) throw ValidationError("tree node feature out of range");
    // Preorder layout: children always follow their parent.
    if (node.left <= static_cast<std::int32_t>(i) || node.left >= n || node.right <= static_cast<std::int32_t>(i) ||
        node.right >= n)
      throw ValidationError("tree node child index out of range");
  }
}

double RegressionTree::predict(std::span<const double> x) const {
  if (x.size() != n_features_)
    throw ValidationError("feature vector width " + std::to_string(x.size()) + " does not match model width " +
                          std::to_string(n_features_));
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& node = nodes_[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right);
  }
  return nodes_[i].value;
}

std::size_t RegressionTree::depth() const {
  if (nodes_.empty()) return 0;
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes_[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
    }
  }
  return best;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf(); }));
}

class TreeBuilder {
 public:
  TreeBuilder(const BinnedMatrix& x, std::span<const double> y, const TreeParams& params, SplitMix64* rng)
      : x_(x), y_(y), params_(params), rng_(rng), feature_pool_(x.cols()) {
    std::iota(feature_pool_.begin(), feature_pool_.end(), std::size_t{0});
    std::size_t max_bins = 0;
    for (std::size_t c = 0; c < x.cols(); ++c) max_bins = std::max(max_bins, x.column_values(c).size());
    bin_count_.assign(max_bins, 0);
    bin_sum_.assign(max_bins, 0.0);
    tree_.n_features_ = x.cols();
  }

  RegressionTree build(std::vector<std::size_t> samples) {
    samples_ = std::move(samples);
    scratch_.resize(samples_.size());
    grow(0, samples_.size(), 0);
    return std::move(tree_);
  }

 private:
  struct Candidate {
    std::size_t feature = 0;
    std::uint32_t left_bin = 0;  // rows with bin <= left_bin go left
    double threshold = 0.0;
    double score = -std::numeric_limits<double>::infinity();
  };

  std::int32_t grow(std::size_t begin, std::size_t end, int depth) {
    const std::size_t n = end - begin;
    double sum = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = begin; i < end; ++i) {
      const double v = y_[samples_[i]];
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const auto index = static_cast<std::int32_t>(tree_.nodes_.size());
    tree_.nodes_.push_back({});
    tree_.nodes_.back().value = sum / static_cast<double>(n);
    tree_.nodes_.back().samples = static_cast<std::uint32_t>(n);

    const auto msl = static_cast<std::size_t>(params_.min_samples_leaf);
    const bool stop = (params_.max_depth && depth >= *params_.max_depth) ||
                      n < static_cast<std::size_t>(params_.min_samples_split) || n < 2 * msl || lo == hi;
    if (stop) return index;

    const Candidate best = find_split(begin, end);
    if (!std::isfinite(best.score)) return index;

    const auto bins = x_.column_bins(best.feature);
    const auto mid = std::stable_partition(samples_.begin() + static_cast<std::ptrdiff_t>(begin),
                                           samples_.begin() + static_cast<std::ptrdiff_t>(end),
                                           [&](std::size_t row) { return bins[row] <= best.left_bin; });
    const auto split_at = static_cast<std::size_t>(mid - samples_.begin());

    const std::int32_t left = grow(begin, split_at, depth + 1);
    const std::int32_t right = grow(split_at, end, depth + 1);
    auto& node = tree_.nodes_[static_cast<std::size_t>(index)];
    node.feature = static_cast<int>(best.feature);
    node.threshold = best.threshold;
    node.left = left;
    node.right = right;
    return index;
  }

  // Features to try at this node, ascending.
  std::span<const std::size_t> choose_features() {
    const std::size_t d = feature_pool_.size();
    const std::size_t k = params_.max_features == 0 ? d : std::min(params_.max_features, d);
    if (k == d || rng_ == nullptr) {
      std::sort(feature_pool_.begin(), feature_pool_.end());
      return feature_pool_;
    }
    for (std::size_t i = 0; i < k; ++i) std::swap(feature_pool_[i], feature_pool_[i + rng_->below(d - i)]);
    chosen_.assign(feature_pool_.begin(), feature_pool_.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(chosen_.begin(), chosen_.end());
    return chosen_;
  }

  Candidate find_split(std::size_t begin, std::size_t end) {
    Candidate best;
    const std::size_t n = end - begin;
    double total = 0.0;
    for (std::size_t i = begin; i < end; ++i) total += y_[samples_[i]];
    for (std::size_t f : choose_features()) {
      const auto& values = x_.column_values(f);
      if (values.size() < 2) continue;
      if (values.size() <= 4 * n) {
        scan_buckets(f, begin, end, total, best);
      } else {
        scan_sorted(f, begin, end, total, best);
      }
    }
    return best;
  }

  void consider(std::size_t f, std::uint32_t prev_bin, std::uint32_t next_bin, std::size_t n_left, double s_left,
                std::size_t n, double total, Candidate& best) const {
    const auto msl = static_cast<std::size_t>(params_.min_samples_leaf);
    const std::size_t n_right = n - n_left;
    if (n_left < msl || n_right < msl) return;
    const double s_right = total - s_left;
    // Maximizing this is minimizing the children's summed squared error.
    const double score =
        s_left * s_left / static_cast<double>(n_left) + s_right * s_right / static_cast<double>(n_right);
    if (score > best.score) {
      const auto& values = x_.column_values(f);
      best = {f, prev_bin, (values[prev_bin] + values[next_bin]) / 2.0, score};
    }
  }

  void scan_buckets(std::size_t f, std::size_t begin, std::size_t end, double total, Candidate& best) {
    const auto bins = x_.column_bins(f);
    const std::size_t k = x_.column_values(f).size();
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t row = samples_[i];
      ++bin_count_[bins[row]];
      bin_sum_[bins[row]] += y_[row];
    }
    const std::size_t n = end - begin;
    std::size_t n_left = 0;
    double s_left = 0.0;
    bool have_prev = false;
    std::uint32_t prev = 0;
    for (std::uint32_t b = 0; b < k; ++b) {
      if (bin_count_[b] == 0) continue;
      if (have_prev) consider(f, prev, b, n_left, s_left, n, total, best);
      n_left += bin_count_[b];
      s_left += bin_sum_[b];
      prev = b;
      have_prev = true;
      bin_count_[b] = 0;
      bin_sum_[b] = 0.0;
    }
  }

  void scan_sorted(std::size_t f, std::size_t begin, std::size_t end, double total, Candidate& best) {
    const auto bins = x_.column_bins(f);
    const std::size_t n = end - begin;
    for (std::size_t i = 0; i < n; ++i) scratch_[i] = {bins[samples_[begin + i]], y_[samples_[begin + i]]};
    std::stable_sort(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(n),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::size_t n_left = 0;
    double s_left = 0.0;
    for (std::size_t i = 0; i < n;) {
      const std::uint32_t b = scratch_[i].first;
      if (i > 0) consider(f, scratch_[i - 1].first, b, n_left, s_left, n, total, best);
      while (i < n && scratch_[i].first == b) {
        s_left += scratch_[i].second;
        ++n_left;
        ++i;
      }
    }
  }

  const BinnedMatrix& x_;
  std::span<const double> y_;
  TreeParams params_;
  SplitMix64* rng_;
  std::vector<std::size_t> feature_pool_;
  std::vector<std::size_t> chosen_;
  std::vector<std::size_t> samples_;
  std::vector<std::pair<std::uint32_t, double>> scratch_;
  std::vector<std::size_t> bin_count_;
  std::vector<double> bin_sum_;
  RegressionTree tree_;
};

RegressionTree fit_tree(const BinnedMatrix& features, std::span<const double> targets,
                        std::span<const std::size_t> samples, const TreeParams& params, SplitMix64* rng) {
  if (samples.empty()) throw ValidationError("cannot fit a tree to zero examples");
  if (targets.size() != features.rows()) throw ValidationError("target count does not match feature rows");
  if (params.min_samples_leaf < 1 || params.min_samples_split < 2 || (params.max_depth && *params.max_depth < 0))
    throw ValidationError("invalid tree parameters");
  for (double t : targets)
    if (!std::isfinite(t)) throw ValidationError("targets must be finite");
  TreeBuilder builder(features, targets, params, rng);
  return builder.build(std::vector<std::size_t>(samples.begin(), samples.end()));
}

RegressionTree fit_tree(const FeatureMatrix& features, std::span<const double> targets, const TreeParams& params,
                        SplitMix64* rng) {
  if (features.rows == 0) throw ValidationError("cannot fit a tree to zero examples");
  BinnedMatrix binned(features);
  std::vector<std::size_t> all(features.rows);
  std::iota(all.begin(), all.end(), std::size_t{0});
  return fit_tree(binned, targets, all, params, rng);
}

}  // namespace kvtune
