#include "kvtune/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "kvtune/errors.hpp"
#include "kvtune/random.hpp"

namespace kvtune {

std::string_view to_string(TargetMetric t) {
  switch (t) {
    case TargetMetric::throughput: return "throughput";
    case TargetMetric::read_latency: return "read_latency";
    case TargetMetric::write_latency: return "write_latency";
  }
  return "throughput";
}

TargetMetric parse_target(std::string_view text) {
  if (text == "throughput") return TargetMetric::throughput;
  if (text == "read_latency") return TargetMetric::read_latency;
  if (text == "write_latency") return TargetMetric::write_latency;
  throw ValidationError("unknown target '" + std::string(text) +
                        "' (expected throughput, read_latency, write_latency)");
}

bool is_plausible(const Metrics& m) noexcept {
  auto ok = [](double v) { return std::isfinite(v) && v > 0.0; };
  return ok(m.throughput_ops) && ok(m.read_latency_ms) && ok(m.write_latency_ms);
}

void Dataset::add(TrainingExample example) {
  require_valid(domain_, example.point);
  if (!is_plausible(example.metrics)) throw ValidationError("metrics must be finite and positive");
  examples_.push_back(std::move(example));
}

Dataset Dataset::select(std::span<const std::size_t> indices) const {
  Dataset out(domain_);
  out.examples_.reserve(indices.size());
  for (std::size_t i : indices) out.examples_.push_back(examples_.at(i));
  return out;
}

std::vector<double> Dataset::targets(TargetMetric target) const {
  std::vector<double> out;
  out.reserve(examples_.size());
  for (const auto& e : examples_) out.push_back(kvtune::select(e.metrics, target));
  return out;
}

// ---------------------------------------------------------------------------
// CSV

const std::string& csv_header() {
  static const std::string header =
      "wl_read_pct,wl_write_pct,node_count,replication_factor,trickle_fsync,key_cache_size_in_mb,"
      "row_cache_size_in_mb,commitlog_segment_size_in_mb,concurrent_reads,concurrent_writes,"
      "memtable_heap_space_in_mb,throughput_ops,read_latency_ms,write_latency_ms";
  return header;
}

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

void write_csv(const Dataset& dataset, std::ostream& out) {
  out << csv_header() << '\n';
  for (const auto& e : dataset.examples()) {
    for (std::size_t i = 0; i < e.point.size(); ++i) out << e.point[i] << ',';
    out << format_number(e.metrics.throughput_ops) << ',' << format_number(e.metrics.read_latency_ms) << ','
        << format_number(e.metrics.write_latency_ms) << '\n';
  }
}

void save_csv(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
  write_csv(dataset, out);
  if (!out) throw ValidationError("failed writing " + path.string());
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

template <typename T>
bool parse_field(std::string_view s, T& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

[[noreturn]] void fail_line(std::size_t line, const std::string& what) {
  throw ValidationError("line " + std::to_string(line) + ": " + what);
}

}  // namespace

Dataset read_csv(const TuningDomain& domain, std::istream& in) {
  Dataset dataset(domain);
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ValidationError("line 1: missing header");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != csv_header()) fail_line(line_no, "header does not match the canonical schema");

  constexpr std::size_t kColumns = kParamCount + 3;
  bool saw_blank = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      saw_blank = true;
      continue;
    }
    if (saw_blank) fail_line(line_no - 1, "blank line inside data");
    if (line == csv_header()) fail_line(line_no, "duplicate header");
    const auto fields = split_fields(line);
    if (fields.size() != kColumns)
      fail_line(line_no, "expected " + std::to_string(kColumns) + " fields, got " + std::to_string(fields.size()));
    std::vector<int> values(kParamCount);
    for (std::size_t i = 0; i < kParamCount; ++i)
      if (!parse_field(fields[i], values[i]))
        fail_line(line_no, "column " + domain.parameter(i).name + " is not an integer");
    Metrics m;
    if (!parse_field(fields[kParamCount], m.throughput_ops) ||
        !parse_field(fields[kParamCount + 1], m.read_latency_ms) ||
        !parse_field(fields[kParamCount + 2], m.write_latency_ms))
      fail_line(line_no, "metric column is not a number");
    ConfigurationPoint point(std::move(values));
    const auto violations = validate(domain, point);
    if (!violations.empty())
      fail_line(line_no, violations.front().parameter + ": " + violations.front().message);
    if (!is_plausible(m)) fail_line(line_no, "metrics must be finite and positive");
    dataset.add({std::move(point), m});
  }
  return dataset;
}

Dataset load_csv(const TuningDomain& domain, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return read_csv(domain, in);
}

// ---------------------------------------------------------------------------
// Sampling

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  SplitMix64 rng(seed);
  fisher_yates(std::span<std::size_t>(idx), rng);
  return idx;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n,
                                                                            double train_fraction,
                                                                            std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ValidationError("train fraction must lie in (0, 1)");
  if (n < 2) throw ValidationError("need at least 2 examples to split");
  auto perm = shuffled_indices(n, seed);
  auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  std::vector<std::size_t> train(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

Split split(const Dataset& dataset, double train_fraction, std::uint64_t seed) {
  auto [train, test] = split_indices(dataset.size(), train_fraction, seed);
  return {dataset.select(train), dataset.select(test)};
}

std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t size, std::uint64_t seed) {
  if (size > n)
    throw ValidationError("subsample size " + std::to_string(size) + " exceeds dataset size " + std::to_string(n));
  auto perm = shuffled_indices(n, seed);
  perm.resize(size);
  std::sort(perm.begin(), perm.end());
  return perm;
}

Dataset subsample(const Dataset& dataset, std::size_t size, std::uint64_t seed) {
  return dataset.select(subsample_indices(dataset.size(), size, seed));
}

// ---------------------------------------------------------------------------
// Projection

FeatureMatrix make_matrix(const std::vector<FeatureVector>& rows) {
  if (rows.empty()) return {};
  FeatureMatrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols) throw ValidationError("ragged feature rows");
    std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  }
  return m;
}

FeatureMatrix encode_all(const Dataset& dataset, const SubdomainSpec& subdomain) {
  FeatureMatrix m(dataset.size(), feature_count(subdomain));
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto v = encode(dataset.domain(), subdomain, dataset[i].point);
    std::copy(v.begin(), v.end(), m.row(i).begin());
  }
  return m;
}

ProjectedData filter_and_project(const Dataset& dataset, const SubdomainSpec& subdomain) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& p = dataset[i].point;
    if (subdomain.workload && p.workload() != *subdomain.workload) continue;
    if (subdomain.physical && p.physical() != *subdomain.physical) continue;
    keep.push_back(i);
  }
  if (keep.empty()) throw ValidationError("no examples match subdomain " + std::string(to_string(subdomain.id)));
  ProjectedData out{dataset.select(keep), {}, feature_names(dataset.domain(), subdomain)};
  out.features = encode_all(out.examples, subdomain);
  return out;
}

// ---------------------------------------------------------------------------
// Summary

std::size_t DatasetSummary::total() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.count;
  return n;
}

DatasetSummary summarize(const Dataset& dataset) {
  struct Key {
    Workload w;
    Physical p;
    bool operator<(const Key& o) const {
      if (w.read_pct != o.w.read_pct) return w.read_pct < o.w.read_pct;
      if (p.node_count != o.p.node_count) return p.node_count > o.p.node_count;
      return p.replication_factor > o.p.replication_factor;
    }
  };
  std::map<Key, GroupSummary> groups;
  for (const auto& e : dataset.examples()) {
    const Key key{e.point.workload(), e.point.physical()};
    auto [it, inserted] = groups.try_emplace(key);
    auto& g = it->second;
    const auto& m = e.metrics;
    if (inserted) {
      g = GroupSummary{key.w, key.p, 0, m.throughput_ops, m.throughput_ops, m.read_latency_ms,
                       m.read_latency_ms, m.write_latency_ms, m.write_latency_ms};
    }
    ++g.count;
    g.throughput_max = std::max(g.throughput_max, m.throughput_ops);
    g.throughput_min = std::min(g.throughput_min, m.throughput_ops);
    g.read_latency_min = std::min(g.read_latency_min, m.read_latency_ms);
    g.read_latency_max = std::max(g.read_latency_max, m.read_latency_ms);
    g.write_latency_min = std::min(g.write_latency_min, m.write_latency_ms);
    g.write_latency_max = std::max(g.write_latency_max, m.write_latency_ms);
  }
  DatasetSummary out;
  for (auto& [k, g] : groups) out.groups.push_back(g);
  return out;
}

std::string render_summary(const DatasetSummary& summary) {
  std::ostringstream os;
  os << std::fixed;
  const auto rule = std::string(86, '-');
  std::optional<Workload> current;
  for (const auto& g : summary.groups) {
    if (!current || *current != g.workload) {
      current = g.workload;
      os << rule << "\n"
         << "Workload " << g.workload.read_pct << "% read / " << g.workload.write_pct << "% write\n"
         << rule << "\n"
         << std::setw(3) << "n" << std::setw(4) << "rf" << std::setw(8) << "count" << std::setw(13)
         << "tput max" << std::setw(13) << "tput min" << std::setw(11) << "read min" << std::setw(11)
         << "read max" << std::setw(11) << "write min" << std::setw(11) << "write max" << "\n";
    }
    os << std::setw(3) << g.physical.node_count << std::setw(4) << g.physical.replication_factor
       << std::setw(8) << g.count << std::setprecision(0) << std::setw(13) << g.throughput_max
       << std::setw(13) << g.throughput_min << std::setprecision(1) << std::setw(11) << g.read_latency_min
       << std::setw(11) << g.read_latency_max << std::setw(11) << g.write_latency_min << std::setw(11)
       << g.write_latency_max << "\n";
  }
  os << rule << "\n" << "total " << summary.total() << "\n";
  return os.str();
}

void write_summary_csv(const DatasetSummary& summary, std::ostream& out) {
  out << "wl_read_pct,wl_write_pct,node_count,replication_factor,count,throughput_max,throughput_min,"
         "read_latency_min,read_latency_max,write_latency_min,write_latency_max\n";
  for (const auto& g : summary.groups) {
    out << g.workload.read_pct << ',' << g.workload.write_pct << ',' << g.physical.node_count << ','
        << g.physical.replication_factor << ',' << g.count << ',' << format_number(g.throughput_max) << ','
        << format_number(g.throughput_min) << ',' << format_number(g.read_latency_min) << ','
        << format_number(g.read_latency_max) << ',' << format_number(g.write_latency_min) << ','
        << format_number(g.write_latency_max) << '\n';
  }
}

}  // namespace kvtune
