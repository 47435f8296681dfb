#include "kvtune/harness.hpp"

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>
#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "kvtune/errors.hpp"
#include "kvtune/random.hpp"

namespace kvtune {

std::string_view to_string(Step s) {
  switch (s) {
    case Step::stop: return "stop";
    case Step::configure: return "configure";
    case Step::start: return "start";
    case Step::workload: return "workload";
    case Step::capture: return "capture";
  }
  return "?";
}

SyntheticBackend::SyntheticBackend(TuningDomain domain, OracleParams params)
    : domain_(std::move(domain)), params_(params) {
  params_.validate();
}

Outcome SyntheticBackend::measure(const ConfigurationPoint& point, std::uint64_t invocation) {
  if (!is_valid(domain_, point)) return Outcome::failed(Step::workload, "configuration violates domain constraints");
  return Outcome::success(oracle_metrics(domain_, point, params_, invocation));
}

// ---------------------------------------------------------------------------
// external commands

void ExternalBackendConfig::validate() const {
  const std::pair<const char*, const std::string*> cmds[] = {
      {"stop_cmd", &stop_cmd}, {"configure_cmd", &configure_cmd}, {"start_cmd", &start_cmd}, {"workload_cmd", &workload_cmd}};
  for (const auto& [name, cmd] : cmds)
    if (cmd->empty()) throw ValidationError(std::string("external backend: ") + name + " is missing");
  if (metrics_path.empty()) throw ValidationError("external backend: metrics_path is missing");
  if (!(timeout_s > 0.0) || !std::isfinite(timeout_s)) throw ValidationError("external backend: timeout must be > 0");
  if (duration_s < 1) throw ValidationError("external backend: duration_s must be >= 1");
}

std::string render_command(const std::string& templ, const TuningDomain& domain, const ConfigurationPoint& point,
                           const ExternalBackendConfig& config) {
  std::map<std::string, std::string, std::less<>> vars;
  for (std::size_t i = 0; i < domain.size(); ++i) vars[domain.parameter(i).name] = std::to_string(point[i]);
  vars["read_pct"] = std::to_string(point[kWlReadPct]);
  vars["write_pct"] = std::to_string(point[kWlWritePct]);
  vars["duration_s"] = std::to_string(config.duration_s);
  vars["metrics_path"] = config.metrics_path.string();

  std::string out;
  std::size_t i = 0;
  while (i < templ.size()) {
    if (templ[i] != '{') {
      out += templ[i++];
      continue;
    }
    const auto close = templ.find('}', i);
    if (close == std::string::npos) throw ValidationError("unterminated placeholder in command: " + templ);
    const std::string_view name(templ.data() + i + 1, close - i - 1);
    const auto it = vars.find(name);
    if (it == vars.end()) throw ValidationError("unknown placeholder {" + std::string(name) + "}");
    out += it->second;
    i = close + 1;
  }
  return out;
}

CommandResult run_command(const std::string& command, double timeout_s) {
  const pid_t pid = fork();
  if (pid < 0) throw BackendError("fork failed");
  if (pid == 0) {
    setpgid(0, 0);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  setpgid(pid, pid);
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
  auto pause = std::chrono::microseconds(200);
  int status = 0;
  while (true) {
    const pid_t r = waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0) throw BackendError("waitpid failed");
    if (std::chrono::steady_clock::now() >= deadline) {
      kill(-pid, SIGKILL);
      waitpid(pid, &status, 0);
      return {-1, true};
    }
    std::this_thread::sleep_for(pause);
    pause = std::min(pause * 2, std::chrono::microseconds(50'000));
  }
  if (WIFEXITED(status)) return {WEXITSTATUS(status), false};
  return {128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0), false};
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

Metrics parse_metrics_text(const std::string& text) {
  std::map<std::string, double> fields;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ValidationError("metrics line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size())
      throw ValidationError("metrics line " + std::to_string(line_no) + ": " + key + " is not a number");
    fields[key] = v;
  }
  auto get = [&](const char* name) {
    const auto it = fields.find(name);
    if (it == fields.end()) throw ValidationError(std::string("metrics field absent: ") + name);
    return it->second;
  };
  Metrics m{get("throughput_ops"), get("read_latency_ms"), get("write_latency_ms")};
  if (!is_plausible(m)) throw ValidationError("metrics must be positive and finite");
  return m;
}

Metrics parse_metrics_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("metrics file not found: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_metrics_text(ss.str());
}

ExternalBackend::ExternalBackend(TuningDomain domain, ExternalBackendConfig config)
    : domain_(std::move(domain)), config_(std::move(config)) {
  config_.validate();
}

std::optional<Failure> ExternalBackend::run_step(Step step, const std::string& templ, const ConfigurationPoint& point) {
  std::string cmd;
  try {
    cmd = render_command(templ, domain_, point, config_);
  } catch (const ValidationError& e) {
    return Failure{step, e.what()};
  }
  const auto r = run_command(cmd, config_.timeout_s);
  if (r.timed_out) return Failure{step, "timed out after " + format_number(config_.timeout_s) + " s"};
  if (r.exit_code != 0) return Failure{step, "exit status " + std::to_string(r.exit_code)};
  return std::nullopt;
}

std::optional<Failure> ExternalBackend::prepare(const ConfigurationPoint& point) {
  if (!is_valid(domain_, point)) return Failure{Step::configure, "configuration violates domain constraints"};
  if (auto f = run_step(Step::stop, config_.stop_cmd, point)) return f;
  if (auto f = run_step(Step::configure, config_.configure_cmd, point)) return f;
  return run_step(Step::start, config_.start_cmd, point);
}

Outcome ExternalBackend::measure(const ConfigurationPoint& point, std::uint64_t) {
  std::error_code ec;
  std::filesystem::remove(config_.metrics_path, ec);  // never read a stale file
  if (auto f = run_step(Step::workload, config_.workload_cmd, point)) return {std::nullopt, f};
  try {
    return Outcome::success(parse_metrics_file(config_.metrics_path));
  } catch (const ValidationError& e) {
    return Outcome::failed(Step::capture, e.what());
  }
}

Outcome external_measure(const ExternalBackendConfig& config, const TuningDomain& domain,
                         const ConfigurationPoint& point) {
  ExternalBackend backend(domain, config);
  if (auto f = backend.prepare(point)) return {std::nullopt, f};
  return backend.measure(point, 0);
}

// ---------------------------------------------------------------------------
// sampling plans

std::size_t SamplingPlan::total() const {
  std::size_t n = 0;
  for (const auto& c : cells) n += c.count;
  return n;
}

void SamplingPlan::validate(const TuningDomain& domain) const {
  if (cells.empty()) throw ValidationError("sampling plan has no cells");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    const std::string where = "plan cell " + std::to_string(i) + ": ";
    if (c.count < 1) throw ValidationError(where + "count must be >= 1");
    ConfigurationPoint probe = default_configuration(domain, c.workload, c.physical);
    const auto v = kvtune::validate(domain, probe);
    if (!v.empty()) throw ValidationError(where + v.front().parameter + ": " + v.front().message);
  }
}

SamplingPlan default_plan(std::size_t total, std::uint64_t seed) {
  static constexpr Workload workloads[] = {{50, 50}, {5, 95}, {95, 5}};
  static constexpr Physical physicals[] = {{4, 4}, {4, 3}, {4, 2}, {4, 1}, {3, 3}, {3, 2}, {3, 1}, {2, 2}};
  constexpr std::size_t cells = std::size(workloads) * std::size(physicals);
  if (total < cells) throw ValidationError("default plan needs at least " + std::to_string(cells) + " examples");
  SamplingPlan plan;
  plan.seed = seed;
  std::size_t i = 0;
  for (const auto& w : workloads)
    for (const auto& ph : physicals) {
      plan.cells.push_back({w, ph, total / cells + (i < total % cells ? 1 : 0)});
      ++i;
    }
  return plan;
}

SamplingPlan exclude_physical(SamplingPlan plan, const Physical& physical) {
  std::erase_if(plan.cells, [&](const PlanCell& c) { return c.physical == physical; });
  return plan;
}

ConfigurationPoint sample_point(const TuningDomain& domain, const PlanCell& cell, std::uint64_t plan_seed,
                                std::uint64_t index) {
  SplitMix64 rng(derive_seed(plan_seed, index));
  ConfigurationPoint p = default_configuration(domain, cell.workload, cell.physical);
  for (Param k : kKnobParams) {
    const auto& values = domain.parameter(k).values;
    p[k] = values[rng.below(values.size())];
  }
  return p;
}

// ---------------------------------------------------------------------------
// generation

std::string LogRecord::to_json() const {
  nlohmann::ordered_json j;
  j["index"] = index;
  j["status"] = ok ? "ok" : "failed";
  j["step"] = failed_step ? nlohmann::ordered_json(std::string(to_string(*failed_step))) : nlohmann::ordered_json();
  j["message"] = message;
  j["attempts"] = attempts;
  j["wall_ms"] = wall_ms;
  return j.dump();
}

std::size_t GenerationResult::failed() const {
  return static_cast<std::size_t>(std::count_if(log.begin(), log.end(), [](const LogRecord& r) { return !r.ok; }));
}

namespace {

struct Slot {
  ConfigurationPoint point;
  std::optional<Metrics> metrics;
  LogRecord record;
};

void run_example(BenchmarkBackend& backend, Slot& slot, int retries) {
  const auto t0 = std::chrono::steady_clock::now();
  std::optional<Failure> last;
  int attempt = 0;
  for (; attempt <= retries; ++attempt) {
    last = backend.prepare(slot.point);
    if (!last) {
      const auto out = backend.measure(slot.point, derive_seed(slot.record.index, static_cast<std::uint64_t>(attempt)));
      if (out.ok() && is_plausible(*out.metrics)) {
        slot.metrics = out.metrics;
        last.reset();
        break;
      }
      last = out.failure ? *out.failure : Failure{Step::capture, "implausible metrics"};
    }
  }
  slot.record.attempts = std::min(attempt + 1, retries + 1);
  slot.record.ok = !last.has_value();
  if (last) {
    slot.record.failed_step = last->step;
    slot.record.message = last->message;
  }
  slot.record.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

GenerationResult generate_dataset(BenchmarkBackend& backend, const TuningDomain& domain, const SamplingPlan& plan,
                                  const GenerationOptions& options) {
  plan.validate(domain);
  if (options.retries < 0) throw ValidationError("retries must be >= 0");

  std::vector<Slot> slots;
  slots.reserve(plan.total());
  for (const auto& cell : plan.cells)
    for (std::size_t k = 0; k < cell.count; ++k) {
      const std::size_t index = slots.size();
      Slot s;
      s.point = sample_point(domain, cell, plan.seed, index);
      s.record.index = index;
      slots.push_back(std::move(s));
    }

  const unsigned threads =
      backend.requires_exclusive_access() ? 1u : std::max(1u, std::min<unsigned>(options.threads, slots.size()));
  if (threads == 1) {
    for (auto& s : slots) run_example(backend, s, options.retries);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < slots.size(); i = next++) run_example(backend, slots[i], options.retries);
      });
  }

  GenerationResult result{Dataset(domain), {}};
  result.dataset.reserve(slots.size());
  result.log.reserve(slots.size());
  for (auto& s : slots) {
    if (s.metrics) result.dataset.add({std::move(s.point), *s.metrics});
    result.log.push_back(std::move(s.record));
  }
  return result;
}

void write_log(const std::vector<LogRecord>& log, std::ostream& out) {
  for (const auto& r : log) out << r.to_json() << '\n';
}

RepeatedMeasurement measure_repeated(BenchmarkBackend& backend, const ConfigurationPoint& point, std::size_t trials,
                                     std::uint64_t first_invocation) {
  if (trials < 1) throw ValidationError("trials must be >= 1");
  RepeatedMeasurement r;
  for (std::size_t t = 0; t < trials; ++t) {
    if (backend.prepare(point)) {
      ++r.failures;
      continue;
    }
    const auto out = backend.measure(point, first_invocation + t);
    if (out.ok())
      r.trials.push_back(*out.metrics);
    else
      ++r.failures;
  }
  if (r.trials.empty()) throw BackendError("all " + std::to_string(trials) + " trials failed");
  const double n = static_cast<double>(r.trials.size());
  for (const auto& m : r.trials) {
    r.mean.throughput_ops += m.throughput_ops;
    r.mean.read_latency_ms += m.read_latency_ms;
    r.mean.write_latency_ms += m.write_latency_ms;
  }
  r.mean.throughput_ops /= n;
  r.mean.read_latency_ms /= n;
  r.mean.write_latency_ms /= n;
  return r;
}

// ---------------------------------------------------------------------------
// TOML

namespace {

template <typename T>
T get_or(const toml::node_view<const toml::node>& node, const char* key, T fallback) {
  const auto v = node[key];
  if (!v) return fallback;
  if constexpr (std::is_same_v<T, std::string>) {
    if (auto s = v.value<std::string>()) return *s;
  } else if constexpr (std::is_floating_point_v<T>) {
    if (auto d = v.value<double>()) return *d;
  } else {
    if (auto i = v.value<std::int64_t>()) return static_cast<T>(*i);
  }
  throw ValidationError(std::string("config: ") + key + " has the wrong type");
}

}  // namespace

HarnessConfig parse_harness_config(const std::string& toml_text) {
  toml::table tbl;
  try {
    tbl = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "config: " << e.description() << " (line " << e.source().begin.line << ")";
    throw ValidationError(os.str());
  }
  const toml::node_view<const toml::node> root(static_cast<const toml::node&>(tbl));

  HarnessConfig cfg;
  cfg.disks = get_or(root, "disks", 1);
  cfg.heap_mb = get_or(root, "heap_mb", 8192);
  const auto domain = build_cassandra_domain(cfg.disks, cfg.heap_mb);
  const auto seed = get_or<std::uint64_t>(root, "seed", 0);

  const std::string backend = get_or<std::string>(root, "backend", "synthetic");
  if (backend == "synthetic")
    cfg.backend = BackendKind::synthetic;
  else if (backend == "external")
    cfg.backend = BackendKind::external;
  else
    throw ValidationError("config: backend must be synthetic or external, got " + backend);

  const auto oracle = root["oracle"];
  cfg.oracle.noise_sigma = get_or(oracle, "sigma", 0.02);
  cfg.oracle.seed = get_or<std::uint64_t>(oracle, "seed", derive_seed(seed, 1));
  cfg.oracle.client_concurrency = get_or(oracle, "client_concurrency", 64);
  cfg.oracle.validate();

  if (const auto ext = root["external"]) {
    ExternalBackendConfig e;
    e.stop_cmd = get_or<std::string>(ext, "stop_cmd", "");
    e.configure_cmd = get_or<std::string>(ext, "configure_cmd", "");
    e.start_cmd = get_or<std::string>(ext, "start_cmd", "");
    e.workload_cmd = get_or<std::string>(ext, "workload_cmd", "");
    e.metrics_path = get_or<std::string>(ext, "metrics_path", "");
    e.timeout_s = get_or(ext, "timeout_s", 600.0);
    e.duration_s = get_or(ext, "duration_s", 60);
    e.validate();
    cfg.external = std::move(e);
  }
  if (cfg.backend == BackendKind::external && !cfg.external)
    throw ValidationError("config: backend = \"external\" needs an [external] table");

  const auto gen = root["generation"];
  cfg.generation.retries = get_or(gen, "retries", 1);
  cfg.generation.threads = get_or(gen, "threads", 1u);

  const auto plan = root["plan"];
  const auto plan_seed = get_or<std::uint64_t>(plan, "seed", seed);
  if (const auto cells = plan["cells"].as_array()) {
    cfg.plan.seed = plan_seed;
    for (std::size_t i = 0; i < cells->size(); ++i) {
      const toml::node_view<const toml::node> c((*cells)[i]);
      if (!c.is_table()) throw ValidationError("config: plan.cells entries must be tables");
      PlanCell cell;
      cell.workload = parse_workload(get_or<std::string>(c, "workload", "50:50"));
      cell.physical = {get_or(c, "node_count", 4), get_or(c, "replication_factor", 3)};
      const auto count = get_or<std::int64_t>(c, "count", 1);
      if (count < 1) throw ValidationError("config: plan cell " + std::to_string(i) + ": count must be >= 1");
      cell.count = static_cast<std::size_t>(count);
      cfg.plan.cells.push_back(cell);
    }
  } else {
    cfg.plan = default_plan(get_or<std::size_t>(plan, "total", 2400), plan_seed);
  }
  if (const auto ex = plan["exclude"].as_array()) {
    for (const auto& e : *ex) {
      const auto* pair = e.as_array();
      if (!pair || pair->size() != 2 || !(*pair)[0].is_integer() || !(*pair)[1].is_integer())
        throw ValidationError("config: plan.exclude entries must be [node_count, replication_factor]");
      cfg.plan = exclude_physical(std::move(cfg.plan), {static_cast<int>(*(*pair)[0].value<std::int64_t>()),
                                                        static_cast<int>(*(*pair)[1].value<std::int64_t>())});
    }
  }
  cfg.plan.validate(domain);
  return cfg;
}

HarnessConfig load_harness_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config file not found: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_harness_config(ss.str());
}

}  // namespace kvtune
