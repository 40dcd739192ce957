#include "paqman/scenario.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

#include "paqman/policy_io.hpp"

namespace paqman {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw ConfigError(key + ": not a number: '" + v + "'");
  return x;
}

long long to_integer(const std::string& key, const std::string& v) {
  // Accepts plain integers and exact scientific forms such as 5e4.
  long long n = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), n);
  if (r.ec == std::errc() && r.ptr == v.data() + v.size()) return n;
  const double x = to_double(key, v);
  if (x != static_cast<double>(static_cast<long long>(x))) throw ConfigError(key + ": not an integer: '" + v + "'");
  return static_cast<long long>(x);
}

std::size_t to_count(const std::string& key, const std::string& v) {
  const long long n = to_integer(key, v);
  if (n < 0) throw ConfigError(key + ": must be non-negative");
  return static_cast<std::size_t>(n);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": not a boolean: '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::istringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_double(key, item));
  }
  return out;
}

std::string list_text(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + format_double(xs[i]);
  return s;
}

ModelKind parse_model(const std::string& v) {
  if (v == "zero_rtt") return ModelKind::zero_rtt;
  if (v == "rtt_single") return ModelKind::rtt_single;
  if (v == "rtt_multi") return ModelKind::rtt_multi;
  throw ConfigError("model: expected zero_rtt, rtt_single or rtt_multi, got '" + v + "'");
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

std::string_view to_string(ModelKind m) {
  switch (m) {
    case ModelKind::zero_rtt: return "zero_rtt";
    case ModelKind::rtt_single: return "rtt_single";
    case ModelKind::rtt_multi: return "rtt_multi";
  }
  return "?";
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void set_scenario_key(ScenarioConfig& c, const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "model") c.model = parse_model(v);
  else if (key == "link.service_rate_mbps") c.service_rate_mbps = to_double(key, v);
  else if (key == "link.packet_size_bits") c.packet_size_bits = to_double(key, v);
  else if (key == "link.buffer_packets") c.buffer = static_cast<int>(to_integer(key, v));
  else if (key == "traffic.alpha") c.alpha = to_double(key, v);
  else if (key == "traffic.rate_min_mbps") c.rate_min_mbps = to_double(key, v);
  else if (key == "traffic.rate_max_mbps") c.rate_max_mbps = to_double(key, v);
  else if (key == "traffic.initial_rate_mbps") c.initial_rate_mbps = to_double(key, v);
  else if (key == "traffic.rate_step_pkts") c.rate_step_pkts = to_double(key, v);
  else if (key == "traffic.rtt_ms") c.rtt_ms = to_double(key, v);
  else if (key == "traffic.flow_rtts_ms") c.flow_rtts_ms = to_list(key, v);
  else if (key == "reward.eta_s") c.eta = to_double(key, v);
  else if (key == "reward.penalty") c.penalty = to_double(key, v);
  else if (key == "disc.rate_grid_size") c.rate_grid_size = to_count(key, v);
  else if (key == "disc.snap") {
    try {
      c.snap = parse_snap_mode(v);
    } catch (const std::exception&) {
      throw ConfigError("disc.snap: expected split or nearest, got '" + v + "'");
    }
  } else if (key == "disc.rate_bins") c.rate_bins = static_cast<int>(to_integer(key, v));
  else if (key == "solver.tolerance") c.tolerance = to_double(key, v);
  else if (key == "solver.max_iterations") c.max_iterations = static_cast<long>(to_integer(key, v));
  else if (key == "learn.episodes") c.episodes = to_count(key, v);
  else if (key == "learn.steps_per_episode") c.steps_per_episode = to_count(key, v);
  else if (key == "learn.epsilon_end") c.epsilon_end = to_double(key, v);
  else if (key == "learn.min_visits") c.min_visits = to_count(key, v);
  else if (key == "run.replications") c.replications = to_count(key, v);
  else if (key == "run.arrivals") c.arrivals = to_count(key, v);
  else if (key == "run.seed") c.seed = to_count(key, v);
  else if (key == "run.burn_in_fraction") c.burn_in_fraction = to_double(key, v);
  else if (key == "run.evolution_bins") c.evolution_bins = static_cast<int>(to_integer(key, v));
  else if (key == "sim.overflow_halves_rate") c.overflow_halves_rate = to_bool(key, v);
  else if (key == "codel.target_s") c.codel_target = to_double(key, v);
  else if (key == "codel.interval_s") c.codel_interval = to_double(key, v);
  else if (key == "compare.rtt_sweep_ms") c.rtt_sweep_ms = to_list(key, v);
  else throw ConfigError("unknown key: " + key);
}

ScenarioConfig parse_scenario(std::istream& in) {
  ScenarioConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    set_scenario_key(c, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  c.validate();
  return c;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open config file: " + path);
  return parse_scenario(in);
}

void ScenarioConfig::validate() const {
  require(service_rate_mbps > 0.0, "link.service_rate_mbps must be positive");
  require(packet_size_bits > 0.0, "link.packet_size_bits must be positive");
  require(buffer >= 1, "link.buffer_packets must be at least 1");
  require(alpha > 0.0, "traffic.alpha must be positive");
  require(rate_min_mbps > 0.0 && rate_max_mbps > rate_min_mbps, "traffic rate range must satisfy 0 < min < max");
  require(initial_rate_mbps >= 0.0, "traffic.initial_rate_mbps must be non-negative");
  require(rate_step_pkts > 0.0, "traffic.rate_step_pkts must be positive");
  require(rtt_ms > 0.0, "traffic.rtt_ms must be positive");
  require(!flow_rtts_ms.empty(), "traffic.flow_rtts_ms needs at least one flow");
  for (double r : flow_rtts_ms) require(r > 0.0, "traffic.flow_rtts_ms entries must be positive");
  require(eta > 0.0, "reward.eta_s must be positive");
  require(penalty >= 0.0, "reward.penalty must be non-negative");
  require(rate_grid_size >= 2, "disc.rate_grid_size must be at least 2");
  require(rate_bins >= 1, "disc.rate_bins must be at least 1");
  require(tolerance > 0.0, "solver.tolerance must be positive");
  require(max_iterations >= 1, "solver.max_iterations must be at least 1");
  require(episodes >= 1 && steps_per_episode >= 1, "learn.episodes and learn.steps_per_episode must be positive");
  require(epsilon_end >= 0.0 && epsilon_end <= 1.0, "learn.epsilon_end must lie in [0, 1]");
  require(replications >= 1 && arrivals >= 1, "run.replications and run.arrivals must be positive");
  require(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0, "run.burn_in_fraction must lie in [0, 1)");
  require(evolution_bins >= 1, "run.evolution_bins must be at least 1");
  require(codel_target >= 0.0 && codel_interval > 0.0, "codel parameters must be positive");
  for (double r : rtt_sweep_ms) require(r > 0.0, "compare.rtt_sweep_ms entries must be positive");
}

void ScenarioConfig::apply_full_scale() {
  replications = 200;
  arrivals = 50000;
}

std::string ScenarioConfig::canonical() const {
  std::map<std::string, std::string> kv;
  kv["model"] = std::string(to_string(model));
  kv["link.service_rate_mbps"] = format_double(service_rate_mbps);
  kv["link.packet_size_bits"] = format_double(packet_size_bits);
  kv["link.buffer_packets"] = std::to_string(buffer);
  kv["traffic.alpha"] = format_double(alpha);
  kv["traffic.rate_min_mbps"] = format_double(rate_min_mbps);
  kv["traffic.rate_max_mbps"] = format_double(rate_max_mbps);
  kv["traffic.initial_rate_mbps"] = format_double(initial_rate_mbps);
  kv["traffic.rate_step_pkts"] = format_double(rate_step_pkts);
  kv["traffic.rtt_ms"] = format_double(rtt_ms);
  kv["traffic.flow_rtts_ms"] = list_text(flow_rtts_ms);
  kv["reward.eta_s"] = format_double(eta);
  kv["reward.penalty"] = format_double(penalty);
  kv["disc.rate_grid_size"] = std::to_string(rate_grid_size);
  kv["disc.snap"] = std::string(to_string(snap));
  kv["disc.rate_bins"] = std::to_string(rate_bins);
  kv["solver.tolerance"] = format_double(tolerance);
  kv["solver.max_iterations"] = std::to_string(max_iterations);
  kv["learn.episodes"] = std::to_string(episodes);
  kv["learn.steps_per_episode"] = std::to_string(steps_per_episode);
  kv["learn.epsilon_end"] = format_double(epsilon_end);
  kv["learn.min_visits"] = std::to_string(min_visits);
  kv["run.replications"] = std::to_string(replications);
  kv["run.arrivals"] = std::to_string(arrivals);
  kv["run.seed"] = std::to_string(seed);
  kv["run.burn_in_fraction"] = format_double(burn_in_fraction);
  kv["run.evolution_bins"] = std::to_string(evolution_bins);
  kv["sim.overflow_halves_rate"] = overflow_halves_rate ? "true" : "false";
  kv["codel.target_s"] = format_double(codel_target);
  kv["codel.interval_s"] = format_double(codel_interval);
  kv["compare.rtt_sweep_ms"] = list_text(rtt_sweep_ms);
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

std::string ScenarioConfig::hash() const { return fnv1a_hex(canonical()); }

ZeroRttModelConfig ScenarioConfig::zero_rtt_model() const {
  ZeroRttModelConfig m;
  m.alpha = alpha;
  m.mu = mu();
  m.buffer = buffer;
  m.eta = eta;
  m.penalty = penalty;
  // The Gamma rate parameter is alpha times the effective rate.
  m.rate_grid = RateGrid::log_spaced(alpha * rate_min(), alpha * rate_max(), rate_grid_size);
  m.snap = snap;
  return m;
}

RttSingleModelConfig ScenarioConfig::rtt_single_model(double rtt_s) const {
  RttSingleModelConfig m;
  m.mu = mu();
  m.buffer = buffer;
  m.eta = eta;
  m.penalty = penalty;
  m.rtt = rtt_s;
  m.rate_step = rate_step_pkts;
  m.rate_grid = RateGrid::log_spaced(rate_min(), rate_max(), rate_grid_size);
  m.snap = snap;
  return m;
}

MultiFlowConfig ScenarioConfig::multi_flow() const {
  MultiFlowConfig m;
  const double share = initial_rate() / static_cast<double>(flow_rtts_ms.size());
  for (double r : flow_rtts_ms) m.flows.push_back({r / 1000.0, share});
  m.mu = mu();
  m.buffer = buffer;
  m.eta = eta;
  m.penalty = penalty;
  m.rate_step = rate_step_pkts;
  m.rate_min = rate_min();
  m.rate_max = rate_max();
  return m;
}

MultiFlowConfig ScenarioConfig::single_flow(double rtt_s) const {
  MultiFlowConfig m = multi_flow();
  m.flows = {{rtt_s, initial_rate()}};
  return m;
}

ZeroRttSimConfig ScenarioConfig::zero_rtt_sim() const {
  ZeroRttSimConfig z;
  z.alpha = alpha;
  z.mu = mu();
  z.buffer = buffer;
  z.rate_min = rate_min();
  z.rate_max = rate_max();
  z.initial_rate = initial_rate();
  return z;
}

SolveOptions ScenarioConfig::solve_options() const {
  SolveOptions o;
  o.tolerance = tolerance;
  o.max_iterations = max_iterations;
  return o;
}

LearnOptions ScenarioConfig::learn_options() const {
  LearnOptions o;
  o.episodes = episodes;
  o.steps_per_episode = steps_per_episode;
  o.epsilon_end = epsilon_end;
  o.min_visits = min_visits;
  return o;
}

MultiDiscretization ScenarioConfig::discretization() const {
  MultiDiscretization d;
  d.rate_bins = rate_bins;
  d.rate_min = rate_min();
  d.rate_max = rate_max();
  return d;
}

SimOptions ScenarioConfig::sim_options() const {
  SimOptions o;
  o.arrivals = arrivals;
  o.overflow_halves_rate = overflow_halves_rate;
  return o;
}

CodelParams ScenarioConfig::codel() const {
  CodelParams p;
  p.target = codel_target > 0.0 ? codel_target : eta;
  p.interval = codel_interval;
  return p;
}

}  // namespace paqman
