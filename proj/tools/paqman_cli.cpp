// Command-line front end: solve, learn, simulate, compare, infer,
// export-policy.  Exit codes: 0 ok, 2 config error, 3 non-convergence,
// 4 I/O error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "paqman/experiment.hpp"
#include "paqman/flow_inference.hpp"

namespace fs = std::filesystem;
using namespace paqman;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNotConverged = 3;
constexpr int kIoError = 4;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotConverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  bool full_scale = false;
  bool force = false;
  std::vector<std::string> overrides;
};

ScenarioConfig load(const Globals& g) {
  ScenarioConfig cfg = g.config.empty() ? ScenarioConfig{} : load_scenario(g.config);
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    set_scenario_key(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (g.seed) cfg.seed = *g.seed;
  if (g.full_scale) cfg.apply_full_scale();
  cfg.validate();
  return cfg;
}

std::string header(const std::map<std::string, std::string>& meta) {
  std::string s;
  for (const auto& [k, v] : meta) s += "# " + k + " = " + v + "\n";
  return s;
}

// Every file goes through here: one buffered write per file, renamed into
// place, refusing to replace a file produced under a different config.
void write_output(const Globals& g, const ScenarioConfig& cfg, const std::string& name, const std::string& content) {
  const fs::path dir(g.out_dir);
  const fs::path path = dir / name;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  if (fs::exists(path) && !g.force) {
    const std::string stored = stored_config_hash(path.string());
    if (stored != cfg.hash())
      throw IoError("refusing to overwrite " + path.string() + " (config hash " + (stored.empty() ? "missing" : stored) +
                    ", current " + cfg.hash() + "); pass --force to replace it");
  }
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    out << content;
    if (!out) throw IoError("cannot write " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
  std::cerr << "wrote " << path.string() << '\n';
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

bool is_multi_policy(const std::string& text) { return text.find("\nlevel,key,") != std::string::npos; }

void check_policy_hash(const std::string& text, const std::string& path, const ScenarioConfig& cfg) {
  std::istringstream in(text);
  std::string line;
  const std::string tag = "# config_hash = ";
  while (std::getline(in, line) && !line.empty() && line[0] == '#')
    if (line.rfind(tag, 0) == 0 && line.substr(tag.size()) != cfg.hash())
      std::cerr << "note: " << path << " was produced under config hash " << line.substr(tag.size()) << '\n';
}

GridPolicy solved_grid(const ScenarioConfig& cfg, double rtt_s) {
  std::cerr << "solving " << to_string(cfg.model) << " model";
  if (cfg.model == ModelKind::rtt_single) std::cerr << " at rtt " << rtt_s * 1000.0 << " ms";
  std::cerr << "...\n";
  GridPolicy p = cfg.model == ModelKind::zero_rtt ? solve_zero_rtt(cfg) : solve_rtt_single(cfg, rtt_s);
  if (!p.table.converged) {
    std::ostringstream msg;
    msg << "value iteration did not converge: " << p.table.iterations << " iterations, residual span "
        << p.table.residual_span << " (tolerance " << cfg.tolerance << "); raise solver.max_iterations";
    throw NotConverged(msg.str());
  }
  return p;
}

std::string visits_csv(const MultiPolicyTable& t, const ScenarioConfig& cfg, std::uint64_t threshold) {
  const auto r = t.visit_report(threshold);
  std::ostringstream s;
  s << header(provenance(cfg)) << "# cells = " << r.cells << "\n# below_threshold = " << r.below_threshold
    << "\n# threshold = " << r.threshold << "\nqueue,cells\n";
  for (const auto& [q, n] : r.cells_by_queue) s << q << ',' << n << '\n';
  return s.str();
}

std::shared_ptr<const MultiPolicyTable> learned(const ScenarioConfig& cfg) {
  std::cerr << "learning " << cfg.flow_rtts_ms.size() << "-flow policy (" << cfg.episodes << " episodes x "
            << cfg.steps_per_episode << " steps)...\n";
  return std::make_shared<const MultiPolicyTable>(learn_multi(cfg));
}

void write_grid_policy(const Globals& g, const ScenarioConfig& cfg, const GridPolicy& p, const std::string& suffix) {
  std::ostringstream pol, heat;
  write_policy_csv(pol, p);
  heat << header(p.metadata);
  write_heatmap_csv(heat, p);
  write_output(g, cfg, "policy" + suffix + ".csv", pol.str());
  write_output(g, cfg, "heatmap" + suffix + ".csv", heat.str());
}

void write_multi(const Globals& g, const ScenarioConfig& cfg, const MultiPolicyTable& t) {
  std::ostringstream pol;
  auto meta = provenance(cfg);
  meta["seed"] = std::to_string(cfg.seed);
  write_multi_policy_csv(pol, t, meta);
  write_output(g, cfg, "multi_policy.csv", pol.str());
  write_output(g, cfg, "visits.csv", visits_csv(t, cfg, 100));
  const auto r = t.visit_report(100);
  std::cout << "learned " << r.cells << " cells, " << r.below_threshold << " with fewer than 100 visits; gain "
            << format_double(t.gain) << " per s\n";
}

int cmd_learn(const Globals& g) {
  const auto cfg = load(g);
  if (cfg.model != ModelKind::rtt_multi) throw ConfigError("learn needs model = rtt_multi");
  write_multi(g, cfg, *learned(cfg));
  return kOk;
}

int cmd_solve(const Globals& g) {
  const auto cfg = load(g);
  if (cfg.model == ModelKind::rtt_multi) return cmd_learn(g);
  const auto p = solved_grid(cfg, cfg.rtt_ms / 1000.0);
  write_grid_policy(g, cfg, p, "");
  std::cout << "gain " << format_double(p.table.gain) << " per s, " << p.table.iterations << " iterations, "
            << drop_region(p).size() << " drop cells of " << p.table.actions.size() << '\n';
  return kOk;
}

// PAQMAN from a stored file when given, otherwise solved or learned now.
PolicyFactory paqman_factory(const ScenarioConfig& cfg, const std::string& policy_file, double rtt_s) {
  if (!policy_file.empty()) {
    const std::string text = read_file(policy_file);
    check_policy_hash(text, policy_file, cfg);
    std::istringstream in(text);
    if (is_multi_policy(text)) {
      if (cfg.model != ModelKind::rtt_multi) throw ConfigError(policy_file + " is a multi-flow policy");
      return multi_factory(std::make_shared<const MultiPolicyTable>(read_multi_policy_csv(in)), cfg);
    }
    if (cfg.model == ModelKind::rtt_multi) throw ConfigError(policy_file + " is not a multi-flow policy");
    return grid_factory(std::make_shared<const GridPolicy>(read_policy_csv(in)));
  }
  if (cfg.model == ModelKind::rtt_multi) return multi_factory(learned(cfg), cfg);
  return grid_factory(std::make_shared<const GridPolicy>(solved_grid(cfg, rtt_s)));
}

PolicyFactory baseline_factory(const ScenarioConfig& cfg, const std::string& name) {
  if (name == "codel") return codel_factory(cfg);
  if (name == "droptail") return droptail_factory();
  if (name == "admit_all") return [] { return std::make_unique<AdmitAllPolicy>(); };
  throw ConfigError("unknown policy '" + name + "' (expected paqman, codel, droptail or admit_all)");
}

int cmd_simulate(const Globals& g, const std::string& policy, const std::string& policy_file, std::size_t replication) {
  const auto cfg = load(g);
  const double rtt_s = cfg.rtt_ms / 1000.0;
  const auto make = policy == "paqman" ? paqman_factory(cfg, policy_file, rtt_s) : baseline_factory(cfg, policy);
  const std::uint64_t seed = cfg.seed + replication;
  auto p = make();
  const auto trace = run_one(cfg, *p, seed, rtt_s);
  std::ostringstream out;
  auto meta = provenance(cfg);
  meta["policy"] = policy;
  meta["seed"] = std::to_string(seed);
  out << header(meta);
  write_trace_csv(out, trace);
  write_output(g, cfg, "trace_" + policy + "_seed" + std::to_string(seed) + ".csv", out.str());
  const auto s = trace_stats(trace, 0.0);
  std::cout << trace.events.size() << " events, mean delay " << s.mean_delay * 1000.0 << " ms, throughput "
            << cfg.units().to_mbit(s.departure_rate) << " Mbit/s\n";
  return kOk;
}

int cmd_compare(const Globals& g, const std::vector<std::string>& names, const std::string& policy_file) {
  const auto cfg = load(g);
  const bool sweep = cfg.model == ModelKind::rtt_single && !cfg.rtt_sweep_ms.empty();
  if (sweep && !policy_file.empty()) throw ConfigError("--policy-file cannot be combined with compare.rtt_sweep_ms");
  const std::vector<double> rtts = sweep ? cfg.rtt_sweep_ms : std::vector<double>{cfg.rtt_ms};

  Report report;
  for (double rtt_ms : rtts) {
    const double rtt_s = rtt_ms / 1000.0;
    std::vector<ComparePolicy> policies;
    for (const auto& n : names)
      policies.push_back({n, n == "paqman" ? paqman_factory(cfg, policy_file, rtt_s) : baseline_factory(cfg, n)});
    std::cerr << "simulating " << cfg.replications << " x " << cfg.arrivals << " arrivals per policy...\n";
    merge_report(report, compare(cfg, policies, rtt_s));
  }
  std::ostringstream csv, summary;
  write_report_csv(csv, report);
  write_report_summary(summary, report);
  write_output(g, cfg, "report.csv", csv.str());
  write_output(g, cfg, "summary.txt", summary.str());
  for (const auto& [key, text] : report.evolution) write_output(g, cfg, "evolution_" + key + ".csv", text);
  std::cout << summary.str();
  return kOk;
}

int cmd_infer(const Globals& g, const std::string& log_path) {
  const auto cfg = load(g);
  const ObservationLog log = read_observation_log(log_path);
  const auto result = fit(log);
  std::ostringstream out;
  out << header(provenance(cfg)) << "# log = " << fs::path(log_path).filename().string() << '\n'
      << fit_csv_header() << ",current_rate_pkts_per_s\n"
      << fit_csv_row(result) << ',' << format_double(current_rate(result, log.actions)) << '\n';
  write_output(g, cfg, "fit.csv", out.str());
  write_fit_text(std::cout, result);
  if (!result.converged) throw NotConverged("likelihood maximization did not converge");
  return kOk;
}

int cmd_export(const Globals& g, const std::string& policy_file) {
  const auto cfg = load(g);
  const std::string text = read_file(policy_file);
  std::istringstream in(text);
  if (is_multi_policy(text)) {
    // Coarse (incoming flow, queue) view of a learned table.
    const auto t = read_multi_policy_csv(in);
    std::ostringstream out;
    out << header(provenance(cfg)) << "incoming,queue,action,visits\n";
    const auto levels = static_cast<std::uint64_t>(t.buffer + 1);
    for (const auto& [key, e] : t.coarse)
      out << key / levels << ',' << key % levels << ',' << static_cast<int>(e.greedy()) << ',' << e.total() << '\n';
    write_output(g, cfg, "heatmap_multi.csv", out.str());
    return kOk;
  }
  const auto p = read_policy_csv(in);
  std::ostringstream heat;
  heat << header(provenance(cfg));
  write_heatmap_csv(heat, p);
  write_output(g, cfg, "heatmap.csv", heat.str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal packet admission policies for active queue management"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Scenario file (key = value lines)");
  app.add_option("--seed", g.seed, "Overrides run.seed");
  app.add_option("--out-dir", g.out_dir, "Directory for output files")->capture_default_str();
  app.add_flag("--full-scale", g.full_scale, "200 replications of 5e4 arrivals");
  app.add_flag("--force", g.force, "Overwrite outputs written under a different config");
  app.add_option("--set", g.overrides, "Config override key=value (repeatable)");

  auto* solve_cmd = app.add_subcommand("solve", "Solve a single-flow model (rtt_multi routes to learn)");
  auto* learn_cmd = app.add_subcommand("learn", "Learn a multi-flow tabular policy");

  auto* sim_cmd = app.add_subcommand("simulate", "Write one simulated trace");
  std::string sim_policy = "paqman", sim_file;
  std::size_t replication = 0;
  sim_cmd->add_option("--policy", sim_policy, "paqman, codel, droptail or admit_all")->capture_default_str();
  sim_cmd->add_option("--policy-file", sim_file, "Stored PAQMAN policy");
  sim_cmd->add_option("--replication", replication, "Replication index; seed = run.seed + index");

  auto* cmp_cmd = app.add_subcommand("compare", "Compare policies on identical seeds");
  std::vector<std::string> cmp_policies{"paqman", "codel", "droptail"};
  std::string cmp_file;
  cmp_cmd->add_option("--policies", cmp_policies, "Policies to compare")->delimiter(',')->capture_default_str();
  cmp_cmd->add_option("--policy-file", cmp_file, "Stored PAQMAN policy");

  auto* infer_cmd = app.add_subcommand("infer", "Fit AIMD-Gamma parameters to an interarrival log");
  std::string log_path;
  infer_cmd->add_option("--log", log_path, "CSV with interarrival_seconds,action")->required();

  auto* export_cmd = app.add_subcommand("export-policy", "Write the drop map of a stored policy");
  std::string export_file;
  export_cmd->add_option("--policy-file", export_file, "Stored policy")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*solve_cmd) return cmd_solve(g);
    if (*learn_cmd) return cmd_learn(g);
    if (*sim_cmd) return cmd_simulate(g, sim_policy, sim_file, replication);
    if (*cmp_cmd) return cmd_compare(g, cmp_policies, cmp_file);
    if (*infer_cmd) return cmd_infer(g, log_path);
    if (*export_cmd) return cmd_export(g, export_file);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const NotConverged& e) {
    std::cerr << "not converged: " << e.what() << '\n';
    return kNotConverged;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::invalid_argument& e) {
    // Malformed input files and out-of-range model parameters.
    std::cerr << "invalid input: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kOk;
}
