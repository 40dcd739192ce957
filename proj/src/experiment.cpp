#include "paqman/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "paqman/rtt_single_model.hpp"
#include "paqman/smdp_solver.hpp"
#include "paqman/zero_rtt_model.hpp"

namespace paqman {

namespace {

std::string rtt_label(double rtt_ms) { return format_double(rtt_ms); }

std::string evolution_key(const std::string& policy, double rtt_ms) {
  return rtt_ms > 0.0 ? policy + "_rtt" + rtt_label(rtt_ms) + "ms" : policy;
}

std::string fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

}  // namespace

std::map<std::string, std::string> provenance(const ScenarioConfig& cfg) {
  return {{"config_hash", cfg.hash()}, {"model", std::string(to_string(cfg.model))}, {"version", kVersion}};
}

GridPolicy solve_zero_rtt(const ScenarioConfig& cfg) {
  const auto mc = cfg.zero_rtt_model();
  const ZeroRttModel model(mc);
  GridPolicy p;
  p.table = solve(transform(model), cfg.solve_options());
  std::vector<double> lambda;
  for (double b : model.grid().points()) lambda.push_back(b / mc.alpha);
  p.grid = RateGrid(std::move(lambda));
  p.queue_levels = model.queue_levels();
  p.metadata = provenance(cfg);
  return p;
}

GridPolicy solve_rtt_single(const ScenarioConfig& cfg, double rtt_s) {
  const RttSingleModel model(cfg.rtt_single_model(rtt_s));
  GridPolicy p;
  p.table = solve(transform(model), cfg.solve_options());
  p.grid = model.grid();
  p.queue_levels = model.queue_levels();
  p.metadata = provenance(cfg);
  p.metadata["rtt_s"] = format_double(rtt_s);
  return p;
}

MultiPolicyTable learn_multi(const ScenarioConfig& cfg) {
  return learn_policy(cfg.multi_flow(), cfg.discretization(), cfg.learn_options(), cfg.seed);
}

std::vector<std::uint64_t> replication_seeds(const ScenarioConfig& cfg) {
  std::vector<std::uint64_t> seeds(cfg.replications);
  for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = cfg.seed + i;
  return seeds;
}

PolicyFactory codel_factory(const ScenarioConfig& cfg) {
  const CodelParams p = cfg.codel();
  return [p] { return std::make_unique<CodelPolicy>(p); };
}

PolicyFactory droptail_factory() {
  return [] { return std::make_unique<DropTailPolicy>(); };
}

PolicyFactory grid_factory(std::shared_ptr<const GridPolicy> policy) {
  return [policy] { return std::make_unique<GridPaqmanPolicy>(policy); };
}

PolicyFactory multi_factory(std::shared_ptr<const MultiPolicyTable> table, const ScenarioConfig& cfg) {
  const MultiFlowConfig mc = cfg.multi_flow();
  return [table, mc] { return std::make_unique<MultiPaqmanPolicy>(table, mc); };
}

SimTrace run_one(const ScenarioConfig& cfg, AqmPolicy& policy, std::uint64_t seed, double rtt_s) {
  switch (cfg.model) {
    case ModelKind::zero_rtt: return run_zero_rtt(cfg.zero_rtt_sim(), policy, seed, cfg.sim_options());
    case ModelKind::rtt_single: return run_rtt(cfg.single_flow(rtt_s), policy, seed, cfg.sim_options());
    case ModelKind::rtt_multi: return run_rtt(cfg.multi_flow(), policy, seed, cfg.sim_options());
  }
  throw std::logic_error("unknown model");
}

std::vector<SimTrace> run_replications(const ScenarioConfig& cfg, const PolicyFactory& make, double rtt_s,
                                       unsigned threads) {
  const auto seeds = replication_seeds(cfg);
  std::vector<SimTrace> traces(seeds.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, seeds.size()));

  auto work = [&](unsigned worker) {
    auto policy = make();
    for (std::size_t i = worker; i < seeds.size(); i += threads) traces[i] = run_one(cfg, *policy, seeds[i], rtt_s);
  };
  if (threads <= 1) {
    work(0);
    return traces;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (unsigned w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      try {
        work(w);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return traces;
}

Report compare(const ScenarioConfig& cfg, const std::vector<ComparePolicy>& policies, double rtt_s) {
  Report r;
  r.provenance = provenance(cfg);
  r.seeds = replication_seeds(cfg);
  r.burn_in_fraction = cfg.burn_in_fraction;
  const double rtt_ms = cfg.model == ModelKind::zero_rtt ? 0.0 : rtt_s * 1000.0;
  for (const auto& p : policies) {
    // One policy's traces at a time keeps memory bounded at full scale.
    const auto traces = run_replications(cfg, p.make, rtt_s);
    ReportRow row;
    row.rtt_ms = rtt_ms;
    row.policy = p.name;
    row.stats = aggregate(traces, cfg.burn_in_fraction);
    row.mu = cfg.mu();
    row.packet_size_bits = cfg.packet_size_bits;
    std::ostringstream evo;
    for (const auto& [k, v] : r.provenance) evo << "# " << k << " = " << v << '\n';
    evo << "# policy = " << p.name << '\n';
    write_evolution_csv(evo, traces, cfg.evolution_bins);
    r.evolution[evolution_key(p.name, rtt_ms)] = evo.str();
    r.rows.push_back(std::move(row));
  }
  return r;
}

void merge_report(Report& into, Report&& other) {
  if (into.rows.empty() && into.provenance.empty()) {
    into = std::move(other);
    return;
  }
  if (into.seeds != other.seeds) throw std::invalid_argument("reports use different seeds");
  for (auto& row : other.rows) into.rows.push_back(std::move(row));
  for (auto& [k, v] : other.evolution) into.evolution[k] = std::move(v);
}

void write_report_csv(std::ostream& out, const Report& r) {
  for (const auto& [k, v] : r.provenance) out << "# " << k << " = " << v << '\n';
  out << "# seeds = ";
  if (!r.seeds.empty()) out << r.seeds.front() << ".." << r.seeds.back();
  out << '\n' << "# burn_in_fraction = " << format_double(r.burn_in_fraction) << '\n';
  out << "rtt_ms,policy,replications,mean_delay_s,mean_queue_pkts,throughput_pkts_per_s,throughput_mbps,"
         "offered_rate_pkts_per_s,utilization,policy_drops,forced_drops,decisions,admitted\n";
  for (const auto& row : r.rows) {
    const auto& p = row.stats.pooled;
    const Units u{row.packet_size_bits};
    out << format_double(row.rtt_ms) << ',' << row.policy << ',' << row.stats.per_trace.size() << ','
        << format_double(p.mean_delay) << ',' << format_double(p.mean_queue) << ',' << format_double(p.departure_rate)
        << ',' << format_double(u.to_mbit(p.departure_rate)) << ',' << format_double(p.mean_rate) << ','
        << format_double(p.utilization) << ',' << p.policy_drops << ',' << p.forced_drops << ',' << p.decisions << ','
        << p.admitted << '\n';
  }
}

void write_report_summary(std::ostream& out, const Report& r) {
  const auto hash = r.provenance.find("config_hash");
  out << "config " << (hash == r.provenance.end() ? "?" : hash->second) << ", " << r.seeds.size()
      << " replications";
  if (!r.seeds.empty()) out << " (seeds " << r.seeds.front() << ".." << r.seeds.back() << ')';
  out << ", burn-in " << fixed(r.burn_in_fraction, 2) << "\n\n";
  char line[160];
  std::snprintf(line, sizeof line, "%8s  %-10s %12s %12s %14s %12s %10s %10s\n", "rtt_ms", "policy", "delay_ms",
                "queue_pkts", "thru_mbps", "utilization", "drops", "overflow");
  out << line;
  for (const auto& row : r.rows) {
    const auto& p = row.stats.pooled;
    const Units u{row.packet_size_bits};
    std::snprintf(line, sizeof line, "%8s  %-10s %12.3f %12.3f %14.4f %12.4f %10ld %10ld\n",
                  row.rtt_ms > 0.0 ? fixed(row.rtt_ms, 1).c_str() : "-", row.policy.c_str(), p.mean_delay * 1000.0,
                  p.mean_queue, u.to_mbit(p.departure_rate), p.utilization, p.policy_drops, p.forced_drops);
    out << line;
  }
}

const ReportRow& find_row(const Report& report, const std::string& policy, double rtt_ms) {
  for (const auto& row : report.rows)
    if (row.policy == policy && std::abs(row.rtt_ms - rtt_ms) < 1e-9) return row;
  throw std::out_of_range("no report row for " + policy + " at rtt " + rtt_label(rtt_ms) + " ms");
}

std::vector<std::pair<std::size_t, int>> drop_region(const GridPolicy& p) {
  std::vector<std::pair<std::size_t, int>> cells;
  for (std::size_t r = 0; r < p.grid.size(); ++r)
    for (int q = 0; q < p.queue_levels; ++q)
      if (p.table.actions[p.index(q, r)] == Action::drop) cells.emplace_back(r, q);
  return cells;
}

bool drop_region_contains(const GridPolicy& outer, const GridPolicy& inner) {
  if (outer.grid.size() != inner.grid.size() || outer.queue_levels != inner.queue_levels)
    throw std::invalid_argument("policies live on different grids");
  for (const auto& [r, q] : drop_region(inner))
    if (outer.table.actions[outer.index(q, r)] != Action::drop) return false;
  return true;
}

std::string stored_config_hash(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  const std::string tag = "# config_hash = ";
  while (std::getline(in, line)) {
    if (line.rfind(tag, 0) == 0) return line.substr(tag.size());
    if (line.empty() || line[0] != '#') break;
  }
  return "";
}

}  // namespace paqman
