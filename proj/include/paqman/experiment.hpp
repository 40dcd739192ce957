#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "paqman/multi_learner.hpp"
#include "paqman/policy_io.hpp"
#include "paqman/scenario.hpp"
#include "paqman/simulator.hpp"

namespace paqman {

inline constexpr const char* kVersion = "0.1.0";

/// Metadata written at the top of every output file.
std::map<std::string, std::string> provenance(const ScenarioConfig& cfg);

/// Exact solve of the zero_rtt model, or of rtt_single at `rtt_s`.  The
/// policy grid is in effective packets/s for both models.  Check
/// policy.table.converged before using the result.
GridPolicy solve_zero_rtt(const ScenarioConfig& cfg);
GridPolicy solve_rtt_single(const ScenarioConfig& cfg, double rtt_s);

MultiPolicyTable learn_multi(const ScenarioConfig& cfg);

/// Replication seeds: run.seed, run.seed + 1, ...
std::vector<std::uint64_t> replication_seeds(const ScenarioConfig& cfg);

using PolicyFactory = std::function<std::unique_ptr<AqmPolicy>()>;

PolicyFactory codel_factory(const ScenarioConfig& cfg);
PolicyFactory droptail_factory();
PolicyFactory grid_factory(std::shared_ptr<const GridPolicy> policy);
PolicyFactory multi_factory(std::shared_ptr<const MultiPolicyTable> table, const ScenarioConfig& cfg);

/// Runs one trace of the configured model.  `rtt_s` is used by rtt_single.
SimTrace run_one(const ScenarioConfig& cfg, AqmPolicy& policy, std::uint64_t seed, double rtt_s);

/// All replications of one policy.  Replications are independent and are
/// spread over `threads` workers (0 = hardware concurrency); results come
/// back in seed order, so the output does not depend on the thread count.
std::vector<SimTrace> run_replications(const ScenarioConfig& cfg, const PolicyFactory& make, double rtt_s,
                                       unsigned threads = 0);

struct ReportRow {
  double rtt_ms = 0.0;  // 0 for the zero_rtt model
  std::string policy;
  AggregateStats stats;
  double mu = 0.0;
  double packet_size_bits = 0.0;
};

struct Report {
  std::map<std::string, std::string> provenance;
  std::vector<std::uint64_t> seeds;
  double burn_in_fraction = 0.0;
  std::vector<ReportRow> rows;
  /// Time-binned evolution CSV per row, keyed "policy" or "policy_rttNms".
  std::map<std::string, std::string> evolution;
};

struct ComparePolicy {
  std::string name;
  PolicyFactory make;
};

/// Runs every policy on the same seeds and aggregates after burn-in.
Report compare(const ScenarioConfig& cfg, const std::vector<ComparePolicy>& policies, double rtt_s = 0.0);

/// Appends the rows of `other` (same seeds) to `into`.
void merge_report(Report& into, Report&& other);

/// Columns: rtt_ms, policy, replications, mean_delay_s, mean_queue_pkts,
/// throughput_pkts_per_s, throughput_mbps, offered_rate_pkts_per_s,
/// utilization, policy_drops, forced_drops, decisions, admitted.  Throughput is
/// the delivered (departure) rate.
void write_report_csv(std::ostream& out, const Report& report);
void write_report_summary(std::ostream& out, const Report& report);

/// Row lookup by policy and RTT; throws std::out_of_range.
const ReportRow& find_row(const Report& report, const std::string& policy, double rtt_ms = 0.0);

/// Cells as (rate index, queue) pairs where the policy drops.
std::vector<std::pair<std::size_t, int>> drop_region(const GridPolicy& policy);

/// True when every drop cell of `inner` is a drop cell of `outer` on the
/// same grid.
bool drop_region_contains(const GridPolicy& outer, const GridPolicy& inner);

/// Reads the "# config_hash = ..." header line of a file; empty when the
/// file is missing or has no such line.
std::string stored_config_hash(const std::string& path);

}  // namespace paqman
