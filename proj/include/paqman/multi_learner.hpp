#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "paqman/rtt_multi_model.hpp"
#include "paqman/simulator.hpp"

namespace paqman {

/// Finite view of MultiFlowState: queue exact, each rate in one of
/// `rate_bins` log-spaced bins over [rate_min, rate_max], each age in
/// [0, r/2), [r/2, r) or [r, inf).
struct MultiDiscretization {
  int rate_bins = 16;
  double rate_min = 0.8;
  double rate_max = 960.0;

  std::vector<double> rate_edges() const;
  int rate_bin(double rate) const;
  static int age_bin(double age, double rtt);

  std::uint64_t key(const MultiFlowState& s, const MultiFlowConfig& cfg) const;
  /// (incoming flow, queue): used where a fine cell has too few visits.
  static std::uint64_t coarse_key(const MultiFlowState& s, int buffer);
};

struct LearnOptions {
  std::size_t episodes = 200;
  std::size_t steps_per_episode = 5000;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double lr_exponent = 0.6;       // step size (1 + visits)^-lr_exponent
  std::uint64_t min_visits = 1;   // fine cells below this fall back to the coarse table
  std::uint64_t report_visits = 100;
};

struct QEntry {
  std::array<double, 2> q{0.0, 0.0};
  std::array<std::uint64_t, 2> visits{0, 0};

  std::uint64_t total() const { return visits[0] + visits[1]; }
  Action greedy() const { return q[1] > q[0] ? Action::drop : Action::admit; }
};

struct VisitReport {
  std::size_t cells = 0;
  std::size_t below_threshold = 0;
  std::uint64_t threshold = 0;
  std::map<int, std::size_t> cells_by_queue;  // visited fine cells per queue length
};

/// Greedy table learned over the discretized multi-flow state.
struct MultiPolicyTable {
  MultiDiscretization disc;
  std::vector<double> rtts;
  int buffer = 50;
  std::uint64_t min_visits = 1;
  double gain = 0.0;  // reward per second
  std::map<std::uint64_t, QEntry> fine;
  std::map<std::uint64_t, QEntry> coarse;

  Action lookup(const MultiFlowState& s, const MultiFlowConfig& cfg) const;
  const QEntry* fine_entry(const MultiFlowState& s, const MultiFlowConfig& cfg) const;
  VisitReport visit_report(std::uint64_t threshold) const;
};

/// Relative-value Q-learning over sample_step transitions:
///   Q(s,a) += lr (R(s,a) - rho tau(s) + max_b Q(s',b) - Q(s,a)),
/// tau(s) the expected sojourn and rho = max_b Q(ref,b) / tau_max with ref
/// the most visited cell.  The fixed point is that of relative value
/// iteration on the data-transformed chain.
/// Epsilon decays linearly to its floor over the first half of the
/// episodes.  Deterministic for a given seed.
MultiPolicyTable learn_policy(const MultiFlowConfig& cfg, const MultiDiscretization& disc, const LearnOptions& opts,
                              std::uint64_t seed);

void write_multi_policy_csv(std::ostream& out, const MultiPolicyTable& table,
                            const std::map<std::string, std::string>& metadata = {});
MultiPolicyTable read_multi_policy_csv(std::istream& in);

class MultiPaqmanPolicy final : public AqmPolicy {
 public:
  MultiPaqmanPolicy(std::shared_ptr<const MultiPolicyTable> table, MultiFlowConfig cfg)
      : table_(std::move(table)), cfg_(std::move(cfg)) {}
  Action decide(const Observation& obs) override;
  std::string name() const override { return "paqman"; }

 private:
  std::shared_ptr<const MultiPolicyTable> table_;
  MultiFlowConfig cfg_;
};

}  // namespace paqman
