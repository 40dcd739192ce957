#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "paqman/policy_io.hpp"
#include "paqman/rtt_multi_model.hpp"
#include "paqman/types.hpp"

namespace paqman {

/// arrival: a packet entered the buffer.  decision: a decision epoch (the
/// packet then shows up as arrival, forced_drop, or nothing when the policy
/// dropped it).  forced_drop: no room in the buffer.
enum class EventKind : std::uint8_t { arrival, decision, departure, rate_change, forced_drop };

std::string_view to_string(EventKind k);

struct SimEvent {
  double time;
  EventKind kind;
  int flow;
  int queue_after;
  double rate_after;  // arrival rate of `flow` after the event, packets/s
  std::optional<Action> action;
};

struct SimTrace {
  std::vector<SimEvent> events;
  std::string config_snapshot;
  std::uint64_t seed = 0;
  int flow_count = 1;
  std::vector<double> initial_rates;
  double mu = 0.0;
  int buffer = 0;
};

/// What a policy may read at a decision epoch.
struct Observation {
  double now;
  int flow;
  int queue;
  int buffer;
  double mu;
  std::span<const double> rates;  // packets/s per flow
  std::span<const double> ages;   // s since each flow's last decision (RTT models)
  double sojourn_estimate;        // queue / mu, s
};

class AqmPolicy {
 public:
  virtual ~AqmPolicy() = default;
  virtual Action decide(const Observation& obs) = 0;
  /// Clears internal state before a replication.
  virtual void reset() {}
  virtual std::string name() const = 0;
};

Action droptail_decide(int queue, int buffer);

class DropTailPolicy final : public AqmPolicy {
 public:
  Action decide(const Observation& obs) override { return droptail_decide(obs.queue, obs.buffer); }
  std::string name() const override { return "droptail"; }
};

class AdmitAllPolicy final : public AqmPolicy {
 public:
  Action decide(const Observation&) override { return Action::admit; }
  std::string name() const override { return "admit_all"; }
};

/// Reference CoDel control law evaluated on the ingress sojourn estimate.
struct CodelState {
  bool dropping = false;
  double first_above_time = 0.0;  // 0 = not above target
  double drop_next = 0.0;
  std::uint32_t count = 0;
  std::uint32_t last_count = 0;
};

struct CodelParams {
  double target = 0.05;    // s
  double interval = 0.1;   // s
};

Action codel_decide(CodelState& st, const CodelParams& p, double sojourn, double now);

class CodelPolicy final : public AqmPolicy {
 public:
  explicit CodelPolicy(CodelParams p = {}) : params_(p) {}
  Action decide(const Observation& obs) override { return codel_decide(state_, params_, obs.sojourn_estimate, obs.now); }
  void reset() override { state_ = {}; }
  std::string name() const override { return "codel"; }
  const CodelState& state() const { return state_; }

 private:
  CodelParams params_;
  CodelState state_;
};

/// Table lookup on (queue, rate of the deciding flow).
class GridPaqmanPolicy final : public AqmPolicy {
 public:
  explicit GridPaqmanPolicy(std::shared_ptr<const GridPolicy> table) : table_(std::move(table)) {}
  Action decide(const Observation& obs) override {
    return table_->lookup(obs.queue, obs.rates[static_cast<std::size_t>(obs.flow)]);
  }
  std::string name() const override { return "paqman"; }

 private:
  std::shared_ptr<const GridPolicy> table_;
};

struct SimOptions {
  std::size_t arrivals = 10000;
  bool overflow_halves_rate = false;
};

/// Single source with Gamma(alpha, alpha * lambda) interarrivals; every
/// arrival is a decision epoch and the action sets lambda for the next gap.
struct ZeroRttSimConfig {
  double alpha = 1.5;
  double mu = 800.0;
  int buffer = 50;
  double rate_min = 0.8;  // effective rate bounds, packets/s
  double rate_max = 960.0;
  double initial_rate = 800.0;
};

SimTrace run_zero_rtt(const ZeroRttSimConfig& cfg, AqmPolicy& policy, std::uint64_t seed, const SimOptions& opts = {});

/// Poisson sources with per-flow RTTs.  A flow's first arrival at least one
/// RTT after its previous decision is a decision epoch; arrivals in between
/// enter when there is room.  Rate updates take effect at the next decision
/// epoch of any flow.
SimTrace run_rtt(const MultiFlowConfig& cfg, AqmPolicy& policy, std::uint64_t seed, const SimOptions& opts = {});

struct TraceStats {
  double duration = 0.0;
  double mean_queue = 0.0;
  double mean_rate = 0.0;     // time-averaged total arrival rate, packets/s
  double utilization = 0.0;   // fraction of time the server is busy
  double departure_rate = 0.0;
  double mean_delay = 0.0;    // mean_queue / mu, s
  long decisions = 0;
  long admitted = 0;
  long departures = 0;
  long policy_drops = 0;
  long forced_drops = 0;
};

struct AggregateStats {
  std::vector<TraceStats> per_trace;
  TraceStats pooled;
};

/// Time averages over the part of each trace after `burn_in_fraction` of
/// its duration.  Pooled values weight traces by their measured duration.
TraceStats trace_stats(const SimTrace& trace, double burn_in_fraction);
AggregateStats aggregate(const std::vector<SimTrace>& traces, double burn_in_fraction);

/// Averages queue and total rate over `bins` equal time bins per trace,
/// then across traces.  Columns: bin, time_start, mean_queue, mean_rate.
void write_evolution_csv(std::ostream& out, const std::vector<SimTrace>& traces, int bins);

void write_trace_csv(std::ostream& out, const SimTrace& trace);

}  // namespace paqman
