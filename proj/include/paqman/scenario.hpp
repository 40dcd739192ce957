#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "paqman/multi_learner.hpp"
#include "paqman/rate_grid.hpp"
#include "paqman/rtt_multi_model.hpp"
#include "paqman/rtt_single_model.hpp"
#include "paqman/simulator.hpp"
#include "paqman/smdp_solver.hpp"
#include "paqman/zero_rtt_model.hpp"

namespace paqman {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ModelKind { zero_rtt, rtt_single, rtt_multi };

std::string_view to_string(ModelKind m);

/// Everything needed to solve, learn and simulate one scenario.  Rates in
/// the file are Mbit/s, times in seconds unless the key says otherwise.
///
///   model                     zero_rtt | rtt_single | rtt_multi
///   link.service_rate_mbps    10
///   link.packet_size_bits     12500
///   link.buffer_packets       50
///   traffic.alpha             1.5        (zero_rtt Gamma shape)
///   traffic.rate_min_mbps     0.01
///   traffic.rate_max_mbps     12
///   traffic.initial_rate_mbps service rate (split evenly across flows)
///   traffic.rate_step_pkts    1          (RTT models, additive increase)
///   traffic.rtt_ms            2          (rtt_single)
///   traffic.flow_rtts_ms      2,4,6      (rtt_multi)
///   reward.eta_s              0.05
///   reward.penalty            1e6
///   disc.rate_grid_size       256
///   disc.snap                 split | nearest
///   disc.rate_bins            16         (rtt_multi learner)
///   solver.tolerance          1e-6
///   solver.max_iterations     400000
///   learn.episodes            200
///   learn.steps_per_episode   5000
///   learn.epsilon_end         0.05
///   learn.min_visits          1
///   run.replications          20
///   run.arrivals              10000
///   run.seed                  1
///   run.burn_in_fraction      0.2
///   run.evolution_bins        50
///   sim.overflow_halves_rate  false
///   codel.target_s            reward.eta_s
///   codel.interval_s          0.1
///   compare.rtt_sweep_ms      (empty; rtt_single sweep over these RTTs)
struct ScenarioConfig {
  ModelKind model = ModelKind::zero_rtt;
  double service_rate_mbps = 10.0;
  double packet_size_bits = 12500.0;
  int buffer = 50;
  double alpha = 1.5;
  double rate_min_mbps = 0.01;
  double rate_max_mbps = 12.0;
  double initial_rate_mbps = 0.0;  // 0 = service rate
  double rate_step_pkts = 1.0;
  double rtt_ms = 2.0;
  std::vector<double> flow_rtts_ms{2.0, 4.0, 6.0};
  double eta = 0.05;
  double penalty = 1e6;
  std::size_t rate_grid_size = 256;
  SnapMode snap = SnapMode::split;
  int rate_bins = 16;
  double tolerance = 1e-6;
  long max_iterations = 400000;
  std::size_t episodes = 200;
  std::size_t steps_per_episode = 5000;
  double epsilon_end = 0.05;
  std::uint64_t min_visits = 1;
  std::size_t replications = 20;
  std::size_t arrivals = 10000;
  std::uint64_t seed = 1;
  double burn_in_fraction = 0.2;
  int evolution_bins = 50;
  bool overflow_halves_rate = false;
  double codel_target = 0.0;  // 0 = eta
  double codel_interval = 0.1;
  std::vector<double> rtt_sweep_ms;

  Units units() const { return Units{packet_size_bits}; }
  double mu() const { return units().to_packets(service_rate_mbps); }
  double rate_min() const { return units().to_packets(rate_min_mbps); }
  double rate_max() const { return units().to_packets(rate_max_mbps); }
  double initial_rate() const {
    return units().to_packets(initial_rate_mbps > 0.0 ? initial_rate_mbps : service_rate_mbps);
  }

  /// Throws ConfigError naming the offending key.
  void validate() const;
  /// Switches the run protocol to 200 replications of 5e4 arrivals.
  void apply_full_scale();

  /// Canonical "key = value" lines in key order; every output records the
  /// hash of this text.
  std::string canonical() const;
  std::string hash() const;

  ZeroRttModelConfig zero_rtt_model() const;
  RttSingleModelConfig rtt_single_model(double rtt_s) const;
  MultiFlowConfig multi_flow() const;
  /// Single-flow RTT scenario as a one-flow simulator configuration.
  MultiFlowConfig single_flow(double rtt_s) const;
  ZeroRttSimConfig zero_rtt_sim() const;
  SolveOptions solve_options() const;
  LearnOptions learn_options() const;
  MultiDiscretization discretization() const;
  SimOptions sim_options() const;
  CodelParams codel() const;
};

/// Parses "key = value" lines; '#' starts a comment.  Unknown keys and
/// malformed values raise ConfigError.
ScenarioConfig parse_scenario(std::istream& in);
ScenarioConfig load_scenario(const std::string& path);
/// Applies one "key=value" override on top of a parsed scenario.
void set_scenario_key(ScenarioConfig& cfg, const std::string& key, const std::string& value);

/// FNV-1a 64-bit, as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace paqman
