#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "paqman/transition_model.hpp"

namespace paqman {

/// Discrete-time MDP produced by the data transformation of an SMDP:
/// rewards become reward rates and each row gains a self-loop so that the
/// uniform step length tau can stand in for the state-dependent sojourns.
struct DiscreteMdp {
  std::size_t states = 0;
  double tau = 0.0;
  // Row id = 2 * state + action.  Each row is a list of runs of consecutive
  // target states; probabilities are stored contiguously in run order.
  struct Run {
    std::uint32_t first_col;
    std::uint32_t length;
  };
  std::vector<std::size_t> row_runs;  // runs of row r: [row_runs[r], row_runs[r+1])
  std::vector<std::size_t> run_offset;  // offset of each run into probs
  std::vector<Run> runs;
  std::vector<double> probs;
  std::vector<double> reward_rate;
  std::vector<double> sojourn;

  static std::size_t row(std::size_t s, Action a) { return 2 * s + static_cast<std::size_t>(a); }

  /// Expanded (state, probability) list of one row.
  std::vector<Successor> row_entries(std::size_t s, Action a) const;
};

/// tau = tau_fraction * min sojourn.  Throws std::invalid_argument on a
/// non-positive sojourn or a fraction outside (0, 1].
DiscreteMdp transform(const TransitionModel& model, double tau_fraction = 0.5);

struct SolveOptions {
  double tolerance = 1e-6;
  long max_iterations = 100000;
  std::size_t reference_state = 0;
  bool record_spans = false;
};

/// Result of relative value iteration.  `gain` is reward per second.
struct PolicyTable {
  std::vector<Action> actions;
  std::vector<double> bias;
  double gain = 0.0;
  double residual_span = 0.0;
  long iterations = 0;
  bool converged = false;
  std::vector<double> span_history;  // only filled when requested

  Action lookup(std::size_t state) const { return actions.at(state); }
  std::size_t drop_count() const;
};

/// Average-reward relative value iteration with span-seminorm stopping.
/// Greedy ties (within 1e-12) resolve to admit.
PolicyTable solve(const DiscreteMdp& mdp, const SolveOptions& opts = {});

/// Long-run reward rate of a fixed stationary policy on the original SMDP,
/// computed from the embedded chain's stationary law (sum pi R / sum pi tau).
/// Suited to small models only: dense linear solve.
double evaluate_policy_gain(const TransitionModel& model, const std::vector<Action>& policy);

}  // namespace paqman
