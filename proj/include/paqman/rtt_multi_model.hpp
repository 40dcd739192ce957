#pragma once

#include <random>
#include <vector>

#include "paqman/birth_death.hpp"
#include "paqman/types.hpp"

namespace paqman {

struct FlowSpec {
  double rtt;           // s
  double initial_rate;  // packets/s
};

/// Decision epoch of flow `incoming` (0-based).  ages[m] is the time since
/// flow m's last decision; a flow that has not sent yet has age = its RTT.
struct MultiFlowState {
  int incoming = 0;
  int queue = 0;
  std::vector<double> rates;
  std::vector<double> ages;
};

struct MultiFlowConfig {
  std::vector<FlowSpec> flows;
  double mu = 800.0;
  int buffer = 50;
  double eta = 0.05;
  double penalty = 1e6;
  double rate_step = 1.0;  // additive increase of the incoming flow on admit, packets/s
  double rate_min = 0.8;   // clamp applied after every rate update
  double rate_max = 960.0;

  std::size_t flow_count() const { return flows.size(); }
  void validate() const;
};

/// Initial state: every flow at its initial rate and not yet started.
MultiFlowState initial_multi_state(const MultiFlowConfig& cfg, int incoming = 0);

/// c_m = max(0, r_m - u_m) and the flow order sorting c ascending (stable,
/// so ties keep flow-index order).
struct Offsets {
  std::vector<double> c;
  std::vector<int> order;
};

Offsets offsets(const MultiFlowState& s, const std::vector<FlowSpec>& flows);

/// Generator on interval k (1-based, 1..n+1) between the (k-1)-th and k-th
/// ordered offsets: births from flows order[k-1..n-1], i.e. those still
/// inside their RTT window.  k = n+1 is pure death.
Generator interval_generator(const std::vector<int>& order, const std::vector<double>& rates, double mu, int buffer,
                             int k);

/// One piece of the canonical partition of (0, inf): (lo, hi] with
/// `expired` = number of ordered offsets <= lo.  hi may be +inf.
struct KernelSegment {
  double lo;
  double hi;
  int expired;
};

/// Splits (0, inf) at the distinct positive offsets.
std::vector<KernelSegment> kernel_segments(const Offsets& off);

/// Joint mass of (next decision in (a, b], decision belongs to target_flow,
/// next queue) for every post-decision queue.  mass(q0, q1) with q0 the
/// queue right after the current decision.
struct KernelBlock {
  double a = 0.0;
  double b = 0.0;
  int target_flow = 0;
  Matrix mass;
};

/// (a, b] must lie within one segment of kernel_segments; throws
/// std::invalid_argument otherwise.  b may be +inf.
KernelBlock kernel_block(const MultiFlowState& s, const MultiFlowConfig& cfg, int target_flow, double a, double b);

/// Queue right after the decision: min(Q + 1, L) on admit, Q on drop.
int post_decision_queue(const MultiFlowState& s, Action a, int buffer);

/// Kernel row for the actual post-decision queue, summed over flows and the
/// canonical segments.
RowVector kernel_queue_row(const MultiFlowState& s, Action a, const MultiFlowConfig& cfg);

/// E[time to the next decision] from the competing delayed exponentials.
double multi_expected_sojourn(const MultiFlowState& s, const MultiFlowConfig& cfg);

/// Rate vector after the decision: incoming flow +rate_step or halved, clamped.
std::vector<double> next_rates(const MultiFlowState& s, Action a, const MultiFlowConfig& cfg);

double multi_reward(const MultiFlowState& s, Action a, const MultiFlowConfig& cfg);

struct StepResult {
  MultiFlowState next;
  double sojourn;
};

/// Draws the next decision epoch by simulating the competing delayed
/// exponential clocks and the queue through the birth-death segments.
StepResult sample_step(const MultiFlowState& s, Action a, const MultiFlowConfig& cfg, std::mt19937_64& rng);

}  // namespace paqman
