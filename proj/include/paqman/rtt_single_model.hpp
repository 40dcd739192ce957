#pragma once

#include <vector>

#include "paqman/birth_death.hpp"
#include "paqman/rate_grid.hpp"
#include "paqman/transition_model.hpp"

namespace paqman {

struct RttState {
  int queue;
  double rate_param;  // exponential arrival rate in force at this decision epoch, packets/s
};

struct RttSingleModelConfig {
  double mu = 800.0;         // packets/s
  int buffer = 50;
  double eta = 0.05;         // s
  double penalty = 1e6;
  double rtt = 0.002;        // s
  double rate_step = 1.0;    // additive increase per admitted decision, packets/s
  RateGrid rate_grid = RateGrid::log_spaced(0.8, 960.0, 256);
  SnapMode snap = SnapMode::split;
};

double rtt_reward(const RttState& s, Action a, const RttSingleModelConfig& cfg);
double rtt_sojourn(const RttState& s, double rtt);

/// Single flow with a known RTT: a decision on one packet, then every
/// arrival in the following RTT is admitted; the rate set by a decision
/// takes hold at the next decision epoch.
class RttSingleModel final : public TransitionModel {
 public:
  explicit RttSingleModel(RttSingleModelConfig cfg);

  const RttSingleModelConfig& config() const { return cfg_; }
  const RateGrid& grid() const { return cfg_.rate_grid; }
  int queue_levels() const { return cfg_.buffer + 1; }

  std::size_t index(int queue, std::size_t rate_index) const {
    return rate_index * static_cast<std::size_t>(queue_levels()) + static_cast<std::size_t>(queue);
  }
  int queue_of(std::size_t s) const { return static_cast<int>(s % static_cast<std::size_t>(queue_levels())); }
  std::size_t rate_index_of(std::size_t s) const { return s / static_cast<std::size_t>(queue_levels()); }
  RttState state(std::size_t s) const { return {queue_of(s), grid()[rate_index_of(s)]}; }

  /// Inter-decision queue matrix at grid rate `rate_index` (cached).
  const Matrix& decision_matrix(std::size_t rate_index) const { return matrices_.at(rate_index); }

  std::size_t state_count() const override { return grid().size() * static_cast<std::size_t>(queue_levels()); }
  std::vector<Successor> successors(std::size_t state, Action action) const override;
  double reward(std::size_t state, Action action) const override;
  double sojourn(std::size_t state, Action action) const override;

 private:
  RttSingleModelConfig cfg_;
  std::vector<Matrix> matrices_;
};

/// Successor distribution keyed by full state.
std::vector<std::pair<RttState, double>> rtt_transition_row(const RttSingleModel& model, std::size_t state, Action action);

}  // namespace paqman
