#pragma once

#include <vector>

#include "paqman/rate_grid.hpp"
#include "paqman/transition_model.hpp"

namespace paqman {

struct ZeroRttState {
  int queue;
  double rate_param;  // Gamma rate beta of the next interarrival, 1/s
};

struct ZeroRttModelConfig {
  double alpha = 1.5;     // Gamma shape
  double mu = 800.0;      // service rate, packets/s
  int buffer = 50;        // L, packets
  double eta = 0.05;      // target delay, s
  double penalty = 1e6;   // M
  RateGrid rate_grid = RateGrid::log_spaced(1.5 * 0.8, 1.5 * 960.0, 256);
  SnapMode snap = SnapMode::split;
};

/// Additive increase on admit: beta + alpha (effective rate beta/alpha grows by one).
double admit_rate_update(double beta, double alpha);
/// Multiplicative decrease on drop: beta / 2.
double drop_rate_update(double beta);

/// Distribution of the queue seen by the next arrival when `start_queue`
/// packets are present right after the decision and the next interarrival is
/// Gamma(alpha, next_beta) against Exp(mu) services.  Entry q is P(Q' = q).
std::vector<double> queue_after_interarrival(int start_queue, double next_beta, double alpha, double mu);

/// Negligible-RTT decision model over (queue, rate) with Gamma interarrivals.
class ZeroRttModel final : public TransitionModel {
 public:
  explicit ZeroRttModel(ZeroRttModelConfig cfg);

  const ZeroRttModelConfig& config() const { return cfg_; }
  const RateGrid& grid() const { return cfg_.rate_grid; }
  int queue_levels() const { return cfg_.buffer + 1; }

  std::size_t index(int queue, std::size_t rate_index) const {
    return rate_index * static_cast<std::size_t>(queue_levels()) + static_cast<std::size_t>(queue);
  }
  int queue_of(std::size_t state) const { return static_cast<int>(state % static_cast<std::size_t>(queue_levels())); }
  std::size_t rate_index_of(std::size_t state) const { return state / static_cast<std::size_t>(queue_levels()); }
  ZeroRttState state(std::size_t s) const { return {queue_of(s), grid()[rate_index_of(s)]}; }

  std::size_t state_count() const override { return grid().size() * static_cast<std::size_t>(queue_levels()); }
  std::vector<Successor> successors(std::size_t state, Action action) const override;
  double reward(std::size_t state, Action action) const override;
  double sojourn(std::size_t state, Action action) const override;

 private:
  ZeroRttModelConfig cfg_;
};

/// Successor list keyed by full state rather than index.
std::vector<std::pair<ZeroRttState, double>> admit_transition_row(const ZeroRttModel& model, std::size_t state);
std::vector<std::pair<ZeroRttState, double>> drop_transition_row(const ZeroRttModel& model, std::size_t state);

double expected_sojourn(const ZeroRttState& s, Action a, const ZeroRttModelConfig& cfg);
double zero_rtt_reward(const ZeroRttState& s, Action a, const ZeroRttModelConfig& cfg);

}  // namespace paqman
