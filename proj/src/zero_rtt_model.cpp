#include "paqman/zero_rtt_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "paqman/gamma_math.hpp"

namespace paqman {

double admit_rate_update(double beta, double alpha) {
  if (!(beta > 0.0) || !(alpha > 0.0)) throw std::domain_error("rates must be positive");
  return beta + alpha;
}

double drop_rate_update(double beta) {
  if (!(beta > 0.0)) throw std::domain_error("rate must be positive");
  return beta / 2.0;
}

std::vector<double> queue_after_interarrival(int start_queue, double next_beta, double alpha, double mu) {
  if (start_queue < 0) throw std::domain_error("queue must be non-negative");
  std::vector<double> dist(static_cast<std::size_t>(start_queue) + 1, 0.0);
  if (start_queue == 0) {
    dist[0] = 1.0;
    return dist;
  }
  // k services before the next arrival, k = 0..start_queue-1; the rest lands on 0.
  const auto terms = negative_binomial_terms(start_queue, mu, alpha, next_beta);
  double partial = 0.0;
  for (int k = 0; k < start_queue; ++k) {
    const double p = terms[static_cast<std::size_t>(k)];
    dist[static_cast<std::size_t>(start_queue - k)] = p;
    partial += p;
  }
  dist[0] = std::max(0.0, 1.0 - partial);
  return dist;
}

ZeroRttModel::ZeroRttModel(ZeroRttModelConfig cfg) : cfg_(std::move(cfg)) {
  if (!(cfg_.alpha > 0.0) || !(cfg_.mu > 0.0) || !(cfg_.eta > 0.0) || !(cfg_.penalty >= 0.0) || cfg_.buffer < 1) {
    throw std::invalid_argument("invalid zero-rtt model configuration");
  }
}

std::vector<Successor> ZeroRttModel::successors(std::size_t state, Action action) const {
  const int q = queue_of(state);
  const double beta = grid()[rate_index_of(state)];
  const double next = action == Action::admit ? admit_rate_update(beta, cfg_.alpha) : drop_rate_update(beta);
  const int start = action == Action::admit ? std::min(q + 1, cfg_.buffer) : q;

  std::vector<Successor> out;
  for (const auto& [ri, w] : grid().project(next, cfg_.snap)) {
    const auto dist = queue_after_interarrival(start, grid()[ri], cfg_.alpha, cfg_.mu);
    for (int qq = 0; qq <= start; ++qq) {
      const double p = w * dist[static_cast<std::size_t>(qq)];
      if (p > 0.0) out.push_back({index(qq, ri), p});
    }
  }
  return out;
}

double expected_sojourn(const ZeroRttState& s, Action a, const ZeroRttModelConfig& cfg) {
  return a == Action::admit ? cfg.alpha / (s.rate_param + cfg.alpha) : 2.0 * cfg.alpha / s.rate_param;
}

double zero_rtt_reward(const ZeroRttState& s, Action a, const ZeroRttModelConfig& cfg) {
  const double eff = s.rate_param / cfg.alpha;
  if (a == Action::admit) {
    const double violation = (s.queue + 1) / cfg.mu > cfg.eta ? cfg.penalty : 0.0;
    return -violation + (std::sqrt((s.rate_param + cfg.alpha) / cfg.alpha) - std::sqrt(eff));
  }
  const double violation = s.queue / cfg.mu > cfg.eta ? cfg.penalty : 0.0;
  return -violation + (std::sqrt(s.rate_param / (2.0 * cfg.alpha)) - std::sqrt(eff));
}

double ZeroRttModel::reward(std::size_t state, Action action) const { return zero_rtt_reward(this->state(state), action, cfg_); }

double ZeroRttModel::sojourn(std::size_t state, Action action) const {
  return expected_sojourn(this->state(state), action, cfg_);
}

namespace {
std::vector<std::pair<ZeroRttState, double>> keyed(const ZeroRttModel& m, std::size_t s, Action a) {
  std::vector<std::pair<ZeroRttState, double>> out;
  for (const auto& succ : m.successors(s, a)) out.emplace_back(m.state(succ.state), succ.probability);
  return out;
}
}  // namespace

std::vector<std::pair<ZeroRttState, double>> admit_transition_row(const ZeroRttModel& model, std::size_t state) {
  return keyed(model, state, Action::admit);
}

std::vector<std::pair<ZeroRttState, double>> drop_transition_row(const ZeroRttModel& model, std::size_t state) {
  return keyed(model, state, Action::drop);
}

}  // namespace paqman
