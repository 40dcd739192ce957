#include "paqman/rtt_single_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace paqman {

double rtt_reward(const RttState& s, Action a, const RttSingleModelConfig& cfg) {
  if (a == Action::admit) {
    const double violation = (s.queue + 1) / cfg.mu > cfg.eta ? cfg.penalty : 0.0;
    return -violation + (std::sqrt(s.rate_param + cfg.rate_step) - std::sqrt(s.rate_param));
  }
  const double violation = s.queue / cfg.mu > cfg.eta ? cfg.penalty : 0.0;
  return -violation + (std::sqrt(s.rate_param / 2.0) - std::sqrt(s.rate_param));
}

double rtt_sojourn(const RttState& s, double rtt) { return rtt + 1.0 / s.rate_param; }

RttSingleModel::RttSingleModel(RttSingleModelConfig cfg) : cfg_(std::move(cfg)) {
  if (!(cfg_.mu > 0.0) || cfg_.buffer < 1 || !(cfg_.eta > 0.0) || !(cfg_.penalty >= 0.0) || !(cfg_.rtt >= 0.0) ||
      !(cfg_.rate_step > 0.0)) {
    throw std::invalid_argument("invalid rtt model configuration");
  }
  matrices_.reserve(grid().size());
  for (std::size_t i = 0; i < grid().size(); ++i) {
    matrices_.push_back(decision_transition_matrix(grid()[i], cfg_.mu, cfg_.buffer, cfg_.rtt));
  }
}

std::vector<Successor> RttSingleModel::successors(std::size_t state, Action action) const {
  const int q = queue_of(state);
  const std::size_t ri = rate_index_of(state);
  const double beta = grid()[ri];
  const int row = action == Action::admit ? std::min(q + 1, cfg_.buffer) : q;
  const double next = action == Action::admit ? beta + cfg_.rate_step : beta / 2.0;
  const Matrix& p = matrices_[ri];
  std::vector<Successor> out;
  for (const auto& [ni, w] : grid().project(next, cfg_.snap)) {
    for (int qq = 0; qq < queue_levels(); ++qq) {
      const double prob = w * p(row, qq);
      if (prob > 0.0) out.push_back({index(qq, ni), prob});
    }
  }
  return out;
}

double RttSingleModel::reward(std::size_t s, Action a) const { return rtt_reward(state(s), a, cfg_); }

double RttSingleModel::sojourn(std::size_t s, Action) const { return rtt_sojourn(state(s), cfg_.rtt); }

std::vector<std::pair<RttState, double>> rtt_transition_row(const RttSingleModel& model, std::size_t state, Action action) {
  std::vector<std::pair<RttState, double>> out;
  for (const auto& succ : model.successors(state, action)) out.emplace_back(model.state(succ.state), succ.probability);
  return out;
}

}  // namespace paqman
