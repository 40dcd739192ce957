#include "paqman/smdp_solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace paqman {

std::size_t PolicyTable::drop_count() const {
  return static_cast<std::size_t>(std::count(actions.begin(), actions.end(), Action::drop));
}

DiscreteMdp transform(const TransitionModel& model, double tau_fraction) {
  if (!(tau_fraction > 0.0) || tau_fraction > 1.0) throw std::invalid_argument("tau_fraction must lie in (0, 1]");
  DiscreteMdp mdp;
  mdp.states = model.state_count();
  if (mdp.states == 0) throw std::invalid_argument("model has no states");

  mdp.sojourn.resize(2 * mdp.states);
  double min_sojourn = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < mdp.states; ++s) {
    for (Action a : {Action::admit, Action::drop}) {
      const double t = model.sojourn(s, a);
      if (!(t > 0.0) || !std::isfinite(t)) throw std::invalid_argument("sojourn times must be positive and finite");
      mdp.sojourn[DiscreteMdp::row(s, a)] = t;
      min_sojourn = std::min(min_sojourn, t);
    }
  }
  mdp.tau = tau_fraction * min_sojourn;

  mdp.reward_rate.resize(2 * mdp.states);
  mdp.row_runs.reserve(2 * mdp.states + 1);
  mdp.row_runs.push_back(0);
  std::vector<Successor> entries;
  for (std::size_t s = 0; s < mdp.states; ++s) {
    for (Action a : {Action::admit, Action::drop}) {
      const std::size_t r = DiscreteMdp::row(s, a);
      const double scale = mdp.tau / mdp.sojourn[r];
      mdp.reward_rate[r] = model.reward(s, a) / mdp.sojourn[r];
      entries = model.successors(s, a);
      for (auto& e : entries) e.probability *= scale;
      entries.push_back({s, 1.0 - scale});
      std::sort(entries.begin(), entries.end(), [](const Successor& x, const Successor& y) { return x.state < y.state; });
      std::size_t prev = std::numeric_limits<std::size_t>::max();
      for (const auto& e : entries) {
        if (e.state >= mdp.states) throw std::invalid_argument("successor index out of range");
        if (e.state == prev) {
          mdp.probs.back() += e.probability;
          continue;
        }
        if (prev != std::numeric_limits<std::size_t>::max() && e.state == prev + 1) {
          ++mdp.runs.back().length;
        } else {
          mdp.run_offset.push_back(mdp.probs.size());
          mdp.runs.push_back({static_cast<std::uint32_t>(e.state), 1});
        }
        mdp.probs.push_back(e.probability);
        prev = e.state;
      }
      mdp.row_runs.push_back(mdp.runs.size());
    }
  }
  return mdp;
}

std::vector<Successor> DiscreteMdp::row_entries(std::size_t s, Action a) const {
  std::vector<Successor> out;
  const std::size_t r = row(s, a);
  for (std::size_t k = row_runs[r]; k < row_runs[r + 1]; ++k) {
    for (std::uint32_t i = 0; i < runs[k].length; ++i) {
      out.push_back({runs[k].first_col + i, probs[run_offset[k] + i]});
    }
  }
  return out;
}

PolicyTable solve(const DiscreteMdp& mdp, const SolveOptions& opts) {
  const std::size_t n = mdp.states;
  if (opts.reference_state >= n) throw std::invalid_argument("reference state out of range");
  PolicyTable out;
  out.actions.assign(n, Action::admit);
  std::vector<double> v(n, 0.0), next(n, 0.0);

  auto q_value = [&](std::size_t row, const std::vector<double>& values) {
    double acc = 0.0;
    for (std::size_t k = mdp.row_runs[row]; k < mdp.row_runs[row + 1]; ++k) {
      const double* p = mdp.probs.data() + mdp.run_offset[k];
      const double* x = values.data() + mdp.runs[k].first_col;
      const std::uint32_t len = mdp.runs[k].length;
      double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
      std::uint32_t i = 0;
      for (; i + 4 <= len; i += 4) {
        a0 += p[i] * x[i];
        a1 += p[i + 1] * x[i + 1];
        a2 += p[i + 2] * x[i + 2];
        a3 += p[i + 3] * x[i + 3];
      }
      for (; i < len; ++i) a0 += p[i] * x[i];
      acc += (a0 + a1) + (a2 + a3);
    }
    return mdp.reward_rate[row] + acc;
  };

  double span = std::numeric_limits<double>::infinity();
  long it = 0;
  while (it < opts.max_iterations) {
    ++it;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t s = 0; s < n; ++s) {
      const double qa = q_value(DiscreteMdp::row(s, Action::admit), v);
      const double qd = q_value(DiscreteMdp::row(s, Action::drop), v);
      const double tie = 1e-12 * std::max(1.0, std::max(std::abs(qa), std::abs(qd)));
      const bool drop = qd > qa + tie;
      next[s] = drop ? qd : qa;
      out.actions[s] = drop ? Action::drop : Action::admit;
      const double d = next[s] - v[s];
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    span = hi - lo;
    out.gain = 0.5 * (hi + lo);
    if (opts.record_spans) out.span_history.push_back(span);
    const double ref = next[opts.reference_state];
    for (std::size_t s = 0; s < n; ++s) v[s] = next[s] - ref;
    if (span < opts.tolerance) {
      out.converged = true;
      break;
    }
  }
  out.iterations = it;
  out.residual_span = span;
  out.bias = std::move(v);
  return out;
}

double evaluate_policy_gain(const TransitionModel& model, const std::vector<Action>& policy) {
  const std::size_t n = model.state_count();
  if (policy.size() != n) throw std::invalid_argument("policy size mismatch");
  // Stationary law of the embedded chain: pi (P - I) = 0 with sum pi = 1.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n) + 1, static_cast<Eigen::Index>(n));
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n) + 1);
  for (std::size_t s = 0; s < n; ++s) {
    for (const auto& succ : model.successors(s, policy[s])) {
      a(static_cast<Eigen::Index>(succ.state), static_cast<Eigen::Index>(s)) += succ.probability;
    }
    a(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s)) -= 1.0;
    a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(s)) = 1.0;
  }
  rhs(static_cast<Eigen::Index>(n)) = 1.0;
  const Eigen::VectorXd pi = a.colPivHouseholderQr().solve(rhs);
  double num = 0.0, den = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    num += pi(static_cast<Eigen::Index>(s)) * model.reward(s, policy[s]);
    den += pi(static_cast<Eigen::Index>(s)) * model.sojourn(s, policy[s]);
  }
  return num / den;
}

}  // namespace paqman
