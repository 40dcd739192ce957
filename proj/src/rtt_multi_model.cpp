#include "paqman/rtt_multi_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace paqman {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void MultiFlowConfig::validate() const {
  if (flows.empty()) throw std::invalid_argument("at least one flow is required");
  for (const auto& f : flows)
    if (!(f.rtt > 0.0) || !(f.initial_rate > 0.0)) throw std::invalid_argument("flow rtt and rate must be positive");
  if (!(mu > 0.0) || buffer < 1 || !(eta > 0.0) || !(penalty >= 0.0) || !(rate_step > 0.0) || !(rate_min > 0.0) ||
      !(rate_max >= rate_min))
    throw std::invalid_argument("invalid multi-flow configuration");
}

MultiFlowState initial_multi_state(const MultiFlowConfig& cfg, int incoming) {
  MultiFlowState s;
  s.incoming = incoming;
  for (const auto& f : cfg.flows) {
    s.rates.push_back(std::clamp(f.initial_rate, cfg.rate_min, cfg.rate_max));
    s.ages.push_back(f.rtt);
  }
  s.ages[static_cast<std::size_t>(incoming)] = 0.0;
  return s;
}

Offsets offsets(const MultiFlowState& s, const std::vector<FlowSpec>& flows) {
  Offsets out;
  const std::size_t n = flows.size();
  if (s.ages.size() != n || s.rates.size() != n) throw std::invalid_argument("state and flows disagree in size");
  out.c.resize(n);
  for (std::size_t m = 0; m < n; ++m) out.c[m] = std::max(0.0, flows[m].rtt - s.ages[m]);
  out.order.resize(n);
  std::iota(out.order.begin(), out.order.end(), 0);
  std::stable_sort(out.order.begin(), out.order.end(), [&](int x, int y) { return out.c[x] < out.c[y]; });
  return out;
}

Generator interval_generator(const std::vector<int>& order, const std::vector<double>& rates, double mu, int buffer,
                             int k) {
  const int n = static_cast<int>(order.size());
  if (k < 1 || k > n + 1) throw std::invalid_argument("interval index out of range");
  double birth = 0.0;
  for (int m = k - 1; m < n; ++m) birth += rates[static_cast<std::size_t>(order[m])];
  return build_generator(birth, mu, buffer);
}

std::vector<KernelSegment> kernel_segments(const Offsets& off) {
  const int n = static_cast<int>(off.order.size());
  std::vector<KernelSegment> out;
  double lo = 0.0;
  int expired = 0;
  while (expired < n && off.c[off.order[expired]] <= lo) ++expired;
  while (true) {
    const double hi = expired < n ? off.c[off.order[expired]] : kInf;
    out.push_back({lo, hi, expired});
    if (expired == n) break;
    lo = hi;
    while (expired < n && off.c[off.order[expired]] <= lo) ++expired;
  }
  return out;
}

int post_decision_queue(const MultiFlowState& s, Action a, int buffer) {
  return a == Action::admit ? std::min(s.queue + 1, buffer) : s.queue;
}

KernelBlock kernel_block(const MultiFlowState& s, const MultiFlowConfig& cfg, int target_flow, double a, double b) {
  const int n = static_cast<int>(cfg.flow_count());
  if (target_flow < 0 || target_flow >= n) throw std::invalid_argument("target flow out of range");
  if (!(a >= 0.0) || !(b > a)) throw std::invalid_argument("interval must satisfy 0 <= a < b");
  const Offsets off = offsets(s, cfg.flows);
  const auto segs = kernel_segments(off);
  const KernelSegment* seg = nullptr;
  for (const auto& sg : segs)
    if (a >= sg.lo && b <= sg.hi) seg = &sg;
  if (seg == nullptr) throw std::invalid_argument("interval straddles an offset breakpoint");

  const int dim = cfg.buffer + 1;
  KernelBlock out{a, b, target_flow, Matrix::Zero(dim, dim)};
  const int l = seg->expired;
  const bool eligible = std::find(off.order.begin(), off.order.begin() + l, target_flow) != off.order.begin() + l;
  if (!eligible) return out;

  // Queue evolution through the fully elapsed segments before this one.
  Matrix prefix = Matrix::Identity(dim, dim);
  double prev = 0.0;
  for (int k = 1; k <= l; ++k) {
    const double ck = off.c[off.order[k - 1]];
    if (ck > prev) prefix = prefix * transient_matrix(interval_generator(off.order, s.rates, cfg.mu, cfg.buffer, k), ck - prev);
    prev = ck;
  }
  const double base = seg->lo;  // = c of the l-th ordered flow
  double active = 0.0, survival_exponent = 0.0;
  for (int k = 0; k < l; ++k) {
    const double beta = s.rates[static_cast<std::size_t>(off.order[k])];
    active += beta;
    survival_exponent += beta * (base - off.c[off.order[k]]);
  }
  const Generator h = interval_generator(off.order, s.rates, cfg.mu, cfg.buffer, l + 1);
  // int_{a'}^{b'} e^{-y M} dy = (e^{-a'M} - e^{-b'M}) M^{-1}, M = active I - H.
  const double a1 = a - base;
  Matrix ea = std::exp(-active * a1) * transient_matrix(h, a1);
  Matrix diff = ea;
  if (std::isfinite(b)) diff -= ea * (std::exp(-active * (b - a)) * transient_matrix(h, b - a));
  const Matrix left = prefix * diff;
  const double scale = s.rates[static_cast<std::size_t>(target_flow)] * std::exp(-survival_exponent);
  for (int i = 0; i < dim; ++i) out.mass.row(i) = scale * solve_shifted_left(left.row(i), h, active);
  return out;
}

RowVector kernel_queue_row(const MultiFlowState& s, Action a, const MultiFlowConfig& cfg) {
  const int q0 = post_decision_queue(s, a, cfg.buffer);
  RowVector row = RowVector::Zero(cfg.buffer + 1);
  for (const auto& seg : kernel_segments(offsets(s, cfg.flows))) {
    if (seg.expired == 0) continue;
    for (int j = 0; j < static_cast<int>(cfg.flow_count()); ++j)
      row += kernel_block(s, cfg, j, seg.lo, seg.hi).mass.row(q0);
  }
  return row;
}

double multi_expected_sojourn(const MultiFlowState& s, const MultiFlowConfig& cfg) {
  const Offsets off = offsets(s, cfg.flows);
  double total = 0.0;
  for (const auto& seg : kernel_segments(off)) {
    if (seg.expired == 0) {
      total += seg.hi - seg.lo;
      continue;
    }
    double active = 0.0, exponent = 0.0;
    for (int k = 0; k < seg.expired; ++k) {
      const double beta = s.rates[static_cast<std::size_t>(off.order[k])];
      active += beta;
      exponent += beta * (seg.lo - off.c[off.order[k]]);
    }
    const double tail = std::isfinite(seg.hi) ? 1.0 - std::exp(-active * (seg.hi - seg.lo)) : 1.0;
    total += std::exp(-exponent) * tail / active;
  }
  return total;
}

std::vector<double> next_rates(const MultiFlowState& s, Action a, const MultiFlowConfig& cfg) {
  std::vector<double> r = s.rates;
  double& x = r[static_cast<std::size_t>(s.incoming)];
  x = std::clamp(a == Action::admit ? x + cfg.rate_step : x / 2.0, cfg.rate_min, cfg.rate_max);
  return r;
}

double multi_reward(const MultiFlowState& s, Action a, const MultiFlowConfig& cfg) {
  const double beta = s.rates[static_cast<std::size_t>(s.incoming)];
  if (a == Action::admit) {
    const double violation = (s.queue + 1) / cfg.mu > cfg.eta ? cfg.penalty : 0.0;
    return -violation + (std::sqrt(beta + cfg.rate_step) - std::sqrt(beta));
  }
  const double violation = s.queue / cfg.mu > cfg.eta ? cfg.penalty : 0.0;
  return -violation + (std::sqrt(beta / 2.0) - std::sqrt(beta));
}

StepResult sample_step(const MultiFlowState& s, Action a, const MultiFlowConfig& cfg, std::mt19937_64& rng) {
  const std::size_t n = cfg.flow_count();
  const Offsets off = offsets(s, cfg.flows);
  int winner = 0;
  double y = kInf;
  for (std::size_t m = 0; m < n; ++m) {
    const double t = off.c[m] + std::exponential_distribution<double>(s.rates[m])(rng);
    if (t < y) {
      y = t;
      winner = static_cast<int>(m);
    }
  }
  // Queue through [0, y): births only from flows still inside their window.
  int q = post_decision_queue(s, a, cfg.buffer);
  double t = 0.0;
  std::size_t next_expiry = 0;
  while (t < y) {
    while (next_expiry < n && off.c[off.order[next_expiry]] <= t) ++next_expiry;
    const double seg_end = next_expiry < n ? std::min(y, off.c[off.order[next_expiry]]) : y;
    double birth = 0.0;
    for (std::size_t k = next_expiry; k < n; ++k) birth += s.rates[static_cast<std::size_t>(off.order[k])];
    for (;;) {
      const double b = q < cfg.buffer ? birth : 0.0;
      const double d = q > 0 ? cfg.mu : 0.0;
      if (b + d <= 0.0) {
        t = seg_end;
        break;
      }
      const double dt = std::exponential_distribution<double>(b + d)(rng);
      if (t + dt >= seg_end) {
        t = seg_end;
        break;
      }
      t += dt;
      q += std::uniform_real_distribution<double>(0.0, b + d)(rng) < b ? 1 : -1;
    }
  }
  StepResult out;
  out.sojourn = y;
  out.next.incoming = winner;
  out.next.queue = q;
  out.next.rates = next_rates(s, a, cfg);
  out.next.ages = s.ages;
  for (std::size_t m = 0; m < n; ++m) out.next.ages[m] += y;
  out.next.ages[static_cast<std::size_t>(winner)] = 0.0;
  return out;
}

}  // namespace paqman
