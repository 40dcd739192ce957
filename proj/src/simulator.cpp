#include "paqman/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

namespace paqman {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::arrival: return "arrival";
    case EventKind::decision: return "decision";
    case EventKind::departure: return "departure";
    case EventKind::rate_change: return "rate_change";
    case EventKind::forced_drop: return "forced_drop";
  }
  return "?";
}

Action droptail_decide(int queue, int buffer) { return queue >= buffer ? Action::drop : Action::admit; }

Action codel_decide(CodelState& st, const CodelParams& p, double sojourn, double now) {
  // Ingress form of the reference state machine: one verdict per packet.
  bool ok_to_drop = false;
  if (sojourn < p.target) {
    st.first_above_time = 0.0;
  } else if (st.first_above_time == 0.0) {
    st.first_above_time = now + p.interval;
  } else if (now >= st.first_above_time) {
    ok_to_drop = true;
  }
  auto control_law = [&](double t) { return t + p.interval / std::sqrt(static_cast<double>(st.count)); };

  if (st.dropping) {
    if (!ok_to_drop) {
      st.dropping = false;
      return Action::admit;
    }
    if (now >= st.drop_next) {
      ++st.count;
      st.drop_next = control_law(st.drop_next);
      return Action::drop;
    }
    return Action::admit;
  }
  if (ok_to_drop) {
    st.dropping = true;
    const std::uint32_t delta = st.count - st.last_count;
    st.count = (delta > 1 && now - st.drop_next < 16.0 * p.interval) ? delta : 1;
    st.drop_next = control_law(now);
    st.last_count = st.count;
    return Action::drop;
  }
  return Action::admit;
}

namespace {

// Exponential service with departures taking precedence over arrivals at
// equal timestamps.
class Server {
 public:
  Server(double mu, std::mt19937_64& rng) : mu_(mu), rng_(rng) {}

  void drain_until(double t, int& queue, std::vector<SimEvent>& ev, const std::vector<double>& rates) {
    while (queue > 0 && next_ <= t) {
      --queue;
      ev.push_back({next_, EventKind::departure, -1, queue, total(rates), std::nullopt});
      next_ = queue > 0 ? next_ + draw() : kInf;
    }
  }
  void on_enqueue(double t, int queue_after) {
    if (queue_after == 1) next_ = t + draw();
  }

 private:
  static double total(const std::vector<double>& r) {
    double s = 0.0;
    for (double x : r) s += x;
    return s;
  }
  double draw() { return std::exponential_distribution<double>(mu_)(rng_); }
  double mu_;
  std::mt19937_64& rng_;
  double next_ = kInf;
};

}  // namespace

SimTrace run_zero_rtt(const ZeroRttSimConfig& cfg, AqmPolicy& policy, std::uint64_t seed, const SimOptions& opts) {
  if (!(cfg.alpha > 0.0) || !(cfg.mu > 0.0) || cfg.buffer < 1 || !(cfg.rate_min > 0.0) ||
      !(cfg.rate_max >= cfg.rate_min) || !(cfg.initial_rate > 0.0))
    throw std::invalid_argument("invalid zero-rtt simulation configuration");
  std::mt19937_64 rng(seed);
  policy.reset();
  SimTrace trace;
  trace.seed = seed;
  trace.mu = cfg.mu;
  trace.buffer = cfg.buffer;
  double lambda = std::clamp(cfg.initial_rate, cfg.rate_min, cfg.rate_max);
  trace.initial_rates = {lambda};
  std::vector<double> rates{lambda};
  std::vector<double> ages{0.0};
  auto& ev = trace.events;
  ev.reserve(opts.arrivals * 4);
  ev.push_back({0.0, EventKind::rate_change, 0, 0, lambda, std::nullopt});

  Server server(cfg.mu, rng);
  int queue = 0;
  double t = 0.0;
  for (std::size_t n = 0; n < opts.arrivals; ++n) {
    t += std::gamma_distribution<double>(cfg.alpha, 1.0 / (cfg.alpha * lambda))(rng);
    server.drain_until(t, queue, ev, rates);
    const Observation obs{t, 0, queue, cfg.buffer, cfg.mu, rates, ages, queue / cfg.mu};
    const Action a = policy.decide(obs);
    ev.push_back({t, EventKind::decision, 0, queue, lambda, a});
    bool halve = a == Action::drop;
    if (a == Action::admit) {
      if (queue < cfg.buffer) {
        ++queue;
        server.on_enqueue(t, queue);
        ev.push_back({t, EventKind::arrival, 0, queue, lambda, std::nullopt});
      } else {
        ev.push_back({t, EventKind::forced_drop, 0, queue, lambda, std::nullopt});
        halve = opts.overflow_halves_rate;
      }
    }
    lambda = std::clamp(halve ? lambda / 2.0 : lambda + 1.0, cfg.rate_min, cfg.rate_max);
    rates[0] = lambda;
    ev.push_back({t, EventKind::rate_change, 0, queue, lambda, std::nullopt});
  }
  return trace;
}

SimTrace run_rtt(const MultiFlowConfig& cfg, AqmPolicy& policy, std::uint64_t seed, const SimOptions& opts) {
  cfg.validate();
  const std::size_t n = cfg.flow_count();
  std::mt19937_64 rng(seed);
  policy.reset();
  SimTrace trace;
  trace.seed = seed;
  trace.mu = cfg.mu;
  trace.buffer = cfg.buffer;
  trace.flow_count = static_cast<int>(n);
  auto& ev = trace.events;
  ev.reserve(opts.arrivals * 4);

  std::vector<double> rates(n), last_decision(n, -kInf), next_arrival(n), ages(n);
  for (std::size_t m = 0; m < n; ++m) {
    rates[m] = std::clamp(cfg.flows[m].initial_rate, cfg.rate_min, cfg.rate_max);
    next_arrival[m] = std::exponential_distribution<double>(rates[m])(rng);
    ev.push_back({0.0, EventKind::rate_change, static_cast<int>(m), 0, rates[m], std::nullopt});
  }
  trace.initial_rates = rates;
  std::vector<double> pending = rates;
  bool has_pending = false;

  Server server(cfg.mu, rng);
  int queue = 0;
  for (std::size_t count = 0; count < opts.arrivals; ++count) {
    std::size_t m = 0;
    for (std::size_t k = 1; k < n; ++k)
      if (next_arrival[k] < next_arrival[m]) m = k;
    const double t = next_arrival[m];
    server.drain_until(t, queue, ev, rates);
    const int flow = static_cast<int>(m);
    const bool decision = t - last_decision[m] >= cfg.flows[m].rtt;
    bool resampled = false;

    if (!decision) {
      if (queue < cfg.buffer) {
        ++queue;
        server.on_enqueue(t, queue);
        ev.push_back({t, EventKind::arrival, flow, queue, rates[m], std::nullopt});
      } else {
        ev.push_back({t, EventKind::forced_drop, flow, queue, rates[m], std::nullopt});
        if (opts.overflow_halves_rate) {
          rates[m] = std::max(cfg.rate_min, rates[m] / 2.0);
          pending[m] = std::max(cfg.rate_min, pending[m] / 2.0);
          ev.push_back({t, EventKind::rate_change, flow, queue, rates[m], std::nullopt});
        }
      }
    } else {
      // The previous decision's rate update lands now.
      if (has_pending) {
        for (std::size_t k = 0; k < n; ++k) {
          if (pending[k] == rates[k]) continue;
          rates[k] = pending[k];
          ev.push_back({t, EventKind::rate_change, static_cast<int>(k), queue, rates[k], std::nullopt});
          next_arrival[k] = t + std::exponential_distribution<double>(rates[k])(rng);
          if (k == m) resampled = true;
        }
        has_pending = false;
      }
      for (std::size_t k = 0; k < n; ++k) ages[k] = std::min(t - last_decision[k], cfg.flows[k].rtt);
      ages[m] = 0.0;
      const Observation obs{t, flow, queue, cfg.buffer, cfg.mu, rates, ages, queue / cfg.mu};
      const Action a = policy.decide(obs);
      ev.push_back({t, EventKind::decision, flow, queue, rates[m], a});
      MultiFlowState st{flow, queue, rates, ages};
      pending = next_rates(st, a, cfg);
      has_pending = true;
      if (a == Action::admit) {
        if (queue < cfg.buffer) {
          ++queue;
          server.on_enqueue(t, queue);
          ev.push_back({t, EventKind::arrival, flow, queue, rates[m], std::nullopt});
        } else {
          // Full buffer: the admit branch of the rate recursion still applies.
          ev.push_back({t, EventKind::forced_drop, flow, queue, rates[m], std::nullopt});
          if (opts.overflow_halves_rate) pending[m] = std::max(cfg.rate_min, rates[m] / 2.0);
        }
      }
      last_decision[m] = t;
    }
    if (!resampled) next_arrival[m] = t + std::exponential_distribution<double>(rates[m])(rng);
  }
  return trace;
}

TraceStats trace_stats(const SimTrace& trace, double burn_in_fraction) {
  if (trace.events.empty()) throw std::invalid_argument("empty trace");
  if (!(burn_in_fraction >= 0.0) || !(burn_in_fraction < 1.0)) throw std::invalid_argument("burn-in must lie in [0, 1)");
  const double t_end = trace.events.back().time;
  const double t0 = burn_in_fraction * t_end;
  std::vector<double> rates = trace.initial_rates;
  rates.resize(static_cast<std::size_t>(trace.flow_count), 0.0);
  double total_rate = 0.0;
  for (double r : rates) total_rate += r;
  TraceStats s;
  int queue = 0;
  double last = t0, area_q = 0.0, area_r = 0.0, busy = 0.0;
  auto advance = [&](double t) {
    if (t <= t0) return;
    const double dt = t - std::max(last, t0);
    if (dt > 0.0) {
      area_q += queue * dt;
      area_r += total_rate * dt;
      if (queue > 0) busy += dt;
    }
    last = std::max(last, t);
  };
  for (const auto& e : trace.events) {
    advance(e.time);
    const bool in_window = e.time >= t0;
    switch (e.kind) {
      case EventKind::arrival:
        queue = e.queue_after;
        if (in_window) ++s.admitted;
        break;
      case EventKind::departure:
        queue = e.queue_after;
        if (in_window) ++s.departures;
        break;
      case EventKind::decision:
        if (in_window) {
          ++s.decisions;
          if (e.action == Action::drop) ++s.policy_drops;
        }
        break;
      case EventKind::forced_drop:
        if (in_window) ++s.forced_drops;
        break;
      case EventKind::rate_change: {
        auto& r = rates.at(static_cast<std::size_t>(e.flow));
        total_rate += e.rate_after - r;
        r = e.rate_after;
        break;
      }
    }
  }
  s.duration = t_end - t0;
  if (s.duration > 0.0) {
    s.mean_queue = area_q / s.duration;
    s.mean_rate = area_r / s.duration;
    s.utilization = busy / s.duration;
    s.departure_rate = s.departures / s.duration;
  }
  s.mean_delay = trace.mu > 0.0 ? s.mean_queue / trace.mu : 0.0;
  return s;
}

AggregateStats aggregate(const std::vector<SimTrace>& traces, double burn_in_fraction) {
  if (traces.empty()) throw std::invalid_argument("no traces to aggregate");
  AggregateStats out;
  TraceStats& p = out.pooled;
  double mu_weighted = 0.0;
  for (const auto& tr : traces) {
    const auto s = trace_stats(tr, burn_in_fraction);
    out.per_trace.push_back(s);
    p.duration += s.duration;
    p.mean_queue += s.mean_queue * s.duration;
    p.mean_rate += s.mean_rate * s.duration;
    p.utilization += s.utilization * s.duration;
    p.departure_rate += s.departure_rate * s.duration;
    mu_weighted += tr.mu * s.duration;
    p.decisions += s.decisions;
    p.admitted += s.admitted;
    p.departures += s.departures;
    p.policy_drops += s.policy_drops;
    p.forced_drops += s.forced_drops;
  }
  if (p.duration > 0.0) {
    p.mean_queue /= p.duration;
    p.mean_rate /= p.duration;
    p.utilization /= p.duration;
    p.departure_rate /= p.duration;
    mu_weighted /= p.duration;
    p.mean_delay = p.mean_queue / mu_weighted;
  }
  return out;
}

void write_evolution_csv(std::ostream& out, const std::vector<SimTrace>& traces, int bins) {
  if (traces.empty() || bins < 1) throw std::invalid_argument("need traces and at least one bin");
  double horizon = kInf;
  for (const auto& tr : traces) horizon = std::min(horizon, tr.events.back().time);
  const double width = horizon / bins;
  std::vector<double> q_sum(bins, 0.0), r_sum(bins, 0.0);
  for (const auto& tr : traces) {
    std::vector<double> rates = tr.initial_rates;
    rates.resize(static_cast<std::size_t>(tr.flow_count), 0.0);
    double total = 0.0;
    for (double r : rates) total += r;
    int queue = 0;
    double last = 0.0;
    auto accrue = [&](double t) {
      t = std::min(t, horizon);
      while (last < t) {
        const int b = std::min(bins - 1, static_cast<int>(last / width));
        const double edge = std::min(t, (b + 1) * width);
        const double dt = edge - last;
        q_sum[b] += queue * dt;
        r_sum[b] += total * dt;
        last = edge <= last ? t : edge;
      }
    };
    for (const auto& e : tr.events) {
      accrue(e.time);
      if (e.kind == EventKind::arrival || e.kind == EventKind::departure) queue = e.queue_after;
      if (e.kind == EventKind::rate_change) {
        auto& r = rates.at(static_cast<std::size_t>(e.flow));
        total += e.rate_after - r;
        r = e.rate_after;
      }
    }
    accrue(horizon);
  }
  out << "bin,time_start,mean_queue,mean_rate\n";
  const double norm = width * static_cast<double>(traces.size());
  for (int b = 0; b < bins; ++b)
    out << b << ',' << format_double(b * width) << ',' << format_double(q_sum[b] / norm) << ','
        << format_double(r_sum[b] / norm) << '\n';
}

void write_trace_csv(std::ostream& out, const SimTrace& trace) {
  out << "time,kind,flow,queue_after,rate_after,action\n";
  for (const auto& e : trace.events) {
    out << format_double(e.time) << ',' << to_string(e.kind) << ',' << e.flow << ',' << e.queue_after << ','
        << format_double(e.rate_after) << ',';
    if (e.action) out << to_string(*e.action);
    out << '\n';
  }
}

}  // namespace paqman
