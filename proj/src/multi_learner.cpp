#include "paqman/multi_learner.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "paqman/policy_io.hpp"

namespace paqman {

namespace {

constexpr std::uint64_t kAgeBins = 3;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(s);
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double max_q(const QEntry& e) { return std::max(e.q[0], e.q[1]); }

}  // namespace

std::vector<double> MultiDiscretization::rate_edges() const {
  std::vector<double> e(static_cast<std::size_t>(rate_bins) + 1);
  const double lo = std::log(rate_min), hi = std::log(rate_max);
  for (int i = 0; i <= rate_bins; ++i) e[i] = std::exp(lo + (hi - lo) * i / rate_bins);
  e.front() = rate_min;
  e.back() = rate_max;
  return e;
}

int MultiDiscretization::rate_bin(double rate) const {
  if (!(rate > rate_min)) return 0;
  const double x = (std::log(rate) - std::log(rate_min)) / (std::log(rate_max) - std::log(rate_min));
  return std::clamp(static_cast<int>(std::floor(x * rate_bins)), 0, rate_bins - 1);
}

int MultiDiscretization::age_bin(double age, double rtt) {
  if (age < 0.5 * rtt) return 0;
  if (age < rtt) return 1;
  return 2;
}

std::uint64_t MultiDiscretization::key(const MultiFlowState& s, const MultiFlowConfig& cfg) const {
  const std::size_t n = cfg.flow_count();
  std::uint64_t k = static_cast<std::uint64_t>(s.incoming);
  k = k * static_cast<std::uint64_t>(cfg.buffer + 1) + static_cast<std::uint64_t>(s.queue);
  for (std::size_t m = 0; m < n; ++m) k = k * static_cast<std::uint64_t>(rate_bins) + rate_bin(s.rates[m]);
  for (std::size_t m = 0; m < n; ++m) k = k * kAgeBins + age_bin(s.ages[m], cfg.flows[m].rtt);
  return k;
}

std::uint64_t MultiDiscretization::coarse_key(const MultiFlowState& s, int buffer) {
  return static_cast<std::uint64_t>(s.incoming) * static_cast<std::uint64_t>(buffer + 1) +
         static_cast<std::uint64_t>(s.queue);
}

const QEntry* MultiPolicyTable::fine_entry(const MultiFlowState& s, const MultiFlowConfig& cfg) const {
  const auto it = fine.find(disc.key(s, cfg));
  return it == fine.end() ? nullptr : &it->second;
}

Action MultiPolicyTable::lookup(const MultiFlowState& s, const MultiFlowConfig& cfg) const {
  if (const QEntry* e = fine_entry(s, cfg); e && e->total() >= min_visits) return e->greedy();
  const auto it = coarse.find(MultiDiscretization::coarse_key(s, buffer));
  return it == coarse.end() ? Action::admit : it->second.greedy();
}

VisitReport MultiPolicyTable::visit_report(std::uint64_t threshold) const {
  VisitReport r;
  r.threshold = threshold;
  const std::uint64_t per_queue_divisor = [&] {
    std::uint64_t d = 1;
    for (std::size_t m = 0; m < rtts.size(); ++m) d *= static_cast<std::uint64_t>(disc.rate_bins) * kAgeBins;
    return d;
  }();
  for (const auto& [key, e] : fine) {
    if (e.total() == 0) continue;
    ++r.cells;
    if (e.total() < threshold) ++r.below_threshold;
    const int q = static_cast<int>((key / per_queue_divisor) % static_cast<std::uint64_t>(buffer + 1));
    ++r.cells_by_queue[q];
  }
  return r;
}

MultiPolicyTable learn_policy(const MultiFlowConfig& cfg, const MultiDiscretization& disc, const LearnOptions& opts,
                              std::uint64_t seed) {
  cfg.validate();
  if (disc.rate_bins < 1 || !(disc.rate_min > 0.0) || !(disc.rate_max > disc.rate_min))
    throw std::invalid_argument("invalid discretization");
  if (opts.episodes == 0 || opts.steps_per_episode == 0) throw std::invalid_argument("need at least one step");

  MultiPolicyTable table;
  table.disc = disc;
  table.buffer = cfg.buffer;
  table.min_visits = opts.min_visits;
  for (const auto& f : cfg.flows) table.rtts.push_back(f.rtt);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double decay_episodes = std::max(1.0, 0.5 * static_cast<double>(opts.episodes));
  const int n = static_cast<int>(cfg.flow_count());
  // Every sojourn is at most the smallest RTT plus a mean gap at the lowest
  // rate.  Reading the gain as V(ref) / tau_max keeps the correction of a
  // common offset in the values below one step per update.
  double tau_max = cfg.flows.front().rtt;
  for (const auto& f : cfg.flows) tau_max = std::min(tau_max, f.rtt);
  tau_max += 1.0 / cfg.rate_min;
  auto fine_at = [&](const MultiFlowState& s) -> QEntry& {
    const auto [it, inserted] = table.fine.try_emplace(disc.key(s, cfg));
    if (inserted) {
      // Warm start from the aggregate over rates and ages.
      const auto c = table.coarse.find(MultiDiscretization::coarse_key(s, cfg.buffer));
      if (c != table.coarse.end()) it->second.q = c->second.q;
    }
    return it->second;
  };
  // Relative values are anchored at the most visited cell of each table.
  const QEntry* fine_ref = nullptr;
  const QEntry* coarse_ref = nullptr;
  auto anchor = [](const QEntry*& ref, const QEntry& e) {
    if (!ref || e.total() > ref->total()) ref = &e;
    return max_q(*ref);
  };

  for (std::size_t ep = 0; ep < opts.episodes; ++ep) {
    const double frac = std::min(1.0, static_cast<double>(ep) / decay_episodes);
    const double eps = opts.epsilon_start + (opts.epsilon_end - opts.epsilon_start) * frac;
    MultiFlowState s = initial_multi_state(cfg, static_cast<int>(ep % static_cast<std::size_t>(n)));
    for (std::size_t step = 0; step < opts.steps_per_episode; ++step) {
      QEntry& cell = fine_at(s);
      QEntry& agg = table.coarse[MultiDiscretization::coarse_key(s, cfg.buffer)];
      const bool explore = unif(rng) < eps;
      const Action a = explore ? (unif(rng) < 0.5 ? Action::admit : Action::drop) : cell.greedy();
      const std::size_t ai = static_cast<std::size_t>(a);
      const double tau = multi_expected_sojourn(s, cfg);
      const double r = multi_reward(s, a, cfg);
      const auto result = sample_step(s, a, cfg, rng);

      // std::map references survive later insertions.
      const QEntry& next = fine_at(result.next);
      const auto next_c = table.coarse.find(MultiDiscretization::coarse_key(result.next, cfg.buffer));
      const double next_coarse = next_c == table.coarse.end() ? 0.0 : max_q(next_c->second);

      ++cell.visits[ai];
      const double rho = anchor(fine_ref, cell) / tau_max;
      const double lr = std::pow(1.0 + static_cast<double>(cell.visits[ai]), -opts.lr_exponent);
      cell.q[ai] += lr * (r - rho * tau + max_q(next) - cell.q[ai]);

      ++agg.visits[ai];
      const double rho_c = anchor(coarse_ref, agg) / tau_max;
      const double lr_c = std::pow(1.0 + static_cast<double>(agg.visits[ai]), -opts.lr_exponent);
      agg.q[ai] += lr_c * (r - rho_c * tau + next_coarse - agg.q[ai]);
      s = result.next;
    }
  }
  const double rho = fine_ref ? max_q(*fine_ref) / tau_max : 0.0;
  table.gain = rho;
  return table;
}

void write_multi_policy_csv(std::ostream& out, const MultiPolicyTable& t,
                            const std::map<std::string, std::string>& metadata) {
  for (const auto& [k, v] : metadata) out << "# " << k << " = " << v << '\n';
  out << "# flows = " << t.rtts.size() << '\n';
  out << "# rtts_s =";
  for (std::size_t m = 0; m < t.rtts.size(); ++m) out << (m ? ";" : " ") << format_double(t.rtts[m]);
  out << '\n' << "# buffer = " << t.buffer << '\n';
  out << "# rate_bins = " << t.disc.rate_bins << '\n';
  out << "# rate_min = " << format_double(t.disc.rate_min) << '\n';
  out << "# rate_max = " << format_double(t.disc.rate_max) << '\n';
  out << "# rate_edges_pkts_per_s =";
  const auto edges = t.disc.rate_edges();
  for (std::size_t i = 0; i < edges.size(); ++i) out << (i ? ";" : " ") << format_double(edges[i]);
  out << '\n' << "# age_bins = [0,r/2);[r/2,r);[r,inf)\n";
  out << "# min_visits = " << t.min_visits << '\n';
  out << "# gain = " << format_double(t.gain) << '\n';
  out << "level,key,action,visits_admit,visits_drop,q_admit,q_drop\n";
  auto rows = [&](const char* level, const std::map<std::uint64_t, QEntry>& m) {
    for (const auto& [k, e] : m)
      out << level << ',' << k << ',' << static_cast<int>(e.greedy()) << ',' << e.visits[0] << ',' << e.visits[1]
          << ',' << format_double(e.q[0]) << ',' << format_double(e.q[1]) << '\n';
  };
  rows("coarse", t.coarse);
  rows("fine", t.fine);
}

MultiPolicyTable read_multi_policy_csv(std::istream& in) {
  MultiPolicyTable t;
  std::string line;
  bool header = false;
  auto num = [](const std::string& s) {
    std::size_t pos = 0;
    const double x = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("bad number: " + s);
    return x;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = trim(line.substr(1, eq - 1)), value = trim(line.substr(eq + 1));
      if (key == "rtts_s") {
        t.rtts.clear();
        for (const auto& x : split(value, ';')) t.rtts.push_back(num(x));
      } else if (key == "buffer") {
        t.buffer = std::stoi(value);
      } else if (key == "rate_bins") {
        t.disc.rate_bins = std::stoi(value);
      } else if (key == "rate_min") {
        t.disc.rate_min = num(value);
      } else if (key == "rate_max") {
        t.disc.rate_max = num(value);
      } else if (key == "min_visits") {
        t.min_visits = std::stoull(value);
      } else if (key == "gain") {
        t.gain = num(value);
      }
      continue;
    }
    if (!header) {
      if (trim(line) != "level,key,action,visits_admit,visits_drop,q_admit,q_drop")
        throw std::invalid_argument("unexpected multi-flow policy header: " + line);
      header = true;
      continue;
    }
    const auto f = split(trim(line), ',');
    if (f.size() != 7) throw std::invalid_argument("malformed policy row: " + line);
    QEntry e;
    e.visits = {std::stoull(f[3]), std::stoull(f[4])};
    e.q = {num(f[5]), num(f[6])};
    const std::uint64_t key = std::stoull(f[1]);
    if (f[0] == "fine") t.fine[key] = e;
    else if (f[0] == "coarse") t.coarse[key] = e;
    else throw std::invalid_argument("unknown table level: " + f[0]);
  }
  if (!header) throw std::invalid_argument("multi-flow policy file has no header row");
  if (t.rtts.empty()) throw std::invalid_argument("multi-flow policy file lists no flows");
  return t;
}

Action MultiPaqmanPolicy::decide(const Observation& obs) {
  MultiFlowState s;
  s.incoming = obs.flow;
  s.queue = obs.queue;
  s.rates.assign(obs.rates.begin(), obs.rates.end());
  s.ages.assign(obs.ages.begin(), obs.ages.end());
  return table_->lookup(s, cfg_);
}

}  // namespace paqman
