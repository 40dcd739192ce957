// Acceptance run: one PASS/FAIL line per criterion.
//
//   paqman_acceptance [--only 1,7,9] [--out-dir DIR] [--strict]
//
// Reports from the policy and simulation criteria are written to DIR.  The
// exit status is non-zero when a criterion throws, or with --strict when any
// criterion fails.

#include <CLI11.hpp>

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "paqman/birth_death.hpp"
#include "paqman/experiment.hpp"
#include "paqman/flow_inference.hpp"
#include "paqman/gamma_math.hpp"
#include "paqman/rtt_multi_model.hpp"
#include "paqman/rtt_single_model.hpp"
#include "paqman/smdp_solver.hpp"
#include "paqman/zero_rtt_model.hpp"
#include "support.hpp"

using namespace paqman;
namespace ts = testing_support;

namespace {

// Collects failed sub-checks of one criterion.
class Verdict {
 public:
  void expect(bool ok, const std::string& what) {
    ++checks_;
    if (!ok && failures_.size() < 8) failures_.push_back(what);
    if (!ok) ++failed_;
  }
  void note(const std::string& s) { notes_.push_back(s); }
  bool passed() const { return failed_ == 0; }
  std::string detail() const {
    std::ostringstream s;
    s << checks_ - failed_ << "/" << checks_ << " checks";
    for (const auto& n : notes_) s << "; " << n;
    for (const auto& f : failures_) s << "; failed: " << f;
    if (failed_ > failures_.size()) s << "; ... " << failed_ - failures_.size() << " more";
    return s.str();
  }

 private:
  std::size_t checks_ = 0, failed_ = 0;
  std::vector<std::string> failures_, notes_;
};

std::string num(double x, int digits = 4) {
  std::ostringstream s;
  s << std::setprecision(digits) << x;
  return s.str();
}

// ---------------------------------------------------------------- 1
void exceedance_suite(Verdict& v) {
  const std::vector<long> us{1, 2, 5};
  const std::vector<double> vals{0.5, 1.5, 3.0};
  const std::size_t reps = 1000000;
  std::mt19937_64 rng(1);
  int points = 0;
  for (double vv : vals)
    for (double w : vals)
      for (double z : vals) {
        ++points;
        std::gamma_distribution<double> x(w, 1.0 / z);
        std::vector<std::gamma_distribution<double>> y;
        for (long u : us) y.emplace_back(static_cast<double>(u), 1.0 / vv);
        std::vector<std::size_t> hits(us.size(), 0);
        for (std::size_t i = 0; i < reps; ++i) {
          const double xi = x(rng);
          for (std::size_t k = 0; k < us.size(); ++k) hits[k] += y[k](rng) > xi;
        }
        for (std::size_t k = 0; k < us.size(); ++k) {
          const double p = gamma_exceedance(us[k], vv, w, z);
          const double f = static_cast<double>(hits[k]) / reps;
          const double se = std::sqrt(p * (1.0 - p) / reps);
          v.expect(std::abs(f - p) <= 3.0 * se, "MC u=" + std::to_string(us[k]) + " v=" + num(vv) + " w=" + num(w) +
                                                    " z=" + num(z) + " |f-p|/se=" + num(std::abs(f - p) / se));
        }
      }
  v.note(std::to_string(points) + " (v,w,z) points x " + std::to_string(us.size()) + " shapes u at 1e6 samples");

  double worst_rec = 0.0, worst_geo = 0.0;
  for (double vv : vals)
    for (double w : vals)
      for (double z : vals)
        for (long u = 2; u <= 60; ++u)
          worst_rec = std::max(worst_rec, std::abs(gamma_exceedance(u, vv, w, z) - gamma_exceedance(u - 1, vv, w, z) -
                                                   gamma_exceedance_step(u, vv, w, z)));
  for (double vv : vals)
    for (double z : vals)
      for (long u = 1; u <= 60; ++u)
        worst_geo = std::max(worst_geo, std::abs(gamma_exceedance(u, vv, 1.0, z) -
                                                 (1.0 - std::pow(vv / (vv + z), static_cast<double>(u)))));
  v.expect(worst_rec <= 1e-12, "recursion error " + num(worst_rec));
  v.expect(worst_geo <= 1e-12, "w=1 closed form error " + num(worst_geo));
  v.note("recursion err " + num(worst_rec, 2) + ", w=1 err " + num(worst_geo, 2));
}

// ---------------------------------------------------------------- 2
void zero_rtt_rows(Verdict& v) {
  ZeroRttModelConfig cfg;
  cfg.rate_grid = RateGrid::log_spaced(1.5 * 0.8, 1.5 * 960.0, 64);
  double worst = 0.0;
  for (SnapMode mode : {SnapMode::split, SnapMode::nearest}) {
    cfg.snap = mode;
    const ZeroRttModel m(cfg);
    for (std::size_t s = 0; s < m.state_count(); ++s)
      for (Action a : {Action::admit, Action::drop}) {
        double sum = 0.0;
        bool nonneg = true;
        for (const auto& e : m.successors(s, a)) {
          sum += e.probability;
          nonneg = nonneg && e.probability >= 0.0;
        }
        worst = std::max(worst, std::abs(sum - 1.0));
        v.expect(nonneg, "negative entry in row " + std::to_string(s));
      }
  }
  v.expect(worst <= 1e-9, "row sum error " + num(worst));
  v.note("64x51 rows, max |sum-1| " + num(worst, 2));

  // Event-level oracle: the next rate is drawn with the grid projection
  // weights, then a Gamma interarrival races Exp(mu) services.
  cfg.snap = SnapMode::split;
  const ZeroRttModel m(cfg);
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::size_t> pick(0, m.state_count() - 1);
  const std::size_t reps = 1000000;
  for (int row = 0; row < 5; ++row) {
    const std::size_t s = pick(rng);
    const Action a = row % 2 ? Action::drop : Action::admit;
    const int q = m.queue_of(s);
    const double beta = m.grid()[m.rate_index_of(s)];
    const double next = a == Action::admit ? beta + cfg.alpha : beta / 2.0;
    const int start = a == Action::admit ? std::min(q + 1, cfg.buffer) : q;
    const auto proj = m.grid().project(next, cfg.snap);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::map<std::size_t, std::size_t> counts;
    for (std::size_t i = 0; i < reps; ++i) {
      double x = u(rng);
      std::size_t k = 0;
      while (k + 1 < proj.size() && x > proj[k].weight) x -= proj[k++].weight;
      const std::size_t ri = proj[k].index;
      const int qq = ts::sample_queue_after_gamma(start, cfg.alpha, m.grid()[ri], cfg.mu, rng);
      ++counts[m.index(qq, ri)];
    }
    std::map<std::size_t, double> probs;
    for (const auto& e : m.successors(s, a)) probs[e.state] += e.probability;
    for (const auto& [state, n] : counts) probs.emplace(state, 0.0);
    for (const auto& [state, p] : probs) {
      const double f = counts.count(state) ? static_cast<double>(counts[state]) / reps : 0.0;
      v.expect(ts::within_sigmas(f, p, reps), "row (q=" + std::to_string(q) + ", beta=" + num(beta) + ", " +
                                                  std::string(to_string(a)) + ") cell " + std::to_string(state));
    }
  }
  v.note("5 random rows vs 1e6 event draws");
}

// ---------------------------------------------------------------- 3
void rtt_single_rows(Verdict& v) {
  double worst_closed = 0.0;
  for (double beta : {0.5, 3.0, 40.0})
    for (double mu : {1.0, 2.0, 800.0}) {
      const Matrix p = decision_transition_matrix(beta, mu, 1, 0.0);
      Matrix expected(2, 2);
      expected << 1.0, 0.0, mu / (beta + mu), beta / (beta + mu);
      worst_closed = std::max(worst_closed, (p - expected).cwiseAbs().maxCoeff());
    }
  v.expect(worst_closed <= 1e-14, "r=0, L=1 closed form error " + num(worst_closed));

  double worst_sum = 0.0, worst_neg = 0.0;
  for (double beta : {0.8, 50.0, 800.0, 960.0})
    for (double mu : {400.0, 800.0})
      for (double r : {0.0, 0.002, 0.01, 0.05})
        for (int L : {1, 10, 50}) {
          const Matrix p = decision_transition_matrix(beta, mu, L, r);
          for (Eigen::Index i = 0; i < p.rows(); ++i) {
            worst_sum = std::max(worst_sum, std::abs(p.row(i).sum() - 1.0));
            worst_neg = std::min(worst_neg, p.row(i).minCoeff());
          }
        }
  v.expect(worst_sum <= 1e-9, "row sum error " + num(worst_sum));
  v.expect(worst_neg >= -1e-15, "negative entry " + num(worst_neg));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t reps = 1000000;
  for (int c = 0; c < 3; ++c) {
    const double beta = 1.0 + 30.0 * u(rng), mu = 5.0 + 40.0 * u(rng), r = 0.02 + 0.3 * u(rng);
    const int L = 2 + static_cast<int>(7.0 * u(rng));
    const int start = static_cast<int>((L + 1) * u(rng));
    const Matrix p = decision_transition_matrix(beta, mu, L, r);
    std::vector<std::size_t> counts(static_cast<std::size_t>(L) + 1, 0);
    for (std::size_t i = 0; i < reps; ++i) ++counts[ts::sample_rtt_decision(start, beta, mu, L, r, rng)];
    for (int q = 0; q <= L; ++q)
      v.expect(ts::within_sigmas(static_cast<double>(counts[q]) / reps, p(start, q), reps),
               "MC beta=" + num(beta) + " mu=" + num(mu) + " r=" + num(r) + " L=" + std::to_string(L) + " q=" +
                   std::to_string(q));
  }

  double worst_semi = 0.0;
  for (double beta : {1.0, 50.0, 900.0})
    for (double t : {0.001, 0.01, 0.3}) {
      const auto g = build_generator(beta, 800.0, 50);
      const Matrix whole = transient_matrix(g, t);
      const Matrix split = transient_matrix(g, 0.3 * t) * transient_matrix(g, 0.7 * t);
      worst_semi = std::max(worst_semi, (whole - split).cwiseAbs().maxCoeff());
    }
  v.expect(worst_semi <= 1e-8, "semigroup error " + num(worst_semi));
  v.note("row sums " + num(worst_sum, 2) + ", semigroup " + num(worst_semi, 2) + ", 3 MC configs at 1e6");
}

// ---------------------------------------------------------------- 4
void multi_kernel(Verdict& v) {
  double worst_red = 0.0;
  for (double rtt : {0.002, 0.006, 0.01})
    for (double rate : {50.0, 350.0, 900.0})
      for (int q : {0, 3, 8}) {
        MultiFlowConfig cfg;
        cfg.flows = {{rtt, rate}};
        cfg.buffer = 8;
        cfg.mu = 800.0;
        const MultiFlowState s{0, q, {rate}, {0.0}};
        const auto blk = kernel_block(s, cfg, 0, rtt, INFINITY);
        worst_red = std::max(worst_red,
                             (blk.mass - decision_transition_matrix(rate, cfg.mu, cfg.buffer, rtt)).cwiseAbs().maxCoeff());
      }
  v.expect(worst_red <= 1e-9, "n=1 reduction error " + num(worst_red));

  MultiFlowConfig cfg;
  cfg.flows = {{0.002, 400.0}, {0.004, 400.0}};
  cfg.buffer = 6;
  cfg.mu = 900.0;
  const MultiFlowState s{0, 2, {400.0, 400.0}, {0.0, 0.0015}};
  const int q0 = post_decision_queue(s, Action::admit, cfg.buffer);
  const auto off = offsets(s, cfg.flows);
  std::vector<std::pair<double, double>> bins;
  for (const auto& sg : kernel_segments(off)) {
    if (std::isinf(sg.hi)) {
      bins.emplace_back(sg.lo, sg.lo + 0.002);
      bins.emplace_back(sg.lo + 0.002, INFINITY);
    } else {
      const double mid = 0.5 * (sg.lo + sg.hi);
      bins.emplace_back(sg.lo, mid);
      bins.emplace_back(mid, sg.hi);
    }
  }
  const std::size_t reps = 1000000;
  std::mt19937_64 rng(4);
  std::map<std::tuple<int, std::size_t, int>, std::size_t> counts;
  const std::vector<double> window{off.c[0], off.c[1]};
  for (std::size_t i = 0; i < reps; ++i) {
    const auto d = ts::sample_multi_decision(window, s.rates, cfg.mu, cfg.buffer, q0, rng);
    std::size_t bin = 0;
    while (!(d.time > bins[bin].first && d.time <= bins[bin].second)) ++bin;
    ++counts[{d.winner, bin, d.queue}];
  }
  for (int j = 0; j < 2; ++j)
    for (std::size_t bin = 0; bin < bins.size(); ++bin) {
      const auto blk = kernel_block(s, cfg, j, bins[bin].first, bins[bin].second);
      for (int q = 0; q <= cfg.buffer; ++q) {
        const auto it = counts.find({j, bin, q});
        const double f = it == counts.end() ? 0.0 : static_cast<double>(it->second) / reps;
        v.expect(ts::within_sigmas(f, blk.mass(q0, q), reps),
                 "block flow " + std::to_string(j) + " bin " + std::to_string(bin) + " q " + std::to_string(q));
      }
    }

  double worst_mass = 0.0;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 40; ++rep) {
    MultiFlowConfig c3;
    const int n = 2 + rep % 2;
    for (int m = 0; m < n; ++m) c3.flows.push_back({0.002 * (m + 1), 100.0});
    c3.buffer = 10;
    MultiFlowState st;
    st.incoming = rep % n;
    st.queue = rep % 11;
    for (int m = 0; m < n; ++m) {
      st.rates.push_back(20.0 + 600.0 * u(rng));
      st.ages.push_back(m == st.incoming ? 0.0 : 0.008 * u(rng));
    }
    for (Action a : {Action::admit, Action::drop})
      worst_mass = std::max(worst_mass, std::abs(kernel_queue_row(st, a, c3).sum() - 1.0));
  }
  v.expect(worst_mass <= 1e-6, "total mass error " + num(worst_mass));
  v.note("n=1 err " + num(worst_red, 2) + ", mass err " + num(worst_mass, 2) + ", n=2 blocks vs 1e6 draws");
}

// ---------------------------------------------------------------- 5
class TableModel final : public TransitionModel {
 public:
  explicit TableModel(std::size_t n) : n_(n), p_(2 * n, std::vector<double>(n, 0.0)), r_(2 * n), t_(2 * n) {}
  std::size_t state_count() const override { return n_; }
  std::vector<Successor> successors(std::size_t s, Action a) const override {
    std::vector<Successor> out;
    for (std::size_t j = 0; j < n_; ++j) out.push_back({j, p_[row(s, a)][j]});
    return out;
  }
  double reward(std::size_t s, Action a) const override { return r_[row(s, a)]; }
  double sojourn(std::size_t s, Action a) const override { return t_[row(s, a)]; }
  static std::size_t row(std::size_t s, Action a) { return 2 * s + static_cast<std::size_t>(a); }

  std::size_t n_;
  std::vector<std::vector<double>> p_;
  std::vector<double> r_, t_;
};

// Stationary law from pi (P - I) = 0 with sum pi = 1, then sum pi R / sum pi tau.
double renewal_reward_gain(const TableModel& m, const std::vector<Action>& pol) {
  const auto n = static_cast<Eigen::Index>(m.n_);
  Eigen::MatrixXd a(n + 1, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      a(j, i) = m.p_[TableModel::row(static_cast<std::size_t>(i), pol[static_cast<std::size_t>(i)])]
                    [static_cast<std::size_t>(j)] -
                (i == j ? 1.0 : 0.0);
  a.row(n).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 1);
  b(n) = 1.0;
  const Eigen::VectorXd pi = a.colPivHouseholderQr().solve(b);
  double num = 0.0, den = 0.0;
  for (Eigen::Index s = 0; s < n; ++s) {
    const auto su = static_cast<std::size_t>(s);
    num += pi(s) * m.reward(su, pol[su]);
    den += pi(s) * m.sojourn(su, pol[su]);
  }
  return num / den;
}

void solver_oracle(Verdict& v) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  int agree = 0;
  for (int rep = 0; rep < 50; ++rep) {
    TableModel m(3);
    for (std::size_t r = 0; r < 6; ++r) {
      double sum = 0.0;
      for (auto& p : m.p_[r]) sum += (p = 0.05 + u(rng));
      for (auto& p : m.p_[r]) p /= sum;
      m.r_[r] = 10.0 * u(rng) - 5.0;
      m.t_[r] = 0.1 + 3.0 * u(rng);
    }
    double best = -INFINITY;
    std::vector<Action> best_pol;
    for (int mask = 0; mask < 8; ++mask) {
      std::vector<Action> pol(3);
      for (int s = 0; s < 3; ++s) pol[s] = (mask >> s) & 1 ? Action::drop : Action::admit;
      const double g = renewal_reward_gain(m, pol);
      if (g > best) {
        best = g;
        best_pol = pol;
      }
    }
    const auto res = solve(transform(m));
    v.expect(res.converged, "instance " + std::to_string(rep) + " did not converge");
    v.expect(res.actions == best_pol, "instance " + std::to_string(rep) + " policy differs");
    agree += res.actions == best_pol;
    worst = std::max(worst, std::abs(res.gain - best));
    v.expect(std::abs(res.gain - best) <= 1e-6, "instance " + std::to_string(rep) + " gain off by " +
                                                    num(std::abs(res.gain - best)));
  }
  v.note(std::to_string(agree) + "/50 policies equal, max gain error " + num(worst, 2));
}

// ---------------------------------------------------------------- 6
void inference_recovery(Verdict& v) {
  const double alpha = 1.5, beta1 = 40.0;
  std::mt19937_64 rng(6);
  ObservationLog log;
  double beta = beta1;
  for (int n = 0; n < 10000; ++n) {
    log.interarrivals.push_back(std::gamma_distribution<double>(alpha, 1.0 / beta)(rng));
    const int a = n % 40 == 39 ? 1 : 0;
    log.actions.push_back(a);
    beta = a == 0 ? beta + alpha : beta / 2.0;
  }
  const auto f = fit(log);
  v.expect(f.converged, "fit did not converge");
  v.expect(std::abs(f.alpha_hat - alpha) / alpha <= 0.10, "alpha_hat " + num(f.alpha_hat) + " not within 10%");

  double best = -INFINITY, best_alpha = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double a = 1.0 + i / 199.0;
    for (int j = 0; j < 200; ++j) {
      const double b = 5.0 * std::pow(80.0, j / 199.0);
      const double l = log_likelihood(a, b, log);
      if (l > best) {
        best = l;
        best_alpha = a;
      }
    }
  }
  v.expect(std::abs(f.alpha_hat - best_alpha) / best_alpha <= 0.02,
           "alpha_hat " + num(f.alpha_hat) + " vs grid " + num(best_alpha));
  v.note("alpha_hat " + num(f.alpha_hat, 6) + ", grid maximizer " + num(best_alpha, 6));

  std::uniform_real_distribution<double> u(0.3, 3.0);
  std::bernoulli_distribution coin(0.3);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const double a = u(rng), b = 5.0 * u(rng);
    ObservationLog l;
    for (int n = 0; n < 5 + rep % 40; ++n) {
      l.interarrivals.push_back(0.5 * u(rng));
      l.actions.push_back(coin(rng) ? 1 : 0);
    }
    const auto s = score(a, b, l);
    const double ha = 1e-6 * a, hb = 1e-6 * b;
    const double fa = (log_likelihood(a + ha, b, l) - log_likelihood(a - ha, b, l)) / (2.0 * ha);
    const double fb = (log_likelihood(a, b + hb, l) - log_likelihood(a, b - hb, l)) / (2.0 * hb);
    const double ea = std::abs(s[0] - fa) / std::max(1.0, std::abs(fa));
    const double eb = std::abs(s[1] - fb) / std::max(1.0, std::abs(fb));
    worst = std::max({worst, ea, eb});
    v.expect(ea <= 1e-5 && eb <= 1e-5, "score instance " + std::to_string(rep));
  }
  v.note("max score rel. error " + num(worst, 2));
}

// ---------------------------------------------------------------- 7-11

ScenarioConfig base_config() {
  ScenarioConfig c;
  c.service_rate_mbps = 10.0;
  c.buffer = 50;
  c.alpha = 1.5;
  c.rate_min_mbps = 0.01;
  c.rate_max_mbps = 12.0;
  c.eta = 0.05;
  c.penalty = 1e6;
  c.max_iterations = 400000;
  c.replications = 20;
  c.arrivals = 10000;
  c.seed = 1;
  return c;
}

std::string heatmap_text(const GridPolicy& p) {
  std::ostringstream s;
  for (const auto& [k, val] : p.metadata) s << "# " << k << " = " << val << '\n';
  write_heatmap_csv(s, p);
  return s.str();
}

std::string report_text(const Report& r) {
  std::ostringstream s;
  write_report_csv(s, r);
  return s.str();
}

// Everything criteria 7-11 produce, as named files.  Solves are shared:
// criterion 9 simulates the mu = 10 Mbit/s policy of criterion 7 and the RTT
// sweep reuses the 2 and 10 ms policies of criterion 8.
struct Artifacts {
  std::map<std::string, std::string> files;
  GridPolicy zero5, zero10;
  std::map<int, GridPolicy> rtt;  // by RTT in ms
  Report fig7, fig9, fig10;
  VisitReport visits;
};

void add_report(Artifacts& a, const std::string& stem, const Report& r) {
  a.files[stem + "_report.csv"] = report_text(r);
  std::ostringstream summary;
  write_report_summary(summary, r);
  a.files[stem + "_summary.txt"] = summary.str();
  for (const auto& [k, text] : r.evolution) a.files[stem + "_evolution_" + k + ".csv"] = text;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void build_7(Artifacts& a) {
  auto c = base_config();
  c.model = ModelKind::zero_rtt;
  c.service_rate_mbps = 5.0;
  a.zero5 = solve_zero_rtt(c);
  c.service_rate_mbps = 10.0;
  a.zero10 = solve_zero_rtt(c);
  a.files["fig5_heatmap_5mbps.csv"] = heatmap_text(a.zero5);
  a.files["fig5_heatmap_10mbps.csv"] = heatmap_text(a.zero10);
}

ScenarioConfig rtt_config() {
  auto c = base_config();
  c.model = ModelKind::rtt_single;
  return c;
}

void build_8(Artifacts& a) {
  const auto c = rtt_config();
  for (int ms : {2, 10}) {
    a.rtt[ms] = solve_rtt_single(c, ms / 1000.0);
    a.files["fig6_heatmap_rtt" + std::to_string(ms) + "ms.csv"] = heatmap_text(a.rtt[ms]);
  }
}

void build_9(Artifacts& a) {
  auto c = base_config();
  c.model = ModelKind::zero_rtt;
  a.fig7 = compare(c, {{"paqman", grid_factory(std::make_shared<const GridPolicy>(a.zero10))},
                       {"codel", codel_factory(c)},
                       {"droptail", droptail_factory()}});
  add_report(a, "fig7", a.fig7);
}

const std::vector<int> kSweep{2, 4, 6, 8, 10};

void build_10(Artifacts& a) {
  const auto c = rtt_config();
  a.fig9 = Report{};
  for (int ms : kSweep) {
    if (!a.rtt.count(ms)) a.rtt[ms] = solve_rtt_single(c, ms / 1000.0);
    merge_report(a.fig9, compare(c, {{"paqman", grid_factory(std::make_shared<const GridPolicy>(a.rtt[ms]))}},
                                 ms / 1000.0));
  }
  add_report(a, "fig9", a.fig9);
}

void build_11(Artifacts& a) {
  auto c = base_config();
  c.model = ModelKind::rtt_multi;
  c.flow_rtts_ms = {2.0, 4.0, 6.0};
  const auto table = std::make_shared<const MultiPolicyTable>(learn_multi(c));
  a.visits = table->visit_report(100);
  std::ostringstream pol;
  write_multi_policy_csv(pol, *table, provenance(c));
  a.files["fig10_multi_policy.csv"] = pol.str();
  a.fig10 = compare(c, {{"paqman", multi_factory(table, c)}, {"codel", codel_factory(c)}, {"droptail", droptail_factory()}},
                    0.0);
  add_report(a, "fig10", a.fig10);
}

void judge_7(const Artifacts& a, Verdict& v) {
  v.expect(a.zero5.table.converged, "5 Mbit/s solve did not converge");
  v.expect(a.zero10.table.converged, "10 Mbit/s solve did not converge");
  const auto d5 = drop_region(a.zero5).size(), d10 = drop_region(a.zero10).size();
  v.expect(d5 > 0, "5 Mbit/s drop region empty");
  v.expect(d10 > 0, "10 Mbit/s drop region empty");
  v.expect(drop_region_contains(a.zero5, a.zero10), "5 Mbit/s region does not contain the 10 Mbit/s region");
  v.note("drop cells 5 Mbit/s " + std::to_string(d5) + ", 10 Mbit/s " + std::to_string(d10) + " of " +
         std::to_string(a.zero5.table.actions.size()));
}

void judge_8(const Artifacts& a, Verdict& v) {
  const auto& p2 = a.rtt.at(2);
  const auto& p10 = a.rtt.at(10);
  v.expect(p2.table.converged && p10.table.converged, "rtt solve did not converge");
  const auto d2 = drop_region(p2).size(), d10 = drop_region(p10).size();
  v.expect(d2 > 0, "2 ms drop region empty");
  v.expect(drop_region_contains(p10, p2), "10 ms region does not contain the 2 ms region");
  v.note("drop cells 2 ms " + std::to_string(d2) + ", 10 ms " + std::to_string(d10));
}

void judge_9(const Artifacts& a, Verdict& v) {
  const auto& p = find_row(a.fig7, "paqman").stats.pooled;
  const auto& c = find_row(a.fig7, "codel").stats.pooled;
  const auto& d = find_row(a.fig7, "droptail").stats.pooled;
  v.expect(p.mean_delay < c.mean_delay, "delay paqman " + num(p.mean_delay) + " >= codel " + num(c.mean_delay));
  const double gap = std::abs(p.departure_rate - c.departure_rate) / c.departure_rate;
  v.expect(gap <= 0.15, "throughput gap " + num(gap));
  v.expect(d.utilization >= p.utilization, "utilization droptail " + num(d.utilization) + " < paqman " +
                                               num(p.utilization));
  v.expect(d.utilization >= c.utilization, "utilization droptail " + num(d.utilization) + " < codel " +
                                               num(c.utilization));
  v.note("delay ms paqman/codel/droptail " + num(p.mean_delay * 1e3) + "/" + num(c.mean_delay * 1e3) + "/" +
         num(d.mean_delay * 1e3) + ", throughput gap " + num(gap * 100, 3) + "%, utilization " + num(p.utilization) +
         "/" + num(c.utilization) + "/" + num(d.utilization));
}

// Adjacent pairs where the sequence goes up.
int inversions(const std::vector<double>& xs) {
  int n = 0;
  for (std::size_t i = 1; i < xs.size(); ++i) n += xs[i] > xs[i - 1];
  return n;
}

void judge_10(const Artifacts& a, Verdict& v) {
  std::vector<double> delay, thru;
  for (int ms : kSweep) {
    const auto& s = find_row(a.fig9, "paqman", ms).stats.pooled;
    delay.push_back(s.mean_delay);
    thru.push_back(s.departure_rate);
  }
  for (int ms : kSweep) v.expect(a.rtt.at(ms).table.converged, std::to_string(ms) + " ms solve did not converge");
  const int di = inversions(delay), ti = inversions(thru);
  v.expect(di <= 1, std::to_string(di) + " delay inversions");
  v.expect(ti <= 1, std::to_string(ti) + " throughput inversions");
  std::string dl, tl;
  for (std::size_t i = 0; i < delay.size(); ++i) {
    dl += (i ? "/" : "") + num(delay[i] * 1e3);
    tl += (i ? "/" : "") + num(thru[i]);
  }
  v.note("delay ms " + dl + ", throughput pkt/s " + tl);
}

void judge_11(const Artifacts& a, Verdict& v) {
  const auto& p = find_row(a.fig10, "paqman").stats.pooled;
  const auto& c = find_row(a.fig10, "codel").stats.pooled;
  v.expect(p.mean_delay < c.mean_delay, "delay paqman " + num(p.mean_delay) + " >= codel " + num(c.mean_delay));
  const double gap = std::abs(p.departure_rate - c.departure_rate) / c.departure_rate;
  v.expect(gap <= 0.20, "throughput gap " + num(gap));
  v.note("delay ms paqman/codel " + num(p.mean_delay * 1e3) + "/" + num(c.mean_delay * 1e3) + ", throughput " +
         num(p.departure_rate) + "/" + num(c.departure_rate) + " pkt/s (gap " + num(gap * 100, 3) + "%), " +
         std::to_string(a.visits.cells) + " cells, " + std::to_string(a.visits.below_threshold) + " below " +
         std::to_string(a.visits.threshold) + " visits");
}

struct Criterion {
  int id;
  const char* title;
  double limit_s;
  std::function<void(Verdict&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  std::string out_dir = "acceptance_reports";
  bool strict = false;
  app.add_option("--only", only, "Criteria to run")->delimiter(',');
  app.add_option("--out-dir", out_dir, "Directory for reports")->capture_default_str();
  app.add_flag("--strict", strict, "Exit non-zero when any criterion fails");
  CLI11_PARSE(app, argc, argv);
  const std::set<int> selected(only.begin(), only.end());
  auto wanted = [&](int id) { return selected.empty() || selected.count(id) > 0; };

  Artifacts first;
  bool have_first = false;
  // Criterion 9 simulates the 10 Mbit/s policy of 7; the sweep of 10 reuses
  // two solves of 8; 12 rebuilds all of 7-11.
  auto needed = [&](int id) {
    if (wanted(id) || wanted(12)) return true;
    return (id == 7 && wanted(9)) || (id == 8 && wanted(10));
  };
  std::map<int, double> build_time;
  auto build = [&](Artifacts& a, std::map<int, double>* times) {
    const std::vector<std::pair<int, void (*)(Artifacts&)>> steps{
        {7, build_7}, {8, build_8}, {9, build_9}, {10, build_10}, {11, build_11}};
    for (const auto& [id, fn] : steps) {
      if (!needed(id)) continue;
      const auto t0 = Clock::now();
      fn(a);
      if (times) (*times)[id] = seconds_since(t0);
    }
  };
  auto need_first = [&] {
    if (have_first) return;
    build(first, &build_time);
    have_first = true;
  };

  std::vector<Criterion> criteria{
      {1, "Gamma exceedance closed form vs sampling", 60, exceedance_suite},
      {2, "zero-RTT transition rows", 120, zero_rtt_rows},
      {3, "single-flow RTT decision matrix", 120, rtt_single_rows},
      {4, "multi-flow kernel", 300, multi_kernel},
      {5, "solver vs policy enumeration", 60, solver_oracle},
      {6, "inference recovery", 120, inference_recovery},
      {7, "zero-RTT drop regions, 5 vs 10 Mbit/s", 600,
       [&](Verdict& v) {
         need_first();
         judge_7(first, v);
       }},
      {8, "RTT drop regions, 2 vs 10 ms", 600,
       [&](Verdict& v) {
         need_first();
         judge_8(first, v);
       }},
      {9, "zero-RTT comparison at 10 Mbit/s", 600,
       [&](Verdict& v) {
         need_first();
         judge_9(first, v);
       }},
      {10, "RTT sweep 2-10 ms", 900,
       [&](Verdict& v) {
         need_first();
         judge_10(first, v);
       }},
      {11, "three-flow learned policy vs CoDel", 1800,
       [&](Verdict& v) {
         need_first();
         judge_11(first, v);
       }},
      {12, "determinism of criteria 7-11", 3600,
       [&](Verdict& v) {
         need_first();
         Artifacts second;
         build(second, nullptr);
         for (const auto& [name, text] : first.files) {
           const auto it = second.files.find(name);
           v.expect(it != second.files.end() && it->second == text, name + " differs between runs");
         }
         v.expect(first.files.size() == second.files.size(), "different file sets");
         v.note(std::to_string(first.files.size()) + " report files compared byte for byte");
       }},
  };

  int failed = 0, errors = 0, ran = 0;
  for (const auto& c : criteria) {
    if (!wanted(c.id)) continue;
    ++ran;
    Verdict v;
    const auto t0 = Clock::now();
    std::string error;
    try {
      c.run(v);
    } catch (const std::exception& e) {
      error = e.what();
    }
    double elapsed = seconds_since(t0);
    if (c.id >= 7 && c.id <= 11 && build_time.count(c.id)) elapsed += build_time[c.id];
    // Criterion 9 simulates the policy solved under criterion 7 and the sweep
    // reuses two of criterion 8's solves; their time is charged there.
    if (error.empty()) v.expect(elapsed <= c.limit_s, "runtime " + num(elapsed, 4) + " s over " + num(c.limit_s) + " s");
    const bool ok = error.empty() && v.passed();
    failed += !ok;
    errors += !error.empty();
    std::cout << "criterion " << std::setw(2) << c.id << ": " << (ok ? "PASS" : "FAIL") << "  " << c.title << " ["
              << std::fixed << std::setprecision(1) << elapsed << " s] " << std::defaultfloat
              << (error.empty() ? v.detail() : "error: " + error) << std::endl;
  }

  if (have_first) {
    std::filesystem::create_directories(out_dir);
    for (const auto& [name, text] : first.files) std::ofstream(std::filesystem::path(out_dir) / name) << text;
  }
  std::cout << "acceptance: " << ran - failed << "/" << ran << " criteria passed" << std::endl;
  if (errors > 0) return 2;
  return strict && failed > 0 ? 1 : 0;
}
