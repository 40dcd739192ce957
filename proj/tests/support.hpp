#pragma once

// Shared helpers for the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace testing_support {

/// Two-sided Kolmogorov-Smirnov statistic of `sample` against `cdf`.
template <class Cdf>
double ks_statistic(std::vector<double> sample, Cdf cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

/// Asymptotic Kolmogorov tail P(K > sqrt(n) d).
inline double ks_pvalue(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double x = (sn + 0.12 + 0.11 / sn) * d;
  if (x < 0.2) return 1.0;
  double p = 0.0;
  for (int j = 1; j <= 100; ++j) p += 2.0 * ((j % 2) ? 1.0 : -1.0) * std::exp(-2.0 * j * j * x * x);
  return std::clamp(p, 0.0, 1.0);
}

/// Empirical frequency vs. probability within `sigmas` binomial standard
/// errors, with a floor for bins whose variance is essentially zero.
inline bool within_sigmas(double frequency, double probability, std::size_t reps, double sigmas = 3.0) {
  const double se = std::sqrt(std::max(probability * (1.0 - probability), 0.0) / static_cast<double>(reps));
  return std::abs(frequency - probability) <= sigmas * se + 1.0 / static_cast<double>(reps);
}

/// Queue length after a Gamma(alpha, beta) interarrival during which
/// `start` packets are served at rate mu, one path.
template <class Rng>
int sample_queue_after_gamma(int start, double alpha, double beta, double mu, Rng& rng) {
  std::gamma_distribution<double> window(alpha, 1.0 / beta);
  std::exponential_distribution<double> service(mu);
  const double x = window(rng);
  double t = 0.0;
  int q = start;
  while (q > 0) {
    t += service(rng);
    if (t > x) break;
    --q;
  }
  return q;
}

/// One path of a birth-death queue on {0..cap} over [0, horizon].
template <class Rng>
int sample_birth_death(int start, double birth, double death, int cap, double horizon, Rng& rng) {
  int q = start;
  double t = 0.0;
  for (;;) {
    const double b = q < cap ? birth : 0.0;
    const double d = q > 0 ? death : 0.0;
    const double total = b + d;
    if (total <= 0.0) return q;
    t += std::exponential_distribution<double>(total)(rng);
    if (t > horizon) return q;
    q += std::uniform_real_distribution<double>(0.0, total)(rng) < b ? 1 : -1;
  }
}

/// Inter-decision queue move of the single-flow RTT model: birth-death for
/// the RTT, then pure death over an Exp(beta) horizon.
template <class Rng>
int sample_rtt_decision(int start, double beta, double mu, int cap, double rtt, Rng& rng) {
  const int mid = sample_birth_death(start, beta, mu, cap, rtt, rng);
  const double w = std::exponential_distribution<double>(beta)(rng);
  return sample_birth_death(mid, 0.0, mu, cap, w, rng);
}

struct MultiDraw {
  int winner;
  double time;
  int queue;
};

/// Independent event simulation of the multi-flow inter-decision period:
/// each flow is a Poisson stream; its arrivals before `window[m]` join the
/// queue (when there is room), and its first arrival after it ends the period.
template <class Rng>
MultiDraw sample_multi_decision(const std::vector<double>& window, const std::vector<double>& rates, double mu,
                                int cap, int start, Rng& rng) {
  const std::size_t n = rates.size();
  std::vector<double> next(n);
  for (std::size_t m = 0; m < n; ++m) next[m] = std::exponential_distribution<double>(rates[m])(rng);
  double departure = start > 0 ? std::exponential_distribution<double>(mu)(rng) : INFINITY;
  int q = start;
  for (;;) {
    std::size_t m = 0;
    for (std::size_t k = 1; k < n; ++k)
      if (next[k] < next[m]) m = k;
    if (departure <= next[m]) {
      const double t = departure;
      --q;
      departure = q > 0 ? t + std::exponential_distribution<double>(mu)(rng) : INFINITY;
      continue;
    }
    const double t = next[m];
    if (t > window[m]) return {static_cast<int>(m), t, q};
    if (q < cap) {
      if (q == 0) departure = t + std::exponential_distribution<double>(mu)(rng);
      ++q;
    }
    next[m] = t + std::exponential_distribution<double>(rates[m])(rng);
  }
}

}  // namespace testing_support
