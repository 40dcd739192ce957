#include "paqman/flow_inference.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "bfgs.hpp"

namespace paqman {

void ObservationLog::validate() const {
  if (interarrivals.size() != actions.size()) throw std::invalid_argument("interarrivals and actions differ in length");
  if (interarrivals.size() < 2) throw std::invalid_argument("observation log needs at least two entries");
  for (double w : interarrivals)
    if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("interarrival times must be positive");
  for (int a : actions)
    if (a != 0 && a != 1) throw std::invalid_argument("actions must be 0 or 1");
}

ObservationLog read_observation_log(std::istream& in) {
  ObservationLog log;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      if (line.find("interarrival") != std::string::npos) continue;
    }
    std::istringstream row(line);
    std::string w, a;
    if (!std::getline(row, w, ',') || !std::getline(row, a, ','))
      throw std::invalid_argument("malformed observation row: " + line);
    try {
      log.interarrivals.push_back(std::stod(w));
      log.actions.push_back(std::stoi(a));
    } catch (const std::exception&) {
      throw std::invalid_argument("malformed observation row: " + line);
    }
  }
  log.validate();
  return log;
}

ObservationLog read_observation_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path);
  return read_observation_log(in);
}

void write_observation_log(std::ostream& out, const ObservationLog& log) {
  out << "interarrival_seconds,action\n" << std::setprecision(17);
  for (std::size_t i = 0; i < log.size(); ++i) out << log.interarrivals[i] << ',' << log.actions[i] << '\n';
}

void write_fit_text(std::ostream& out, const FitResult& fit) {
  out << std::setprecision(17) << "alpha_hat = " << fit.alpha_hat << '\n'
      << "beta1_hat = " << fit.beta1_hat << '\n'
      << "log_likelihood = " << fit.log_likelihood << '\n'
      << "converged = " << (fit.converged ? "true" : "false") << '\n'
      << "gradient_norm = " << fit.gradient_norm << '\n'
      << "iterations = " << fit.iterations << '\n';
}

std::string fit_csv_header() { return "alpha_hat,beta1_hat,log_likelihood,converged,gradient_norm,iterations"; }

std::string fit_csv_row(const FitResult& fit) {
  std::ostringstream s;
  s << std::setprecision(17) << fit.alpha_hat << ',' << fit.beta1_hat << ',' << fit.log_likelihood << ','
    << (fit.converged ? 1 : 0) << ',' << fit.gradient_norm << ',' << fit.iterations;
  return s.str();
}

std::vector<double> rate_trajectory(double alpha, double beta1, const std::vector<int>& actions) {
  std::vector<double> beta;
  beta.reserve(actions.size() + 1);
  beta.push_back(beta1);
  for (int a : actions) beta.push_back(a == 0 ? beta.back() + alpha : beta.back() / 2.0);
  return beta;
}

double log_likelihood(double alpha, double beta1, const ObservationLog& log) {
  const std::size_t k = log.size();
  double sum_log_beta = 0.0, sum_log_w = 0.0, sum_beta_w = 0.0;
  double beta = beta1;
  for (std::size_t n = 0; n < k; ++n) {
    sum_log_beta += std::log(beta);
    sum_log_w += std::log(log.interarrivals[n]);
    sum_beta_w += beta * log.interarrivals[n];
    beta = log.actions[n] == 0 ? beta + alpha : beta / 2.0;
  }
  const double l = alpha * sum_log_beta + (alpha - 1.0) * sum_log_w - sum_beta_w -
                   static_cast<double>(k) * std::lgamma(alpha);
  return std::isfinite(l) ? l : kLogLikelihoodFloor;
}

std::array<double, 2> score(double alpha, double beta1, const ObservationLog& log) {
  const std::size_t k = log.size();
  double beta = beta1, d_alpha = 0.0, d_beta1 = 1.0;
  double g_alpha = 0.0, g_beta1 = 0.0;
  for (std::size_t n = 0; n < k; ++n) {
    const double w = log.interarrivals[n];
    const double c = alpha / beta - w;
    g_alpha += std::log(beta) + std::log(w) + c * d_alpha;
    g_beta1 += c * d_beta1;
    if (log.actions[n] == 0) {
      beta += alpha;
      d_alpha += 1.0;
    } else {
      beta /= 2.0;
      d_alpha /= 2.0;
      d_beta1 /= 2.0;
    }
  }
  g_alpha -= static_cast<double>(k) * boost::math::digamma(alpha);
  return {g_alpha, g_beta1};
}

std::array<double, 2> initial_guess(const ObservationLog& log, std::size_t window) {
  const std::size_t m = std::min(std::max<std::size_t>(window, 2), log.size());
  const double mean = std::accumulate(log.interarrivals.begin(), log.interarrivals.begin() + m, 0.0) / m;
  double var = 0.0;
  for (std::size_t i = 0; i < m; ++i) var += (log.interarrivals[i] - mean) * (log.interarrivals[i] - mean);
  var /= static_cast<double>(m - 1);
  double alpha0 = var > 0.0 ? mean * mean / var : 1.0;
  alpha0 = std::clamp(alpha0, 1e-3, 1e3);
  return {alpha0, alpha0 / mean};
}

FitResult fit(const ObservationLog& log, const FitOptions& opts) {
  log.validate();
  const auto start = initial_guess(log, opts.moment_window);
  auto f = [&](const Eigen::VectorXd& th) { return log_likelihood(std::exp(th[0]), std::exp(th[1]), log); };
  auto g = [&](const Eigen::VectorXd& th) {
    const double a = std::exp(th[0]), b = std::exp(th[1]);
    const auto s = score(a, b, log);
    Eigen::VectorXd out(2);
    out << a * s[0], b * s[1];
    return out;
  };
  Eigen::VectorXd x0(2);
  x0 << std::log(start[0]), std::log(start[1]);
  const auto r = detail::bfgs_maximize(f, g, x0, opts.gradient_tolerance, opts.max_iterations);
  FitResult out;
  out.alpha_hat = std::exp(r.x[0]);
  out.beta1_hat = std::exp(r.x[1]);
  out.log_likelihood = r.value;
  out.converged = r.converged;
  out.gradient_norm = r.gradient_norm;
  out.iterations = r.iterations;
  return out;
}

namespace {

double horner(const std::vector<double>& c, double x) {
  double y = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) y = y * x + *it;
  return y;
}

}  // namespace

double PolynomialCC::up(double x) const { return horner(up_coefficients, x); }
double PolynomialCC::down(double x) const { return horner(down_coefficients, x); }

std::vector<double> rate_trajectory(double alpha, double beta1, const std::vector<int>& actions,
                                    const PolynomialCC& cc) {
  std::vector<double> beta;
  beta.reserve(actions.size() + 1);
  beta.push_back(beta1);
  for (int a : actions) {
    const double x = beta.back() / alpha;
    beta.push_back(alpha * (a == 0 ? cc.up(x) : cc.down(x)));
  }
  return beta;
}

double log_likelihood(double alpha, double beta1, const ObservationLog& log, const PolynomialCC& cc) {
  const std::size_t k = log.size();
  double sum_log_beta = 0.0, sum_log_w = 0.0, sum_beta_w = 0.0;
  double beta = beta1;
  for (std::size_t n = 0; n < k; ++n) {
    if (!(beta > 0.0) || !std::isfinite(beta)) return kLogLikelihoodFloor;
    sum_log_beta += std::log(beta);
    sum_log_w += std::log(log.interarrivals[n]);
    sum_beta_w += beta * log.interarrivals[n];
    const double x = beta / alpha;
    beta = alpha * (log.actions[n] == 0 ? cc.up(x) : cc.down(x));
  }
  const double l = alpha * sum_log_beta + (alpha - 1.0) * sum_log_w - sum_beta_w -
                   static_cast<double>(k) * std::lgamma(alpha);
  return std::isfinite(l) ? l : kLogLikelihoodFloor;
}

PolynomialFit fit_polynomial(const ObservationLog& log, int up_degree, int down_degree,
                             const PolynomialFitOptions& opts) {
  log.validate();
  if (up_degree < 0 || down_degree < 0) throw std::invalid_argument("polynomial degrees must be non-negative");
  const std::size_t nu = static_cast<std::size_t>(up_degree) + 1, nd = static_cast<std::size_t>(down_degree) + 1;

  auto pinned = [](const std::vector<std::optional<double>>& fixed, std::size_t j) {
    return j < fixed.size() ? fixed[j] : std::optional<double>{};
  };
  // Rates before the last decision drive the likelihood; the final action
  // has no observable effect.
  std::size_t admits = 0, drops = 0;
  for (std::size_t n = 0; n + 1 < log.size(); ++n) (log.actions[n] == 0 ? admits : drops)++;
  std::size_t free_up = 0, free_down = 0;
  for (std::size_t j = 0; j < nu; ++j) free_up += !pinned(opts.up_fixed, j);
  for (std::size_t j = 0; j < nd; ++j) free_down += !pinned(opts.down_fixed, j);
  if (free_down > 0 && drops == 0) throw Unidentifiable("no drops in the history: f_d is unidentifiable");
  if (free_up > 0 && admits == 0) throw Unidentifiable("no admits in the history: f_u is unidentifiable");
  if (2 + free_up + free_down >= log.size()) throw Unidentifiable("more free parameters than observations");

  const FitResult base = fit(log);
  auto start_coef = [](const std::vector<double>& given, std::size_t j, bool up) {
    if (j < given.size()) return given[j];
    if (up) return j <= 1 ? 1.0 : 0.0;
    return j == 1 ? 0.5 : 0.0;
  };
  PolynomialCC cc;
  cc.up_coefficients.resize(nu);
  cc.down_coefficients.resize(nd);
  for (std::size_t j = 0; j < nu; ++j)
    cc.up_coefficients[j] = pinned(opts.up_fixed, j).value_or(start_coef(opts.up_start, j, true));
  for (std::size_t j = 0; j < nd; ++j)
    cc.down_coefficients[j] = pinned(opts.down_fixed, j).value_or(start_coef(opts.down_start, j, false));

  // Free parameter vector: log alpha, log beta1, free up coefficients, free down coefficients.
  std::vector<double*> slots;
  for (std::size_t j = 0; j < nu; ++j)
    if (!pinned(opts.up_fixed, j)) slots.push_back(&cc.up_coefficients[j]);
  for (std::size_t j = 0; j < nd; ++j)
    if (!pinned(opts.down_fixed, j)) slots.push_back(&cc.down_coefficients[j]);
  const auto dim = static_cast<Eigen::Index>(2 + slots.size());

  auto unpack = [&](const Eigen::VectorXd& th) {
    for (std::size_t i = 0; i < slots.size(); ++i) *slots[i] = th[static_cast<Eigen::Index>(2 + i)];
  };
  auto f = [&](const Eigen::VectorXd& th) {
    unpack(th);
    return log_likelihood(std::exp(th[0]), std::exp(th[1]), log, cc);
  };
  auto g = [&](const Eigen::VectorXd& th) {
    Eigen::VectorXd out(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(th[i]));
      Eigen::VectorXd p = th, m = th;
      p[i] += h;
      m[i] -= h;
      const double fp = f(p), fm = f(m);
      out[i] = (fp <= kLogLikelihoodFloor || fm <= kLogLikelihoodFloor) ? 0.0 : (fp - fm) / (2.0 * h);
    }
    return out;
  };

  Eigen::VectorXd x0(dim);
  x0[0] = std::log(base.alpha_hat);
  x0[1] = std::log(base.beta1_hat);
  for (std::size_t i = 0; i < slots.size(); ++i) x0[static_cast<Eigen::Index>(2 + i)] = *slots[i];
  const auto r = detail::bfgs_maximize(f, g, x0, opts.gradient_tolerance, opts.max_iterations, 1e-14);
  unpack(r.x);

  PolynomialFit out;
  out.cc = cc;
  out.fit.alpha_hat = std::exp(r.x[0]);
  out.fit.beta1_hat = std::exp(r.x[1]);
  out.fit.log_likelihood = r.value;
  out.fit.gradient_norm = r.gradient_norm;
  out.fit.iterations = r.iterations;
  out.fit.converged = r.converged;
  // Both maps must keep the rate positive across the range the data visits.
  const auto beta = rate_trajectory(out.fit.alpha_hat, out.fit.beta1_hat, log.actions, cc);
  const auto [lo, hi] = std::minmax_element(beta.begin(), beta.end() - 1);
  for (int i = 0; i <= 64; ++i) {
    const double x = (*lo + (*hi - *lo) * i / 64.0) / out.fit.alpha_hat;
    if (!(cc.up(x) > 0.0) || !(cc.down(x) > 0.0)) out.fit.converged = false;
  }
  return out;
}

double current_rate(const FitResult& fit, const std::vector<int>& actions) {
  return rate_trajectory(fit.alpha_hat, fit.beta1_hat, actions).back();
}

}  // namespace paqman
