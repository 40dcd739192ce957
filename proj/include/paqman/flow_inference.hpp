#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace paqman {

/// Interarrival times (seconds) with the action taken on each packet
/// (0 admit, 1 drop).  W_n is drawn at rate beta_n, which depends on
/// actions 1..n-1 only.
struct ObservationLog {
  std::vector<double> interarrivals;
  std::vector<int> actions;

  std::size_t size() const { return interarrivals.size(); }
  /// Throws std::invalid_argument on mismatched lengths, k < 2, W <= 0 or
  /// actions outside {0, 1}.
  void validate() const;
};

ObservationLog read_observation_log(std::istream& in);
ObservationLog read_observation_log(const std::string& path);
void write_observation_log(std::ostream& out, const ObservationLog& log);

struct FitResult {
  double alpha_hat = 0.0;
  double beta1_hat = 0.0;
  double log_likelihood = 0.0;
  bool converged = false;
  double gradient_norm = 0.0;
  int iterations = 0;
};

void write_fit_text(std::ostream& out, const FitResult& fit);
std::string fit_csv_header();
std::string fit_csv_row(const FitResult& fit);

/// Returned by the likelihoods when a rate goes non-positive or the value
/// is not finite.
inline constexpr double kLogLikelihoodFloor = -1e300;

/// beta_1, ..., beta_{len(actions)+1} under additive increase by alpha and
/// halving on drop.
std::vector<double> rate_trajectory(double alpha, double beta1, const std::vector<int>& actions);

double log_likelihood(double alpha, double beta1, const ObservationLog& log);

/// Analytic gradient (dl/dalpha, dl/dbeta1).
std::array<double, 2> score(double alpha, double beta1, const ObservationLog& log);

struct FitOptions {
  double gradient_tolerance = 1e-6;  // on the gradient in (log alpha, log beta1)
  int max_iterations = 500;
  std::size_t moment_window = 32;  // leading interarrivals used for the start
};

/// Method-of-moments start from the leading interarrivals.
std::array<double, 2> initial_guess(const ObservationLog& log, std::size_t window = 32);

/// Maximum-likelihood (alpha, beta1) by quasi-Newton ascent in log space.
/// k >= 10 is advisable; smaller logs fit but are poorly determined.
FitResult fit(const ObservationLog& log, const FitOptions& opts = {});

/// Rate dynamics x_{t+1} = f_u(x_t) on admit and f_d(x_t) on drop, in
/// effective-rate units x = beta / alpha.  Coefficients are in increasing
/// power order.  AIMD is f_u = 1 + x, f_d = 0.5 x.
struct PolynomialCC {
  std::vector<double> up_coefficients;
  std::vector<double> down_coefficients;

  double up(double x) const;
  double down(double x) const;
};

std::vector<double> rate_trajectory(double alpha, double beta1, const std::vector<int>& actions,
                                    const PolynomialCC& cc);
double log_likelihood(double alpha, double beta1, const ObservationLog& log, const PolynomialCC& cc);

struct PolynomialFitOptions {
  /// Pinned coefficients; entries left empty are fitted.  Missing trailing
  /// entries count as free.
  std::vector<std::optional<double>> up_fixed;
  std::vector<std::optional<double>> down_fixed;
  /// Starting coefficients; missing entries start at the AIMD values.
  std::vector<double> up_start;
  std::vector<double> down_start;
  double gradient_tolerance = 1e-5;
  int max_iterations = 2000;
};

struct PolynomialFit {
  FitResult fit;
  PolynomialCC cc;
};

/// Thrown when the action history carries no information on a coefficient.
class Unidentifiable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Joint fit of (alpha, beta1, f_u, f_d) with finite-difference gradients.
/// Needs k well above the number of free parameters.  Starts from the AIMD
/// fit so the result never scores below it when AIMD is nested.
PolynomialFit fit_polynomial(const ObservationLog& log, int up_degree, int down_degree,
                             const PolynomialFitOptions& opts = {});

/// Last entry of the fitted rate trajectory.
double current_rate(const FitResult& fit, const std::vector<int>& actions);

}  // namespace paqman
