#include "paqman/gamma_math.hpp"

#include <cmath>
#include <stdexcept>

namespace paqman {
namespace {

void check_params(double v, double w, double z) {
  if (!(v > 0.0) || !(w > 0.0) || !(z > 0.0)) {
    throw std::domain_error("gamma parameters must be positive");
  }
}

// log of C(k+w-1, k) p^k q^w
long double log_term(long k, long double log_p, long double log_q, double w) {
  const long double kk = static_cast<long double>(k);
  return std::lgamma(kk + w) - std::lgamma(kk + 1.0L) - std::lgamma(static_cast<long double>(w)) +
         kk * log_p + w * log_q;
}

}  // namespace

std::vector<double> negative_binomial_terms(long count, double v, double w, double z) {
  check_params(v, w, z);
  if (count < 0) throw std::domain_error("term count must be non-negative");
  const long double log_p = std::log(static_cast<long double>(v) / (static_cast<long double>(v) + z));
  const long double log_q = std::log(static_cast<long double>(z) / (static_cast<long double>(v) + z));
  std::vector<double> terms(static_cast<std::size_t>(count));
  for (long k = 0; k < count; ++k) {
    terms[static_cast<std::size_t>(k)] = static_cast<double>(std::exp(log_term(k, log_p, log_q, w)));
  }
  return terms;
}

double gamma_exceedance(long u, double v, double w, double z) {
  if (u < 1) throw std::domain_error("first shape must be a positive integer");
  check_params(v, w, z);
  const long double log_p = std::log(static_cast<long double>(v) / (static_cast<long double>(v) + z));
  const long double log_q = std::log(static_cast<long double>(z) / (static_cast<long double>(v) + z));
  long double sum = 0.0L;
  for (long k = 0; k < u; ++k) sum += std::exp(log_term(k, log_p, log_q, w));
  if (sum > 1.0L) sum = 1.0L;
  return static_cast<double>(sum);
}

double gamma_exceedance_step(long u, double v, double w, double z) {
  if (u < 2) throw std::domain_error("recursion step requires u >= 2");
  check_params(v, w, z);
  const long double log_p = std::log(static_cast<long double>(v) / (static_cast<long double>(v) + z));
  const long double log_q = std::log(static_cast<long double>(z) / (static_cast<long double>(v) + z));
  return static_cast<double>(std::exp(log_term(u - 1, log_p, log_q, w)));
}

}  // namespace paqman
