#pragma once

#include <span>
#include <vector>

namespace paqman {

/// Shape/rate pair of a Gamma distribution (rate in 1/seconds).
struct GammaParams {
  double shape;
  double rate;
};

/// P(Y > X) for independent Y ~ Gamma(u, v) and X ~ Gamma(w, z) with integer u.
///
/// Evaluated as the finite negative-binomial sum
///   sum_{k=0}^{u-1} C(k+w-1, k) (v/(v+z))^k (z/(v+z))^w
/// with every term formed in log space, so large shapes do not overflow.
/// Throws std::domain_error for u < 1 or non-positive v, w, z.
double gamma_exceedance(long u, double v, double w, double z);

/// Increment P(Y_{u,v} > X) - P(Y_{u-1,v} > X) for u >= 2.
double gamma_exceedance_step(long u, double v, double w, double z);

/// Probability mass that exactly k events of a Poisson(v) stream fall inside
/// a Gamma(w, z) window, for k = 0..count-1.  This is the negative-binomial
/// pmf with success ratio v/(v+z); term k equals gamma_exceedance_step(k+1).
std::vector<double> negative_binomial_terms(long count, double v, double w, double z);

}  // namespace paqman
