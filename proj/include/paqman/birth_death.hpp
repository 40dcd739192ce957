#pragma once

#include <Eigen/Dense>

namespace paqman {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

/// Intensity matrix of the queue-length CTMC on {0..L}: births at
/// `arrival_rate` (blocked at L), deaths at `service_rate` (blocked at 0).
/// A zero arrival rate gives the pure-death generator.
struct Generator {
  int buffer = 1;
  double arrival_rate = 0.0;
  double service_rate = 1.0;
  Matrix matrix;

  int dimension() const { return buffer + 1; }
};

Generator build_generator(double arrival_rate, double mu, int buffer);

/// e^{tG} by uniformization with the Poisson tail cut at 1e-12.  Large
/// uniformized horizons are split into halves and squared back.
Matrix transient_matrix(const Generator& gen, double t);

/// Row-vector product x e^{tG}, same method, without forming the matrix.
RowVector transient_apply(const RowVector& x, const Generator& gen, double t);

/// Solves p (s I - G) = y for p, G a birth-death generator and s > 0.
/// The system is tridiagonal and strictly diagonally dominant.
RowVector solve_shifted_left(const RowVector& y, const Generator& gen, double shift);

/// beta (beta I - G0)^{-1} applied from the left, G0 the pure-death generator;
/// lower-bidiagonal, one substitution sweep per row.
RowVector pure_death_resolvent_apply(const RowVector& y, double beta, double mu);

/// Queue-length transition matrix between consecutive decision epochs of a
/// single flow: beta e^{r G_beta} (beta I - G0)^{-1}.
Matrix decision_transition_matrix(double beta, double mu, int buffer, double rtt);

}  // namespace paqman
