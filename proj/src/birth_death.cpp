#include "paqman/birth_death.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace paqman {
namespace {

constexpr double kTailTolerance = 1e-12;
constexpr double kMaxUniformizedHorizon = 40.0;

// y = x P for the uniformized tridiagonal P = I + G / lambda.
void tridiagonal_left_multiply(const RowVector& x, const Generator& g, double lambda, RowVector& y) {
  const int n = g.dimension();
  const double b = g.arrival_rate / lambda;
  const double d = g.service_rate / lambda;
  for (int j = 0; j < n; ++j) {
    double stay = 1.0;
    if (j < n - 1) stay -= b;
    if (j > 0) stay -= d;
    double acc = x[j] * stay;
    if (j > 0) acc += x[j - 1] * b;
    if (j < n - 1) acc += x[j + 1] * d;
    y[j] = acc;
  }
}

std::vector<double> poisson_weights(double m) {
  std::vector<double> w;
  double term = std::exp(-m);
  double cumulative = 0.0;
  for (int k = 0;; ++k) {
    if (k > 0) term *= m / k;
    w.push_back(term);
    cumulative += term;
    if (1.0 - cumulative < kTailTolerance && k >= m) break;
    if (k > 100000) break;
  }
  return w;
}

double uniformization_rate(const Generator& g) { return g.arrival_rate + g.service_rate; }

}  // namespace

Generator build_generator(double arrival_rate, double mu, int buffer) {
  if (buffer < 1) throw std::domain_error("buffer must be at least 1");
  if (!(mu > 0.0)) throw std::domain_error("service rate must be positive");
  if (!(arrival_rate >= 0.0)) throw std::domain_error("arrival rate must be non-negative");
  Generator g;
  g.buffer = buffer;
  g.arrival_rate = arrival_rate;
  g.service_rate = mu;
  const int n = buffer + 1;
  g.matrix = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    if (i < n - 1) g.matrix(i, i + 1) = arrival_rate;
    if (i > 0) g.matrix(i, i - 1) = mu;
    g.matrix(i, i) = -(g.matrix.row(i).sum());
  }
  return g;
}

RowVector transient_apply(const RowVector& x, const Generator& gen, double t) {
  if (!(t >= 0.0)) throw std::domain_error("time must be non-negative");
  const double lambda = uniformization_rate(gen);
  if (t == 0.0 || lambda == 0.0) return x;
  const double m = lambda * t;
  if (m > kMaxUniformizedHorizon) {
    const int pieces = static_cast<int>(std::ceil(m / kMaxUniformizedHorizon));
    RowVector out = x;
    for (int i = 0; i < pieces; ++i) out = transient_apply(out, gen, t / pieces);
    return out;
  }
  const auto w = poisson_weights(m);
  RowVector term = x, next(x.size());
  RowVector acc = w[0] * x;
  for (std::size_t k = 1; k < w.size(); ++k) {
    tridiagonal_left_multiply(term, gen, lambda, next);
    term.swap(next);
    acc += w[k] * term;
  }
  return acc;
}

Matrix transient_matrix(const Generator& gen, double t) {
  if (!(t >= 0.0)) throw std::domain_error("time must be non-negative");
  const int n = gen.dimension();
  const double lambda = uniformization_rate(gen);
  if (t == 0.0 || lambda == 0.0) return Matrix::Identity(n, n);
  int squarings = 0;
  double step = t;
  while (lambda * step > kMaxUniformizedHorizon) {
    step /= 2.0;
    ++squarings;
  }
  Matrix out(n, n);
  RowVector e = RowVector::Zero(n);
  for (int i = 0; i < n; ++i) {
    e.setZero();
    e[i] = 1.0;
    out.row(i) = transient_apply(e, gen, step);
  }
  for (int s = 0; s < squarings; ++s) out = (out * out).eval();
  return out;
}

RowVector solve_shifted_left(const RowVector& y, const Generator& gen, double shift) {
  if (!(shift > 0.0)) throw std::domain_error("shift must be positive");
  // M = shift I - G; column j of p M: p_{j-1} M_{j-1,j} + p_j M_{jj} + p_{j+1} M_{j+1,j}.
  // Equivalent to M^T p^T = y^T, solved with the Thomas algorithm.
  const int n = gen.dimension();
  std::vector<double> sub(n, 0.0), diag(n), sup(n, 0.0), rhs(n);
  for (int j = 0; j < n; ++j) {
    diag[j] = shift - gen.matrix(j, j);
    if (j > 0) sub[j] = -gen.matrix(j - 1, j);      // M^T(j, j-1) = M(j-1, j)
    if (j < n - 1) sup[j] = -gen.matrix(j + 1, j);  // M^T(j, j+1) = M(j+1, j)
    rhs[j] = y[j];
  }
  for (int j = 1; j < n; ++j) {
    const double f = sub[j] / diag[j - 1];
    diag[j] -= f * sup[j - 1];
    rhs[j] -= f * rhs[j - 1];
  }
  RowVector p(n);
  p[n - 1] = rhs[n - 1] / diag[n - 1];
  for (int j = n - 2; j >= 0; --j) p[j] = (rhs[j] - sup[j] * p[j + 1]) / diag[j];
  return p;
}

RowVector pure_death_resolvent_apply(const RowVector& y, double beta, double mu) {
  if (!(beta > 0.0) || !(mu > 0.0)) throw std::domain_error("rates must be positive");
  const Eigen::Index n = y.size();
  RowVector p(n);
  // (beta I - G0) has diagonal beta (state 0) and beta + mu, sub-diagonal -mu.
  auto diag = [&](Eigen::Index j) { return j == 0 ? beta : beta + mu; };
  p[n - 1] = beta * y[n - 1] / diag(n - 1);
  for (Eigen::Index j = n - 2; j >= 0; --j) p[j] = (beta * y[j] + mu * p[j + 1]) / diag(j);
  return p;
}

Matrix decision_transition_matrix(double beta, double mu, int buffer, double rtt) {
  if (!(beta > 0.0)) throw std::domain_error("rate must be positive");
  if (!(rtt >= 0.0)) throw std::domain_error("rtt must be non-negative");
  const Generator g = build_generator(beta, mu, buffer);
  const Matrix window = transient_matrix(g, rtt);
  Matrix out(window.rows(), window.cols());
  for (Eigen::Index i = 0; i < window.rows(); ++i) out.row(i) = pure_death_resolvent_apply(window.row(i), beta, mu);
  return out;
}

}  // namespace paqman
