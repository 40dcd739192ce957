#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>

namespace paqman::detail {

struct BfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;
using Gradient = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Maximizes f with a BFGS inverse-Hessian update and backtracking line
// search.  Steps that leave f unchanged within rounding but shrink the
// gradient are accepted, which lets the last iterations reach tight
// gradient tolerances on large sums.  `stall_tolerance` > 0 also stops once
// a full step improves f by less than that fraction of |f|.
inline BfgsResult bfgs_maximize(const Objective& f, const Gradient& grad, Eigen::VectorXd x, double tolerance,
                                int max_iterations, double stall_tolerance = 0.0) {
  const auto n = x.size();
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
  double fx = f(x);
  Eigen::VectorXd g = grad(x);
  BfgsResult out;
  int stalls = 0;
  for (int it = 0; it < max_iterations; ++it) {
    out.iterations = it;
    if (g.norm() < tolerance) {
      out.converged = true;
      break;
    }
    Eigen::VectorXd d = h * g;
    if (d.dot(g) <= 0.0) {
      h.setIdentity();
      d = g;
    }
    // Keep the first trial step modest in parameter space.
    double t = std::min(1.0, 1.0 / std::max(1e-12, d.lpNorm<Eigen::Infinity>()));
    if (it > 0) t = 1.0;
    bool accepted = false;
    Eigen::VectorXd xn, gn;
    double fn = fx;
    for (int ls = 0; ls < 60; ++ls) {
      xn = x + t * d;
      fn = f(xn);
      if (std::isfinite(fn) && fn >= fx + 1e-4 * t * g.dot(d)) {
        gn = grad(xn);
        accepted = true;
        break;
      }
      if (std::isfinite(fn) && std::abs(fn - fx) <= 1e-13 * std::max(1.0, std::abs(fx))) {
        gn = grad(xn);
        if (gn.norm() < g.norm()) {
          accepted = true;
          break;
        }
      }
      t *= 0.5;
    }
    if (!accepted) {
      if (h.isIdentity()) break;
      h.setIdentity();
      continue;
    }
    const Eigen::VectorXd s = xn - x;
    const Eigen::VectorXd y = g - gn;  // gradient of -f
    const double sy = s.dot(y);
    if (sy > 1e-300) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd i = Eigen::MatrixXd::Identity(n, n);
      h = (i - rho * s * y.transpose()) * h * (i - rho * y * s.transpose()) + rho * s * s.transpose();
    }
    const double gain = fn - fx;
    x = xn;
    fx = fn;
    g = gn;
    if (stall_tolerance > 0.0) {
      stalls = gain < stall_tolerance * std::max(1.0, std::abs(fx)) ? stalls + 1 : 0;
      if (stalls >= 5) {
        out.converged = true;
        out.iterations = it + 1;
        break;
      }
    }
    out.iterations = it + 1;
  }
  out.x = x;
  out.value = fx;
  out.gradient_norm = g.norm();
  if (out.gradient_norm < tolerance) out.converged = true;
  return out;
}

}  // namespace paqman::detail
