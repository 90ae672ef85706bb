#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "h4ev/core.hpp"

namespace h4ev {

struct OptimOptions {
  double ftol = 1e-10;   // stop when the objective change drops below this
  double gtol = 1e-8;    // or when the gradient infinity-norm does
  int max_iterations = 500;
};

struct OptimResult {
  Eigen::VectorXd x;
  double f = 0.0;
  Eigen::VectorXd gradient;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;  // objective per accepted iterate
};

/// Objective callback: returns f(x) and fills grad (same size as x).
using ObjectiveFn =
    std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

/// BFGS with a backtracking Armijo line search. Non-convergence is reported
/// through the flag, never thrown: callers scanning many problems keep going.
inline OptimResult minimize_bfgs(const ObjectiveFn& objective,
                                 Eigen::VectorXd x0,
                                 const OptimOptions& opt = {}) {
  const int n = int(x0.size());
  Eigen::MatrixXd Hinv = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd x = std::move(x0), g(n);
  double f = objective(x, g);
  if (!std::isfinite(f)) throw DomainError("bfgs: objective not finite at x0");

  OptimResult res;
  res.trace.push_back(f);
  constexpr double kArmijo = 1e-4;

  for (int it = 0; it < opt.max_iterations; ++it) {
    res.iterations = it + 1;
    if (g.lpNorm<Eigen::Infinity>() < opt.gtol) {
      res.converged = true;
      break;
    }

    Eigen::VectorXd d = -Hinv * g;
    double slope = d.dot(g);
    if (!(slope < 0.0)) {  // reset on a non-descent direction
      Hinv.setIdentity();
      d = -g;
      slope = d.dot(g);
    }

    double alpha = 1.0, f_new = 0.0;
    Eigen::VectorXd x_new, g_new(n);
    bool accepted = false;
    for (int ls = 0; ls < 50; ++ls) {
      x_new = x + alpha * d;
      f_new = objective(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= f + kArmijo * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      // steepest-descent retry from a fresh metric
      Hinv.setIdentity();
      d = -g;
      slope = d.dot(g);
      alpha = 1.0 / std::max(1.0, g.norm());
      for (int ls = 0; ls < 60; ++ls) {
        x_new = x + alpha * d;
        f_new = objective(x_new, g_new);
        if (std::isfinite(f_new) && f_new <= f + kArmijo * alpha * slope) {
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
    }
    if (!accepted) break;  // stuck: report the best iterate, unconverged

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
      Hinv = (I - rho * s * y.transpose()) * Hinv *
                 (I - rho * y * s.transpose()) +
             rho * s * s.transpose();
    }

    const double df = f - f_new;
    x = x_new;
    f = f_new;
    g = g_new;
    res.trace.push_back(f);
    if (df < opt.ftol) {
      res.converged = true;
      res.iterations = it + 1;
      break;
    }
  }

  res.x = x;
  res.f = f;
  res.gradient = g;
  return res;
}

struct ConstrainedOptions {
  OptimOptions inner;
  int outer_iterations = 12;
  double mu0 = 10.0;        // initial penalty strength
  double mu_growth = 5.0;   // applied when the violation stalls
  double constraint_tol = 1e-8;
};

struct ConstrainedResult {
  OptimResult inner;
  double constraint_value = 0.0;
  double multiplier = 0.0;
  int outer_iterations = 0;
  bool feasible = false;
};

/// Augmented Lagrangian for a single inequality constraint c(x) <= tol.
/// fc fills both gradients and returns (f, c).
using ConstrainedFn = std::function<std::pair<double, double>(
    const Eigen::VectorXd&, Eigen::VectorXd&, Eigen::VectorXd&)>;

inline ConstrainedResult minimize_constrained(const ConstrainedFn& fc,
                                              Eigen::VectorXd x0,
                                              const ConstrainedOptions& opt =
                                                  {}) {
  double mu = opt.mu0, lambda = 0.0;
  double prev_violation = std::numeric_limits<double>::infinity();
  ConstrainedResult out;
  Eigen::VectorXd x = std::move(x0);

  for (int outer = 0; outer < opt.outer_iterations; ++outer) {
    out.outer_iterations = outer + 1;
    auto augmented = [&](const Eigen::VectorXd& xi, Eigen::VectorXd& grad) {
      Eigen::VectorXd gf(xi.size()), gc(xi.size());
      const auto [f, c] = fc(xi, gf, gc);
      // inequality via clipped multiplier: active when lambda + mu*(c-tol) > 0
      const double shifted = lambda + mu * (c - opt.constraint_tol);
      if (shifted > 0.0) {
        grad = gf + shifted * gc;
        return f + (shifted * shifted - lambda * lambda) / (2.0 * mu);
      }
      grad = gf;
      return f - lambda * lambda / (2.0 * mu);
    };
    out.inner = minimize_bfgs(augmented, x, opt.inner);
    x = out.inner.x;

    Eigen::VectorXd gf(x.size()), gc(x.size());
    const auto [f, c] = fc(x, gf, gc);
    out.constraint_value = c;
    const double violation = std::max(0.0, c - opt.constraint_tol);
    lambda = std::max(0.0, lambda + mu * (c - opt.constraint_tol));
    out.multiplier = lambda;
    if (violation <= 0.0) {
      out.feasible = true;
      break;
    }
    if (violation > 0.5 * prev_violation) mu *= opt.mu_growth;
    prev_violation = violation;
  }
  return out;
}

}  // namespace h4ev
