#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "defsurv/errors.hpp"

namespace defsurv {

using ObjectiveFn = std::function<double(const Eigen::VectorXd&)>;

struct MaximizeOptions {
  int max_iterations = 500;
  // Relative to max(1, |f|): the fit of a large dataset cannot push the
  // absolute gradient below the roundoff noise of its own log-likelihood.
  double gradient_tolerance = 1e-6;
  double gradient_step = 6e-6;  // relative central-difference step
};

struct MaximizeResult {
  Eigen::VectorXd x;
  double fmax = -std::numeric_limits<double>::infinity();
  bool converged = false;
  int iterations = 0;
  long num_evaluations = 0;
  double gradient_norm = 0.0;  // scaled inf-norm at the returned point
  std::string message;
};

namespace detail {

/// Central-difference gradient. Stencil points where f is non-finite get the
/// step shrunk, then fall back to a one-sided difference; a coordinate with
/// no finite stencil at all contributes zero.
template <class F>
Eigen::VectorXd numeric_gradient(F&& f, const Eigen::VectorXd& x, double f0,
                                 double rel_step, long& evals) {
  const auto n = x.size();
  Eigen::VectorXd g(n);
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < n; ++i) {
    double h = rel_step * std::max(1.0, std::abs(x[i]));
    double fp = 0.0, fm = 0.0;
    bool ok = false;
    for (int attempt = 0; attempt < 4 && !ok; ++attempt, h *= 0.1) {
      xp[i] = x[i] + h;
      fp = f(xp);
      xp[i] = x[i] - h;
      fm = f(xp);
      evals += 2;
      ok = std::isfinite(fp) && std::isfinite(fm);
    }
    h *= 10.0;  // undo the last shrink
    if (ok) {
      g[i] = (fp - fm) / (2.0 * h);
    } else if (std::isfinite(fp)) {
      g[i] = (fp - f0) / h;
    } else if (std::isfinite(fm)) {
      g[i] = (f0 - fm) / h;
    } else {
      g[i] = 0.0;
    }
    xp[i] = x[i];
  }
  return g;
}

}  // namespace detail

/// BFGS line-search maximizer with numeric gradients. Convergence is declared
/// when the gradient inf-norm drops below gradient_tolerance * max(1, |f|).
template <class F>
MaximizeResult maximize_bfgs(F&& f, const Eigen::VectorXd& x0,
                             const MaximizeOptions& opt = {}) {
  const auto n = x0.size();
  MaximizeResult res;
  res.x = x0;
  res.fmax = f(x0);
  res.num_evaluations = 1;
  if (!std::isfinite(res.fmax)) {
    res.message = "objective not finite at the start point";
    return res;
  }

  Eigen::VectorXd x = x0;
  double fx = res.fmax;
  Eigen::VectorXd g = detail::numeric_gradient(f, x, fx, opt.gradient_step,
                                               res.num_evaluations);
  Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(n, n);
  bool h_is_identity = true;
  int stagnant = 0;

  auto scaled_norm = [&](const Eigen::VectorXd& grad, double fval) {
    return grad.template lpNorm<Eigen::Infinity>() /
           std::max(1.0, std::abs(fval));
  };

  for (int it = 0; it < opt.max_iterations; ++it) {
    res.iterations = it;
    res.gradient_norm = scaled_norm(g, fx);
    if (res.gradient_norm <= opt.gradient_tolerance) {
      res.converged = true;
      break;
    }

    Eigen::VectorXd dir = h_inv * g;  // ascent direction
    double slope = g.dot(dir);
    if (!(slope > 0.0) || !dir.allFinite()) {
      h_inv.setIdentity();
      h_is_identity = true;
      dir = g;
      slope = g.squaredNorm();
    }

    // backtracking Armijo line search
    double alpha = 1.0;
    double fnew = fx;
    Eigen::VectorXd xnew = x;
    bool accepted = false;
    for (int ls = 0; ls < 50; ++ls) {
      xnew = x + alpha * dir;
      fnew = f(xnew);
      ++res.num_evaluations;
      if (std::isfinite(fnew) && fnew >= fx + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (!h_is_identity) {  // drop the stale curvature model and retry
        h_inv.setIdentity();
        h_is_identity = true;
        continue;
      }
      res.message = "line search stalled";
      break;
    }

    Eigen::VectorXd gnew = detail::numeric_gradient(
        f, xnew, fnew, opt.gradient_step, res.num_evaluations);
    const Eigen::VectorXd s = xnew - x;
    const Eigen::VectorXd y = g - gnew;  // gradient change of the negated problem
    const double ys = y.dot(s);
    if (ys > 1e-12 * y.norm() * s.norm()) {
      const double rho = 1.0 / ys;
      const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
      const Eigen::MatrixXd left = eye - rho * s * y.transpose();
      h_inv = left * h_inv * left.transpose() + rho * s * s.transpose();
      h_is_identity = false;
    } else {
      h_inv.setIdentity();
      h_is_identity = true;
    }

    if (fnew - fx < 1e-12 * (1.0 + std::abs(fx))) {
      if (++stagnant >= 3) {
        x = xnew;
        fx = fnew;
        g = gnew;
        res.message = "objective stagnated";
        break;
      }
    } else {
      stagnant = 0;
    }
    x = xnew;
    fx = fnew;
    g = gnew;
  }

  res.x = x;
  res.fmax = fx;
  res.gradient_norm = scaled_norm(g, fx);
  if (res.gradient_norm <= opt.gradient_tolerance) res.converged = true;
  return res;
}

/// Central second-difference Hessian, symmetrized as (H + H^T)/2. Step per
/// coordinate is `rel_step * |x_i|` floored at 1e-6. A non-finite objective
/// value anywhere on the stencil is an error naming the coordinate pair.
template <class F>
Eigen::MatrixXd numerical_hessian(F&& f, const Eigen::VectorXd& at,
                                  double rel_step = 1e-4) {
  const auto n = at.size();
  Eigen::VectorXd h(n);
  for (Eigen::Index i = 0; i < n; ++i)
    h[i] = std::max(rel_step * std::abs(at[i]), 1e-6);

  const double f0 = f(at);
  auto checked = [&](const Eigen::VectorXd& p, Eigen::Index i,
                     Eigen::Index j) {
    const double v = f(p);
    if (!std::isfinite(v))
      throw NumericError("numerical_hessian: non-finite value on stencil (" +
                         std::to_string(i) + "," + std::to_string(j) + ")");
    return v;
  };
  if (!std::isfinite(f0))
    throw NumericError("numerical_hessian: non-finite value at the center");

  Eigen::MatrixXd hess(n, n);
  Eigen::VectorXd p = at;
  for (Eigen::Index i = 0; i < n; ++i) {
    p[i] = at[i] + h[i];
    const double fp = checked(p, i, i);
    p[i] = at[i] - h[i];
    const double fm = checked(p, i, i);
    p[i] = at[i];
    hess(i, i) = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      p[i] = at[i] + h[i];
      p[j] = at[j] + h[j];
      const double fpp = checked(p, i, j);
      p[j] = at[j] - h[j];
      const double fpm = checked(p, i, j);
      p[i] = at[i] - h[i];
      p[j] = at[j] + h[j];
      const double fmp = checked(p, i, j);
      p[j] = at[j] - h[j];
      const double fmm = checked(p, i, j);
      p[i] = at[i];
      p[j] = at[j];
      const double val = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
      hess(i, j) = val;
      hess(j, i) = val;
    }
  }
  return 0.5 * (hess + hess.transpose());
}

}  // namespace defsurv
