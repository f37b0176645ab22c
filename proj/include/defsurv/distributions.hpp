#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "defsurv/data.hpp"
#include "defsurv/errors.hpp"
#include "defsurv/normal.hpp"

namespace defsurv {

enum class Family { gompertz, inverse_gaussian };

inline const char* family_name(Family f) {
  return f == Family::gompertz ? "gompertz" : "inverse-gaussian";
}

/// Gompertz parameters; the distribution is defective (total probability
/// below one) exactly when the shape is negative.
struct GompertzParams {
  double shape = 0.0;
  double scale = 1.0;
  bool is_defective() const { return shape < 0.0; }
};

struct InverseGaussianParams {
  double shape = 0.0;
  double scale = 1.0;
  bool is_defective() const { return shape < 0.0; }
};

// ---------------------------------------------------------------------------
// Gompertz
// ---------------------------------------------------------------------------

/// log S(t) = -(b/a)(e^{at} - 1). expm1 keeps the a -> 0 limit exact, where
/// the exponent degenerates to -b t; t = +inf is handled by expm1(-inf) = -1.
inline double gompertz_log_survival(const GompertzParams& p, double t) {
  if (p.shape == 0.0) return -p.scale * t;
  return -(p.scale / p.shape) * std::expm1(p.shape * t);
}

inline double gompertz_survival(const GompertzParams& p, double t) {
  return std::exp(gompertz_log_survival(p, t));
}

/// Cure fraction e^{b/a}, the t -> inf limit of the survival function.
/// Defined only in the defective regime a < 0.
inline double gompertz_cure(const GompertzParams& p) {
  if (!(p.shape < 0.0))
    throw NotDefectiveError(
        "gompertz_cure: shape must be negative (got " +
        std::to_string(p.shape) + ")");
  return std::exp(p.scale / p.shape);
}

/// Inverse of F(t) = u (1 - cure): the event time of a subject that is
/// susceptible, at conditional probability level u in (0,1). Closed form
/// from solving S(t) = 1 - u (1 - e^{b/a}).
inline double gompertz_conditional_quantile(const GompertzParams& p,
                                            double u) {
  if (!(u > 0.0 && u < 1.0))
    throw NumericError("gompertz_conditional_quantile: u must lie in (0,1)");
  if (!(p.shape < 0.0))
    throw NotDefectiveError(
        "gompertz_conditional_quantile: shape must be negative");
  const double cure = std::exp(p.scale / p.shape);
  const double log_target = std::log1p(-u * (1.0 - cure));  // log S(t)
  return (1.0 / p.shape) *
         std::log1p(-(p.shape / p.scale) * log_target);
}

// ---------------------------------------------------------------------------
// Inverse Gaussian
// ---------------------------------------------------------------------------

/// S(t) = 1 - [Phi((-1+at)/sqrt(bt)) + e^{2a/b} Phi((-1-at)/sqrt(bt))].
/// Clamped to [0,1] after evaluation; roundoff may leave it a hair outside.
inline double ig_survival(const InverseGaussianParams& p, double t) {
  if (t <= 0.0) return 1.0;
  if (std::isinf(t))
    return p.shape < 0.0 ? -std::expm1(2.0 * p.shape / p.scale) : 0.0;
  const double s = std::sqrt(p.scale * t);
  const double f = std_normal_cdf((-1.0 + p.shape * t) / s) +
                   std::exp(2.0 * p.shape / p.scale) *
                       std_normal_cdf((-1.0 - p.shape * t) / s);
  const double surv = 1.0 - f;
  if (surv < 0.0) return 0.0;
  if (surv > 1.0) return 1.0;
  return surv;
}

/// Cure fraction 1 - e^{2a/b} for the defective regime a < 0.
inline double ig_cure(const InverseGaussianParams& p) {
  if (!(p.shape < 0.0))
    throw NotDefectiveError("ig_cure: shape must be negative (got " +
                            std::to_string(p.shape) + ")");
  return -std::expm1(2.0 * p.shape / p.scale);
}

/// Interval probability S(U) - S(V) with the Phi terms grouped per tail
/// before subtraction; the direct difference of two survival values loses
/// most digits once the interval is narrow.
inline double ig_interval_prob(const InverseGaussianParams& p, double u,
                               double v) {
  const double su = ig_survival(p, u);
  if (std::isinf(v)) {
    const double d = su - ig_survival(p, v);
    return d > 0.0 ? d : 0.0;
  }
  auto zp = [&](double t) { return (-1.0 + p.shape * t) / std::sqrt(p.scale * t); };
  auto zm = [&](double t) { return (-1.0 - p.shape * t) / std::sqrt(p.scale * t); };
  const double w = std::exp(2.0 * p.shape / p.scale);
  double d;
  if (u <= 0.0) {
    d = std_normal_cdf(zp(v)) + w * std_normal_cdf(zm(v));
  } else {
    d = std_normal_cdf_diff_signed(zp(u), zp(v)) +
        w * std_normal_cdf_diff_signed(zm(u), zm(v));
  }
  if (d < 0.0) return 0.0;
  const double cap = su;  // cannot exceed the mass still alive at U
  return d > cap ? cap : d;
}

/// Numeric inverse of F(t) = u (1 - cure): doubling bracket then bisection on
/// the monotone survival function until |S(t) - target| <= 1e-9.
inline double ig_conditional_quantile(const InverseGaussianParams& p,
                                      double u) {
  if (!(u > 0.0 && u < 1.0))
    throw NumericError("ig_conditional_quantile: u must lie in (0,1)");
  if (!(p.shape < 0.0))
    throw NotDefectiveError("ig_conditional_quantile: shape must be negative");
  const double cure = ig_cure(p);
  const double target = 1.0 - u * (1.0 - cure);
  constexpr double kTol = 1e-9;
  constexpr int kMaxIter = 200;

  double lo = 1e-12, hi = 1.0;
  int it = 0;
  while (ig_survival(p, hi) > target) {
    lo = hi;
    hi *= 2.0;
    if (++it > kMaxIter)
      throw NumericError("ig_conditional_quantile: bracketing failed at t=" +
                         std::to_string(hi));
  }
  double mid = hi, resid = 0.0;
  for (it = 0; it < kMaxIter; ++it) {
    mid = 0.5 * (lo + hi);
    const double s = ig_survival(p, mid);
    resid = s - target;
    if (std::abs(resid) <= kTol) return mid;
    if (resid > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  throw NumericError("ig_conditional_quantile: no convergence, residual " +
                     std::to_string(resid));
}

// ---------------------------------------------------------------------------
// Family dispatch and covariate links
// ---------------------------------------------------------------------------

inline double family_log_survival(Family f, double shape, double scale,
                                  double t) {
  if (f == Family::gompertz)
    return gompertz_log_survival({shape, scale}, t);
  const double s = ig_survival({shape, scale}, t);
  return std::log(s);
}

inline double family_survival(Family f, double shape, double scale, double t) {
  return f == Family::gompertz ? gompertz_survival({shape, scale}, t)
                               : ig_survival({shape, scale}, t);
}

inline double family_cure(Family f, double shape, double scale) {
  return f == Family::gompertz ? gompertz_cure({shape, scale})
                               : ig_cure({shape, scale});
}

inline double family_conditional_quantile(Family f, double shape, double scale,
                                          double u) {
  return f == Family::gompertz
             ? gompertz_conditional_quantile({shape, scale}, u)
             : ig_conditional_quantile({shape, scale}, u);
}

/// Per-cause regression coefficients. For cause j, the shape follows the
/// identity link a_j(x) = (1,x)·gamma_j and the scale the log link
/// b_j(x) = exp((1,x)·beta_j); both vectors have length p+1, intercept first.
struct LinkedParams {
  Family family = Family::gompertz;
  std::vector<std::vector<double>> gamma;  // k vectors of length p+1
  std::vector<std::vector<double>> beta;   // k vectors of length p+1

  int num_causes() const { return static_cast<int>(gamma.size()); }
  int num_covariates() const {
    return gamma.empty() ? 0 : static_cast<int>(gamma.front().size()) - 1;
  }

  /// Flat coefficient vector in the order (gamma_1, beta_1, gamma_2, beta_2,
  /// ...); this packing fixes the covariance-matrix indexing.
  std::vector<double> packed() const {
    std::vector<double> v;
    v.reserve(gamma.size() * 2 * (num_covariates() + 1));
    for (std::size_t j = 0; j < gamma.size(); ++j) {
      v.insert(v.end(), gamma[j].begin(), gamma[j].end());
      v.insert(v.end(), beta[j].begin(), beta[j].end());
    }
    return v;
  }

  static LinkedParams from_packed(Family f, int k, int p,
                                  std::span<const double> v) {
    const std::size_t m = static_cast<std::size_t>(p) + 1;
    if (v.size() != static_cast<std::size_t>(k) * 2 * m)
      throw ConfigError("from_packed: expected " +
                        std::to_string(k * 2 * m) + " coefficients, got " +
                        std::to_string(v.size()));
    LinkedParams lp;
    lp.family = f;
    lp.gamma.resize(k);
    lp.beta.resize(k);
    std::size_t at = 0;
    for (int j = 0; j < k; ++j) {
      lp.gamma[j].assign(v.begin() + at, v.begin() + at + m);
      at += m;
      lp.beta[j].assign(v.begin() + at, v.begin() + at + m);
      at += m;
    }
    return lp;
  }

  bool consistent() const {
    if (gamma.empty() || gamma.size() != beta.size()) return false;
    const std::size_t m = gamma.front().size();
    if (m < 1) return false;
    for (std::size_t j = 0; j < gamma.size(); ++j)
      if (gamma[j].size() != m || beta[j].size() != m) return false;
    return true;
  }
};

struct LinkValue {
  double shape;
  double scale;
};

/// Evaluates the shape and scale for cause j (1-based, matching cause
/// labels) at covariate vector x of length p.
inline LinkValue link_eval(const LinkedParams& lp, int cause,
                           std::span<const double> x) {
  if (cause < 1 || cause > lp.num_causes())
    throw ConfigError("link_eval: cause " + std::to_string(cause) +
                      " out of range 1.." + std::to_string(lp.num_causes()));
  if (static_cast<int>(x.size()) != lp.num_covariates())
    throw ConfigError("link_eval: covariate vector length " +
                      std::to_string(x.size()) + " differs from p=" +
                      std::to_string(lp.num_covariates()));
  const double a = intercept_dot(lp.gamma[cause - 1], x);
  const double eta = intercept_dot(lp.beta[cause - 1], x);
  const double b = std::exp(eta);
  if (!std::isfinite(a) || !std::isfinite(b) || b <= 0.0)
    throw NumericError("link_eval: non-finite parameter for cause " +
                       std::to_string(cause) + " (linear predictor " +
                       std::to_string(eta) + ")");
  return {a, b};
}

}  // namespace defsurv
