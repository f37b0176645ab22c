#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "defsurv/data.hpp"
#include "defsurv/distributions.hpp"
#include "defsurv/errors.hpp"
#include "defsurv/likelihood.hpp"
#include "defsurv/normal.hpp"
#include "defsurv/optimize.hpp"
#include "defsurv/rng.hpp"

namespace defsurv {

struct FitConfig {
  Family family = Family::gompertz;
  LinkedParams initial_params;
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;  // relative, see MaximizeOptions
  double hessian_step = 1e-4;        // relative finite-difference step
  std::vector<double> confidence_levels = {0.05, 0.10};
  int multistart_count = 5;
  std::uint64_t multistart_seed = 0x5eedcafefeedbeefULL;
  double multistart_spread = 0.25;  // sd of the start-point perturbations
};

struct WaldInterval {
  double lower = 0.0;
  double upper = 0.0;
  bool valid = false;  // false when the variance estimate was unusable
};

struct ConfidenceSet {
  double alpha = 0.05;
  std::vector<WaldInterval> intervals;  // one per packed coefficient
};

struct FitResult {
  LinkedParams mle;
  double loglik = 0.0;
  Eigen::MatrixXd covariance;       // indexed by the packed order
  std::vector<double> std_errors;   // NaN where the variance was invalid
  std::vector<ConfidenceSet> confidence_intervals;
  bool converged = false;
  long num_evaluations = 0;
  std::size_t degenerate_term_count = 0;
  double gradient_norm = 0.0;
  int pseudo_inverted_count = 0;  // near-null Hessian directions
  std::vector<std::string> warnings;
};

/// z_{alpha/2} two-sided Wald intervals around each coefficient. A negative
/// variance yields an invalid (absent-bounds) interval for that coefficient
/// only; a zero variance degenerates to the point itself.
inline std::vector<WaldInterval> wald_intervals(
    const std::vector<double>& mle, const Eigen::MatrixXd& cov, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ConfigError("wald_intervals: alpha must lie in (0,1)");
  if (cov.rows() != static_cast<Eigen::Index>(mle.size()) ||
      cov.cols() != cov.rows())
    throw ConfigError("wald_intervals: covariance shape mismatch");
  const double z = std_normal_quantile(1.0 - alpha / 2.0);
  std::vector<WaldInterval> out(mle.size());
  for (std::size_t i = 0; i < mle.size(); ++i) {
    const double var = cov(i, i);
    if (!std::isfinite(var) || var < 0.0) continue;  // flagged invalid
    const double half = z * std::sqrt(var);
    out[i] = {mle[i] - half, mle[i] + half, true};
  }
  return out;
}

struct CureFractions {
  double overall = 0.0;
  std::vector<double> per_cause;
};

/// Cure fractions at covariate profile x: per cause from the family's
/// survival limit, overall as their product. Any cause with a_j(x) >= 0 has
/// no cure fraction and raises NotDefectiveError naming it.
inline CureFractions cure_fractions(Family family, const LinkedParams& lp,
                                    std::span<const double> x) {
  CureFractions out;
  out.overall = 1.0;
  for (int j = 1; j <= lp.num_causes(); ++j) {
    const LinkValue lv = link_eval(lp, j, x);
    if (!(lv.shape < 0.0))
      throw NotDefectiveError("cure_fractions: cause " + std::to_string(j) +
                              " has non-negative shape " +
                              std::to_string(lv.shape) + " at this profile");
    const double pj = family_cure(family, lv.shape, lv.scale);
    out.per_cause.push_back(pj);
    out.overall *= pj;
  }
  return out;
}

struct InformationCriteria {
  double aic = 0.0;
  double bic = 0.0;
  double caic = 0.0;
};

inline InformationCriteria information_criteria(double loglik, int k_params,
                                                std::size_t n) {
  if (n < 1 || k_params < 1)
    throw ConfigError("information_criteria: need n >= 1 and k_params >= 1");
  const double log_n = std::log(static_cast<double>(n));
  InformationCriteria ic;
  ic.aic = -2.0 * loglik + 2.0 * k_params;
  ic.bic = -2.0 * loglik + k_params * log_n;
  ic.caic = -2.0 * loglik + k_params * (log_n + 1.0);
  return ic;
}

namespace detail {

/// Pseudo-inverse of the negated Hessian via symmetric eigendecomposition.
/// Eigenvalues below 1e-10 of the largest magnitude are dropped (counted in
/// `pseudo_count`); negative directions are inverted with their sign so the
/// corresponding variances surface as invalid intervals downstream.
inline Eigen::MatrixXd invert_information(const Eigen::MatrixXd& neg_hessian,
                                          int& pseudo_count) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(neg_hessian);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double cutoff = 1e-10 * ev.cwiseAbs().maxCoeff();
  Eigen::VectorXd inv(ev.size());
  pseudo_count = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (std::abs(ev[i]) < cutoff || ev[i] == 0.0) {
      inv[i] = 0.0;
      ++pseudo_count;
    } else {
      inv[i] = 1.0 / ev[i];
    }
  }
  Eigen::MatrixXd cov =
      es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (cov + cov.transpose());
}

}  // namespace detail

/// Maximum-likelihood fit of the defective regression model.
///
/// Maximizes the interval-censored competing-risks log-likelihood over the
/// packed coefficient vector (gamma_1, beta_1, gamma_2, beta_2, ...), from
/// the configured start point plus multistart_count-1 perturbed restarts, and
/// derives the covariance from the numeric Hessian at the best point.
/// Throws ConfigError for invalid datasets or dimension mismatches and
/// NumericError when the likelihood is not finite at the configured start.
/// Non-convergence is reported through FitResult::converged, with the best
/// point found still fully summarized.
inline FitResult fit_mle(const CompetingRisksDataset& ds,
                         const FitConfig& cfg) {
  const auto violations = validate_dataset(ds);
  if (!violations.empty())
    throw ConfigError("fit_mle: invalid dataset: " + violations.front() +
                      (violations.size() > 1
                           ? " (+" + std::to_string(violations.size() - 1) +
                                 " more)"
                           : ""));
  if (!cfg.initial_params.consistent())
    throw ConfigError("fit_mle: inconsistent initial params");
  if (cfg.initial_params.num_causes() != ds.num_causes ||
      cfg.initial_params.num_covariates() != ds.num_covariates)
    throw ConfigError("fit_mle: initial params do not match dataset shape");
  if (cfg.multistart_count < 1)
    throw ConfigError("fit_mle: multistart_count must be >= 1");
  if (!(cfg.gradient_tolerance > 0.0) || !(cfg.hessian_step > 0.0))
    throw ConfigError("fit_mle: tolerances must be positive");

  const int k = ds.num_causes;
  const int p = ds.num_covariates;
  const Family family = cfg.family;

  long objective_evals = 0;
  auto objective = [&](const Eigen::VectorXd& v) -> double {
    ++objective_evals;
    try {
      const auto lp = LinkedParams::from_packed(
          family, k, p, std::span<const double>(v.data(), v.size()));
      return dataset_log_likelihood(family, lp, ds).loglik;
    } catch (const NumericError&) {
      return -kInf;
    }
  };

  const std::vector<double> start0 = cfg.initial_params.packed();
  Eigen::VectorXd x0 =
      Eigen::Map<const Eigen::VectorXd>(start0.data(), start0.size());
  if (!std::isfinite(objective(x0)))
    throw NumericError(
        "fit_mle: log-likelihood not finite at the initial point");

  MaximizeOptions mopt;
  mopt.max_iterations = cfg.max_iterations;
  mopt.gradient_tolerance = cfg.gradient_tolerance;

  FitResult out;
  MaximizeResult best;
  bool have_best = false;
  Rng rng(cfg.multistart_seed);
  for (int s = 0; s < cfg.multistart_count; ++s) {
    Eigen::VectorXd start = x0;
    if (s > 0) {
      for (int attempt = 0; attempt < 20; ++attempt) {
        for (Eigen::Index i = 0; i < start.size(); ++i)
          start[i] = x0[i] + cfg.multistart_spread * rng.normal();
        if (std::isfinite(objective(start))) break;
        if (attempt == 19) {
          out.warnings.push_back("multistart " + std::to_string(s) +
                                 ": no finite start found, skipped");
          start = x0;
        }
      }
    }
    MaximizeResult r = maximize_bfgs(objective, start, mopt);
    if (!have_best || r.fmax > best.fmax ||
        (r.fmax == best.fmax && r.converged && !best.converged)) {
      best = std::move(r);
      have_best = true;
    }
  }

  out.mle = LinkedParams::from_packed(
      family, k, p, std::span<const double>(best.x.data(), best.x.size()));
  const LikelihoodValue lv = dataset_log_likelihood(family, out.mle, ds);
  out.loglik = lv.loglik;
  out.degenerate_term_count = lv.num_degenerate_terms;
  out.converged = best.converged;
  out.gradient_norm = best.gradient_norm;
  out.num_evaluations = objective_evals;
  if (!best.converged)
    out.warnings.push_back("optimizer did not converge: " + best.message);

  const Eigen::Index dim = best.x.size();
  out.covariance = Eigen::MatrixXd::Zero(dim, dim);
  try {
    const Eigen::MatrixXd hess =
        numerical_hessian(objective, best.x, cfg.hessian_step);
    if (hess.cwiseAbs().maxCoeff() < 1e-8 * static_cast<double>(ds.size()))
      out.warnings.push_back(
          "information matrix is nearly zero; the estimates sit on a "
          "likelihood plateau");
    out.covariance =
        detail::invert_information(-hess, out.pseudo_inverted_count);
    if (out.pseudo_inverted_count > 0)
      out.warnings.push_back(
          std::to_string(out.pseudo_inverted_count) +
          " near-null information directions pseudo-inverted");
  } catch (const NumericError& e) {
    out.warnings.push_back(std::string("hessian failed: ") + e.what());
    out.covariance.setConstant(std::numeric_limits<double>::quiet_NaN());
  }

  out.std_errors.resize(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const double var = out.covariance(i, i);
    out.std_errors[i] = (std::isfinite(var) && var >= 0.0)
                            ? std::sqrt(var)
                            : std::numeric_limits<double>::quiet_NaN();
  }

  std::vector<double> mle_packed = out.mle.packed();
  for (double alpha : cfg.confidence_levels)
    out.confidence_intervals.push_back(
        {alpha, wald_intervals(mle_packed, out.covariance, alpha)});

  // post-hoc defectiveness check at the covariate mean
  if (!ds.observations.empty()) {
    std::vector<double> mean_x(p, 0.0);
    for (const auto& obs : ds.observations)
      for (int i = 0; i < p; ++i) mean_x[i] += obs.covariates[i];
    for (int i = 0; i < p; ++i) mean_x[i] /= static_cast<double>(ds.size());
    for (int j = 1; j <= k; ++j) {
      const LinkValue at_mean = link_eval(out.mle, j, mean_x);
      if (at_mean.shape >= 0.0)
        out.warnings.push_back(
            "cause " + std::to_string(j) +
            ": fitted shape is non-negative at the covariate mean (" +
            std::to_string(at_mean.shape) + "); no cure fraction there");
      if (at_mean.scale < 1e-8)
        out.warnings.push_back(
            "cause " + std::to_string(j) +
            ": fitted scale is at the zero boundary; the cure fraction is "
            "not identifiable");
    }
  }
  return out;
}

/// Number of free coefficients of a k-cause model with p covariates.
inline int packed_param_count(int k, int p) { return 2 * k * (p + 1); }

/// Names for the packed coefficient order, e.g. gamma01 = intercept shape
/// coefficient of cause 1, beta21 = x2 scale coefficient of cause 1.
inline std::vector<std::string> packed_param_names(int k, int p) {
  std::vector<std::string> names;
  for (int j = 1; j <= k; ++j) {
    for (int i = 0; i <= p; ++i)
      names.push_back("gamma" + std::to_string(i) + std::to_string(j));
    for (int i = 0; i <= p; ++i)
      names.push_back("beta" + std::to_string(i) + std::to_string(j));
  }
  return names;
}

}  // namespace defsurv
