#pragma once

#include <cmath>
#include <cstddef>

#include "defsurv/data.hpp"
#include "defsurv/distributions.hpp"
#include "defsurv/errors.hpp"

namespace defsurv {

/// Smallest per-observation probability admitted before the log; terms at or
/// below the floor are clamped to log(kProbFloor) and counted as degenerate.
inline constexpr double kProbFloor = 1e-300;

inline const double kLogProbFloor = std::log(1e-300);

struct LikelihoodValue {
  double loglik = 0.0;                    // finite or -inf, never NaN
  std::size_t num_degenerate_terms = 0;   // contributions clamped at the floor
};

namespace detail {

/// log(S(U) - S(V)) for the Gompertz family, computed in log space:
/// gV + log(expm1(gU - gV)) with gU = log S(U) >= gV = log S(V).
inline double gompertz_interval_log_prob(const GompertzParams& p, double u,
                                         double v) {
  const double gu = gompertz_log_survival(p, u);
  const double gv = gompertz_log_survival(p, v);
  if (std::isinf(gv)) return gu;  // S(V) = 0
  const double gap = gu - gv;
  if (gap <= 0.0) return -kInf;   // zero-width or inverted beyond roundoff
  return gv + std::log(std::expm1(gap));
}

struct FlooredLog {
  double value;
  bool floored;
};

inline FlooredLog floor_log(double log_p) {
  if (std::isnan(log_p) || log_p <= kLogProbFloor)
    return {kLogProbFloor, true};
  return {log_p, false};
}

}  // namespace detail

/// Log-likelihood contribution of a single observation.
///
/// Event at cause j: log(S_j(U) - S_j(V)) at that cause's linked parameters.
/// Censored: sum over causes of log S_j(U). Each factor is floored at
/// log(1e-300); `degenerate` (when given) is incremented per floored factor.
inline double obs_log_likelihood(Family family, const LinkedParams& lp,
                                 const IntervalObservation& obs,
                                 std::size_t* degenerate = nullptr) {
  auto count = [&degenerate](bool floored) {
    if (floored && degenerate) ++*degenerate;
  };
  const std::span<const double> x(obs.covariates);
  if (obs.cause >= 1) {
    const LinkValue lv = link_eval(lp, obs.cause, x);
    double lp_obs;
    if (family == Family::gompertz) {
      lp_obs = detail::gompertz_interval_log_prob({lv.shape, lv.scale},
                                                  obs.left, obs.right);
    } else {
      lp_obs = std::log(
          ig_interval_prob({lv.shape, lv.scale}, obs.left, obs.right));
    }
    const auto fl = detail::floor_log(lp_obs);
    count(fl.floored);
    return fl.value;
  }
  // censored: every cause survives past U
  double total = 0.0;
  for (int j = 1; j <= lp.num_causes(); ++j) {
    const LinkValue lv = link_eval(lp, j, x);
    const auto fl = detail::floor_log(
        family_log_survival(family, lv.shape, lv.scale, obs.left));
    count(fl.floored);
    total += fl.value;
  }
  return total;
}

/// Sum of per-observation contributions with Kahan compensation, so the
/// value is stable under permutations of the dataset.
inline LikelihoodValue dataset_log_likelihood(Family family,
                                              const LinkedParams& lp,
                                              const CompetingRisksDataset& ds) {
  if (!lp.consistent())
    throw ConfigError("dataset_log_likelihood: inconsistent linked params");
  if (lp.num_causes() != ds.num_causes)
    throw ConfigError("dataset_log_likelihood: params have " +
                      std::to_string(lp.num_causes()) + " causes, dataset " +
                      std::to_string(ds.num_causes));
  if (lp.num_covariates() != ds.num_covariates)
    throw ConfigError("dataset_log_likelihood: params have p=" +
                      std::to_string(lp.num_covariates()) + ", dataset p=" +
                      std::to_string(ds.num_covariates));
  LikelihoodValue out;
  double sum = 0.0, comp = 0.0;
  for (const auto& obs : ds.observations) {
    const double term =
        obs_log_likelihood(family, lp, obs, &out.num_degenerate_terms);
    const double y = term - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  out.loglik = sum;
  return out;
}

}  // namespace defsurv
