#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace defsurv {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// One subject of an interval-censored competing-risks study.
///
/// The event is known to lie in (left, right]; right == +inf together with
/// cause == 0 encodes right censoring at time `left`. Causes are labelled
/// 1..k, 0 means censored. Covariates exclude the intercept.
struct IntervalObservation {
  double left = 0.0;
  double right = kInf;
  int cause = 0;
  std::vector<double> covariates;
};

struct CompetingRisksDataset {
  std::vector<IntervalObservation> observations;
  int num_causes = 1;
  int num_covariates = 0;
  std::vector<std::string> covariate_names;  // empty or exactly num_covariates

  std::size_t size() const { return observations.size(); }
};

/// Builds design rows with a leading intercept: x -> (1, x1, ..., xp).
struct CovariateDesign {
  static std::vector<double> row(std::span<const double> x) {
    std::vector<double> r;
    r.reserve(x.size() + 1);
    r.push_back(1.0);
    r.insert(r.end(), x.begin(), x.end());
    return r;
  }
};

/// Dot product of a coefficient vector (length p+1, intercept first) with a
/// covariate vector of length p.
inline double intercept_dot(std::span<const double> coef,
                            std::span<const double> x) {
  double s = coef[0];
  for (std::size_t i = 0; i < x.size(); ++i) s += coef[i + 1] * x[i];
  return s;
}

/// Checks every dataset invariant and reports violations as human-readable
/// strings naming the observation index and the rule. Empty result means the
/// dataset is valid. Diagnostic only; never throws.
inline std::vector<std::string> validate_dataset(
    const CompetingRisksDataset& ds) {
  std::vector<std::string> out;
  auto add = [&out](std::size_t i, const std::string& rule) {
    out.push_back("obs " + std::to_string(i) + ": " + rule);
  };
  if (ds.observations.empty()) out.push_back("dataset: no observations");
  if (ds.num_causes < 1) out.push_back("dataset: num_causes must be >= 1");
  if (ds.num_covariates < 0)
    out.push_back("dataset: num_covariates must be >= 0");
  if (!ds.covariate_names.empty() &&
      ds.covariate_names.size() != static_cast<std::size_t>(ds.num_covariates))
    out.push_back("dataset: covariate_names length differs from declared p");

  for (std::size_t i = 0; i < ds.observations.size(); ++i) {
    const auto& obs = ds.observations[i];
    if (std::isnan(obs.left) || obs.left < 0) add(i, "left must be >= 0");
    if (std::isnan(obs.right) || !(obs.right > obs.left))
      add(i, "right must exceed left");
    if (obs.cause < 0 || obs.cause > ds.num_causes)
      add(i, "cause exceeds num_causes (" + std::to_string(obs.cause) + " > " +
                 std::to_string(ds.num_causes) + ")");
    if (obs.cause == 0 && std::isfinite(obs.right))
      add(i, "censored must have right=+inf");
    if (obs.cause != 0 && !std::isfinite(obs.right))
      add(i, "event must have finite right");
    if (obs.covariates.size() != static_cast<std::size_t>(ds.num_covariates))
      add(i, "covariate length differs from declared p");
    for (double v : obs.covariates)
      if (!std::isfinite(v)) {
        add(i, "covariates must be finite");
        break;
      }
  }
  return out;
}

}  // namespace defsurv
