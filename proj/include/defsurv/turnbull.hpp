#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "defsurv/data.hpp"
#include "defsurv/errors.hpp"

namespace defsurv {

/// Nonparametric MLE of a survival curve under interval censoring: disjoint
/// ordered support intervals (q_l, p_l] (p_l may be +inf) and the probability
/// mass each carries. Mass on an infinite interval never falls at a finite
/// time and shows up as the terminal plateau of the curve.
struct TurnbullEstimate {
  std::vector<std::pair<double, double>> support;
  std::vector<double> masses;
  int iterations = 0;
  double final_change = 0.0;
  bool converged = false;
  std::vector<double> loglik_trace;  // after each self-consistency sweep
};

namespace detail {

/// Turnbull's innermost intervals of a family of (L, R] observations: the
/// left/right endpoint sweep emits (L, R] whenever a right endpoint directly
/// follows a left endpoint. At equal values a right endpoint sorts first,
/// which keeps touching half-open intervals like (0,1], (1,2] separate.
inline std::vector<std::pair<double, double>> innermost_intervals(
    const std::vector<std::pair<double, double>>& intervals) {
  struct Endpoint {
    double value;
    bool is_left;
  };
  std::vector<Endpoint> pts;
  pts.reserve(2 * intervals.size());
  for (const auto& [l, r] : intervals) {
    pts.push_back({l, true});
    pts.push_back({r, false});
  }
  std::sort(pts.begin(), pts.end(), [](const Endpoint& a, const Endpoint& b) {
    if (a.value != b.value) return a.value < b.value;
    return !a.is_left && b.is_left;  // right endpoints first on ties
  });
  std::vector<std::pair<double, double>> out;
  double pending_left = 0.0;
  bool have_left = false;
  for (const auto& pt : pts) {
    if (pt.is_left) {
      pending_left = pt.value;
      have_left = true;
    } else if (have_left) {
      out.emplace_back(pending_left, pt.value);
      have_left = false;
    }
  }
  return out;
}

}  // namespace detail

/// Self-consistency (EM) fit of the Turnbull NPMLE. Observations are (L, R]
/// with R = +inf for right censoring. Starts from uniform masses over the
/// innermost intervals and iterates until the largest mass update drops
/// below `tol`; zero-mass intervals are retained so the support is a
/// deterministic function of the data.
inline TurnbullEstimate turnbull_fit(
    const std::vector<std::pair<double, double>>& intervals, double tol = 1e-8,
    int max_iter = 10000) {
  if (intervals.empty())
    throw ConfigError("turnbull_fit: need at least one observation");
  for (std::size_t i = 0; i < intervals.size(); ++i)
    if (!(intervals[i].first < intervals[i].second))
      throw ConfigError("turnbull_fit: interval " + std::to_string(i) +
                        " is empty (L >= R)");

  TurnbullEstimate est;
  est.support = detail::innermost_intervals(intervals);
  const std::size_t m = est.support.size();
  const std::size_t n = intervals.size();

  // membership: innermost (q,p] lies inside observation (L,R] iff q>=L, p<=R
  std::vector<std::vector<std::uint32_t>> members(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < m; ++l)
      if (est.support[l].first >= intervals[i].first &&
          est.support[l].second <= intervals[i].second)
        members[i].push_back(static_cast<std::uint32_t>(l));
    if (members[i].empty())
      throw NumericError("turnbull_fit: observation " + std::to_string(i) +
                         " covers no innermost interval");
  }

  est.masses.assign(m, 1.0 / static_cast<double>(m));
  std::vector<double> next(m);
  for (int it = 0; it < max_iter; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    double loglik = 0.0;  // at the masses entering this sweep
    for (std::size_t i = 0; i < n; ++i) {
      double denom = 0.0;
      for (auto l : members[i]) denom += est.masses[l];
      loglik += std::log(denom);
      for (auto l : members[i]) next[l] += est.masses[l] / denom;
    }
    est.loglik_trace.push_back(loglik);
    double change = 0.0;
    for (std::size_t l = 0; l < m; ++l) {
      next[l] /= static_cast<double>(n);
      change = std::max(change, std::abs(next[l] - est.masses[l]));
    }
    est.masses.swap(next);
    est.iterations = it + 1;
    est.final_change = change;
    if (change < tol) {
      est.converged = true;
      break;
    }
  }
  return est;
}

/// Right-continuous step survival value: mass attached to a finite support
/// interval falls at its right endpoint. Strictly inside a support interval
/// the NPMLE is not unique; the reported value is the right-endpoint value
/// (see `survival_ambiguous_at`).
inline double survival_at(const TurnbullEstimate& est, double t) {
  double fallen = 0.0;
  for (std::size_t l = 0; l < est.support.size(); ++l) {
    const auto& [q, p] = est.support[l];
    if (!std::isfinite(p)) continue;  // plateau mass never falls
    if (p <= t || (t > q && t < p)) fallen += est.masses[l];
  }
  const double s = 1.0 - fallen;
  return s < 0.0 ? 0.0 : (s > 1.0 ? 1.0 : s);
}

/// True when t lies strictly inside a support interval, where any
/// non-increasing curve through the interval endpoints is an NPMLE.
inline bool survival_ambiguous_at(const TurnbullEstimate& est, double t) {
  for (const auto& [q, p] : est.support)
    if (t > q && t < p) return true;
  return false;
}

/// All-cause (L, R] intervals of a dataset for diagnostic curves; an
/// optional cause filter keeps only that cause's events and treats every
/// other subject as right-censored at its left endpoint.
inline std::vector<std::pair<double, double>> turnbull_intervals(
    const CompetingRisksDataset& ds, int cause_filter = 0) {
  std::vector<std::pair<double, double>> out;
  out.reserve(ds.size());
  for (const auto& obs : ds.observations) {
    if (cause_filter > 0 && obs.cause != cause_filter)
      out.emplace_back(obs.left, kInf);
    else
      out.emplace_back(obs.left, obs.right);
  }
  return out;
}

}  // namespace defsurv
