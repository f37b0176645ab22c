#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "defsurv/data.hpp"
#include "defsurv/distributions.hpp"
#include "defsurv/errors.hpp"
#include "defsurv/estimation.hpp"
#include "defsurv/rng.hpp"

namespace defsurv {

/// A two-cause scenario with the fixed covariate design X1 ~ Bernoulli(0.5),
/// X2 ~ Uniform(0,1). Inspection grids use cell width Uniform over
/// interval_len_range and a Uniform(0,1) phase. The exponential tail rate is
/// drawn once per replication from tail_rate_range; it only matters when a
/// finite lifetime must be extended past the last inspection cell, which the
/// unbounded grid below never requires.
struct SimScenario {
  Family family = Family::gompertz;
  LinkedParams true_params;  // k = 2, p = 2
  int n = 100;
  std::pair<double, double> interval_len_range{0.2, 0.7};
  int replications = 1;
  std::uint64_t rng_seed = 1;
  std::pair<double, double> tail_rate_range{0.1, 1.0};
};

inline void validate_scenario(const SimScenario& sc) {
  if (sc.n < 1) throw ConfigError("scenario: n must be >= 1");
  if (sc.replications < 1)
    throw ConfigError("scenario: replications must be >= 1");
  if (!(sc.interval_len_range.first > 0.0 &&
        sc.interval_len_range.first < sc.interval_len_range.second))
    throw ConfigError("scenario: interval_len_range must satisfy 0 < low < high");
  if (!sc.true_params.consistent() || sc.true_params.num_causes() != 2 ||
      sc.true_params.num_covariates() != 2)
    throw ConfigError("scenario: true_params must have k=2 causes and p=2");
}

/// Generated sample plus the latent state behind it, kept for debug
/// assertions (each event interval must bracket its latent time).
struct TracedSample {
  CompetingRisksDataset data;
  std::vector<double> latent_times;   // +inf for cured subjects
  std::vector<int> latent_causes;     // 0 for cured subjects
};

/// One synthetic interval-censored competing-risks sample.
///
/// Per subject: draw covariates; compute per-cause cure fractions (every
/// shape must be negative, else generation fails naming the covariates);
/// decide cured vs susceptible with probability p(x) = p1(x) p2(x); cured
/// subjects keep an infinite latent lifetime. Susceptible subjects draw the
/// cause with probability proportional to 1 - p_j(x), then the latent time
/// from that cause's conditional quantile. A censoring time Uniform(0, max
/// finite latent) turns subjects with censoring before the event into
/// right-censored rows; events are coarsened onto the subject's inspection
/// grid cell (U, V] with U < T <= V.
inline TracedSample generate_dataset_traced(const SimScenario& sc,
                                            std::uint64_t seed) {
  validate_scenario(sc);
  Rng rng(seed);
  (void)rng.uniform(sc.tail_rate_range.first, sc.tail_rate_range.second);

  const int n = sc.n;
  CompetingRisksDataset ds;
  ds.num_causes = 2;
  ds.num_covariates = 2;
  ds.covariate_names = {"x1", "x2"};
  ds.observations.resize(n);

  std::vector<double> latent(n);
  std::vector<int> cause(n, 0);
  double max_finite = 0.0;
  bool any_finite = false;
  for (int i = 0; i < n; ++i) {
    auto& obs = ds.observations[i];
    obs.covariates = {rng.bernoulli(0.5) ? 1.0 : 0.0, rng.uniform()};
    double pj[2];
    for (int j = 1; j <= 2; ++j) {
      const LinkValue lv = link_eval(sc.true_params, j, obs.covariates);
      if (!(lv.shape < 0.0))
        throw ConfigError(
            "generate_dataset: true params not defective at x=(" +
            std::to_string(obs.covariates[0]) + "," +
            std::to_string(obs.covariates[1]) + ") for cause " +
            std::to_string(j));
      pj[j - 1] = family_cure(sc.family, lv.shape, lv.scale);
    }
    const double p_cured = pj[0] * pj[1];
    if (!rng.bernoulli(1.0 - p_cured)) {
      latent[i] = kInf;
      continue;
    }
    const double w1 = (1.0 - pj[0]) / ((1.0 - pj[0]) + (1.0 - pj[1]));
    cause[i] = rng.uniform() < w1 ? 1 : 2;
    const LinkValue lv = link_eval(sc.true_params, cause[i], obs.covariates);
    latent[i] =
        family_conditional_quantile(sc.family, lv.shape, lv.scale, rng.uniform());
    if (latent[i] > max_finite) max_finite = latent[i];
    any_finite = true;
  }
  if (!any_finite) max_finite = 1.0;  // everyone cured; any censoring time works

  for (int i = 0; i < n; ++i) {
    auto& obs = ds.observations[i];
    const double censor = rng.uniform(0.0, max_finite);
    if (latent[i] > censor) {
      obs.left = censor;
      obs.right = kInf;
      obs.cause = 0;
      continue;
    }
    const double len =
        rng.uniform(sc.interval_len_range.first, sc.interval_len_range.second);
    const double phase = rng.uniform();
    double lo, hi;
    if (latent[i] <= phase) {
      lo = 0.0;
      hi = phase;
    } else {
      double cell = std::ceil((latent[i] - phase) / len);
      lo = phase + (cell - 1.0) * len;
      hi = phase + cell * len;
      if (lo >= latent[i]) {  // exact-boundary roundoff
        lo -= len;
        hi -= len;
      } else if (hi < latent[i]) {
        lo += len;
        hi += len;
      }
    }
    obs.left = lo;
    obs.right = hi;
    obs.cause = cause[i];
  }

  TracedSample out;
  out.data = std::move(ds);
  out.latent_times = std::move(latent);
  out.latent_causes = std::move(cause);
  return out;
}

inline CompetingRisksDataset generate_dataset(const SimScenario& sc,
                                              std::uint64_t seed) {
  return generate_dataset_traced(sc, seed).data;
}

struct ParamStat {
  std::string name;
  double truth = 0.0;
  double abs_bias = 0.0;  // |mean(estimate) - truth|
  double mse = 0.0;
  double cp90 = 0.0;
  double cp95 = 0.0;
};

struct CureRateStat {
  std::string label;   // p13, p14, p23, p24
  double x1 = 0.0;
  double x2 = 0.0;     // evaluation point of this stratum
  double truth = 0.0;
  double abs_bias = 0.0;
  double mse = 0.0;
};

struct MonteCarloReport {
  std::vector<ParamStat> params;       // packed order gamma_1, beta_1, ...
  std::vector<CureRateStat> cure_rates;
  int replications = 0;  // requested
  int failures = 0;      // excluded fits (exception / non-convergence)
};

/// Cure fractions at the four covariate strata the reports use: x1 in {0,1}
/// crossed with the midpoints 0.25 / 0.75 of the below- and above-median
/// halves of X2's Uniform(0,1) range.
inline std::vector<CureRateStat> stratum_cure_rates(Family family,
                                                    const LinkedParams& lp) {
  static const struct {
    const char* label;
    double x1, x2;
  } kStrata[] = {{"p13", 0.0, 0.25},
                 {"p14", 0.0, 0.75},
                 {"p23", 1.0, 0.25},
                 {"p24", 1.0, 0.75}};
  std::vector<CureRateStat> out;
  for (const auto& s : kStrata) {
    const std::vector<double> x = {s.x1, s.x2};
    CureRateStat st;
    st.label = s.label;
    st.x1 = s.x1;
    st.x2 = s.x2;
    try {
      st.truth = cure_fractions(family, lp, x).overall;
    } catch (const NotDefectiveError& e) {
      throw NotDefectiveError(std::string("stratum_cure_rates: ") + s.label +
                              ": " + e.what());
    }
    out.push_back(st);
  }
  return out;
}

/// Monte Carlo study: per replication generate a sample with seed
/// derive_seed(rng_seed, rep), fit it, and record errors and CI coverage.
/// Failed replications (exceptions, non-convergence, unusable standard
/// errors) are excluded and counted; more than 20% failures aborts the study.
/// Replications run on `threads` workers; results are aggregated in
/// replication order, so the report does not depend on the thread count.
inline MonteCarloReport run_monte_carlo(const SimScenario& sc,
                                        const FitConfig& cfg,
                                        int threads = 1) {
  validate_scenario(sc);
  const std::vector<double> truth = sc.true_params.packed();
  const int dim = static_cast<int>(truth.size());
  const std::vector<CureRateStat> cure_truth =
      stratum_cure_rates(sc.family, sc.true_params);
  const double z90 = std_normal_quantile(0.95);
  const double z95 = std_normal_quantile(0.975);

  struct RepOutcome {
    bool ok = false;
    std::vector<double> est;
    std::vector<double> se;
    std::vector<double> cure_est;
  };
  std::vector<RepOutcome> reps(sc.replications);

  std::atomic<int> next_rep{0};
  auto worker = [&]() {
    for (;;) {
      const int r = next_rep.fetch_add(1);
      if (r >= sc.replications) return;
      RepOutcome& out = reps[r];
      try {
        const CompetingRisksDataset ds =
            generate_dataset(sc, derive_seed(sc.rng_seed, r));
        FitConfig rep_cfg = cfg;
        rep_cfg.family = sc.family;
        rep_cfg.initial_params = sc.true_params;
        const FitResult fit = fit_mle(ds, rep_cfg);
        // a singular information matrix leaves no usable Wald theory
        if (!fit.converged || fit.pseudo_inverted_count > 0) continue;
        out.est = fit.mle.packed();
        out.se = fit.std_errors;
        bool usable = true;
        for (double s : out.se)
          if (!std::isfinite(s) || s <= 0.0) usable = false;
        if (!usable) continue;
        out.cure_est.reserve(cure_truth.size());
        for (const auto& st : cure_truth) {
          const std::vector<double> x = {st.x1, st.x2};
          try {
            out.cure_est.push_back(
                cure_fractions(sc.family, fit.mle, x).overall);
          } catch (const NotDefectiveError&) {
            // cure undefined at this stratum for this replication
            out.cure_est.push_back(std::numeric_limits<double>::quiet_NaN());
          }
        }
        out.ok = true;
      } catch (const std::exception&) {
        // counted as a failure below
      }
    }
  };

  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  MonteCarloReport report;
  report.replications = sc.replications;
  const auto names = packed_param_names(2, 2);
  std::vector<double> err_sum(dim, 0.0), err_sq(dim, 0.0);
  std::vector<double> cov90(dim, 0.0), cov95(dim, 0.0);
  std::vector<double> cure_err_sum(cure_truth.size(), 0.0),
      cure_err_sq(cure_truth.size(), 0.0);
  std::vector<int> cure_used(cure_truth.size(), 0);
  int used = 0;
  for (const auto& rep : reps) {
    if (!rep.ok) {
      ++report.failures;
      continue;
    }
    ++used;
    for (int i = 0; i < dim; ++i) {
      const double e = rep.est[i] - truth[i];
      err_sum[i] += e;
      err_sq[i] += e * e;
      if (std::abs(e) <= z90 * rep.se[i]) cov90[i] += 1.0;
      if (std::abs(e) <= z95 * rep.se[i]) cov95[i] += 1.0;
    }
    for (std::size_t c = 0; c < cure_truth.size(); ++c) {
      if (std::isnan(rep.cure_est[c])) continue;
      const double e = rep.cure_est[c] - cure_truth[c].truth;
      cure_err_sum[c] += e;
      cure_err_sq[c] += e * e;
      ++cure_used[c];
    }
  }
  if (report.failures > 0.2 * sc.replications)
    throw NumericError("run_monte_carlo: aborted, " +
                       std::to_string(report.failures) + " of " +
                       std::to_string(sc.replications) +
                       " replications failed");

  for (int i = 0; i < dim; ++i) {
    ParamStat ps;
    ps.name = names[i];
    ps.truth = truth[i];
    ps.abs_bias = std::abs(err_sum[i] / used);
    ps.mse = err_sq[i] / used;
    ps.cp90 = cov90[i] / used;
    ps.cp95 = cov95[i] / used;
    report.params.push_back(ps);
  }
  for (std::size_t c = 0; c < cure_truth.size(); ++c) {
    CureRateStat st = cure_truth[c];
    if (cure_used[c] > 0) {
      st.abs_bias = std::abs(cure_err_sum[c] / cure_used[c]);
      st.mse = cure_err_sq[c] / cure_used[c];
    } else {
      st.abs_bias = std::numeric_limits<double>::quiet_NaN();
      st.mse = std::numeric_limits<double>::quiet_NaN();
    }
    report.cure_rates.push_back(st);
  }
  return report;
}

}  // namespace defsurv
