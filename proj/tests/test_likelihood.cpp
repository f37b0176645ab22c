#include <algorithm>
#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "defsurv/likelihood.hpp"
#include "defsurv/simulation.hpp"

using namespace defsurv;
using Catch::Matchers::WithinAbs;

namespace {

LinkedParams flat_params(Family f, double shape, double log_scale) {
  LinkedParams lp;
  lp.family = f;
  lp.gamma = {{shape}, {shape}};
  lp.beta = {{log_scale}, {log_scale}};
  return lp;
}

CompetingRisksDataset no_covariate_dataset(
    std::vector<IntervalObservation> obs) {
  CompetingRisksDataset ds;
  ds.num_causes = 2;
  ds.num_covariates = 0;
  ds.observations = std::move(obs);
  return ds;
}

SimScenario table1_gompertz(int n, int reps = 1) {
  SimScenario sc;
  sc.family = Family::gompertz;
  sc.true_params.family = Family::gompertz;
  sc.true_params.gamma = {{-0.2, -0.4, -0.6}, {-0.2, -0.5, -0.7}};
  sc.true_params.beta = {{-2.0, 1.0, 1.5}, {-2.0, 1.0, 2.0}};
  sc.n = n;
  sc.replications = reps;
  return sc;
}

SimScenario table3_ig(int n, int reps = 1) {
  SimScenario sc;
  sc.family = Family::inverse_gaussian;
  sc.true_params.family = Family::inverse_gaussian;
  sc.true_params.gamma = {{-0.1, -0.3, -0.5}, {-0.2, -0.4, -0.6}};
  sc.true_params.beta = {{-1.5, 1.0, 2.0}, {-1.0, 1.0, 2.0}};
  sc.n = n;
  sc.replications = reps;
  return sc;
}

}  // namespace

TEST_CASE("censored observations contribute the product of survivals") {
  const auto lp = flat_params(Family::gompertz, -0.5, std::log(0.3));
  const IntervalObservation obs{2.0, kInf, 0, {}};
  CHECK_THAT(obs_log_likelihood(Family::gompertz, lp, obs),
             WithinAbs(-0.75854467059426921, 1e-12));
}

TEST_CASE("event observations contribute their interval probability") {
  const auto lp = flat_params(Family::gompertz, -0.5, std::log(0.3));
  const IntervalObservation obs{1.0, 2.0, 1, {}};
  CHECK_THAT(obs_log_likelihood(Family::gompertz, lp, obs),
             WithinAbs(-2.2504005529299866, 1e-12));
}

TEST_CASE("zero-width intervals floor at log(1e-300) and are counted") {
  for (Family f : {Family::gompertz, Family::inverse_gaussian}) {
    const auto lp = flat_params(f, -0.5, std::log(0.3));
    const IntervalObservation obs{1.0, 1.0, 1, {}};
    std::size_t degenerate = 0;
    const double v = obs_log_likelihood(f, lp, obs, &degenerate);
    CHECK(v == std::log(1e-300));
    CHECK(degenerate == 1);
  }
}

TEST_CASE("dataset log-likelihood sums the oracle contributions") {
  const auto lp = flat_params(Family::gompertz, -0.5, std::log(0.3));
  const auto ds =
      no_covariate_dataset({{2.0, kInf, 0, {}}, {1.0, 2.0, 1, {}}});
  const LikelihoodValue lv = dataset_log_likelihood(Family::gompertz, lp, ds);
  CHECK_THAT(lv.loglik, WithinAbs(-3.0089452235242558, 1e-12));
  CHECK(lv.num_degenerate_terms == 0);
}

TEST_CASE("censoring at time zero contributes nothing") {
  const auto lp = flat_params(Family::gompertz, -0.5, std::log(0.3));
  const auto ds = no_covariate_dataset({{0.0, kInf, 0, {}}});
  CHECK(dataset_log_likelihood(Family::gompertz, lp, ds).loglik == 0.0);
  const auto ig = flat_params(Family::inverse_gaussian, -0.5, 0.0);
  CHECK(dataset_log_likelihood(Family::inverse_gaussian, ig, ds).loglik ==
        0.0);
}

TEST_CASE("per-observation likelihood is a probability") {
  std::mt19937_64 gen(131);
  std::uniform_real_distribution<double> as(-2.0, -0.05), ls(-2.0, 1.0),
      us(0.0, 5.0), ws(0.01, 3.0);
  for (Family f : {Family::gompertz, Family::inverse_gaussian}) {
    for (int i = 0; i < 300; ++i) {
      const auto lp = flat_params(f, as(gen), ls(gen));
      const double u = us(gen);
      IntervalObservation obs;
      if (i % 3 == 0) {
        obs = {u, kInf, 0, {}};
      } else {
        obs = {u, u + ws(gen), 1 + (i % 2), {}};
      }
      std::size_t degenerate = 0;
      const double v = obs_log_likelihood(f, lp, obs, &degenerate);
      if (degenerate == 0) {
        CHECK(v <= 0.0);
        CHECK(std::exp(v) > 0.0);
        CHECK(std::exp(v) <= 1.0);
      }
    }
  }
}

TEST_CASE("dataset value is permutation invariant") {
  const auto sc = table1_gompertz(400);
  auto ds = generate_dataset(sc, 99);
  const auto lp = sc.true_params;
  const double base = dataset_log_likelihood(Family::gompertz, lp, ds).loglik;
  std::mt19937_64 gen(5);
  for (int rep = 0; rep < 5; ++rep) {
    std::shuffle(ds.observations.begin(), ds.observations.end(), gen);
    const double shuffled =
        dataset_log_likelihood(Family::gompertz, lp, ds).loglik;
    CHECK(std::abs(shuffled - base) <= 1e-12 * std::abs(base));
  }
}

TEST_CASE("likelihood decomposes over dataset partitions") {
  const auto sc = table3_ig(300);
  const auto ds = generate_dataset(sc, 7);
  const auto lp = sc.true_params;
  const double whole =
      dataset_log_likelihood(Family::inverse_gaussian, lp, ds).loglik;
  CompetingRisksDataset first = ds, second = ds;
  first.observations.assign(ds.observations.begin(),
                            ds.observations.begin() + 120);
  second.observations.assign(ds.observations.begin() + 120,
                             ds.observations.end());
  const double parts =
      dataset_log_likelihood(Family::inverse_gaussian, lp, first).loglik +
      dataset_log_likelihood(Family::inverse_gaussian, lp, second).loglik;
  CHECK(std::abs(whole - parts) <= 1e-10);
}

TEST_CASE("dimension mismatches are configuration errors") {
  const auto lp = flat_params(Family::gompertz, -0.5, std::log(0.3));
  auto ds = no_covariate_dataset({{1.0, 2.0, 1, {}}});
  ds.num_causes = 3;
  CHECK_THROWS_AS(dataset_log_likelihood(Family::gompertz, lp, ds),
                  ConfigError);
  ds.num_causes = 2;
  ds.num_covariates = 4;
  CHECK_THROWS_AS(dataset_log_likelihood(Family::gompertz, lp, ds),
                  ConfigError);
}

TEST_CASE("finite-difference gradients are stable under step halving") {
  // a branch discontinuity would make the halved-step central difference
  // disagree with the full-step one far beyond truncation error
  for (Family f : {Family::gompertz, Family::inverse_gaussian}) {
    const auto sc =
        f == Family::gompertz ? table1_gompertz(150) : table3_ig(150);
    const auto ds = generate_dataset(sc, 2024);
    std::mt19937_64 gen(77);
    std::uniform_real_distribution<double> jitter(-0.15, 0.15);
    const auto base = sc.true_params.packed();
    for (int point = 0; point < 5; ++point) {
      std::vector<double> at = base;
      for (auto& v : at) v += jitter(gen);
      auto value_at = [&](const std::vector<double>& coef) {
        const auto lp = LinkedParams::from_packed(f, 2, 2, coef);
        return dataset_log_likelihood(f, lp, ds).loglik;
      };
      for (std::size_t i = 0; i < at.size(); ++i) {
        auto central = [&](double h) {
          auto hi = at, lo = at;
          hi[i] += h;
          lo[i] -= h;
          return (value_at(hi) - value_at(lo)) / (2.0 * h);
        };
        const double h = 1e-4 * std::max(1.0, std::abs(at[i]));
        const double g1 = central(h);
        const double g2 = central(h / 2.0);
        CHECK(std::abs(g1 - g2) <= 1e-4 * std::max(1e-5, std::abs(g2)));
      }
    }
  }
}
