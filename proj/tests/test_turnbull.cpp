#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "defsurv/turnbull.hpp"

using namespace defsurv;
using Catch::Matchers::WithinAbs;

TEST_CASE("two disjoint intervals split the mass evenly") {
  const auto est = turnbull_fit({{0.0, 1.0}, {1.0, 2.0}});
  REQUIRE(est.converged);
  REQUIRE(est.support.size() == 2);
  CHECK(est.support[0] == std::pair(0.0, 1.0));
  CHECK(est.support[1] == std::pair(1.0, 2.0));
  CHECK_THAT(est.masses[0], WithinAbs(0.5, 1e-6));
  CHECK_THAT(est.masses[1], WithinAbs(0.5, 1e-6));
  CHECK_THAT(survival_at(est, 1.0), WithinAbs(0.5, 1e-9));
  CHECK(survival_at(est, 0.0) == 1.0);
  CHECK_THAT(survival_at(est, 2.0), WithinAbs(0.0, 1e-9));
}

TEST_CASE("all right-censored observations keep the curve at one") {
  const auto est = turnbull_fit({{2.0, kInf}, {2.0, kInf}});
  REQUIRE(est.converged);
  REQUIRE(est.support.size() == 1);
  CHECK(est.support[0].first == 2.0);
  CHECK(std::isinf(est.support[0].second));
  CHECK_THAT(est.masses[0], WithinAbs(1.0, 1e-9));
  CHECK(survival_at(est, 1.0) == 1.0);
  CHECK(survival_at(est, 2.0) == 1.0);
  CHECK(survival_at(est, 1e9) == 1.0);  // plateau mass never falls
  CHECK(survival_ambiguous_at(est, 3.0));
  CHECK_FALSE(survival_ambiguous_at(est, 2.0));
}

TEST_CASE("overlapping intervals collapse onto the innermost interval") {
  const auto est = turnbull_fit({{0.0, 2.0}, {1.0, 3.0}});
  REQUIRE(est.converged);
  REQUIRE(est.support.size() == 1);
  CHECK(est.support[0] == std::pair(1.0, 2.0));
  CHECK_THAT(est.masses[0], WithinAbs(1.0, 1e-9));
  CHECK(survival_at(est, 1.0) == 1.0);
  CHECK_THAT(survival_at(est, 2.0), WithinAbs(0.0, 1e-9));
  // inside the support interval the NPMLE is not unique; the reported value
  // is the right endpoint's
  CHECK_THAT(survival_at(est, 1.5), WithinAbs(0.0, 1e-9));
  CHECK(survival_ambiguous_at(est, 1.5));
  CHECK_FALSE(survival_ambiguous_at(est, 0.5));
}

TEST_CASE("a weighted two-interval instance reaches its fixed point") {
  // (0,2] twice, (1,3] once, (2,4] once: innermost (1,2] and (2,3];
  // the self-consistency fixed point is (2/3, 1/3)
  const auto est =
      turnbull_fit({{0.0, 2.0}, {0.0, 2.0}, {1.0, 3.0}, {2.0, 4.0}});
  REQUIRE(est.converged);
  REQUIRE(est.support.size() == 2);
  CHECK_THAT(est.masses[0], WithinAbs(2.0 / 3.0, 1e-6));
  CHECK_THAT(est.masses[1], WithinAbs(1.0 / 3.0, 1e-6));

  SECTION("a one-iteration budget is flagged, not silently accepted") {
    const auto stopped =
        turnbull_fit({{0.0, 2.0}, {0.0, 2.0}, {1.0, 3.0}, {2.0, 4.0}}, 1e-8,
                     1);
    CHECK_FALSE(stopped.converged);
    CHECK(stopped.iterations == 1);
    CHECK(stopped.final_change > 1e-8);
  }
}

TEST_CASE("masses form a distribution and satisfy self-consistency") {
  std::mt19937_64 gen(202);
  std::uniform_real_distribution<double> starts(0.0, 5.0), widths(0.1, 2.0);
  std::bernoulli_distribution censored(0.35);
  for (int inst = 0; inst < 60; ++inst) {
    std::vector<std::pair<double, double>> obs;
    const int n = 3 + inst % 28;
    for (int i = 0; i < n; ++i) {
      const double l = starts(gen);
      obs.emplace_back(l, censored(gen) ? kInf : l + widths(gen));
    }
    const auto est = turnbull_fit(obs);
    double total = 0.0;
    for (double m : est.masses) {
      CHECK(m >= 0.0);
      total += m;
    }
    CHECK(total <= 1.0 + 1e-10);
    CHECK(total >= 1.0 - 1e-9);

    if (est.converged) {
      // one more self-consistency sweep moves nothing
      std::vector<double> next(est.masses.size(), 0.0);
      for (const auto& [l, r] : obs) {
        double denom = 0.0;
        for (std::size_t k = 0; k < est.support.size(); ++k)
          if (est.support[k].first >= l && est.support[k].second <= r)
            denom += est.masses[k];
        for (std::size_t k = 0; k < est.support.size(); ++k)
          if (est.support[k].first >= l && est.support[k].second <= r)
            next[k] += est.masses[k] / denom;
      }
      for (std::size_t k = 0; k < next.size(); ++k)
        CHECK(std::abs(next[k] / n - est.masses[k]) < 1e-8);
    }

    // EM monotonicity of the recorded log-likelihood path
    for (std::size_t i = 1; i < est.loglik_trace.size(); ++i)
      CHECK(est.loglik_trace[i] >= est.loglik_trace[i - 1] - 1e-10);
  }
}

TEST_CASE("censoring past the last finite endpoint leaves a plateau") {
  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> starts(0.0, 2.0), widths(0.1, 1.0);
  for (int inst = 0; inst < 20; ++inst) {
    std::vector<std::pair<double, double>> obs;
    double last_finite = 0.0;
    for (int i = 0; i < 12; ++i) {
      const double l = starts(gen);
      const double r = l + widths(gen);
      obs.emplace_back(l, r);
      last_finite = std::max(last_finite, r);
    }
    obs.emplace_back(last_finite + 0.5, kInf);
    obs.emplace_back(last_finite + 1.0, kInf);
    const auto est = turnbull_fit(obs);
    CHECK(survival_at(est, last_finite + 2.0) > 0.0);
  }
}

TEST_CASE("dataset conversion to turnbull intervals") {
  CompetingRisksDataset ds;
  ds.num_causes = 2;
  ds.num_covariates = 0;
  ds.observations = {{0.0, 1.0, 1, {}}, {0.5, 2.0, 2, {}}, {3.0, kInf, 0, {}}};
  const auto all = turnbull_intervals(ds);
  REQUIRE(all.size() == 3);
  CHECK(all[0] == std::pair(0.0, 1.0));
  CHECK(all[1] == std::pair(0.5, 2.0));
  CHECK(std::isinf(all[2].second));
  // cause filter: other causes become censorings at their left endpoint
  const auto cause1 = turnbull_intervals(ds, 1);
  CHECK(cause1[0] == std::pair(0.0, 1.0));
  CHECK(std::isinf(cause1[1].second));
  CHECK(cause1[1].first == 0.5);
}

TEST_CASE("degenerate inputs are rejected") {
  CHECK_THROWS_AS(turnbull_fit({}), ConfigError);
  CHECK_THROWS_AS(turnbull_fit({{1.0, 1.0}}), ConfigError);
  CHECK_THROWS_AS(turnbull_fit({{2.0, 1.0}}), ConfigError);
}
