#include <catch2/catch_amalgamated.hpp>

#include "defsurv/data.hpp"

using namespace defsurv;

namespace {

CompetingRisksDataset one_obs_dataset() {
  CompetingRisksDataset ds;
  ds.num_causes = 2;
  ds.num_covariates = 1;
  ds.observations.push_back({1.0, 2.0, 1, {0.5}});
  return ds;
}

}  // namespace

TEST_CASE("validate_dataset accepts a well-formed dataset") {
  const auto ds = one_obs_dataset();
  CHECK(validate_dataset(ds).empty());
}

TEST_CASE("validate_dataset flags censored rows with finite right endpoint") {
  auto ds = one_obs_dataset();
  ds.observations.push_back({1.0, 3.0, 0, {0.2}});
  const auto v = validate_dataset(ds);
  REQUIRE(v.size() == 1);
  CHECK(v[0].find("obs 1") != std::string::npos);
  CHECK(v[0].find("censored must have right=+inf") != std::string::npos);
}

TEST_CASE("validate_dataset flags causes beyond num_causes") {
  auto ds = one_obs_dataset();
  ds.observations.push_back({0.5, 1.5, 3, {0.1}});
  const auto v = validate_dataset(ds);
  REQUIRE(v.size() == 1);
  CHECK(v[0].find("cause exceeds num_causes") != std::string::npos);
}

TEST_CASE("validate_dataset names every broken rule") {
  auto ds = one_obs_dataset();
  ds.observations.push_back({-1.0, -2.0, 1, {0.0, 9.0}});  // three violations
  const auto first = validate_dataset(ds);
  CHECK(first.size() == 3);
  // diagnostic only: repeated calls see the same dataset and agree
  CHECK(validate_dataset(ds) == first);
}

TEST_CASE("left = 0 with a finite right endpoint is a valid event") {
  auto ds = one_obs_dataset();
  ds.observations.push_back({0.0, 0.7, 2, {1.0}});
  CHECK(validate_dataset(ds).empty());
}

TEST_CASE("design rows prepend an intercept") {
  const std::vector<double> x = {0.5, -2.0};
  const auto row = CovariateDesign::row(x);
  REQUIRE(row.size() == 3);
  CHECK(row[0] == 1.0);
  CHECK(row[1] == 0.5);
  CHECK(row[2] == -2.0);
  CHECK(CovariateDesign::row({}).size() == 1);
}
