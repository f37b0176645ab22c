#include <catch2/catch_amalgamated.hpp>
#include <cstdlib>
#include <random>
#include <sstream>

#include "defsurv/csv.hpp"
#include "defsurv/json_writer.hpp"

using namespace defsurv;

TEST_CASE("dataset csv round trip is field-exact") {
  std::mt19937_64 gen(4711);
  std::uniform_real_distribution<double> vals(-10.0, 10.0), times(0.0, 8.0),
      widths(1e-6, 3.0);
  CompetingRisksDataset ds;
  ds.num_causes = 2;
  ds.num_covariates = 3;
  ds.covariate_names = {"age", "gender", "cd4"};
  for (int i = 0; i < 200; ++i) {
    IntervalObservation obs;
    obs.left = times(gen);
    if (i % 4 == 0) {
      obs.right = kInf;
      obs.cause = 0;
    } else {
      obs.right = obs.left + widths(gen);
      obs.cause = 1 + i % 2;
    }
    obs.covariates = {vals(gen), gen() % 2 ? 1.0 : 0.0, vals(gen)};
    ds.observations.push_back(obs);
  }

  std::stringstream buf;
  write_dataset_csv(buf, ds);
  const auto back = read_dataset_csv(buf, ds.num_causes);

  REQUIRE(back.size() == ds.size());
  CHECK(back.num_covariates == 3);
  CHECK(back.covariate_names == ds.covariate_names);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& a = ds.observations[i];
    const auto& b = back.observations[i];
    CHECK(a.left == b.left);
    CHECK((a.right == b.right || (std::isinf(a.right) && std::isinf(b.right))));
    CHECK(a.cause == b.cause);
    CHECK(a.covariates == b.covariates);
  }

  SECTION("a second write produces identical bytes") {
    std::stringstream again;
    write_dataset_csv(again, back);
    std::stringstream first;
    write_dataset_csv(first, ds);
    CHECK(again.str() == first.str());
  }
}

TEST_CASE("csv reader reports line-numbered problems") {
  {
    std::stringstream empty;
    CHECK_THROWS_WITH(read_dataset_csv(empty),
                      Catch::Matchers::ContainsSubstring("no observations"));
  }
  {
    std::stringstream only_header("left,right,cause,x\n");
    CHECK_THROWS_WITH(read_dataset_csv(only_header),
                      Catch::Matchers::ContainsSubstring("no observations"));
  }
  {
    std::stringstream bad_header("start,stop,cause\n1,2,1\n");
    CHECK_THROWS_AS(read_dataset_csv(bad_header), IoError);
  }
  {
    std::stringstream bad_field("left,right,cause\n1,2,1\n1,oops,1\n");
    try {
      read_dataset_csv(bad_field);
      FAIL("expected IoError");
    } catch (const IoError& e) {
      CHECK(e.line() == 3);
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }
  {
    std::stringstream short_row("left,right,cause,x\n1,2,1\n");
    try {
      read_dataset_csv(short_row);
      FAIL("expected IoError");
    } catch (const IoError& e) {
      CHECK(e.line() == 2);
    }
  }
  {
    std::stringstream frac_cause("left,right,cause\n1,2,1.5\n");
    CHECK_THROWS_AS(read_dataset_csv(frac_cause), IoError);
  }
}

TEST_CASE("the inf sentinel survives the round trip") {
  std::stringstream in("left,right,cause\n0.5,inf,0\n1,2,1\n");
  const auto ds = read_dataset_csv(in);
  REQUIRE(ds.size() == 2);
  CHECK(std::isinf(ds.observations[0].right));
  CHECK(ds.observations[0].cause == 0);
  std::stringstream out;
  write_dataset_csv(out, ds);
  CHECK(out.str().find("0.5,inf,0") != std::string::npos);
}

TEST_CASE("number formatting round-trips doubles exactly") {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> vals(-1e6, 1e6);
  for (int i = 0; i < 2000; ++i) {
    const double v = vals(gen) * std::pow(10.0, int(gen() % 13) - 6);
    const std::string s = format_number(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
  CHECK(format_number(kInf) == "inf");
  CHECK(format_number(0.5) == "0.5");
}

TEST_CASE("monte carlo csv has one row per parameter plus cure strata") {
  MonteCarloReport report;
  report.replications = 10;
  const auto names = packed_param_names(2, 2);
  for (const auto& name : names)
    report.params.push_back({name, 0.1, 0.01, 0.001, 0.9, 0.95});
  report.cure_rates.push_back({"p13", 0.0, 0.25, 0.3, 0.01, 0.001});
  report.cure_rates.push_back({"p14", 0.0, 0.75, 0.2, 0.01, 0.001});
  report.cure_rates.push_back({"p23", 1.0, 0.25, 0.25, 0.01, 0.001});
  report.cure_rates.push_back({"p24", 1.0, 0.75, 0.1, 0.01, 0.001});

  std::stringstream out;
  write_monte_carlo_csv(out, report);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(out, line)) lines.push_back(line);
  REQUIRE(lines.size() == 1 + 12 + 4);
  CHECK(lines[0] == "parameter,truth,abs_bias,mse,cp90,cp95");
  CHECK(lines[1].rfind("gamma01,", 0) == 0);
  CHECK(lines[13].rfind("p13,", 0) == 0);
  // cure rows carry no coverage cells
  CHECK(lines[13].substr(lines[13].size() - 2) == ",,");
}

TEST_CASE("curves csv layout") {
  std::vector<CurvePoint> pts = {{"all", 0.0, 1.0, true, 1.0},
                                 {"all", 1.5, 0.75, false, 0.0}};
  std::stringstream out;
  write_curves_csv(out, pts);
  CHECK(out.str() ==
        "stratum,t,turnbull_S,model_S\nall,0,1,1\nall,1.5,0.75,\n");
}

TEST_CASE("json writer produces deterministic escaped output") {
  std::stringstream out;
  JsonWriter w(out);
  w.begin_object();
  w.key("name").value("a\"b\\c\nd");
  w.key("pi").value(3.5);
  w.key("big").value(0.1);
  w.key("inf").value(kInf);
  w.key("flag").value(true);
  w.key("items").begin_array().value(1).value(2).end_array();
  w.end_object();
  CHECK(out.str() ==
        "{\"name\":\"a\\\"b\\\\c\\nd\",\"pi\":3.5,"
        "\"big\":0.10000000000000001,\"inf\":null,\"flag\":true,"
        "\"items\":[1,2]}");
}
