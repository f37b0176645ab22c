// defsurv command line: fit / simulate / curves over CSV datasets.

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "defsurv/defsurv.hpp"

namespace {

using namespace defsurv;
using nlohmann::json;

Family parse_family(const std::string& name) {
  if (name == "gompertz") return Family::gompertz;
  if (name == "inverse-gaussian" || name == "ig")
    return Family::inverse_gaussian;
  throw ConfigError("unknown family '" + name +
                    "' (expected gompertz or inverse-gaussian)");
}

std::vector<double> parse_profile(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str() || *end != '\0')
      throw ConfigError("bad profile value '" + cell + "'");
    out.push_back(v);
  }
  return out;
}

/// Keeps only the named covariate columns, in the order given.
CompetingRisksDataset select_covariates(const CompetingRisksDataset& ds,
                                        const std::vector<std::string>& keep) {
  if (keep.empty()) return ds;
  std::vector<int> idx;
  for (const auto& name : keep) {
    const auto it = std::find(ds.covariate_names.begin(),
                              ds.covariate_names.end(), name);
    if (it == ds.covariate_names.end())
      throw ConfigError("covariate '" + name + "' not found in the header");
    idx.push_back(static_cast<int>(it - ds.covariate_names.begin()));
  }
  CompetingRisksDataset out = ds;
  out.num_covariates = static_cast<int>(idx.size());
  out.covariate_names = keep;
  for (auto& obs : out.observations) {
    std::vector<double> x;
    x.reserve(idx.size());
    for (int i : idx) x.push_back(obs.covariates[i]);
    obs.covariates = std::move(x);
  }
  return out;
}

struct FitArgs {
  std::string in, out;
  std::string family = "gompertz";
  int causes = 0;
  std::vector<std::string> covariates;
  std::vector<double> levels = {0.05, 0.10};
  std::vector<std::string> profiles;
  std::uint64_t seed = 0x5eedcafefeedbeefULL;
  int multistart = 5;
  int max_iterations = 500;
  int threads = 0;  // accepted for symmetry; fitting is sequential
};

void write_fit_report(std::ostream& os, const FitArgs& args,
                      const CompetingRisksDataset& ds, const FitResult& fit,
                      Family family,
                      const std::vector<std::vector<double>>& profiles) {
  JsonWriter w(os);
  w.begin_object();
  w.key("tool").value("defsurv");
  w.key("version").value(kVersion);
  w.key("command").value("fit");
  w.key("invocation").begin_object();
  w.key("in").value(args.in);
  w.key("out").value(args.out);
  w.key("family").value(family_name(family));
  w.key("causes").value(ds.num_causes);
  w.key("covariates").begin_array();
  for (const auto& name : ds.covariate_names) w.value(name);
  w.end_array();
  w.key("levels").begin_array();
  for (double a : args.levels) w.value(a);
  w.end_array();
  w.key("profiles").begin_array();
  for (const auto& profile : profiles) {
    w.begin_array();
    for (double v : profile) w.value(v);
    w.end_array();
  }
  w.end_array();
  w.key("seed").value(static_cast<std::size_t>(args.seed));
  w.key("multistart").value(args.multistart);
  w.key("max_iterations").value(args.max_iterations);
  w.end_object();

  w.key("n").value(ds.size());
  w.key("num_causes").value(ds.num_causes);
  w.key("num_covariates").value(ds.num_covariates);
  w.key("converged").value(fit.converged);
  w.key("loglik").value(fit.loglik);
  w.key("gradient_norm").value(fit.gradient_norm);
  w.key("num_evaluations").value(fit.num_evaluations);
  w.key("degenerate_terms").value(fit.degenerate_term_count);

  const int k_params = packed_param_count(ds.num_causes, ds.num_covariates);
  const auto ic = information_criteria(fit.loglik, k_params, ds.size());
  w.key("k_params").value(k_params);
  w.key("aic").value(ic.aic);
  w.key("bic").value(ic.bic);
  w.key("caic").value(ic.caic);

  w.key("mle").begin_object();
  w.key("gamma").begin_array();
  for (const auto& row : fit.mle.gamma) {
    w.begin_array();
    for (double v : row) w.value(v);
    w.end_array();
  }
  w.end_array();
  w.key("beta").begin_array();
  for (const auto& row : fit.mle.beta) {
    w.begin_array();
    for (double v : row) w.value(v);
    w.end_array();
  }
  w.end_array();
  w.end_object();

  const auto names = packed_param_names(ds.num_causes, ds.num_covariates);
  const auto packed = fit.mle.packed();
  w.key("parameters").begin_array();
  for (std::size_t i = 0; i < packed.size(); ++i) {
    w.begin_object();
    w.key("name").value(names[i]);
    w.key("mle").value(packed[i]);
    w.key("se").value(fit.std_errors[i]);
    w.key("ci").begin_array();
    for (const auto& set : fit.confidence_intervals) {
      w.begin_object();
      w.key("alpha").value(set.alpha);
      if (set.intervals[i].valid) {
        w.key("lower").value(set.intervals[i].lower);
        w.key("upper").value(set.intervals[i].upper);
      } else {
        w.key("lower").null();
        w.key("upper").null();
      }
      w.end_object();
    }
    w.end_array();
    w.end_object();
  }
  w.end_array();

  w.key("covariance").begin_array();
  for (Eigen::Index r = 0; r < fit.covariance.rows(); ++r) {
    w.begin_array();
    for (Eigen::Index c = 0; c < fit.covariance.cols(); ++c)
      w.value(fit.covariance(r, c));
    w.end_array();
  }
  w.end_array();

  w.key("cure_fractions").begin_array();
  for (const auto& profile : profiles) {
    w.begin_object();
    w.key("profile").begin_array();
    for (double v : profile) w.value(v);
    w.end_array();
    try {
      const auto cf = cure_fractions(family, fit.mle, profile);
      w.key("overall").value(cf.overall);
      w.key("per_cause").begin_array();
      for (double v : cf.per_cause) w.value(v);
      w.end_array();
    } catch (const NotDefectiveError& e) {
      w.key("error").value(e.what());
    }
    w.end_object();
  }
  w.end_array();

  w.key("warnings").begin_array();
  for (const auto& warning : fit.warnings) w.value(warning);
  w.end_array();
  w.end_object();
  os << '\n';
}

int cmd_fit(const FitArgs& args) {
  CompetingRisksDataset ds;
  try {
    ds = read_dataset_csv_file(args.in, args.causes);
    ds = select_covariates(ds, args.covariates);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  const auto violations = validate_dataset(ds);
  if (!violations.empty()) {
    std::cerr << "error: invalid dataset:\n";
    for (const auto& v : violations) std::cerr << "  " << v << "\n";
    return 1;
  }

  FitConfig cfg;
  try {
    cfg.family = parse_family(args.family);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  cfg.initial_params.family = cfg.family;
  const std::vector<double> gamma0(ds.num_covariates + 1, 0.0);
  std::vector<double> beta0(ds.num_covariates + 1, 0.0);
  cfg.initial_params.gamma.assign(ds.num_causes, gamma0);
  for (auto& g : cfg.initial_params.gamma) g[0] = -0.5;
  beta0[0] = -1.5;
  cfg.initial_params.beta.assign(ds.num_causes, beta0);
  cfg.confidence_levels = args.levels;
  cfg.multistart_count = args.multistart;
  cfg.multistart_seed = args.seed;
  cfg.max_iterations = args.max_iterations;

  std::vector<std::vector<double>> profiles;
  try {
    for (const auto& text : args.profiles) {
      auto profile = parse_profile(text);
      if (static_cast<int>(profile.size()) != ds.num_covariates)
        throw ConfigError("profile '" + text + "' has " +
                          std::to_string(profile.size()) + " values, expected " +
                          std::to_string(ds.num_covariates));
      profiles.push_back(std::move(profile));
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  if (profiles.empty()) {
    std::vector<double> mean(ds.num_covariates, 0.0);
    for (const auto& obs : ds.observations)
      for (int i = 0; i < ds.num_covariates; ++i) mean[i] += obs.covariates[i];
    for (auto& v : mean) v /= static_cast<double>(ds.size());
    profiles.push_back(std::move(mean));
  }

  FitResult fit;
  try {
    fit = fit_mle(ds, cfg);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  std::ofstream out(args.out, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot write '" << args.out << "'\n";
    return 1;
  }
  write_fit_report(out, args, ds, fit, cfg.family, profiles);
  if (!fit.converged) {
    std::cerr << "warning: fit did not converge; report written to "
              << args.out << "\n";
    return 2;
  }
  return 0;
}

struct SimulateArgs {
  std::string scenario, out;
  std::optional<int> reps;
  std::optional<std::uint64_t> seed;
  int threads = 0;
};

SimScenario load_scenario(const std::string& path, FitConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("scenario parse failure: " + std::string(e.what()));
  }
  SimScenario sc;
  try {
    sc.family = parse_family(doc.at("family").get<std::string>());
    sc.n = doc.at("n").get<int>();
    sc.replications = doc.value("replications", 1);
    sc.rng_seed = doc.value("seed", 1ULL);
    sc.true_params.family = sc.family;
    sc.true_params.gamma =
        doc.at("gamma").get<std::vector<std::vector<double>>>();
    sc.true_params.beta =
        doc.at("beta").get<std::vector<std::vector<double>>>();
    if (doc.contains("interval_len_range")) {
      const auto r = doc["interval_len_range"].get<std::vector<double>>();
      if (r.size() != 2) throw ConfigError("interval_len_range needs 2 values");
      sc.interval_len_range = {r[0], r[1]};
    }
    if (doc.contains("tail_rate_range")) {
      const auto r = doc["tail_rate_range"].get<std::vector<double>>();
      if (r.size() != 2) throw ConfigError("tail_rate_range needs 2 values");
      sc.tail_rate_range = {r[0], r[1]};
    }
    if (doc.contains("fit")) {
      const auto& f = doc["fit"];
      cfg.max_iterations = f.value("max_iterations", cfg.max_iterations);
      cfg.multistart_count = f.value("multistart", cfg.multistart_count);
      cfg.gradient_tolerance =
          f.value("gradient_tolerance", cfg.gradient_tolerance);
      cfg.hessian_step = f.value("hessian_step", cfg.hessian_step);
    }
  } catch (const json::exception& e) {
    throw ConfigError("scenario field error: " + std::string(e.what()));
  }
  return sc;
}

std::string summary_path_for(const std::string& csv_path) {
  const auto dot = csv_path.rfind(".csv");
  if (dot != std::string::npos && dot == csv_path.size() - 4)
    return csv_path.substr(0, dot) + ".json";
  return csv_path + ".json";
}

void write_simulation_summary(std::ostream& os, const SimulateArgs& args,
                              const SimScenario& sc,
                              const MonteCarloReport& report) {
  JsonWriter w(os);
  w.begin_object();
  w.key("tool").value("defsurv");
  w.key("version").value(kVersion);
  w.key("command").value("simulate");
  w.key("invocation").begin_object();
  w.key("scenario").value(args.scenario);
  w.key("out").value(args.out);
  w.key("family").value(family_name(sc.family));
  w.key("n").value(sc.n);
  w.key("replications").value(sc.replications);
  w.key("seed").value(static_cast<std::size_t>(sc.rng_seed));
  w.end_object();
  w.key("failures").value(report.failures);
  w.key("parameters").begin_array();
  for (const auto& ps : report.params) {
    w.begin_object();
    w.key("name").value(ps.name);
    w.key("truth").value(ps.truth);
    w.key("abs_bias").value(ps.abs_bias);
    w.key("mse").value(ps.mse);
    w.key("cp90").value(ps.cp90);
    w.key("cp95").value(ps.cp95);
    w.end_object();
  }
  w.end_array();
  w.key("cure_rates").begin_array();
  for (const auto& cs : report.cure_rates) {
    w.begin_object();
    w.key("label").value(cs.label);
    w.key("x1").value(cs.x1);
    w.key("x2").value(cs.x2);
    w.key("truth").value(cs.truth);
    w.key("abs_bias").value(cs.abs_bias);
    w.key("mse").value(cs.mse);
    w.end_object();
  }
  w.end_array();
  w.end_object();
  os << '\n';
}

int cmd_simulate(const SimulateArgs& args) {
  FitConfig cfg;
  cfg.multistart_count = 1;  // replications start at the generator's truth
  SimScenario sc;
  try {
    sc = load_scenario(args.scenario, cfg);
    if (args.reps) sc.replications = *args.reps;
    if (args.seed) sc.rng_seed = *args.seed;
    validate_scenario(sc);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  cfg.family = sc.family;
  cfg.initial_params = sc.true_params;

  const int threads = args.threads > 0
                          ? args.threads
                          : static_cast<int>(std::max(
                                1u, std::thread::hardware_concurrency()));
  MonteCarloReport report;
  try {
    report = run_monte_carlo(sc, cfg, threads);
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  std::ofstream csv(args.out, std::ios::binary);
  if (!csv) {
    std::cerr << "error: cannot write '" << args.out << "'\n";
    return 1;
  }
  write_monte_carlo_csv(csv, report);
  const std::string summary_path = summary_path_for(args.out);
  std::ofstream summary(summary_path, std::ios::binary);
  if (!summary) {
    std::cerr << "error: cannot write '" << summary_path << "'\n";
    return 1;
  }
  write_simulation_summary(summary, args, sc, report);
  return 0;
}

struct CurvesArgs {
  std::string in, out, model, stratify;
  std::optional<double> threshold;
  int causes = 0;
  int cause_filter = 0;
  std::vector<std::string> covariates;
};

struct ModelOverlay {
  Family family = Family::gompertz;
  LinkedParams params;
};

ModelOverlay load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("model parse failure: " + std::string(e.what()));
  }
  ModelOverlay m;
  try {
    m.family =
        parse_family(doc.at("invocation").at("family").get<std::string>());
    m.params.family = m.family;
    m.params.gamma =
        doc.at("mle").at("gamma").get<std::vector<std::vector<double>>>();
    m.params.beta =
        doc.at("mle").at("beta").get<std::vector<std::vector<double>>>();
  } catch (const json::exception& e) {
    throw ConfigError("model field error: " + std::string(e.what()));
  }
  if (!m.params.consistent())
    throw ConfigError("model coefficients are inconsistent");
  return m;
}

int cmd_curves(const CurvesArgs& args) {
  CompetingRisksDataset ds;
  std::optional<ModelOverlay> model;
  try {
    ds = read_dataset_csv_file(args.in, args.causes);
    ds = select_covariates(ds, args.covariates);
    if (!args.model.empty()) model = load_model(args.model);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  const auto violations = validate_dataset(ds);
  if (!violations.empty()) {
    std::cerr << "error: invalid dataset: " << violations.front() << "\n";
    return 1;
  }
  if (model && (model->params.num_causes() != ds.num_causes ||
                model->params.num_covariates() != ds.num_covariates)) {
    std::cerr << "error: model shape does not match the dataset\n";
    return 1;
  }

  // strata: everything, or a two-way split of one covariate at a threshold
  struct Stratum {
    std::string label;
    std::vector<std::size_t> rows;
  };
  std::vector<Stratum> strata;
  if (args.stratify.empty()) {
    Stratum all{"all", {}};
    for (std::size_t i = 0; i < ds.size(); ++i) all.rows.push_back(i);
    strata.push_back(std::move(all));
  } else {
    const auto it = std::find(ds.covariate_names.begin(),
                              ds.covariate_names.end(), args.stratify);
    if (it == ds.covariate_names.end()) {
      std::cerr << "error: stratification column '" << args.stratify
                << "' not found\n";
      return 1;
    }
    const auto col = static_cast<std::size_t>(it - ds.covariate_names.begin());
    double thr;
    if (args.threshold) {
      thr = *args.threshold;
    } else {
      std::vector<double> vals;
      vals.reserve(ds.size());
      for (const auto& obs : ds.observations) vals.push_back(obs.covariates[col]);
      std::sort(vals.begin(), vals.end());
      thr = vals[vals.size() / 2];  // sample median
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", thr);
    Stratum below{args.stratify + "<" + buf, {}};
    Stratum above{args.stratify + ">=" + buf, {}};
    for (std::size_t i = 0; i < ds.size(); ++i) {
      (ds.observations[i].covariates[col] < thr ? below : above)
          .rows.push_back(i);
    }
    strata.push_back(std::move(below));
    strata.push_back(std::move(above));
  }

  std::vector<CurvePoint> points;
  for (const auto& stratum : strata) {
    if (stratum.rows.empty()) continue;
    std::vector<std::pair<double, double>> intervals;
    std::vector<double> grid;
    std::vector<double> mean_x(ds.num_covariates, 0.0);
    double max_finite = 0.0;
    for (std::size_t i : stratum.rows) {
      const auto& obs = ds.observations[i];
      intervals.emplace_back(
          args.cause_filter > 0 && obs.cause != args.cause_filter
              ? std::pair(obs.left, kInf)
              : std::pair(obs.left, obs.right));
      grid.push_back(obs.left);
      if (std::isfinite(obs.right)) {
        grid.push_back(obs.right);
        max_finite = std::max(max_finite, obs.right);
      }
      max_finite = std::max(max_finite, obs.left);
      for (int c = 0; c < ds.num_covariates; ++c)
        mean_x[c] += obs.covariates[c];
    }
    for (auto& v : mean_x) v /= static_cast<double>(stratum.rows.size());

    const auto est = turnbull_fit(intervals);
    grid.push_back(0.0);
    for (int g = 1; g <= 200; ++g)
      grid.push_back(max_finite * static_cast<double>(g) / 200.0);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    for (double t : grid) {
      CurvePoint pt;
      pt.stratum = stratum.label;
      pt.t = t;
      pt.turnbull_s = survival_at(est, t);
      if (model) {
        double s = 1.0;
        for (int j = 1; j <= ds.num_causes; ++j) {
          const LinkValue lv = link_eval(model->params, j, mean_x);
          s *= family_survival(model->family, lv.shape, lv.scale, t);
        }
        pt.has_model = true;
        pt.model_s = s;
      }
      points.push_back(std::move(pt));
    }
  }

  std::ofstream out(args.out, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot write '" << args.out << "'\n";
    return 1;
  }
  write_curves_csv(out, points);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"defective survival regression for interval-censored "
               "competing-risks data with a cured fraction"};
  app.require_subcommand(1);

  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "fit a defective regression model");
  fit->add_option("--in", fit_args.in, "input dataset CSV")->required();
  fit->add_option("--out", fit_args.out, "output report JSON")->required();
  fit->add_option("--family", fit_args.family,
                  "gompertz or inverse-gaussian");
  fit->add_option("--causes", fit_args.causes,
                  "number of causes (default: inferred)");
  fit->add_option("--covariates", fit_args.covariates,
                  "covariate columns to use (default: all)")
      ->delimiter(',');
  fit->add_option("--levels", fit_args.levels,
                  "confidence levels (alpha values)")
      ->delimiter(',');
  fit->add_option("--profile", fit_args.profiles,
                  "covariate profile for cure reporting, e.g. --profile 1,0.5 "
                  "(repeatable; default: covariate mean)");
  fit->add_option("--seed", fit_args.seed, "multistart seed");
  fit->add_option("--multistart", fit_args.multistart, "number of starts");
  fit->add_option("--max-iterations", fit_args.max_iterations,
                  "optimizer iteration cap");
  fit->add_option("--threads", fit_args.threads,
                  "worker threads (fit runs sequentially)");

  SimulateArgs sim_args;
  int sim_reps = -1;
  std::int64_t sim_seed = -1;
  auto* simulate =
      app.add_subcommand("simulate", "run a Monte Carlo study");
  simulate->add_option("--scenario", sim_args.scenario, "scenario JSON")
      ->required();
  simulate->add_option("--out", sim_args.out, "output CSV (summary JSON "
                       "written next to it)")
      ->required();
  simulate->add_option("--reps", sim_reps, "override replication count");
  simulate->add_option("--seed", sim_seed, "override master seed");
  simulate->add_option("--threads", sim_args.threads,
                       "worker threads (default: all cores)");

  CurvesArgs curves_args;
  auto* curves = app.add_subcommand(
      "curves", "emit Turnbull and fitted survival curve points");
  curves->add_option("--in", curves_args.in, "input dataset CSV")->required();
  curves->add_option("--out", curves_args.out, "output curves CSV")
      ->required();
  curves->add_option("--model", curves_args.model,
                     "fit report JSON for a parametric overlay");
  curves->add_option("--stratify", curves_args.stratify,
                     "covariate column to split on");
  double threshold_value = 0.0;
  auto* thr_opt = curves->add_option(
      "--threshold", threshold_value,
      "split threshold (default: sample median of the column)");
  curves->add_option("--causes", curves_args.causes,
                     "number of causes (default: inferred)");
  curves->add_option("--cause", curves_args.cause_filter,
                     "restrict events to one cause (default: all-cause)");
  curves->add_option("--covariates", curves_args.covariates,
                     "covariate columns to keep")
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 1;
  }

  try {
    if (fit->parsed()) return cmd_fit(fit_args);
    if (simulate->parsed()) {
      if (sim_reps >= 0) sim_args.reps = sim_reps;
      if (sim_seed >= 0) sim_args.seed = static_cast<std::uint64_t>(sim_seed);
      return cmd_simulate(sim_args);
    }
    if (curves->parsed()) {
      if (thr_opt->count() > 0) curves_args.threshold = threshold_value;
      return cmd_curves(curves_args);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
