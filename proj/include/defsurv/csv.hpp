#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "defsurv/data.hpp"
#include "defsurv/errors.hpp"
#include "defsurv/simulation.hpp"

namespace defsurv {

/// 17-significant-digit rendering; round-trips every finite double and
/// prints +inf as the CSV sentinel token "inf".
inline std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_number(const std::string& s, long line) {
  if (s == "inf" || s == "+inf" || s == "Inf") return kInf;
  if (s == "-inf") return -kInf;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw IoError("not a number: '" + s + "'", line);
  return v;
}

}  // namespace detail

/// Reads the dataset schema `left,right,cause,<covariates...>`. The header
/// row is required; covariate columns take their names from it. `num_causes`
/// of 0 means infer it as the largest cause label seen (at least 1).
inline CompetingRisksDataset read_dataset_csv(std::istream& in,
                                              int num_causes = 0) {
  std::string line;
  long lineno = 0;
  if (!std::getline(in, line)) throw IoError("no observations", 1);
  ++lineno;
  const auto header = detail::split_csv_line(line);
  if (header.size() < 3 || header[0] != "left" || header[1] != "right" ||
      header[2] != "cause")
    throw IoError("header must start with left,right,cause", lineno);

  CompetingRisksDataset ds;
  ds.num_covariates = static_cast<int>(header.size()) - 3;
  ds.covariate_names.assign(header.begin() + 3, header.end());

  int max_cause = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw IoError("expected " + std::to_string(header.size()) +
                        " fields, got " + std::to_string(cells.size()),
                    lineno);
    IntervalObservation obs;
    obs.left = detail::parse_number(cells[0], lineno);
    obs.right = detail::parse_number(cells[1], lineno);
    const double cause_val = detail::parse_number(cells[2], lineno);
    obs.cause = static_cast<int>(cause_val);
    if (obs.cause != cause_val || obs.cause < 0)
      throw IoError("cause must be a non-negative integer", lineno);
    for (std::size_t i = 3; i < cells.size(); ++i)
      obs.covariates.push_back(detail::parse_number(cells[i], lineno));
    max_cause = std::max(max_cause, obs.cause);
    ds.observations.push_back(std::move(obs));
  }
  if (ds.observations.empty()) throw IoError("no observations", lineno);
  ds.num_causes = num_causes > 0 ? num_causes : std::max(max_cause, 1);
  return ds;
}

inline CompetingRisksDataset read_dataset_csv_file(const std::string& path,
                                                   int num_causes = 0) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_dataset_csv(in, num_causes);
}

inline void write_dataset_csv(std::ostream& out,
                              const CompetingRisksDataset& ds) {
  out << "left,right,cause";
  for (int i = 0; i < ds.num_covariates; ++i) {
    out << ',';
    if (!ds.covariate_names.empty())
      out << ds.covariate_names[i];
    else
      out << 'x' << (i + 1);
  }
  out << '\n';
  for (const auto& obs : ds.observations) {
    out << format_number(obs.left) << ',' << format_number(obs.right) << ','
        << obs.cause;
    for (double v : obs.covariates) out << ',' << format_number(v);
    out << '\n';
  }
}

inline void write_dataset_csv_file(const std::string& path,
                                   const CompetingRisksDataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  write_dataset_csv(out, ds);
}

/// Monte Carlo table: one row per packed coefficient with bias/MSE/coverage,
/// then one row per cure-rate stratum (coverage cells left empty).
inline void write_monte_carlo_csv(std::ostream& out,
                                  const MonteCarloReport& report) {
  out << "parameter,truth,abs_bias,mse,cp90,cp95\n";
  for (const auto& ps : report.params)
    out << ps.name << ',' << format_number(ps.truth) << ','
        << format_number(ps.abs_bias) << ',' << format_number(ps.mse) << ','
        << format_number(ps.cp90) << ',' << format_number(ps.cp95) << '\n';
  for (const auto& cs : report.cure_rates)
    out << cs.label << ',' << format_number(cs.truth) << ','
        << format_number(cs.abs_bias) << ',' << format_number(cs.mse)
        << ",,\n";
}

struct CurvePoint {
  std::string stratum;
  double t = 0.0;
  double turnbull_s = 0.0;
  bool has_model = false;
  double model_s = 0.0;
};

inline void write_curves_csv(std::ostream& out,
                             const std::vector<CurvePoint>& points) {
  out << "stratum,t,turnbull_S,model_S\n";
  for (const auto& pt : points) {
    out << pt.stratum << ',' << format_number(pt.t) << ','
        << format_number(pt.turnbull_s) << ',';
    if (pt.has_model) out << format_number(pt.model_s);
    out << '\n';
  }
}

}  // namespace defsurv
