#pragma once

// CSV/JSON readers and writers. These schemas are the contract with the
// plotting scripts; see README.md for the column lists. Numbers in CSV are
// written with 17 significant digits so every double reads back exactly.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sarcs/error.hpp"
#include "sarcs/experiment.hpp"
#include "sarcs/replica.hpp"
#include "sarcs/sar_model.hpp"

namespace sarcs::io {

inline constexpr int kSchemaVersion = 1;

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// CSV primitives
// ---------------------------------------------------------------------------

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view cell = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r'))
      cell.remove_suffix(1);
    out.emplace_back(cell);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw SchemaError("missing CSV column '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
};

inline CsvTable read_csv(std::istream& in, bool has_header = true) {
  CsvTable t;
  std::string line;
  bool first = has_header;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (first) {
      t.header = std::move(cells);
      first = false;
      continue;
    }
    if (has_header && cells.size() != t.header.size()) {
      std::ostringstream os;
      os << "CSV row has " << cells.size() << " cells, header has " << t.header.size();
      throw SchemaError(os.str());
    }
    t.rows.push_back(std::move(cells));
  }
  if (has_header && t.header.empty()) throw SchemaError("CSV input is empty (no header)");
  return t;
}

inline double parse_double(const std::string& s) {
  // strtod handles inf/nan spellings and is locale-independent for "C".
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw SchemaError("not a number: '" + s + "'");
  return v;
}

template <class Int>
Int parse_int(const std::string& s) {
  Int v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw SchemaError("not an integer: '" + s + "'");
  return v;
}

inline void check_label(const std::string& label) {
  if (label.find_first_of(",\"\n\r") != std::string::npos)
    throw SchemaError("series label must not contain commas, quotes or newlines: " + label);
}

// ---------------------------------------------------------------------------
// Signals and vectors: one column with a named header.
// ---------------------------------------------------------------------------

inline void write_column_csv(std::ostream& out, std::string_view name,
                             const std::vector<double>& values) {
  out << name << '\n';
  for (double v : values) out << format_double(v) << '\n';
}

inline std::vector<double> read_column_csv(std::istream& in, std::string_view name) {
  const CsvTable t = read_csv(in);
  if (t.header.size() != 1 || t.header[0] != name)
    throw SchemaError("expected a single CSV column '" + std::string(name) + "'");
  std::vector<double> v;
  v.reserve(t.rows.size());
  for (const auto& row : t.rows) v.push_back(parse_double(row[0]));
  return v;
}

inline void write_signal_csv(std::ostream& out, const Signal& s) {
  write_column_csv(out, "x", s.values);
}

inline Signal read_signal_csv(std::istream& in) { return Signal{read_column_csv(in, "x")}; }

// Dense matrix, no header, one row per line.
inline Eigen::MatrixXd read_matrix_csv(std::istream& in) {
  const CsvTable t = read_csv(in, false);
  if (t.rows.empty()) throw SchemaError("matrix CSV is empty");
  const std::size_t cols = t.rows.front().size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (t.rows[i].size() != cols) throw SchemaError("matrix CSV rows differ in length");
    for (std::size_t j = 0; j < cols; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = parse_double(t.rows[i][j]);
  }
  return m;
}

inline void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Trials: n,seed,pc,status
// ---------------------------------------------------------------------------

inline void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& records) {
  out << "n,seed,pc,status\n";
  for (const auto& r : records)
    out << r.n << ',' << r.seed << ',' << r.pc << ',' << to_string(r.status) << '\n';
}

inline std::vector<TrialRecord> trials_from_table(const CsvTable& t) {
  const std::size_t cn = t.column("n"), cs = t.column("seed"), cp = t.column("pc"),
                    cst = t.column("status");
  std::vector<TrialRecord> out;
  for (const auto& row : t.rows) {
    TrialRecord r;
    r.n = parse_int<std::size_t>(row[cn]);
    r.seed = parse_int<std::uint64_t>(row[cs]);
    r.pc = parse_int<std::size_t>(row[cp]);
    if (row[cst] == "ok") {
      r.status = TrialStatus::kOk;
    } else if (row[cst] == "aborted") {
      r.status = TrialStatus::kAborted;
    } else {
      throw SchemaError("unknown trial status '" + row[cst] + "'");
    }
    out.push_back(r);
  }
  return out;
}

inline std::vector<TrialRecord> read_trials_csv(std::istream& in) {
  return trials_from_table(read_csv(in));
}

// One point per distinct n, ascending.
inline std::vector<FitPoint> points_from_trials(const std::vector<TrialRecord>& records) {
  std::map<std::size_t, std::vector<TrialRecord>> by_n;
  for (const auto& r : records) by_n[r.n].push_back(r);
  std::vector<FitPoint> pts;
  for (auto& [n, recs] : by_n) {
    const AlphaEstimate e = aggregate_trials(std::move(recs), n);
    pts.push_back({static_cast<double>(n), e.alpha_c_n, e.stderr});
  }
  return pts;
}

// n,alpha_c,stderr
inline void write_points_csv(std::ostream& out, const std::vector<FitPoint>& pts) {
  out << "n,alpha_c,stderr\n";
  for (const auto& p : pts)
    out << format_double(p.n) << ',' << format_double(p.alpha_c) << ',' << format_double(p.stderr)
        << '\n';
}

inline std::vector<FitPoint> points_from_table(const CsvTable& t) {
  const std::size_t cn = t.column("n"), ca = t.column("alpha_c"), cs = t.column("stderr");
  std::vector<FitPoint> pts;
  for (const auto& row : t.rows)
    pts.push_back({parse_double(row[cn]), parse_double(row[ca]), parse_double(row[cs])});
  return pts;
}

// Accepts either a trials CSV or a points CSV, told apart by the header.
inline std::vector<FitPoint> read_fit_input_csv(std::istream& in) {
  const CsvTable t = read_csv(in);
  if (std::find(t.header.begin(), t.header.end(), "pc") != t.header.end())
    return points_from_trials(trials_from_table(t));
  if (std::find(t.header.begin(), t.header.end(), "alpha_c") != t.header.end())
    return points_from_table(t);
  throw SchemaError("CSV is neither a trials table (n,seed,pc,status) nor a points table "
                    "(n,alpha_c,stderr)");
}

// ---------------------------------------------------------------------------
// JSON records
// ---------------------------------------------------------------------------

using nlohmann::json;

inline void check_kind(const json& j, std::string_view kind) {
  if (!j.contains("schema_version") || j.at("schema_version").get<int>() != kSchemaVersion)
    throw SchemaError("unsupported or missing schema_version");
  if (!j.contains("kind") || j.at("kind").get<std::string>() != kind)
    throw SchemaError("expected a '" + std::string(kind) + "' record");
}

inline json fit_to_json(const ExtrapolationFit& fit, const std::string& series = "") {
  json pts = json::array();
  for (const auto& p : fit.points_used)
    pts.push_back({{"n", p.n}, {"alpha_c", p.alpha_c}, {"stderr", p.stderr}});
  return {{"schema_version", kSchemaVersion},
          {"kind", "extrapolation"},
          {"series", series},
          {"coefficients", {fit.a0, fit.a1, fit.a2}},
          {"alpha_c_inf", fit.alpha_c_inf},
          {"stderr_a0", fit.stderr_a0},
          {"weighted", fit.weighted},
          {"points", pts}};
}

inline ExtrapolationFit fit_from_json(const json& j) {
  check_kind(j, "extrapolation");
  ExtrapolationFit fit;
  const auto& c = j.at("coefficients");
  if (!c.is_array() || c.size() != 3) throw SchemaError("coefficients must have 3 entries");
  fit.a0 = c[0].get<double>();
  fit.a1 = c[1].get<double>();
  fit.a2 = c[2].get<double>();
  fit.alpha_c_inf = j.at("alpha_c_inf").get<double>();
  fit.stderr_a0 = j.at("stderr_a0").get<double>();
  fit.weighted = j.at("weighted").get<bool>();
  for (const auto& p : j.at("points"))
    fit.points_used.push_back(
        {p.at("n").get<double>(), p.at("alpha_c").get<double>(), p.at("stderr").get<double>()});
  return fit;
}

struct ReplicaRecord {
  SarParams params;
  ReplicaConfig config;
  ReplicaFixedPoint fixed_point;
  std::optional<StabilityReport> stability;
};

inline json replica_to_json(const ReplicaRecord& r) {
  const auto& c = r.config;
  const auto& fp = r.fixed_point;
  json j = {{"schema_version", kSchemaVersion},
            {"kind", "replica"},
            {"params", {{"rho", r.params.rho}, {"r", r.params.r}}},
            {"config",
             {{"n", c.n},
              {"samples", c.samples},
              {"damping", c.damping},
              {"tol", c.tol},
              {"max_iter", c.max_iter},
              {"seed", c.seed},
              {"increment_coordinates", c.increment_coordinates},
              {"averaging_window", c.averaging_window},
              {"alpha_init", c.alpha_init},
              {"chi_hat_init", c.chi_hat_init}}},
            {"alpha_c", fp.alpha},
            {"alpha_stderr", fp.alpha_stderr},
            {"chi_hat", fp.chi_hat},
            {"chi_hat_stderr", fp.chi_hat_stderr},
            {"iterations", fp.iterations},
            {"converged", fp.converged},
            {"last_change", fp.last_change}};
  if (r.stability) {
    j["at_metric"] = r.stability->metric;
    j["at_metric_stderr"] = r.stability->stderr;
  } else {
    j["at_metric"] = nullptr;
    j["at_metric_stderr"] = nullptr;
  }
  return j;
}

inline ReplicaRecord replica_from_json(const json& j) {
  check_kind(j, "replica");
  ReplicaRecord r;
  r.params.rho = j.at("params").at("rho").get<double>();
  r.params.r = j.at("params").at("r").get<double>();
  const auto& c = j.at("config");
  r.config.n = c.at("n").get<std::size_t>();
  r.config.samples = c.at("samples").get<std::size_t>();
  r.config.damping = c.at("damping").get<double>();
  r.config.tol = c.at("tol").get<double>();
  r.config.max_iter = c.at("max_iter").get<std::size_t>();
  r.config.seed = c.at("seed").get<std::uint64_t>();
  r.config.increment_coordinates = c.at("increment_coordinates").get<bool>();
  r.config.averaging_window = c.at("averaging_window").get<std::size_t>();
  r.config.alpha_init = c.at("alpha_init").get<double>();
  r.config.chi_hat_init = c.at("chi_hat_init").get<double>();
  auto& fp = r.fixed_point;
  fp.alpha = j.at("alpha_c").get<double>();
  fp.alpha_stderr = j.at("alpha_stderr").get<double>();
  fp.chi_hat = j.at("chi_hat").get<double>();
  fp.chi_hat_stderr = j.at("chi_hat_stderr").get<double>();
  fp.iterations = j.at("iterations").get<std::size_t>();
  fp.converged = j.at("converged").get<bool>();
  fp.last_change = j.at("last_change").get<double>();
  if (!j.at("at_metric").is_null())
    r.stability = StabilityReport{j.at("at_metric").get<double>(),
                                  j.at("at_metric_stderr").get<double>()};
  return r;
}

inline json baseline_to_json(double rho, const BaselineResult& b) {
  return {{"schema_version", kSchemaVersion},
          {"kind", "baseline"},
          {"rho", rho},
          {"alpha_c", b.alpha_c},
          {"chi_hat", b.chi_hat}};
}

// ---------------------------------------------------------------------------
// Sweeps: axis,rho,r,alpha_c,stderr,baseline,converged
// ---------------------------------------------------------------------------

struct SweepRow {
  double rho = 0.0;
  double r = 0.0;
  double alpha_c = 0.0;
  double stderr = 0.0;
  double baseline = 0.0;
  bool converged = false;
};

struct SweepResult {
  std::string axis;  // "rho" or "r"
  std::vector<SweepRow> rows;
};

inline void check_axis(const std::string& axis) {
  if (axis != "rho" && axis != "r") throw SchemaError("sweep axis must be 'rho' or 'r', got '" + axis + "'");
}

inline void write_sweep_csv(std::ostream& out, const SweepResult& s) {
  check_axis(s.axis);
  out << "axis,rho,r,alpha_c,stderr,baseline,converged\n";
  for (const auto& row : s.rows)
    out << s.axis << ',' << format_double(row.rho) << ',' << format_double(row.r) << ','
        << format_double(row.alpha_c) << ',' << format_double(row.stderr) << ','
        << format_double(row.baseline) << ',' << (row.converged ? 1 : 0) << '\n';
}

inline SweepResult read_sweep_csv(std::istream& in) {
  const CsvTable t = read_csv(in);
  const std::size_t ca = t.column("axis"), crho = t.column("rho"), cr = t.column("r"),
                    cal = t.column("alpha_c"), cs = t.column("stderr"), cb = t.column("baseline"),
                    cc = t.column("converged");
  SweepResult s;
  for (const auto& row : t.rows) {
    if (s.axis.empty()) s.axis = row[ca];
    if (row[ca] != s.axis) throw SchemaError("sweep CSV mixes axes");
    s.rows.push_back({parse_double(row[crho]), parse_double(row[cr]), parse_double(row[cal]),
                      parse_double(row[cs]), parse_double(row[cb]), parse_int<int>(row[cc]) != 0});
  }
  if (!s.axis.empty()) check_axis(s.axis);
  return s;
}

// ---------------------------------------------------------------------------
// Plot data
// ---------------------------------------------------------------------------

enum class PlotKind { kSignalTrace, kAlphaVsRho, kAlphaVsR, kAlphaVsInvN };

inline PlotKind parse_plot_kind(const std::string& s) {
  if (s == "signal-trace") return PlotKind::kSignalTrace;
  if (s == "alpha-vs-rho") return PlotKind::kAlphaVsRho;
  if (s == "alpha-vs-r") return PlotKind::kAlphaVsR;
  if (s == "alpha-vs-invN") return PlotKind::kAlphaVsInvN;
  throw SchemaError("unknown plot kind '" + s + "'");
}

struct SignalSeries {
  std::string label;
  SarParams params;
  Signal signal;
};

struct FiniteSizeSeries {
  std::string label;
  ExtrapolationFit fit;
  std::optional<double> replica_alpha;
  double replica_stderr = 0.0;
};

using PlotResults =
    std::variant<std::vector<SignalSeries>, SweepResult, std::vector<FiniteSizeSeries>>;

inline constexpr int kFitCurvePoints = 41;

// signal-trace:  series,rho,r,i,x            (i is 1-based)
// alpha-vs-rho:  rho,r,alpha_c,stderr,baseline
// alpha-vs-r:    r,rho,alpha_c,stderr,baseline
// alpha-vs-invN: series,kind,inv_n,alpha_c,stderr
//   kind = data (measured points), fit (quadratic on a grid from 0 to the
//   largest 1/N) or replica (single reference row at inv_n = 0).
inline void emit_plot_data(std::ostream& out, const PlotResults& results, PlotKind kind) {
  switch (kind) {
    case PlotKind::kSignalTrace: {
      const auto* s = std::get_if<std::vector<SignalSeries>>(&results);
      if (!s) throw SchemaError("signal-trace needs signal series");
      out << "series,rho,r,i,x\n";
      for (const auto& ser : *s) {
        check_label(ser.label);
        for (std::size_t i = 0; i < ser.signal.size(); ++i)
          out << ser.label << ',' << format_double(ser.params.rho) << ','
              << format_double(ser.params.r) << ',' << i + 1 << ','
              << format_double(ser.signal[i]) << '\n';
      }
      return;
    }
    case PlotKind::kAlphaVsRho:
    case PlotKind::kAlphaVsR: {
      const auto* s = std::get_if<SweepResult>(&results);
      if (!s) throw SchemaError("alpha-vs-rho/alpha-vs-r need a sweep result");
      const bool by_rho = kind == PlotKind::kAlphaVsRho;
      if (!s->rows.empty() && s->axis != (by_rho ? "rho" : "r"))
        throw SchemaError("sweep over '" + s->axis + "' does not match the requested plot kind");
      out << (by_rho ? "rho,r" : "r,rho") << ",alpha_c,stderr,baseline\n";
      for (const auto& row : s->rows)
        out << format_double(by_rho ? row.rho : row.r) << ','
            << format_double(by_rho ? row.r : row.rho) << ',' << format_double(row.alpha_c)
            << ',' << format_double(row.stderr) << ',' << format_double(row.baseline) << '\n';
      return;
    }
    case PlotKind::kAlphaVsInvN: {
      const auto* s = std::get_if<std::vector<FiniteSizeSeries>>(&results);
      if (!s) throw SchemaError("alpha-vs-invN needs finite-size series");
      out << "series,kind,inv_n,alpha_c,stderr\n";
      for (const auto& ser : *s) {
        check_label(ser.label);
        double max_inv = 0.0;
        for (const auto& p : ser.fit.points_used) {
          max_inv = std::max(max_inv, 1.0 / p.n);
          out << ser.label << ",data," << format_double(1.0 / p.n) << ','
              << format_double(p.alpha_c) << ',' << format_double(p.stderr) << '\n';
        }
        for (int k = 0; k < kFitCurvePoints; ++k) {
          const double u = max_inv * k / (kFitCurvePoints - 1);
          const double v = ser.fit.a0 + ser.fit.a1 * u + ser.fit.a2 * u * u;
          out << ser.label << ",fit," << format_double(u) << ',' << format_double(v) << ','
              << format_double(k == 0 ? ser.fit.stderr_a0 : 0.0) << '\n';
        }
        if (ser.replica_alpha)
          out << ser.label << ",replica,0," << format_double(*ser.replica_alpha) << ','
              << format_double(ser.replica_stderr) << '\n';
      }
      return;
    }
  }
}

}  // namespace sarcs::io
