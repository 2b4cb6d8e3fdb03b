// sarcs: command-line front end.
//
//   sarcs generate    --rho R --r A --n N --seed S [--out x.csv]
//   sarcs replica     --rho R --r A [--n N --samples M ...] --seed S [--out r.json]
//   sarcs baseline    --rho R [--out b.json]
//   sarcs experiment  --rho R --r A --n N [--n N2 ...] --trials T --seed S [--out trials.csv]
//   sarcs extrapolate --in trials.csv [--series label] [--out fit.json]
//   sarcs solve       --matrix F.csv --y y.csv [--method simplex|admm] [--out x.csv]
//   sarcs sweep       --axis rho|r --values v1,v2,... --seed S [--out sweep.csv]
//   sarcs plot-data   --kind signal-trace|alpha-vs-rho|alpha-vs-r|alpha-vs-invN ...
//
// Every output goes to --out, or stdout when --out is absent or "-".

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "sarcs/chain_solver.hpp"
#include "sarcs/experiment.hpp"
#include "sarcs/io.hpp"
#include "sarcs/reconstruct.hpp"
#include "sarcs/replica.hpp"
#include "sarcs/sar_model.hpp"

namespace {

using namespace sarcs;

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw Error("cannot open output file " + path);
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open input file " + path);
  return in;
}

nlohmann::json read_json_file(const std::string& path) {
  auto in = open_input(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

void write_json(const std::string& path, const nlohmann::json& j) {
  Output out(path);
  out.stream() << j.dump(2) << '\n';
}

SolverMethod parse_method(const std::string& m) {
  return m == "admm" ? SolverMethod::kAdmm : SolverMethod::kSimplex;
}

const auto kUnit = CLI::Range(0.0, 1.0);
const auto kMethods = CLI::IsMember({"simplex", "admm"});

struct Common {
  unsigned threads = 0;
};

struct ReplicaFlags {
  double rho = 0.5, r = 0.0;
  ReplicaConfig cfg;
  bool no_stability = false;
  std::string out;

  void add(CLI::App* sub, bool with_params) {
    if (with_params) {
      sub->add_option("--rho", rho, "move probability")->check(kUnit);
      sub->add_option("--r", r, "autoregression coefficient")->check(kUnit);
    }
    sub->add_option("--n", cfg.n, "chain length per Monte Carlo sample")->check(CLI::PositiveNumber);
    sub->add_option("--samples", cfg.samples, "Monte Carlo samples per sweep")->check(CLI::PositiveNumber);
    sub->add_option("--seed", cfg.seed, "random seed")->required();
    sub->add_option("--damping", cfg.damping, "fixed-point damping in (0, 1]");
    sub->add_option("--tol", cfg.tol, "relative settling tolerance");
    sub->add_option("--max-iter", cfg.max_iter, "iteration cap");
    sub->add_option("--window", cfg.averaging_window, "iterates per averaging window");
    sub->add_option("--out", out, "output path");
  }
};

void run_generate(double rho, double r, std::size_t n, std::uint64_t seed, const std::string& out) {
  const Signal s = generate_signal({rho, r}, n, seed);
  Output o(out);
  io::write_signal_csv(o.stream(), s);
}

io::ReplicaRecord run_replica(const SarParams& p, ReplicaConfig cfg, bool stability,
                              unsigned threads) {
  cfg.threads = threads;
  io::ReplicaRecord rec{p, cfg, solve_alpha_c(p, cfg), std::nullopt};
  if (stability && rec.fixed_point.converged) rec.stability = stability_report(p, rec.fixed_point, cfg);
  return rec;
}

std::vector<double> parse_list(const std::string& s, const char* flag) {
  std::vector<double> v;
  for (const auto& cell : io::split_csv_line(s)) {
    try {
      v.push_back(io::parse_double(cell));
    } catch (const SchemaError&) {
      throw CLI::ValidationError(flag, "not a number: '" + cell + "'");
    }
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Critical compression rates for SAR(1) signals"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--threads", common.threads,
                 "worker threads (default: SARCS_THREADS or all cores)")
      ->check(CLI::NonNegativeNumber);

  // generate
  double g_rho = 0.5, g_r = 0.0;
  std::size_t g_n = 0;
  std::uint64_t g_seed = 0;
  std::string g_out;
  auto* gen = app.add_subcommand("generate", "draw a SAR(1) signal");
  gen->add_option("--rho", g_rho)->check(kUnit);
  gen->add_option("--r", g_r)->check(kUnit);
  gen->add_option("--n", g_n)->required()->check(CLI::PositiveNumber);
  gen->add_option("--seed", g_seed)->required();
  gen->add_option("--out", g_out);

  // replica
  ReplicaFlags rf;
  auto* rep = app.add_subcommand("replica", "critical rate from the replica fixed point");
  rf.add(rep, true);
  rep->add_flag("--no-stability", rf.no_stability, "skip the stability metric sweep");

  // baseline
  double b_rho = 0.5;
  std::string b_out;
  auto* base = app.add_subcommand("baseline", "plain l1 critical rate for i.i.d. sparse signals");
  base->add_option("--rho", b_rho)->required()->check(CLI::Range(0.0, 1.0));
  base->add_option("--out", b_out);

  // experiment
  double e_rho = 0.5, e_r = 0.0;
  std::vector<std::size_t> e_ns;
  std::size_t e_trials = 0;
  std::uint64_t e_seed = 0;
  std::string e_method = "simplex", e_out;
  bool e_penalize_first = false;
  auto* exp = app.add_subcommand("experiment", "row-deletion trials");
  exp->add_option("--rho", e_rho)->check(kUnit);
  exp->add_option("--r", e_r)->check(kUnit);
  exp->add_option("--n", e_ns, "signal length (repeatable)")->required()->check(CLI::Range(2ul, 1ul << 20));
  exp->add_option("--trials", e_trials)->required()->check(CLI::Range(2ul, 1ul << 30));
  exp->add_option("--seed", e_seed)->required();
  exp->add_option("--method", e_method)->check(kMethods);
  exp->add_flag("--penalize-first", e_penalize_first, "include |x_1| in the cost");
  exp->add_option("--out", e_out);

  // extrapolate
  std::string x_in, x_out, x_series;
  auto* ext = app.add_subcommand("extrapolate", "quadratic fit in 1/N");
  ext->add_option("--in", x_in, "trials or points CSV")->required();
  ext->add_option("--series", x_series, "label stored in the fit record");
  ext->add_option("--out", x_out);

  // solve
  std::string s_matrix, s_y, s_method = "simplex", s_out;
  bool s_penalize_first = false;
  auto* sol = app.add_subcommand("solve", "difference-l1 reconstruction of one instance");
  sol->add_option("--matrix", s_matrix, "F as headerless CSV")->required();
  sol->add_option("--y", s_y, "measurements, CSV column 'y'")->required();
  sol->add_option("--method", s_method)->check(kMethods);
  sol->add_flag("--penalize-first", s_penalize_first);
  sol->add_option("--out", s_out);

  // sweep
  std::string w_axis, w_values;
  ReplicaFlags wf;
  auto* swp = app.add_subcommand("sweep", "replica critical rate over a grid of rho or r");
  swp->add_option("--axis", w_axis)->required()->check(CLI::IsMember({"rho", "r"}));
  swp->add_option("--values", w_values, "comma-separated grid")->required();
  wf.add(swp, true);

  // plot-data
  std::string p_kind, p_in, p_out;
  std::vector<std::string> p_fits, p_replicas;
  std::size_t p_n = 200;
  std::uint64_t p_seed = 0;
  auto* plot = app.add_subcommand("plot-data", "tidy CSV for the plotting scripts");
  plot->add_option("--kind", p_kind)
      ->required()
      ->check(CLI::IsMember({"signal-trace", "alpha-vs-rho", "alpha-vs-r", "alpha-vs-invN"}));
  plot->add_option("--in", p_in, "sweep CSV (alpha-vs-rho, alpha-vs-r)");
  plot->add_option("--fit", p_fits, "fit JSON (alpha-vs-invN, repeatable)");
  plot->add_option("--replica", p_replicas, "replica JSON matched to --fit by position");
  plot->add_option("--n", p_n, "trace length (signal-trace)")->check(CLI::PositiveNumber);
  auto* p_seed_opt = plot->add_option("--seed", p_seed, "seed (signal-trace)");
  plot->add_option("--out", p_out);

  CLI11_PARSE(app, argc, argv);

  try {
    const unsigned threads = resolve_threads(common.threads);

    if (*gen) {
      run_generate(g_rho, g_r, g_n, g_seed, g_out);
    } else if (*rep) {
      const auto rec = run_replica({rf.rho, rf.r}, rf.cfg, !rf.no_stability, threads);
      write_json(rf.out, io::replica_to_json(rec));
    } else if (*base) {
      write_json(b_out, io::baseline_to_json(b_rho, baseline_fixed_point(b_rho)));
    } else if (*exp) {
      SolverSettings settings;
      settings.method = parse_method(e_method);
      settings.penalize_first = e_penalize_first;
      std::vector<TrialRecord> all;
      for (std::size_t k = 0; k < e_ns.size(); ++k) {
        // Each size gets its own seed stream so adding a size leaves the
        // others unchanged.
        const auto est = estimate_alpha_c_at_n(e_ns[k], e_trials, {e_rho, e_r}, settings,
                                               stream_seed(e_seed, e_ns[k]), threads);
        all.insert(all.end(), est.records.begin(), est.records.end());
      }
      Output o(e_out);
      io::write_trials_csv(o.stream(), all);
    } else if (*ext) {
      auto in = open_input(x_in);
      const auto fit = extrapolate(io::read_fit_input_csv(in));
      const std::string series =
          x_series.empty() ? std::filesystem::path(x_in).stem().string() : x_series;
      write_json(x_out, io::fit_to_json(fit, series));
    } else if (*sol) {
      auto fin = open_input(s_matrix);
      auto yin = open_input(s_y);
      const Eigen::MatrixXd f = io::read_matrix_csv(fin);
      const auto yv = io::read_column_csv(yin, "y");
      if (static_cast<Eigen::Index>(yv.size()) != f.rows())
        throw ShapeError("--y length does not match the rows of --matrix");
      ReconstructionProblem prob;
      prob.f = f;
      prob.y = Eigen::Map<const Eigen::VectorXd>(yv.data(), f.rows());
      SolverSettings settings;
      settings.method = parse_method(s_method);
      settings.penalize_first = s_penalize_first;
      const auto x = solve_l1_diff(prob, settings);
      Output o(s_out);
      io::write_column_csv(o.stream(), "x", x.x_star);
    } else if (*swp) {
      io::SweepResult res{w_axis, {}};
      for (double v : parse_list(w_values, "--values")) {
        if (v < 0.0 || v > 1.0)
          throw CLI::ValidationError("--values", "grid value outside [0, 1]");
        SarParams p{wf.rho, wf.r};
        (w_axis == "rho" ? p.rho : p.r) = v;
        const auto rec = run_replica(p, wf.cfg, false, threads);
        const double base_alpha =
            p.rho > 0.0 && p.rho < 1.0 ? baseline_alpha_c(p.rho) : p.rho;
        res.rows.push_back({p.rho, p.r, rec.fixed_point.alpha, rec.fixed_point.alpha_stderr,
                            base_alpha, rec.fixed_point.converged});
      }
      Output o(wf.out);
      io::write_sweep_csv(o.stream(), res);
    } else if (*plot) {
      const io::PlotKind kind = io::parse_plot_kind(p_kind);
      io::PlotResults results;
      if (kind == io::PlotKind::kSignalTrace) {
        if (p_seed_opt->count() == 0)
          throw CLI::RequiredError("--seed");
        std::vector<io::SignalSeries> series;
        const SarParams cases[] = {{0.5, 0.0}, {0.5, 0.5}, {1.0, 0.0}};
        for (std::size_t k = 0; k < 3; ++k) {
          const auto& p = cases[k];
          series.push_back({"rho" + io::format_double(p.rho) + "_r" + io::format_double(p.r), p,
                            generate_signal(p, p_n, stream_seed(p_seed, k))});
        }
        results = std::move(series);
      } else if (kind == io::PlotKind::kAlphaVsInvN) {
        if (p_fits.empty()) throw CLI::RequiredError("--fit");
        if (!p_replicas.empty() && p_replicas.size() != p_fits.size())
          throw CLI::ValidationError("--replica", "give one replica record per --fit or none");
        std::vector<io::FiniteSizeSeries> series;
        for (std::size_t k = 0; k < p_fits.size(); ++k) {
          const auto j = read_json_file(p_fits[k]);
          io::FiniteSizeSeries s;
          s.fit = io::fit_from_json(j);
          s.label = j.value("series", std::string{});
          if (s.label.empty()) s.label = std::filesystem::path(p_fits[k]).stem().string();
          if (!p_replicas.empty()) {
            const auto r = io::replica_from_json(read_json_file(p_replicas[k]));
            s.replica_alpha = r.fixed_point.alpha;
            s.replica_stderr = r.fixed_point.alpha_stderr;
          }
          series.push_back(std::move(s));
        }
        results = std::move(series);
      } else {
        if (p_in.empty()) throw CLI::RequiredError("--in");
        auto in = open_input(p_in);
        results = io::read_sweep_csv(in);
      }
      Output o(p_out);
      io::emit_plot_data(o.stream(), results, kind);
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const sarcs::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed record: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
