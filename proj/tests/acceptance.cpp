// Acceptance gate: one PASS/FAIL line per criterion, tolerances fixed here.
// Exit status is non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sarcs/chain_solver.hpp"
#include "sarcs/experiment.hpp"
#include "sarcs/reconstruct.hpp"
#include "sarcs/replica.hpp"

using namespace sarcs;

namespace {

// Reference values and tolerances.
constexpr double kReplicaR0 = 0.8491, kReplicaR05 = 0.8412, kReplicaTol = 0.005;
constexpr double kBaseline = 0.8312, kBaselineTol = 0.002, kBaselineSeconds = 1.0;
constexpr double kOrderingSigmas = 2.0;
constexpr double kExtrapolationTol = 0.02;
constexpr std::size_t kTrialsPerSize = 200;
constexpr double kChainTol = 1e-6, kChainCertTol = 1e-8;
constexpr double kLimitTol = 1e-4, kLimitEps = 1e-6;
constexpr double kAtRelTol = 1e-4;
constexpr double kHighAlpha = 0.95, kLowAlpha = 0.70, kHighRate = 0.95, kLowRate = 0.05;
constexpr std::uint64_t kSeed = 20240601;

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::printf("%s  %-34s %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ReplicaFixedPoint replica(double r) {
  ReplicaConfig cfg;  // n = 2000, samples = 1000
  cfg.seed = kSeed;
  const auto t0 = std::chrono::steady_clock::now();
  const auto fp = solve_alpha_c({0.5, r}, cfg);
  std::printf("      replica r=%.1f: alpha_c=%.5f +- %.5f chi_hat=%.4f iterations=%zu converged=%d (%.0f s)\n",
              r, fp.alpha, fp.alpha_stderr, fp.chi_hat, fp.iterations, fp.converged ? 1 : 0,
              seconds_since(t0));
  if (fp.converged) {
    const auto st = stability_report({0.5, r}, fp, cfg);
    std::printf("      stability metric r=%.1f: %.5f +- %.5f (recorded only)\n", r, st.metric, st.stderr);
  }
  return fp;
}

void chain_oracle_suite() {
  RandomStream rng(kSeed, 1);
  double worst = 0.0, worst_cert = 0.0;
  for (int inst = 0; inst < 1000; ++inst) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 10);
    const double q = 0.1 + 4.0 * rng.uniform();
    std::vector<double> h(n);
    for (auto& v : h) v = 2.5 * rng.normal();
    const auto x = solve_chain({h, q});
    const auto ref = oracle::chain_dual_pg(h, q);
    for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(x[i] - ref[i]));
    worst_cert = std::max(worst_cert, oracle::chain_certificate(h, q, x));
  }
  report(worst <= kChainTol && worst_cert <= kChainCertTol, "chain solver oracle (1000, N<=10)",
         fmt("max |x - oracle| = %.2e (tol %.0e), max certificate violation = %.2e (tol %.0e)", worst,
             kChainTol, worst_cert, kChainCertTol));
}

void limit_chain_suite() {
  RandomStream rng(kSeed, 2);
  double worst = 0.0;
  for (int inst = 0; inst < 500; ++inst) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 200);
    const SarParams p{0.1 + 0.9 * rng.uniform(), rng.uniform()};
    const Signal x0 = generate_signal(p, n, stream_seed(kSeed, 1000 + inst));
    std::vector<double> z(n), g(n);
    const double chi = 0.1 + 20.0 * rng.uniform();
    for (std::size_t i = 0; i < n; ++i) {
      z[i] = rng.normal();
      g[i] = std::sqrt(chi) * z[i];
    }
    const auto xh = solve_limit_chain({x0, z, chi});
    const auto ref = oracle::limit_chain_smoothed(x0.values, g, kLimitEps);
    for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(xh[i] - ref[i]));
  }
  report(worst <= kLimitTol, "limit chain vs eps-oracle (500)",
         fmt("max |xhat - oracle| = %.2e (tol %.0e, eps %.0e)", worst, kLimitTol, kLimitEps));
}

void at_metric_suite() {
  RandomStream rng(kSeed, 3);
  int checked = 0;
  double worst = 0.0;
  while (checked < 100) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 50);
    const double q = 0.2 + 2.0 * rng.uniform();
    std::vector<double> h(n);
    for (auto& v : h) v = 2.0 * rng.normal();
    const ChainProblem p{h, q};
    const auto x = solve_chain(p);
    const auto u = oracle::chain_multipliers(h, q, x);
    bool degenerate = false;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double d = std::abs(x[i + 1] - x[i]);
      if ((d == 0.0 && std::abs(u[i]) > 1.0 - 1e-3) || (d != 0.0 && d < 1e-3)) degenerate = true;
    }
    if (degenerate) continue;
    ++checked;
    const auto jac = oracle::fd_jacobian([q](const std::vector<double>& hh) { return solve_chain({hh, q}); }, h, 1e-6);
    const double fro = jac.squaredNorm() / static_cast<double>(n);
    worst = std::max(worst, std::abs(at_metric(p, x) - fro) / fro);
  }
  report(worst <= kAtRelTol, "AT metric vs FD Jacobian (100)",
         fmt("max relative error = %.2e (tol %.0e)", worst, kAtRelTol));
}

void sharp_transition() {
  const std::size_t n = 256;
  auto rate = [&](double alpha, std::uint64_t stream) {
    const auto p = static_cast<std::size_t>(std::lround(alpha * n));
    const auto ok = parallel_map<int>(100, resolve_threads(0), [&](std::size_t t) {
      const std::uint64_t seed = stream_seed(stream_seed(kSeed, stream), t);
      const auto prob = make_problem(gaussian_matrix(n, n, seed).topRows(static_cast<Eigen::Index>(p)),
                                     generate_signal({0.5, 0.0}, n, seed));
      return recovery_success(solve_l1_diff(prob).x_star, prob.x0) ? 1 : 0;
    });
    int s = 0;
    for (int v : ok) s += v;
    return s / 100.0;
  };
  const double hi = rate(kHighAlpha, 4), lo = rate(kLowAlpha, 5);
  report(hi >= kHighRate && lo <= kLowRate, "sharp transition N=256",
         fmt("success %.2f at alpha=%.2f (need >= %.2f), %.2f at alpha=%.2f (need <= %.2f)", hi, kHighAlpha,
             kHighRate, lo, kLowAlpha, kLowRate));
}

double extrapolated(double r) {
  std::vector<FitPoint> pts;
  std::string detail;
  for (std::size_t n : {64u, 128u, 256u}) {
    const auto e = estimate_alpha_c_at_n(n, kTrialsPerSize, {0.5, r}, {}, stream_seed(kSeed, n));
    pts.push_back({static_cast<double>(n), e.alpha_c_n, e.stderr});
    std::printf("      r=%.1f N=%zu: alpha_c(N)=%.4f +- %.4f (aborted %zu)\n", r, n, e.alpha_c_n, e.stderr,
                e.aborted);
  }
  const auto fit = extrapolate(pts);
  std::printf("      r=%.1f intercept %.4f +- %.4f\n", r, fit.alpha_c_inf, fit.stderr_a0);
  return fit.alpha_c_inf;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("sarcs_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::string cmds[] = {
      "generate --rho 0.5 --r 0.5 --n 2000 --seed 11",
      "replica --rho 0.5 --r 0 --n 200 --samples 50 --max-iter 80 --seed 11",
      "experiment --rho 0.5 --r 0.5 --n 24 --n 32 --n 48 --trials 8 --seed 11",
      "sweep --axis rho --values 0.3,0.7 --r 0 --n 100 --samples 20 --max-iter 50 --seed 11",
      "plot-data --kind signal-trace --n 100 --seed 11",
  };
  int same = 0, total = 0;
  for (const auto& c : cmds) {
    std::string first;
    bool ok = true;
    for (const char* threads : {"--threads 1", "--threads 1", "--threads 4"}) {
      const fs::path out = dir / "out";
      const std::string cmd =
          std::string("\"" SARCS_CLI_PATH "\" ") + threads + " " + c + " --out \"" + out.string() + "\"";
      if (std::system(cmd.c_str()) != 0) {
        ok = false;
        break;
      }
      const std::string bytes = slurp(out);
      if (first.empty()) first = bytes;
      ok = ok && !bytes.empty() && bytes == first;
    }
    same += ok;
    ++total;
  }
  fs::remove_all(dir);
  report(same == total, "determinism (CLI byte identity)",
         fmt("%d/%d stochastic subcommands byte-identical across reruns and thread counts", same, total));
}

}  // namespace

int main() {
  std::printf("acceptance suite (threads=%u)\n", resolve_threads(0));

  const auto tb = std::chrono::steady_clock::now();
  const double base = baseline_alpha_c(0.5);
  const double base_s = seconds_since(tb);
  report(std::abs(base - kBaseline) <= kBaselineTol && base_s < kBaselineSeconds, "baseline rho=0.5",
         fmt("alpha_c = %.10f (target %.4f +- %.3f), %.2e s", base, kBaseline, kBaselineTol, base_s));

  const auto r0 = replica(0.0);
  report(r0.converged && std::abs(r0.alpha - kReplicaR0) <= kReplicaTol, "replica alpha_c r=0",
         fmt("%.5f +- %.5f (target %.4f +- %.3f)", r0.alpha, r0.alpha_stderr, kReplicaR0, kReplicaTol));
  const auto r5 = replica(0.5);
  report(r5.converged && std::abs(r5.alpha - kReplicaR05) <= kReplicaTol, "replica alpha_c r=0.5",
         fmt("%.5f +- %.5f (target %.4f +- %.3f)", r5.alpha, r5.alpha_stderr, kReplicaR05, kReplicaTol));

  const double gap_base = r0.alpha - base;
  const double gap_r = r0.alpha - r5.alpha;
  const double se_r = std::hypot(r0.alpha_stderr, r5.alpha_stderr);
  report(gap_base > kOrderingSigmas * r0.alpha_stderr && gap_r > kOrderingSigmas * se_r, "ordering",
         fmt("SAR(r=0) - baseline = %.5f (%.1f sigma), r=0 - r=0.5 = %.5f (%.1f sigma); need > %.0f sigma",
             gap_base, gap_base / r0.alpha_stderr, gap_r, gap_r / se_r, kOrderingSigmas));

  chain_oracle_suite();
  limit_chain_suite();
  at_metric_suite();
  sharp_transition();

  const auto te = std::chrono::steady_clock::now();
  const double e0 = extrapolated(0.0), e5 = extrapolated(0.5);
  report(std::abs(e0 - r0.alpha) <= kExtrapolationTol && std::abs(e5 - r5.alpha) <= kExtrapolationTol,
         "desk-scale extrapolation",
         fmt("r=0: %.4f vs replica %.4f (|d|=%.4f); r=0.5: %.4f vs %.4f (|d|=%.4f); tol %.2f; %.0f s", e0,
             r0.alpha, std::abs(e0 - r0.alpha), e5, r5.alpha, std::abs(e5 - r5.alpha), kExtrapolationTol,
             seconds_since(te)));

  determinism();

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
