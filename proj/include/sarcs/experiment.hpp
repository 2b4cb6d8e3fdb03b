#pragma once

// Empirical critical rate by row deletion. A trial draws a signal and a
// square Gaussian matrix, then removes measurement rows one at a time,
// re-solving from the previous basis, until recovery first fails at P
// rows; it records P_c = P + 1. Averages of P_c / N over trials give
// alpha_c(N), which is extrapolated to N -> infinity by a quadratic in 1/N.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sarcs/error.hpp"
#include "sarcs/parallel.hpp"
#include "sarcs/random.hpp"
#include "sarcs/reconstruct.hpp"
#include "sarcs/sar_model.hpp"

namespace sarcs {

enum class TrialStatus { kOk, kAborted };

inline const char* to_string(TrialStatus s) { return s == TrialStatus::kOk ? "ok" : "aborted"; }

struct TrialRecord {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::size_t pc = 0;
  std::size_t solver_retries = 0;
  TrialStatus status = TrialStatus::kOk;
  std::string error;
  // Success flag per row count, from P = n downwards; filled on request.
  std::vector<bool> path;
};

enum class DeletionOrder { kLast, kRandom };

struct TrialOptions {
  double threshold = kRecoveryThreshold;
  FailureNorm norm = FailureNorm::kL2;
  DeletionOrder order = DeletionOrder::kLast;
  bool record_path = false;
};

inline constexpr std::uint64_t kMatrixStream = 1;
inline constexpr std::uint64_t kPermutationStream = 2;

// n x n matrix with i.i.d. N(0, 1/n) entries, filled row by row.
inline Eigen::MatrixXd gaussian_matrix(std::size_t rows, std::size_t n, std::uint64_t seed) {
  RandomStream rng(seed, kMatrixStream);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  Eigen::MatrixXd f(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < f.rows(); ++i)
    for (Eigen::Index j = 0; j < f.cols(); ++j) f(i, j) = scale * rng.normal();
  return f;
}

namespace detail {

inline SolverSettings tightened(SolverSettings s) {
  s.feas_tol *= 0.1;
  s.opt_tol *= 0.1;
  return s;
}

inline bool certified(const L1DiffSolution& sol, const SolverSettings& s) {
  return sol.certificate.feasibility <= s.feas_tol &&
         (s.method != SolverMethod::kSimplex || sol.certificate.relative_gap <= s.opt_tol);
}

}  // namespace detail

inline TrialRecord run_trial(std::size_t n, const SarParams& params,
                             const SolverSettings& settings, std::uint64_t seed,
                             const TrialOptions& options = {}) {
  if (n < 2) throw DomainError("trial length n must be at least 2");
  params.validate();
  settings.validate();

  TrialRecord rec;
  rec.n = n;
  rec.seed = seed;
  const Signal x0 = generate_signal(params, n, seed);
  Eigen::MatrixXd f = gaussian_matrix(n, n, seed);
  if (options.order == DeletionOrder::kRandom) {
    // Deleting the last row of a randomly permuted matrix is deleting rows
    // in random order.
    std::vector<Eigen::Index> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    RandomStream rng(seed, kPermutationStream);
    for (std::size_t i = n - 1; i > 0; --i) {
      const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i + 1));
      std::swap(perm[i], perm[std::min(j, i)]);
    }
    Eigen::MatrixXd shuffled(f.rows(), f.cols());
    for (std::size_t i = 0; i < n; ++i) shuffled.row(static_cast<Eigen::Index>(i)) = f.row(perm[i]);
    f = std::move(shuffled);
  }
  const Eigen::VectorXd y =
      f * Eigen::Map<const Eigen::VectorXd>(x0.values.data(), static_cast<Eigen::Index>(n));

  auto solve_cold = [&](std::size_t rows, const SolverSettings& s) {
    const auto p = static_cast<Eigen::Index>(rows);
    if (s.method == SolverMethod::kAdmm)
      return solve_l1_diff_admm(f.topRows(p), y.head(p), s);
    DifferenceL1Simplex cold(f.topRows(p), y.head(p), s);
    return cold.solve();
  };

  std::optional<DifferenceL1Simplex> solver;
  if (settings.method == SolverMethod::kSimplex) solver.emplace(f, y, settings);

  for (std::size_t p = n;; --p) {
    L1DiffSolution sol;
    bool ok = false;
    try {
      sol = solver ? solver->solve() : solve_cold(p, settings);
      ok = detail::certified(sol, settings);
    } catch (const SolverFailure&) {
      ok = false;
    }
    if (!ok) {
      ++rec.solver_retries;
      const SolverSettings strict = detail::tightened(settings);
      try {
        sol = solve_cold(p, strict);
        ok = detail::certified(sol, strict);
        if (!ok) rec.error = "certificate outside tolerance after cold retry";
      } catch (const SolverFailure& e) {
        rec.error = e.what();
      }
      if (!ok) {
        rec.status = TrialStatus::kAborted;
        rec.pc = 0;
        return rec;
      }
      // Continue the trajectory from a fresh basis.
      if (solver) {
        solver.emplace(f.topRows(static_cast<Eigen::Index>(p)),
                       y.head(static_cast<Eigen::Index>(p)), settings);
        solver->solve();
      }
    }

    const bool success = recovery_success(sol.x_star, x0, options.threshold, options.norm);
    if (options.record_path) rec.path.push_back(success);
    if (!success) {
      rec.pc = p + 1;
      return rec;
    }
    if (p == 1) {
      // With no rows left the constant level is undetermined.
      rec.pc = 1;
      return rec;
    }
    if (solver) solver->drop_last_row();
  }
}

struct AlphaEstimate {
  double alpha_c_n = 0.0;
  double stderr = 0.0;
  std::size_t trials_used = 0;
  std::size_t aborted = 0;
  std::vector<TrialRecord> records;
};

// Mean and standard error of P_c / n over the non-aborted records.
inline AlphaEstimate aggregate_trials(std::vector<TrialRecord> records, std::size_t n) {
  AlphaEstimate est;
  std::vector<double> ratios;
  for (const auto& r : records) {
    if (r.status == TrialStatus::kAborted) {
      ++est.aborted;
      continue;
    }
    ratios.push_back(static_cast<double>(r.pc) / static_cast<double>(n));
  }
  est.trials_used = ratios.size();
  if (!ratios.empty()) {
    const double m = static_cast<double>(ratios.size());
    est.alpha_c_n = std::accumulate(ratios.begin(), ratios.end(), 0.0) / m;
    if (ratios.size() > 1) {
      double ss = 0.0;
      for (double v : ratios) ss += (v - est.alpha_c_n) * (v - est.alpha_c_n);
      est.stderr = std::sqrt(ss / (m - 1.0) / m);
    }
  }
  est.records = std::move(records);
  return est;
}

inline constexpr double kMaxAbortFraction = 0.05;

inline AlphaEstimate estimate_alpha_c_at_n(std::size_t n, std::size_t trials,
                                           const SarParams& params,
                                           const SolverSettings& settings,
                                           std::uint64_t seed, unsigned threads = 0,
                                           const TrialOptions& options = {}) {
  if (trials < 2) throw DomainError("need at least 2 trials");
  auto records = parallel_map<TrialRecord>(trials, resolve_threads(threads), [&](std::size_t t) {
    return run_trial(n, params, settings, stream_seed(seed, t), options);
  });
  AlphaEstimate est = aggregate_trials(std::move(records), n);
  if (static_cast<double>(est.aborted) > kMaxAbortFraction * static_cast<double>(trials)) {
    std::ostringstream os;
    os << est.aborted << " of " << trials << " trials aborted at n=" << n
       << " (limit " << kMaxAbortFraction * 100.0 << "%)";
    throw SolverFailure(os.str());
  }
  return est;
}

// ---------------------------------------------------------------------------
// Finite-size extrapolation.
// ---------------------------------------------------------------------------

struct FitPoint {
  double n = 0.0;
  double alpha_c = 0.0;
  double stderr = 0.0;
};

struct ExtrapolationFit {
  double a0 = 0.0, a1 = 0.0, a2 = 0.0;  // alpha_c(N) ~ a0 + a1/N + a2/N^2
  double alpha_c_inf = 0.0;
  double stderr_a0 = 0.0;
  bool weighted = true;
  std::vector<FitPoint> points_used;

  double evaluate(double n) const { return a0 + a1 / n + a2 / (n * n); }
};

// Least squares on (1, 1/N, 1/N^2) with weights 1/stderr^2. If any stderr is
// zero the fit falls back to equal weights.
inline ExtrapolationFit extrapolate(const std::vector<FitPoint>& points) {
  if (points.size() < 3) {
    std::ostringstream os;
    os << "quadratic extrapolation needs at least 3 points, got " << points.size();
    throw ArityError(os.str());
  }
  std::set<double> distinct;
  double n_min = points.front().n;
  bool weighted = true;
  for (const auto& p : points) {
    if (!(p.n > 0.0)) throw DomainError("extrapolation sizes must be positive");
    distinct.insert(p.n);
    n_min = std::min(n_min, p.n);
    if (!(p.stderr > 0.0)) weighted = false;
  }
  if (distinct.size() < 3)
    throw ConditioningError("quadratic extrapolation needs at least 3 distinct sizes");

  // Columns in u = n_min / N keep the design well scaled.
  const auto m = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd x(m, 3);
  Eigen::VectorXd b(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& p = points[static_cast<std::size_t>(i)];
    const double u = n_min / p.n;
    const double sw = weighted ? 1.0 / p.stderr : 1.0;
    x(i, 0) = sw;
    x(i, 1) = sw * u;
    x(i, 2) = sw * u * u;
    b(i) = sw * p.alpha_c;
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < 3) throw ConditioningError("extrapolation design is rank deficient");
  const Eigen::Vector3d c = qr.solve(b);

  const Eigen::Matrix3d xtx_inv = (x.transpose() * x).inverse();
  double var0 = xtx_inv(0, 0);
  if (!weighted) {
    const double rss = (x * c - b).squaredNorm();
    var0 *= m > 3 ? rss / static_cast<double>(m - 3) : 0.0;
  }

  ExtrapolationFit fit;
  fit.a0 = c(0);
  fit.a1 = c(1) * n_min;
  fit.a2 = c(2) * n_min * n_min;
  fit.alpha_c_inf = fit.a0;
  fit.stderr_a0 = std::sqrt(std::max(0.0, var0));
  fit.weighted = weighted;
  fit.points_used = points;
  return fit;
}

}  // namespace sarcs
