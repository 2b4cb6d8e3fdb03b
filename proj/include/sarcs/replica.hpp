#pragma once

// Critical compression rate from the chi -> 0 limit of the replica
// symmetric saddle point. With xhat the limit-chain solution driven by a
// signal x0 and a standard normal field z,
//
//     chi_hat = E[(1/N) |xhat|^2] / alpha
//     alpha   = E[(1/N) z . xhat] / sqrt(chi_hat)
//
// jointly fix (alpha_c, chi_hat). The expectations are Monte Carlo
// averages; the pair is found by damped fixed-point iteration.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <utility>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "sarcs/chain_solver.hpp"
#include "sarcs/error.hpp"
#include "sarcs/parallel.hpp"
#include "sarcs/random.hpp"
#include "sarcs/sar_model.hpp"
#include "sarcs/transforms.hpp"

namespace sarcs {

struct ReplicaConfig {
  std::size_t n = 2000;
  std::size_t samples = 1000;
  double damping = 0.5;
  double tol = 1e-4;
  std::size_t max_iter = 500;
  std::uint64_t seed = 0;
  // Classify the pause edges of x0 from its increments S^{-1} x0.
  bool increment_coordinates = true;
  // Iterates averaged into the reported fixed point once settled.
  std::size_t averaging_window = 20;
  double alpha_init = 0.9;
  double chi_hat_init = 1.0;
  unsigned threads = 0;

  void validate() const {
    if (n < 2) throw DomainError("replica n must be at least 2");
    if (samples < 2) throw DomainError("replica samples must be at least 2");
    if (!(damping > 0.0 && damping <= 1.0))
      throw DomainError("damping must lie in (0, 1]");
    if (!(tol > 0.0)) throw DomainError("tol must be positive");
    if (max_iter < 1) throw DomainError("max_iter must be at least 1");
    if (averaging_window < 1) throw DomainError("averaging_window must be >= 1");
    if (!(alpha_init > 0.0) || !(chi_hat_init > 0.0))
      throw DomainError("initial alpha and chi_hat must be positive");
  }
};

// Sample means of the per-sample averages with their standard errors.
struct MomentEstimate {
  double s2 = 0.0;  // E[(1/N) sum xhat^2]
  double sz = 0.0;  // E[(1/N) sum z xhat]
  double s2_stderr = 0.0;
  double sz_stderr = 0.0;
  double block_fraction = 0.0;  // E[#blocks / N] of the limit minimizer
  double block_fraction_stderr = 0.0;
};

struct ReplicaFixedPoint {
  double alpha = 0.0;
  double chi_hat = 0.0;
  double alpha_stderr = 0.0;
  double chi_hat_stderr = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  double last_change = 0.0;  // relative change of the final update
};

namespace detail {

inline std::pair<double, double> mean_stderr(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

struct SampleMoments {
  double s2, sz, blocks;
};

}  // namespace detail

inline MomentEstimate mc_moments(const SarParams& params, double chi_hat,
                                 const ReplicaConfig& cfg,
                                 std::uint64_t sweep_seed) {
  params.validate();
  cfg.validate();
  if (!(chi_hat > 0.0) || !std::isfinite(chi_hat))
    throw DomainError("chi_hat must be positive and finite");
  const std::size_t n = cfg.n;

  auto per_sample = [&](std::size_t i) {
    const std::uint64_t key = stream_seed(sweep_seed, i);
    const Signal x0 = generate_signal(params, n, key);
    RandomStream field(key, 1);
    std::vector<double> z(n);
    for (auto& v : z) v = field.normal();
    const auto edges = cfg.increment_coordinates
                           ? classify_edges_from_increments(
                                 difference_transform(x0.values))
                           : classify_edges(x0.values);
    std::vector<double> xhat(n);
    ChainWorkspace ws;
    solve_limit_chain(edges, z, chi_hat, xhat, ws);
    double s2 = 0.0, sz = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      s2 += xhat[j] * xhat[j];
      sz += z[j] * xhat[j];
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    return detail::SampleMoments{
        s2 * inv_n, sz * inv_n,
        static_cast<double>(count_limit_blocks(edges, xhat)) * inv_n};
  };

  const auto results = parallel_map<detail::SampleMoments>(
      cfg.samples, resolve_threads(cfg.threads), per_sample);

  std::vector<double> s2(results.size()), sz(results.size()), bl(results.size());
  for (std::size_t i = 0; i < results.size(); ++i) {
    s2[i] = results[i].s2;
    sz[i] = results[i].sz;
    bl[i] = results[i].blocks;
  }
  MomentEstimate m;
  std::tie(m.s2, m.s2_stderr) = detail::mean_stderr(s2);
  std::tie(m.sz, m.sz_stderr) = detail::mean_stderr(sz);
  std::tie(m.block_fraction, m.block_fraction_stderr) = detail::mean_stderr(bl);
  return m;
}

// Damped iteration chi_hat <- s2/alpha, alpha <- sz/sqrt(chi_hat) with a
// fresh Monte Carlo sweep per step. The map contracts slowly (about 0.95
// per damped step near the fixed point), so a single-step change says
// little about the distance left. Instead the means of the last two windows
// of averaging_window iterates are compared; the iteration is settled once
// they differ by less than tol plus twice the sampling noise of their
// difference. The reported point averages the next window.
inline ReplicaFixedPoint solve_alpha_c(const SarParams& params,
                                       const ReplicaConfig& cfg) {
  params.validate();
  cfg.validate();
  const double g = cfg.damping;
  const std::size_t w = cfg.averaging_window;
  double alpha = cfg.alpha_init;
  double chi = cfg.chi_hat_init;

  std::vector<double> hist_alpha, hist_chi, hist_alpha_target, hist_chi_target;
  auto window = [w](const std::vector<double>& v, std::size_t end) {
    return detail::mean_stderr(
        std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(end - w),
                            v.begin() + static_cast<std::ptrdiff_t>(end)));
  };

  ReplicaFixedPoint fp;
  std::size_t settled_at = 0;
  for (std::size_t it = 1; it <= cfg.max_iter; ++it) {
    const MomentEstimate m = mc_moments(params, chi, cfg, stream_seed(cfg.seed, it));
    const double alpha_target = m.sz / std::sqrt(chi);
    const double chi_target = m.s2 / alpha;
    if (!(alpha_target > 0.0) || !(chi_target > 0.0) ||
        !std::isfinite(alpha_target) || !std::isfinite(chi_target)) {
      fp.alpha = alpha;
      fp.chi_hat = chi;
      fp.iterations = it;
      fp.converged = false;
      return fp;
    }
    const double new_alpha = (1.0 - g) * alpha + g * alpha_target;
    const double new_chi = (1.0 - g) * chi + g * chi_target;
    fp.last_change = std::max(std::abs(new_alpha - alpha) / alpha,
                              std::abs(new_chi - chi) / chi);
    alpha = new_alpha;
    chi = new_chi;
    fp.iterations = it;
    hist_alpha.push_back(alpha);
    hist_chi.push_back(chi);
    hist_alpha_target.push_back(alpha_target);
    hist_chi_target.push_back(chi_target);

    if (settled_at == 0 && it >= 2 * w) {
      const double a1_se = window(hist_alpha_target, it - w).second;
      const double a2_se = window(hist_alpha_target, it).second;
      const double c1_se = window(hist_chi_target, it - w).second;
      const double c2_se = window(hist_chi_target, it).second;
      const double da = std::abs(window(hist_alpha, it).first -
                                 window(hist_alpha, it - w).first) / alpha;
      const double dc = std::abs(window(hist_chi, it).first -
                                 window(hist_chi, it - w).first) / chi;
      const double na = 2.0 * std::hypot(a1_se, a2_se) / alpha;
      const double nc = 2.0 * std::hypot(c1_se, c2_se) / chi;
      if (da < cfg.tol + na && dc < cfg.tol + nc) settled_at = it;
    } else if (settled_at != 0 && it == settled_at + w) {
      fp.alpha = window(hist_alpha, it).first;
      fp.chi_hat = window(hist_chi, it).first;
      fp.alpha_stderr = window(hist_alpha_target, it).second;
      fp.chi_hat_stderr = window(hist_chi_target, it).second;
      fp.converged = fp.alpha > 0.0 && fp.alpha <= 1.0 && fp.chi_hat > 0.0;
      return fp;
    }
  }
  const std::size_t it = hist_alpha.size();
  if (it >= w) {
    fp.alpha = window(hist_alpha, it).first;
    fp.chi_hat = window(hist_chi, it).first;
    fp.alpha_stderr = window(hist_alpha_target, it).second;
    fp.chi_hat_stderr = window(hist_chi_target, it).second;
  } else {
    fp.alpha = alpha;
    fp.chi_hat = chi;
  }
  fp.converged = false;
  return fp;
}

struct StabilityReport {
  double metric = 0.0;
  double stderr = 0.0;
};

// Stream index reserved for the stability sweep, away from iteration seeds.
inline constexpr std::uint64_t kStabilityStream = 0x5354414249ULL;

// chi -> 0 limit of (alpha/chi^2) E[(1/N) sum_{jk} (dx*_j/domega_k)^2]. With
// q_hat = alpha/chi the block closed form reduces it to E[#blocks/N]/alpha.
// Only measured; no claim is made about which side of 1 it falls.
inline StabilityReport stability_report(const SarParams& params,
                                        const ReplicaFixedPoint& fp,
                                        const ReplicaConfig& cfg) {
  if (!fp.converged)
    throw DomainError("stability_report needs a converged fixed point");
  const MomentEstimate m =
      mc_moments(params, fp.chi_hat, cfg, stream_seed(cfg.seed, kStabilityStream));
  return {m.block_fraction / fp.alpha, m.block_fraction_stderr / fp.alpha};
}

// ---------------------------------------------------------------------------
// Separable baseline: i.i.d. Bernoulli-Gaussian signal under plain l1.
// ---------------------------------------------------------------------------

namespace detail {

inline double std_normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

// P(Z > x)
inline double std_normal_upper(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

}  // namespace detail

// Exact moments of the componentwise limit solution: soft-threshold of
// sqrt(chi) z at 1 on zero components, sqrt(chi) z - sgn(x0) elsewhere.
inline std::pair<double, double> baseline_moments(double rho, double chi_hat) {
  const double tau = 1.0 / std::sqrt(chi_hat);
  const double tail = detail::std_normal_upper(tau);
  const double soft_sq =
      2.0 * ((1.0 + tau * tau) * tail - tau * detail::std_normal_pdf(tau));
  const double s2 = (1.0 - rho) * chi_hat * soft_sq + rho * (chi_hat + 1.0);
  const double sz = std::sqrt(chi_hat) * ((1.0 - rho) * 2.0 * tail + rho);
  return {s2, sz};
}

struct BaselineConfig {
  double tau_lo = 1e-6;
  double tau_hi = 40.0;
  int bits = 52;
  std::uintmax_t max_iter = 200;
};

struct BaselineResult {
  double alpha_c;
  double chi_hat;
};

// Eliminating alpha from the two moment equations leaves a single equation
// in tau = 1/sqrt(chi_hat): 2 (1 - rho) [phi(tau)/tau - P(Z > tau)] = rho,
// whose left side decreases monotonically from +inf to 0.
inline BaselineResult baseline_fixed_point(double rho, const BaselineConfig& cfg = {}) {
  if (!(rho > 0.0 && rho < 1.0)) {
    std::ostringstream os;
    os << "baseline rho must lie in (0, 1), got " << rho;
    throw DomainError(os.str());
  }
  auto f = [rho](double tau) {
    return 2.0 * (1.0 - rho) *
               (detail::std_normal_pdf(tau) / tau - detail::std_normal_upper(tau)) -
           rho;
  };
  std::uintmax_t iters = cfg.max_iter;
  const auto [a, b] = boost::math::tools::toms748_solve(
      f, cfg.tau_lo, cfg.tau_hi, boost::math::tools::eps_tolerance<double>(cfg.bits),
      iters);
  const double tau = 0.5 * (a + b);
  return {(1.0 - rho) * 2.0 * detail::std_normal_upper(tau) + rho, 1.0 / (tau * tau)};
}

inline double baseline_alpha_c(double rho, const BaselineConfig& cfg = {}) {
  return baseline_fixed_point(rho, cfg).alpha_c;
}

}  // namespace sarcs
