#pragma once

// Difference-l1 reconstruction
//
//     minimize sum_{i<N} |x_{i+1} - x_i|   subject to  F x = y
//
// solved in increment coordinates x = S x', where it becomes a weighted
// basis pursuit min sum_j w_j |x'_j| s.t. (F S) x' = y with w_1 = 0 (the
// first increment is the free level x_1) unless penalize_first is set.
//
// Two solvers share this contract:
//   * a bounded primal simplex on the split LP x' = u - v, u, v >= 0, which
//     returns an exact vertex and supports warm continuation when the last
//     measurement row is deleted;
//   * an ADMM splitting solver with support polishing, kept as an
//     independent cross-check.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <span>
#include <vector>

#include "sarcs/error.hpp"
#include "sarcs/sar_model.hpp"
#include "sarcs/transforms.hpp"

namespace sarcs {

enum class SolverMethod { kSimplex, kAdmm };
enum class FailureNorm { kL2, kLinf };

struct SolverSettings {
  double feas_tol = 1e-9;  // bound on ||F x - y||_2
  double opt_tol = 1e-8;   // relative duality gap
  std::size_t max_iter = 0;  // 0: method-dependent default
  bool penalize_first = false;
  SolverMethod method = SolverMethod::kSimplex;

  void validate() const {
    if (!(feas_tol > 0.0) || !(opt_tol > 0.0))
      throw DomainError("solver tolerances must be positive");
  }
};

struct ReconstructionProblem {
  Eigen::MatrixXd f;
  Eigen::VectorXd y;
  Signal x0;  // ground truth; may be empty when unknown

  void validate() const {
    const auto p = f.rows(), n = f.cols();
    if (n < 1 || p < 1 || p > n) {
      std::ostringstream os;
      os << "compression matrix must satisfy 1 <= P <= N, got " << p << "x" << n;
      throw ShapeError(os.str());
    }
    if (y.size() != p) throw ShapeError("measurement vector length must equal P");
    if (x0.size() != 0 && static_cast<Eigen::Index>(x0.size()) != n)
      throw ShapeError("true signal length must equal N");
  }
};

// y = F x0 at construction.
inline ReconstructionProblem make_problem(Eigen::MatrixXd f, Signal x0) {
  if (static_cast<Eigen::Index>(x0.size()) != f.cols())
    throw ShapeError("true signal length must equal N");
  Eigen::VectorXd y = f * Eigen::Map<const Eigen::VectorXd>(
                              x0.values.data(), static_cast<Eigen::Index>(x0.size()));
  ReconstructionProblem p{std::move(f), std::move(y), std::move(x0)};
  p.validate();
  return p;
}

struct Certificate {
  double feasibility = 0.0;  // ||F x - y||_2
  double objective = 0.0;
  double dual_objective = 0.0;
  double relative_gap = 0.0;
  double dual_infeasibility = 0.0;  // max_j (|A^T pi|_j - w_j)_+
  std::size_t iterations = 0;
};

struct L1DiffSolution {
  std::vector<double> x_star;
  double objective = 0.0;
  Certificate certificate;
};

inline double difference_l1(std::span<const double> x, bool penalize_first = false) {
  double f = penalize_first && !x.empty() ? std::abs(x[0]) : 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) f += std::abs(x[i + 1] - x[i]);
  return f;
}

// F S: row-wise suffix sums.
inline Eigen::MatrixXd increment_matrix(const Eigen::MatrixXd& f) {
  Eigen::MatrixXd a(f.rows(), f.cols());
  if (f.cols() == 0) return a;
  a.col(f.cols() - 1) = f.col(f.cols() - 1);
  for (Eigen::Index j = f.cols() - 1; j-- > 0;) a.col(j) = a.col(j + 1) + f.col(j);
  return a;
}

// Cost weights of the increments.
inline Eigen::VectorXd increment_weights(Eigen::Index n, bool penalize_first) {
  Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
  if (!penalize_first && n > 0) w(0) = 0.0;
  return w;
}

namespace detail {

inline Certificate make_certificate(const Eigen::MatrixXd& f, const Eigen::VectorXd& y,
                                    const Eigen::MatrixXd& a, const Eigen::VectorXd& w,
                                    std::span<const double> x, const Eigen::VectorXd& pi,
                                    bool penalize_first, std::size_t iterations) {
  Certificate c;
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  c.feasibility = (f * xv - y).norm();
  c.objective = difference_l1(x, penalize_first);
  c.dual_objective = y.dot(pi);
  c.relative_gap = std::abs(c.objective - c.dual_objective) / std::max(1.0, std::abs(c.objective));
  const Eigen::VectorXd atpi = a.transpose() * pi;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < atpi.size(); ++j)
    worst = std::max(worst, std::abs(atpi(j)) - w(j));
  c.dual_infeasibility = worst;
  c.iterations = iterations;
  return c;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Bounded primal simplex with warm continuation.
// ---------------------------------------------------------------------------

class DifferenceL1Simplex {
 public:
  DifferenceL1Simplex(Eigen::MatrixXd f, Eigen::VectorXd y, SolverSettings settings = {})
      : f_(std::move(f)), y_(std::move(y)), settings_(settings) {
    settings_.validate();
    if (f_.rows() < 1 || f_.rows() > f_.cols())
      throw ShapeError("simplex: need 1 <= P <= N");
    if (y_.size() != f_.rows()) throw ShapeError("simplex: y length must equal P");
    a_ = increment_matrix(f_);
    w_ = increment_weights(f_.cols(), settings_.penalize_first);
  }

  Eigen::Index rows() const { return f_.rows(); }
  Eigen::Index cols() const { return f_.cols(); }
  bool has_warm_basis() const { return warm_; }

  // Solves from the current basis when one is available, else from scratch.
  L1DiffSolution solve() {
    iterations_ = 0;
    if (!warm_) phase_one();
    run(/*phase_one=*/false);
    refine();
    warm_ = true;
    return extract();
  }

  // Deletes the final measurement row. The previous optimum stays feasible;
  // a degenerate basic column is dropped so the basis stays square.
  void drop_last_row() {
    const Eigen::Index p = f_.rows();
    if (p <= 1) throw ShapeError("cannot delete the only measurement row");
    f_.conservativeResize(p - 1, Eigen::NoChange);
    a_.conservativeResize(p - 1, Eigen::NoChange);
    y_.conservativeResize(p - 1);
    if (!warm_) return;

    const Eigen::Index r = p - 1;
    const double scale = binv_.cwiseAbs().maxCoeff();
    Eigen::Index drop = -1;
    double best = 0.0;
    for (Eigen::Index c = 0; c < p; ++c) {
      if (std::abs(x_b_(c)) > kZeroTol) continue;
      const double piv = std::abs(binv_(c, r));
      // Prefer evicting leftover artificials.
      const double score = is_artificial(basis_[c]) ? piv * 1e6 : piv;
      if (piv > kPivotTol * scale && score > best) {
        best = score;
        drop = c;
      }
    }
    if (drop < 0) {
      warm_ = false;
      return;
    }
    const double m_cr = binv_(drop, r);
    Eigen::MatrixXd next(p - 1, p - 1);
    Eigen::VectorXd xb(p - 1);
    std::vector<int> basis;
    basis.reserve(static_cast<std::size_t>(p - 1));
    for (Eigen::Index i = 0, ii = 0; i < p; ++i) {
      if (i == drop) continue;
      const double m_ir = binv_(i, r);
      for (Eigen::Index j = 0; j < r; ++j)
        next(ii, j) = binv_(i, j) - m_ir * binv_(drop, j) / m_cr;
      xb(ii) = x_b_(i);
      basis.push_back(basis_[static_cast<std::size_t>(i)]);
      ++ii;
    }
    is_basic_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(drop)])] = false;
    binv_ = std::move(next);
    x_b_ = std::move(xb);
    basis_ = std::move(basis);
    artificial_sign_.conservativeResize(p - 1);
    ++since_refactor_;
  }

 private:
  static constexpr double kZeroTol = 1e-11;
  static constexpr double kPivotTol = 1e-7;
  static constexpr double kReducedCostTol = 1e-10;
  static constexpr double kRayNoise = 1e-6;
  static constexpr double kHarrisDelta = 1e-11;
  static constexpr int kRefactorEvery = 64;
  static constexpr int kBlandAfter = 50;

  Eigen::Index structural() const { return 2 * f_.cols(); }
  bool is_artificial(int k) const { return k >= structural(); }

  // Column k: +A_j for k < N, -A_{k-N} for N <= k < 2N, artificial e_mu.
  void column(int k, Eigen::VectorXd& out) const {
    const Eigen::Index n = f_.cols();
    if (k < n) {
      out = a_.col(k);
    } else if (k < 2 * n) {
      out = -a_.col(k - n);
    } else {
      out.setZero(f_.rows());
      const Eigen::Index mu = k - 2 * n;
      out(mu) = artificial_sign_(mu);
    }
  }

  double cost(int k, bool phase_one) const {
    if (is_artificial(k)) return phase_one ? 1.0 : 0.0;
    if (phase_one) return 0.0;
    return w_(k % f_.cols());
  }

  void phase_one() {
    const Eigen::Index p = f_.rows();
    is_basic_.assign(static_cast<std::size_t>(structural() + p), false);
    basis_.resize(static_cast<std::size_t>(p));
    artificial_sign_.resize(p);
    binv_.setZero(p, p);
    x_b_.resize(p);
    for (Eigen::Index mu = 0; mu < p; ++mu) {
      const double s = y_(mu) < 0.0 ? -1.0 : 1.0;
      artificial_sign_(mu) = s;
      binv_(mu, mu) = s;
      x_b_(mu) = std::abs(y_(mu));
      basis_[static_cast<std::size_t>(mu)] = static_cast<int>(structural() + mu);
      is_basic_[static_cast<std::size_t>(structural() + mu)] = true;
    }
    since_refactor_ = 0;
    run(/*phase_one=*/true);

    double infeas = 0.0;
    for (Eigen::Index i = 0; i < p; ++i)
      if (is_artificial(basis_[static_cast<std::size_t>(i)])) infeas += x_b_(i);
    if (infeas > settings_.feas_tol * std::max(1.0, y_.norm()))
      throw SolverFailure("simplex: constraints F x = y appear infeasible");

    // Pivot remaining zero-valued artificials out where a structural column
    // can take their row.
    Eigen::VectorXd col;
    for (Eigen::Index r = 0; r < p; ++r) {
      if (!is_artificial(basis_[static_cast<std::size_t>(r)])) continue;
      const Eigen::RowVectorXd row = binv_.row(r) * a_;
      Eigen::Index j = 0;
      const double piv = row.cwiseAbs().maxCoeff(&j);
      if (piv < kPivotTol) continue;
      const int k = static_cast<int>(is_basic_[static_cast<std::size_t>(j)] ? j + f_.cols() : j);
      if (is_basic_[static_cast<std::size_t>(k)]) continue;
      column(k, col);
      const Eigen::VectorXd d = binv_ * col;
      pivot(r, k, d, 0.0);
    }
  }

  void refactor() {
    const Eigen::Index p = f_.rows();
    Eigen::MatrixXd b(p, p);
    Eigen::VectorXd col;
    for (Eigen::Index i = 0; i < p; ++i) {
      column(basis_[static_cast<std::size_t>(i)], col);
      b.col(i) = col;
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(b);
    if (!(lu.rcond() > 1e-14)) throw SolverFailure("simplex: basis became singular");
    binv_ = lu.inverse();
    x_b_ = lu.solve(y_);
    for (Eigen::Index i = 0; i < p; ++i)
      if (x_b_(i) < 0.0) {
        if (x_b_(i) < -1e-7) throw SolverFailure("simplex: basis lost primal feasibility");
        x_b_(i) = 0.0;
      }
    since_refactor_ = 0;
  }

  // Recomputes x_B from the current inverse with two rounds of iterative
  // refinement against the explicit basis columns.
  void refine() {
    const Eigen::Index p = f_.rows();
    x_b_ = binv_ * y_;
    Eigen::VectorXd col, resid(p);
    for (int round = 0; round < 2; ++round) {
      resid = y_;
      for (Eigen::Index i = 0; i < p; ++i) {
        column(basis_[static_cast<std::size_t>(i)], col);
        resid -= x_b_(i) * col;
      }
      x_b_ += binv_ * resid;
    }
    for (Eigen::Index i = 0; i < p; ++i) {
      if (x_b_(i) < -1e-7) {
        refactor();
        return;
      }
      if (x_b_(i) < 0.0) x_b_(i) = 0.0;
    }
  }

  void pivot(Eigen::Index r, int entering, const Eigen::VectorXd& d, double theta) {
    x_b_ -= theta * d;
    x_b_(r) = theta;
    for (Eigen::Index i = 0; i < x_b_.size(); ++i)
      if (x_b_(i) < 0.0) x_b_(i) = 0.0;
    const double piv = d(r);
    binv_.row(r) /= piv;
    const Eigen::RowVectorXd pivot_row = binv_.row(r);
    for (Eigen::Index i = 0; i < binv_.rows(); ++i)
      if (i != r && d(i) != 0.0) binv_.row(i) -= d(i) * pivot_row;
    is_basic_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(r)])] = false;
    basis_[static_cast<std::size_t>(r)] = entering;
    is_basic_[static_cast<std::size_t>(entering)] = true;
    ++since_refactor_;
  }

  void run(bool phase_one) {
    const Eigen::Index p = f_.rows(), n = f_.cols();
    const std::size_t cap =
        settings_.max_iter > 0 ? settings_.max_iter : static_cast<std::size_t>(50 * (n + p) + 1000);
    Eigen::VectorXd cb(p), pi(p), w(n), d(p), col;
    int degenerate = 0;
    for (;;) {
      if (since_refactor_ >= kRefactorEvery) refactor();
      if (iterations_++ > cap) {
        std::ostringstream os;
        os << "simplex: no optimum after " << cap << " pivots";
        throw SolverFailure(os.str());
      }
      for (Eigen::Index i = 0; i < p; ++i) cb(i) = cost(basis_[static_cast<std::size_t>(i)], phase_one);
      pi.noalias() = binv_.transpose() * cb;
      w.noalias() = a_.transpose() * pi;

      // Dantzig pricing; Bland's first-eligible rule after a long run of
      // degenerate pivots.
      const bool bland = degenerate > kBlandAfter;
      int entering = -1;
      double best = 0.0, entering_cost = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        const double cj = phase_one ? 0.0 : w_(j);
        const double reduced[2] = {cj - w(j), cj + w(j)};
        const double tol = kReducedCostTol * (1.0 + std::abs(w(j)));
        for (int side = 0; side < 2; ++side) {
          const auto k = static_cast<std::size_t>(j + side * n);
          if (is_basic_[k] || reduced[side] >= -tol || reduced[side] >= best) continue;
          entering = static_cast<int>(k);
          entering_cost = reduced[side];
          if (!bland) best = reduced[side];
        }
        if (bland && entering >= 0) break;
      }
      if (entering < 0) return;

      column(entering, col);
      d.noalias() = binv_ * col;

      // Harris two-pass ratio test; entries of d below the relative pivot
      // tolerance are treated as zero.
      const double piv_tol = kPivotTol * std::max(1.0, d.cwiseAbs().maxCoeff());
      double theta_max = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < p; ++i)
        if (d(i) > piv_tol) theta_max = std::min(theta_max, (x_b_(i) + kHarrisDelta) / d(i));
      if (!std::isfinite(theta_max)) {
        // A ray with a reduced cost at rounding level is noise, not a
        // genuine descent direction of a bounded LP.
        if (entering_cost > -kRayNoise * (1.0 + w.cwiseAbs().maxCoeff())) return;
        throw SolverFailure("simplex: unbounded direction");
      }
      Eigen::Index leave = -1;
      double leave_score = 0.0;
      for (Eigen::Index i = 0; i < p; ++i) {
        if (d(i) <= piv_tol || x_b_(i) / d(i) > theta_max) continue;
        const double score = bland ? -static_cast<double>(basis_[static_cast<std::size_t>(i)]) : d(i);
        if (leave < 0 || score > leave_score) {
          leave = i;
          leave_score = score;
        }
      }
      const double theta = std::max(0.0, x_b_(leave) / d(leave));
      degenerate = theta <= kZeroTol ? degenerate + 1 : 0;
      pivot(leave, entering, d, theta);
    }
  }

  L1DiffSolution extract() const {
    const Eigen::Index p = f_.rows(), n = f_.cols();
    std::vector<double> xp(static_cast<std::size_t>(n), 0.0);
    for (Eigen::Index i = 0; i < p; ++i) {
      const int k = basis_[static_cast<std::size_t>(i)];
      if (k < n) xp[static_cast<std::size_t>(k)] += x_b_(i);
      else if (k < 2 * n) xp[static_cast<std::size_t>(k - n)] -= x_b_(i);
    }
    L1DiffSolution sol;
    sol.x_star = cumulative_transform(xp);
    Eigen::VectorXd cb(p);
    for (Eigen::Index i = 0; i < p; ++i) cb(i) = cost(basis_[static_cast<std::size_t>(i)], false);
    const Eigen::VectorXd pi = binv_.transpose() * cb;
    sol.certificate = detail::make_certificate(f_, y_, a_, w_, sol.x_star, pi,
                                               settings_.penalize_first, iterations_);
    sol.objective = sol.certificate.objective;
    return sol;
  }

  Eigen::MatrixXd f_;
  Eigen::VectorXd y_;
  SolverSettings settings_;
  Eigen::MatrixXd a_;
  Eigen::VectorXd w_;

  bool warm_ = false;
  std::vector<int> basis_;
  std::vector<bool> is_basic_;
  Eigen::VectorXd artificial_sign_;
  Eigen::MatrixXd binv_;
  Eigen::VectorXd x_b_;
  int since_refactor_ = 0;
  std::size_t iterations_ = 0;
};

// ---------------------------------------------------------------------------
// ADMM cross-check.
// ---------------------------------------------------------------------------

struct AdmmOptions {
  double rho = 1.0;
  double abs_tol = 1e-10;
  double rel_tol = 1e-9;
  double support_tol = 1e-7;
};

// Scaled-form ADMM on x = z with x constrained to {A x = y} and z carrying
// the weighted l1 cost; A A^T is factored once. Every few iterations the
// iterate is polished by re-solving A_T x_T = y on its support and paired
// with a dual-feasible multiplier; the loop stops once that pair certifies
// opt_tol, or once the ADMM residuals themselves are small.
inline L1DiffSolution solve_l1_diff_admm(const Eigen::MatrixXd& f, const Eigen::VectorXd& y,
                                         const SolverSettings& s, const AdmmOptions& opt = {}) {
  const Eigen::Index p = f.rows(), n = f.cols();
  const Eigen::MatrixXd a = increment_matrix(f);
  const Eigen::VectorXd w = increment_weights(n, s.penalize_first);
  const Eigen::LLT<Eigen::MatrixXd> gram(a * a.transpose());
  if (gram.info() != Eigen::Success) throw SolverFailure("admm: A A^T is not positive definite");
  auto project = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return v - a.transpose() * gram.solve(a * v - y);
  };
  auto cost = [&](const Eigen::VectorXd& v) { return w.dot(v.cwiseAbs()); };

  auto polish = [&](const Eigen::VectorXd& z) -> Eigen::VectorXd {
    Eigen::VectorXd xp = project(z);
    std::vector<Eigen::Index> support;
    const double zmax = std::max(1.0, z.cwiseAbs().maxCoeff());
    for (Eigen::Index j = 0; j < n; ++j)
      if (std::abs(z(j)) > opt.support_tol * zmax || w(j) == 0.0) support.push_back(j);
    if (static_cast<Eigen::Index>(support.size()) > p) return xp;
    Eigen::MatrixXd at(p, static_cast<Eigen::Index>(support.size()));
    for (std::size_t k = 0; k < support.size(); ++k) at.col(static_cast<Eigen::Index>(k)) = a.col(support[k]);
    const Eigen::VectorXd xt = at.colPivHouseholderQr().solve(y);
    Eigen::VectorXd cand = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k < support.size(); ++k) cand(support[k]) = xt(static_cast<Eigen::Index>(k));
    if ((a * cand - y).norm() <= s.feas_tol && cost(cand) <= cost(xp) + s.opt_tol * std::max(1.0, cost(xp)))
      return cand;
    return xp;
  };

  // rho u is a subgradient of the cost at z and its least-squares preimage
  // under A^T estimates the dual. That estimate is moved onto the
  // complementary-slackness set of the polished support,
  // {a_j^T pi = w_j sgn(x_j)}, then rescaled into |A^T pi| <= w.
  auto dual_point = [&](const Eigen::VectorXd& scaled_u, const Eigen::VectorXd& xp) -> Eigen::VectorXd {
    Eigen::VectorXd pi = gram.solve(a * scaled_u);
    std::vector<Eigen::Index> support;
    for (Eigen::Index j = 0; j < n; ++j)
      if (xp(j) != 0.0 || w(j) == 0.0) support.push_back(j);
    if (!support.empty() && static_cast<Eigen::Index>(support.size()) <= p) {
      const auto m = static_cast<Eigen::Index>(support.size());
      Eigen::MatrixXd at(p, m);
      Eigen::VectorXd b(m);
      for (Eigen::Index k = 0; k < m; ++k) {
        const Eigen::Index j = support[static_cast<std::size_t>(k)];
        at.col(k) = a.col(j);
        b(k) = w(j) == 0.0 ? 0.0 : (xp(j) > 0.0 ? w(j) : -w(j));
      }
      const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(at);
      if (qr.rank() == m) pi -= at * (at.transpose() * at).ldlt().solve(at.transpose() * pi - b);
    }
    const Eigen::VectorXd atpi = a.transpose() * pi;
    double scale = 1.0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (w(j) > 0.0) scale = std::max(scale, std::abs(atpi(j)) / w(j));
    return pi / scale;
  };
  auto certifies = [&](const Eigen::VectorXd& xp, const Eigen::VectorXd& pi) {
    if ((a * xp - y).norm() > s.feas_tol) return false;
    const double c = cost(xp);
    return std::abs(c - y.dot(pi)) <= s.opt_tol * std::max(1.0, std::abs(c));
  };

  const std::size_t cap = s.max_iter > 0 ? s.max_iter : 200000;
  constexpr std::size_t kCheckEvery = 25;
  double rho = opt.rho;
  Eigen::VectorXd x = project(Eigen::VectorXd::Zero(n));
  Eigen::VectorXd z = x, u = Eigen::VectorXd::Zero(n), z_old;
  Eigen::VectorXd xp, pi;
  std::size_t it = 0;
  bool converged = false;
  for (; it < cap; ++it) {
    x = project(z - u);
    z_old = z;
    const Eigen::VectorXd v = x + u;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double t = w(j) / rho;
      z(j) = v(j) > t ? v(j) - t : v(j) < -t ? v(j) + t : 0.0;
    }
    u += x - z;
    const double r_norm = (x - z).norm();
    const double s_norm = rho * (z - z_old).norm();
    const double eps_pri = std::sqrt(double(n)) * opt.abs_tol + opt.rel_tol * std::max(x.norm(), z.norm());
    const double eps_dual = std::sqrt(double(n)) * opt.abs_tol + opt.rel_tol * rho * u.norm();
    const bool small = r_norm < eps_pri && s_norm < eps_dual;
    if (small || it % kCheckEvery == kCheckEvery - 1) {
      xp = polish(z);
      pi = dual_point(rho * u, xp);
      if (small || certifies(xp, pi)) {
        converged = true;
        ++it;
        break;
      }
    }
    if (it % 50 == 49) {  // residual balancing
      if (r_norm > 10.0 * s_norm) {
        rho *= 2.0;
        u /= 2.0;
      } else if (s_norm > 10.0 * r_norm) {
        rho /= 2.0;
        u *= 2.0;
      }
    }
  }
  if (!converged) {
    std::ostringstream os;
    os << "admm: residuals above tolerance after " << cap << " iterations";
    throw SolverFailure(os.str());
  }

  L1DiffSolution sol;
  std::vector<double> xpv(xp.data(), xp.data() + n);
  sol.x_star = cumulative_transform(xpv);
  sol.certificate = detail::make_certificate(f, y, a, w, sol.x_star, pi, s.penalize_first, it);
  sol.objective = sol.certificate.objective;
  return sol;
}

// Cold solve with the configured method. Raises SolverFailure when the
// result misses feas_tol or, for the simplex, opt_tol.
inline L1DiffSolution solve_l1_diff(const ReconstructionProblem& problem,
                                    const SolverSettings& settings = {}) {
  problem.validate();
  settings.validate();
  L1DiffSolution sol;
  if (settings.method == SolverMethod::kSimplex) {
    DifferenceL1Simplex solver(problem.f, problem.y, settings);
    sol = solver.solve();
    if (sol.certificate.relative_gap > settings.opt_tol)
      throw SolverFailure("simplex: duality gap above opt_tol");
  } else {
    sol = solve_l1_diff_admm(problem.f, problem.y, settings);
  }
  if (sol.certificate.feasibility > settings.feas_tol) {
    std::ostringstream os;
    os << "reconstruction residual " << sol.certificate.feasibility << " exceeds feas_tol";
    throw SolverFailure(os.str());
  }
  return sol;
}

inline constexpr double kRecoveryThreshold = 1e-4;

// Distance exactly at the threshold counts as success.
inline bool recovery_success(std::span<const double> x_star, const Signal& x0,
                             double threshold = kRecoveryThreshold,
                             FailureNorm norm = FailureNorm::kL2) {
  if (x_star.size() != x0.size()) throw ShapeError("recovery_success: length mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < x_star.size(); ++i) {
    const double e = x_star[i] - x0[i];
    d = norm == FailureNorm::kL2 ? d + e * e : std::max(d, std::abs(e));
  }
  if (norm == FailureNorm::kL2) d = std::sqrt(d);
  return d <= threshold;
}

}  // namespace sarcs
