#pragma once

// Exact minimization of the quadratic-plus-total-variation chain objective
//
//     (q/2) sum_i x_i^2 - sum_i h_i x_i + sum_{i<N} |x_{i+1} - x_i|
//
// by forward dynamic programming over piecewise-linear derivative messages
// followed by a clamped back substitution. Each step pushes at most two
// knots, so the whole solve is O(N) amortized with no iteration tolerance.
// Fused neighbours come out bitwise equal, which block counting relies on.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <sstream>
#include <vector>

#include "sarcs/error.hpp"
#include "sarcs/sar_model.hpp"

namespace sarcs {

struct ChainProblem {
  std::vector<double> h;
  double q_hat = 1.0;

  void validate() const {
    if (!(q_hat > 0.0) || !std::isfinite(q_hat)) {
      std::ostringstream os;
      os << "q_hat must be positive and finite, got " << q_hat;
      throw DomainError(os.str());
    }
    if (h.empty()) throw ShapeError("chain field must have length >= 1");
    for (double v : h)
      if (!std::isfinite(v)) throw DomainError("chain field must be finite");
  }
};

// Scratch buffers reused across solves of up to the same length.
class ChainWorkspace {
 public:
  struct Knot {
    double pos;
    double d_slope;
    double d_offset;
  };

  void reserve(std::size_t n) {
    if (knots_.size() < 2 * n + 2) knots_.resize(2 * n + 2);
    if (lower_.size() < n) {
      lower_.resize(n);
      upper_.resize(n);
    }
  }

 private:
  friend void solve_chain(std::span<const double>, double, std::span<double>,
                          ChainWorkspace&);
  std::vector<Knot> knots_;
  std::vector<double> lower_;
  std::vector<double> upper_;
};

inline void solve_chain(std::span<const double> h, double q_hat,
                        std::span<double> x, ChainWorkspace& ws) {
  const std::size_t n = h.size();
  if (x.size() != n) throw ShapeError("solve_chain: output length mismatch");
  if (!(q_hat > 0.0)) throw DomainError("solve_chain: q_hat must be positive");
  if (n == 0) return;
  ws.reserve(n);

  // The derivative of the message is a + b x on its leftmost and rightmost
  // pieces; crossing a knot rightwards adds (d_slope, d_offset).
  auto* knots = ws.knots_.data();
  std::size_t head = n + 1;
  std::size_t tail = n + 1;  // knots live in [head, tail)
  double left_a = q_hat, left_b = -h[0];
  double right_a = q_hat, right_b = -h[0];

  for (std::size_t k = 0; k + 1 < n; ++k) {
    // Clip the derivative from below at -1.
    double a = left_a, b = left_b;
    while (head < tail && a * knots[head].pos + b < -1.0) {
      a += knots[head].d_slope;
      b += knots[head].d_offset;
      ++head;
    }
    const double lo = (-1.0 - b) / a;
    if (head == tail) {
      right_a = a;
      right_b = b;
    }
    knots[--head] = {lo, a, b + 1.0};
    left_a = 0.0;
    left_b = -1.0;

    // Clip from above at +1.
    a = right_a;
    b = right_b;
    while (head < tail && a * knots[tail - 1].pos + b > 1.0) {
      a -= knots[tail - 1].d_slope;
      b -= knots[tail - 1].d_offset;
      --tail;
    }
    const double hi = (1.0 - b) / a;
    knots[tail++] = {hi, -a, 1.0 - b};
    right_a = 0.0;
    right_b = 1.0;

    ws.lower_[k] = lo;
    ws.upper_[k] = hi;

    left_a += q_hat;
    left_b -= h[k + 1];
    right_a += q_hat;
    right_b -= h[k + 1];
  }

  double a = left_a, b = left_b;
  while (head < tail && a * knots[head].pos + b < 0.0) {
    a += knots[head].d_slope;
    b += knots[head].d_offset;
    ++head;
  }
  x[n - 1] = -b / a;
  for (std::size_t k = n - 1; k-- > 0;)
    x[k] = std::clamp(x[k + 1], ws.lower_[k], ws.upper_[k]);
}

inline std::vector<double> solve_chain(const ChainProblem& p) {
  p.validate();
  std::vector<double> x(p.h.size());
  ChainWorkspace ws;
  solve_chain(p.h, p.q_hat, x, ws);
  return x;
}

inline double chain_objective(std::span<const double> h, double q_hat,
                              std::span<const double> x) {
  double f = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    f += 0.5 * q_hat * x[i] * x[i] - h[i] * x[i];
  for (std::size_t i = 0; i + 1 < x.size(); ++i) f += std::abs(x[i + 1] - x[i]);
  return f;
}

// ---------------------------------------------------------------------------
// Limit problem: the chi -> 0 perturbation around a true signal x0.
// ---------------------------------------------------------------------------

// Edge (i, i+1) of the true signal. On a pause the TV term stays active; on
// a jump its sign is frozen to sgn(x0_i - x0_{i+1}).
enum class EdgeKind : std::int8_t { kDown = -1, kPause = 0, kUp = 1 };

// kUp means x0_{i+1} > x0_i.
inline std::vector<EdgeKind> classify_edges(std::span<const double> x0) {
  std::vector<EdgeKind> edges(x0.empty() ? 0 : x0.size() - 1);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = x0[i + 1] > x0[i]   ? EdgeKind::kUp
               : x0[i + 1] < x0[i] ? EdgeKind::kDown
                                   : EdgeKind::kPause;
  }
  return edges;
}

// Same classification read off increment coordinates x'_i = x_i - x_{i-1}
// (x'_1 = x_1); entry i+1 of the increments describes edge (i, i+1).
inline std::vector<EdgeKind> classify_edges_from_increments(
    std::span<const double> increments) {
  std::vector<EdgeKind> edges(increments.empty() ? 0 : increments.size() - 1);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const double d = increments[i + 1];
    edges[i] = d > 0.0   ? EdgeKind::kUp
               : d < 0.0 ? EdgeKind::kDown
                         : EdgeKind::kPause;
  }
  return edges;
}

// Linear tilt that a frozen jump edge (i, i+1) contributes to the fields of
// its endpoints: the term s (xhat_i - xhat_{i+1}) with s = sgn(x0_i -
// x0_{i+1}) shifts h_i by -s and h_{i+1} by +s. The chain ends carry no
// boundary term.
inline void apply_jump_tilt(std::span<const EdgeKind> edges,
                            std::span<double> field) {
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (edges[i] == EdgeKind::kPause) continue;
    const double s = edges[i] == EdgeKind::kUp ? -1.0 : 1.0;
    field[i] -= s;
    field[i + 1] += s;
  }
}

struct LimitChainProblem {
  Signal x0;
  std::vector<double> z;
  double chi_hat = 1.0;

  void validate() const {
    if (x0.size() != z.size()) {
      std::ostringstream os;
      os << "x0 has length " << x0.size() << " but z has length " << z.size();
      throw ShapeError(os.str());
    }
    if (x0.size() == 0) throw ShapeError("limit chain must have length >= 1");
    if (!(chi_hat > 0.0)) throw DomainError("chi_hat must be positive");
  }
};

// Minimizes sum_i [xhat_i^2 / 2 - sqrt(chi_hat) z_i xhat_i] plus |.| terms on
// pause edges and frozen linear terms on jump edges. Jump edges decouple the
// chain, so each pause segment is a unit-curvature chain problem.
inline void solve_limit_chain(std::span<const EdgeKind> edges,
                              std::span<const double> z, double chi_hat,
                              std::span<double> xhat, ChainWorkspace& ws) {
  const std::size_t n = z.size();
  if (xhat.size() != n || edges.size() + 1 != n)
    throw ShapeError("solve_limit_chain: length mismatch");
  const double scale = std::sqrt(chi_hat);
  for (std::size_t i = 0; i < n; ++i) xhat[i] = scale * z[i];
  apply_jump_tilt(edges, xhat);

  std::size_t begin = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool segment_ends = i + 1 == n || edges[i] != EdgeKind::kPause;
    if (!segment_ends) continue;
    const std::size_t len = i + 1 - begin;
    if (len > 1) {
      auto seg = xhat.subspan(begin, len);
      // The forward pass reads all of h before x is written: in place is fine.
      solve_chain(std::span<const double>(seg.data(), len), 1.0, seg, ws);
    }
    begin = i + 1;
  }
}

inline std::vector<double> solve_limit_chain(const LimitChainProblem& p) {
  p.validate();
  const auto edges = classify_edges(p.x0.values);
  std::vector<double> xhat(p.z.size());
  ChainWorkspace ws;
  solve_limit_chain(edges, p.z, p.chi_hat, xhat, ws);
  return xhat;
}

// ---------------------------------------------------------------------------
// Blocks and the replica-symmetry stability metric.
// ---------------------------------------------------------------------------

inline constexpr double kDefaultTieTol = 1e-9;

// Number of maximal runs of neighbours equal within tie_tol.
inline std::size_t count_blocks(std::span<const double> x,
                                double tie_tol = kDefaultTieTol) {
  if (x.empty()) return 0;
  std::size_t blocks = 1;
  for (std::size_t i = 0; i + 1 < x.size(); ++i)
    if (std::abs(x[i + 1] - x[i]) > tie_tol) ++blocks;
  return blocks;
}

// Blocks of x* = x0 + (chi/alpha) xhat as chi -> 0: neighbours fuse only
// across a pause edge of x0 on which xhat is also fused.
inline std::size_t count_limit_blocks(std::span<const EdgeKind> edges,
                                      std::span<const double> xhat,
                                      double tie_tol = kDefaultTieTol) {
  if (xhat.empty()) return 0;
  std::size_t blocks = 1;
  for (std::size_t i = 0; i + 1 < xhat.size(); ++i)
    if (edges[i] != EdgeKind::kPause || std::abs(xhat[i + 1] - xhat[i]) > tie_tol)
      ++blocks;
  return blocks;
}

// (1/N) sum_{j,k} (d x*_j / d h_k)^2. Inside a block B of the minimizer the
// Jacobian is the averaging matrix 1/(|B| q_hat), so the sum collapses to
// #blocks / q_hat^2.
inline double at_metric(const ChainProblem& p, std::span<const double> x_star,
                        double tie_tol = kDefaultTieTol) {
  if (x_star.size() != p.h.size()) throw ShapeError("at_metric: length mismatch");
  const double n = static_cast<double>(x_star.size());
  return static_cast<double>(count_blocks(x_star, tie_tol)) /
         (n * p.q_hat * p.q_hat);
}

}  // namespace sarcs
