#pragma once

// Sparse first-order autoregressive signals: with probability rho the
// process takes an AR(1) step x' = r x + sqrt(1 - r^2) eta, otherwise it
// pauses at the previous value.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <sstream>
#include <vector>

#include "sarcs/error.hpp"
#include "sarcs/random.hpp"

namespace sarcs {

struct SarParams {
  double rho = 0.5;  // move probability per step
  double r = 0.0;    // autoregression coefficient

  void validate() const {
    if (!(rho >= 0.0 && rho <= 1.0)) {
      std::ostringstream os;
      os << "rho must lie in [0, 1], got " << rho;
      throw DomainError(os.str());
    }
    if (!(r >= 0.0 && r <= 1.0)) {
      std::ostringstream os;
      os << "r must lie in [0, 1], got " << r;
      throw DomainError(os.str());
    }
  }
};

struct Signal {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
};

// Stream index of the signal draws inside a seed; other consumers of the
// same seed use different indices.
inline constexpr std::uint64_t kSignalStream = 0;

// x_1 ~ N(0, 1); pauses copy the previous value bit for bit.
inline Signal generate_signal(const SarParams& params, std::size_t n,
                              std::uint64_t seed) {
  params.validate();
  if (n < 1) throw DomainError("signal length must be at least 1");
  RandomStream rng(seed, kSignalStream);
  const double innovation = std::sqrt(1.0 - params.r * params.r);
  Signal s;
  s.values.resize(n);
  s.values[0] = rng.normal();
  for (std::size_t i = 1; i < n; ++i) {
    const double prev = s.values[i - 1];
    if (rng.uniform() < params.rho) {
      s.values[i] = params.r * prev + innovation * rng.normal();
    } else {
      s.values[i] = prev;
    }
  }
  return s;
}

// Conditional law of x_{i+1} given x_i: an atom at x_i plus a Gaussian.
struct IncrementDensity {
  double atom_weight;
  double atom_location;
  double gaussian_weight;
  double gaussian_mean;
  double gaussian_variance;

  double gaussian_pdf(double x) const {
    if (gaussian_variance <= 0.0) return x == gaussian_mean ? INFINITY : 0.0;
    const double d = x - gaussian_mean;
    return std::exp(-0.5 * d * d / gaussian_variance) /
           std::sqrt(2.0 * M_PI * gaussian_variance);
  }
};

inline IncrementDensity increment_density(const SarParams& params,
                                          double x_prev) {
  params.validate();
  return {1.0 - params.rho, x_prev, params.rho, params.r * x_prev,
          1.0 - params.r * params.r};
}

// Per-element second moment of the stationary process. The marginal is
// N(0, 1) at every index because x_1 is, and both branches preserve unit
// variance.
inline double second_moment(const SarParams& params) {
  params.validate();
  return 1.0;
}

}  // namespace sarcs
