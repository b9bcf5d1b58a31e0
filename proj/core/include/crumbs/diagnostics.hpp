#pragma once

// Correlation length from a per-coordinate AR(1) fit, and the figures of
// merit built on it.

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "crumbs/samplers.hpp"

namespace crumbs {

struct Ar1Fit {
  double tau = 1.0;     // (1 + pi) / (1 - pi), at least 1
  double pi_hat = 0.0;  // lag-1 autocorrelation after clamping
  double raw_pi = 0.0;  // before clamping to [0, 1 - 1e-6]
  bool clamped = false;
};

inline constexpr double kMaxPi = 1.0 - 1e-6;
inline constexpr double kMinReliableEss = 4.0;

/// Requires at least 10 finite values; throws DegenerateSeries(0) on zero
/// variance.
Ar1Fit ar1_tau(std::span<const double> series);

struct ChainTau {
  double tau = 1.0;
  std::size_t coordinate = 0;  // argmax
  std::vector<Ar1Fit> per_coordinate;
};

/// Largest per-coordinate correlation length of a row-major n x p matrix.
/// DegenerateSeries carries the failing coordinate.
ChainTau chain_tau(std::span<const double> samples, std::size_t dim);
ChainTau chain_tau(const ChainResult& result);

struct FigureOfMerit {
  std::size_t n = 0;
  double tau = 1.0;
  double ess = 0.0;
  double evals_per_indep = 0.0;
  double seconds_per_indep = 0.0;
  // Nominal 95% interval on evals_per_indep; empty when unreliable.
  std::optional<double> ci_low;
  std::optional<double> ci_high;
  bool reliable = false;
  double pi_hat = 0.0;
  bool clamped = false;
};

/// Delta-method interval for tau at pi_hat: se(pi) = sqrt((1 - pi^2) / n),
/// dtau/dpi = 2 / (1 - pi)^2, tau +- 1.96 se, lower end floored at 1.
std::pair<double, double> tau_interval(double pi_hat, std::size_t n);

FigureOfMerit figures_of_merit(const ChainResult& result);

/// Same, from a precomputed tau fit (used by tests to pin ess / counters).
FigureOfMerit figures_of_merit(const ChainTau& tau, std::size_t n,
                               double total_evals, double wall_seconds);

}  // namespace crumbs
