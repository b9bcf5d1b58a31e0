#include "crumbs/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace crumbs {

Ar1Fit ar1_tau(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 10) throw InvalidInput("ar1_tau: need at least 10 values");
  if (!all_finite(series)) throw InvalidInput("ar1_tau: non-finite value");

  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(n);

  double var = 0.0;
  double lag1 = 0.0;
  double prev = series[0] - mean;
  var += prev * prev;
  for (std::size_t t = 1; t < n; ++t) {
    const double cur = series[t] - mean;
    var += cur * cur;
    lag1 += cur * prev;
    prev = cur;
  }
  // Relative to the scale of the data, so a constant series with rounding
  // noise in the mean still counts as degenerate.
  if (!(var > 1e-300) || var <= 1e-28 * mean * mean * static_cast<double>(n)) {
    throw DegenerateSeries(0);
  }

  Ar1Fit fit;
  fit.raw_pi = lag1 / var;
  fit.pi_hat = std::clamp(fit.raw_pi, 0.0, kMaxPi);
  fit.clamped = fit.pi_hat != fit.raw_pi;
  fit.tau = std::max(1.0, (1.0 + fit.pi_hat) / (1.0 - fit.pi_hat));
  return fit;
}

ChainTau chain_tau(std::span<const double> samples, std::size_t dim) {
  if (dim == 0 || samples.size() % dim != 0) {
    throw InvalidInput("chain_tau: sample matrix shape");
  }
  const std::size_t n = samples.size() / dim;
  ChainTau out;
  out.per_coordinate.reserve(dim);
  std::vector<double> column(n);
  for (std::size_t j = 0; j < dim; ++j) {
    for (std::size_t i = 0; i < n; ++i) column[i] = samples[i * dim + j];
    try {
      out.per_coordinate.push_back(ar1_tau(column));
    } catch (const DegenerateSeries&) {
      throw DegenerateSeries(j);
    }
    if (j == 0 || out.per_coordinate[j].tau > out.tau) {
      out.tau = out.per_coordinate[j].tau;
      out.coordinate = j;
    }
  }
  return out;
}

ChainTau chain_tau(const ChainResult& result) {
  return chain_tau(result.samples, result.dim);
}

std::pair<double, double> tau_interval(double pi_hat, std::size_t n) {
  const double se_pi =
      std::sqrt((1.0 - pi_hat * pi_hat) / static_cast<double>(n));
  const double slope = 2.0 / ((1.0 - pi_hat) * (1.0 - pi_hat));
  const double tau = (1.0 + pi_hat) / (1.0 - pi_hat);
  const double half = 1.959963984540054 * slope * se_pi;
  return {std::max(1.0, tau - half), tau + half};
}

FigureOfMerit figures_of_merit(const ChainTau& tau, std::size_t n,
                               double total_evals, double wall_seconds) {
  FigureOfMerit fom;
  fom.n = n;
  fom.tau = tau.tau;
  fom.ess = static_cast<double>(n) / tau.tau;
  fom.evals_per_indep = total_evals / fom.ess;
  fom.seconds_per_indep = wall_seconds / fom.ess;
  fom.reliable = fom.ess >= kMinReliableEss;
  const Ar1Fit& worst = tau.per_coordinate.at(tau.coordinate);
  fom.pi_hat = worst.pi_hat;
  for (const auto& f : tau.per_coordinate) fom.clamped = fom.clamped || f.clamped;
  if (fom.reliable) {
    const auto [lo, hi] = tau_interval(worst.pi_hat, n);
    const double per_tau = total_evals / static_cast<double>(n);
    fom.ci_low = std::min(lo * per_tau, fom.evals_per_indep);
    fom.ci_high = std::max(hi * per_tau, fom.evals_per_indep);
  }
  return fom;
}

FigureOfMerit figures_of_merit(const ChainResult& result) {
  if (result.n() < 10) {
    throw InvalidInput("figures_of_merit: need at least 10 samples");
  }
  return figures_of_merit(chain_tau(result), result.n(),
                          static_cast<double>(result.total_density_evals),
                          result.wall_seconds);
}

}  // namespace crumbs
