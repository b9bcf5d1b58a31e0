#pragma once

// Crumb-framework slice samplers (covariance-matching, shrinking-rank,
// non-adaptive crumbs), the trial-tuned Metropolis baseline, and the chain
// runner that drives them.

#include <concepts>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "crumbs/error.hpp"
#include "crumbs/linalg.hpp"
#include "crumbs/rng.hpp"
#include "crumbs/targets.hpp"

namespace crumbs {

enum class Method {
  covariance_matching,
  shrinking_rank,
  nonadaptive_crumb,
  metropolis_trials,
};

std::string_view method_name(Method m);
/// Accepts the hyphenated CLI names and the underscore enum spellings.
Method parse_method(std::string_view name);
const std::vector<std::string>& method_names();

/// Trial-run protocol of the Metropolis baseline.
struct MetropolisTuning {
  std::size_t trial_length = 2000;
  double min_acceptance = 0.1;
  double max_acceptance = 0.5;
  int max_decades = 4;        // trial scales sigma_c * 10^j, |j| <= this
  double shape_scale = 2.4;   // proposal = (shape_scale / sqrt(p)) chol(cov)
};

struct SamplerConfig {
  Method method = Method::covariance_matching;
  double sigma_c = 1.0;
  double theta = 1.0;           // covariance-matching only
  double shrink_factor = 0.9;   // shrinking-rank and non-adaptive crumbs
  bool approximate_u = false;   // covariance-matching: log f(u) ~= log y0
  std::size_t max_crumbs_per_update = 10000;
  MetropolisTuning metropolis;

  /// Throws InvalidInput on sigma_c <= 0, theta <= 0, shrink outside (0, 1].
  void validate() const;
};

struct StepStats {
  std::size_t crumbs_drawn = 0;
  std::size_t density_evals = 0;
  std::size_t accepted_proposal_index = 0;  // 1-based crumb index
  std::size_t kappa_fallbacks = 0;
  double slice_level = 0.0;                 // log y0 of this update
};

struct StepResult {
  Vector x;
  double log_density = 0.0;
  StepStats stats;
};

/// Raised when one update draws more than max_crumbs_per_update crumbs.
class MaxCrumbsExceeded : public Error {
 public:
  MaxCrumbsExceeded(Vector x0, double slice_level, std::size_t crumbs)
      : Error("crumb limit exceeded (" + std::to_string(crumbs) +
              " crumbs) at slice level " + std::to_string(slice_level)),
        x0_(std::move(x0)),
        slice_level_(slice_level),
        crumbs_(crumbs) {}

  const Vector& x0() const noexcept { return x0_; }
  double slice_level() const noexcept { return slice_level_; }
  std::size_t crumbs() const noexcept { return crumbs_; }

 private:
  Vector x0_;
  double slice_level_;
  std::size_t crumbs_;
};

/// kappa <= 0: the fitted parabola opens upward and has no peak.
class NotAPeak : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

template <typename Source>
concept ExponentialSource = requires(Source& s) {
  { s.exponential() } -> std::convertible_to<double>;
};

/// log y0 = log f(x0) - e, e ~ Exp(1); the log-scale form of
/// y0 ~ Uniform[0, f(x0)].
template <ExponentialSource Source>
double draw_slice_level(double logf_x0, Source& rng) {
  return logf_x0 - rng.exponential();
}

/// Negated second derivative of the parabola through (0, logf_x) with slope
/// grad_norm there and value logf_u at distance delta.
double fit_kappa(double logf_x, double grad_norm, double logf_u, double delta);

/// Maximum of that parabola.
double parabola_peak(double logf_x, double grad_norm, double kappa);

/// Variance of a uniform on the parabola's chord at the slice level,
/// (2/3)(M - log y0) / kappa.
double conditional_variance(double mode_estimate, double slice_level,
                            double kappa);

struct PrecisionUpdate {
  TriangularFactor crumb_factor;      // F_{k+1}: theta*Lambda + alpha g g^T
  TriangularFactor posterior_factor;  // R_{k+1}: (1+theta)*Lambda + alpha g g^T
  double alpha;
};

/// Chooses the next crumb precision so that the proposal's conditional
/// precision along unit vector `g` becomes 1/sigma_sq, clamping alpha at 0.
PrecisionUpdate crumb_precision_update(const TriangularFactor& posterior,
                                       std::span<const double> g,
                                       double sigma_sq, double theta);

/// Adaptation details of a rejected covariance-matching proposal.
struct CmAdaptation {
  Vector direction;       // unit gradient at the proposal (empty on fallback)
  double kappa = 0.0;
  double sigma_sq = 0.0;
  double alpha = 0.0;
  double mode_estimate = 0.0;
  bool fallback = false;  // alpha forced to 0 (kappa <= 0, zero gradient, ...)
  std::optional<TriangularFactor> next_posterior_factor;
};

/// One crumb/proposal pair of cm_step, reported when an observer is set.
/// The factors are those that generated this crumb and proposal.
struct CmCrumbEvent {
  std::size_t k = 0;
  Vector crumb;
  Vector crumb_mean;
  TriangularFactor crumb_factor;
  TriangularFactor posterior_factor;
  Vector proposal;
  double log_density = 0.0;
  double slice_level = 0.0;
  bool accepted = false;
  std::optional<CmAdaptation> adaptation;
};
using CmObserver = std::function<void(const CmCrumbEvent&)>;

struct SrCrumbEvent {
  std::size_t k = 0;
  double crumb_sd = 0.0;
  Vector crumb;              // origin at x0
  Vector proposal_offset;    // proposal - x0
  double log_density = 0.0;
  double slice_level = 0.0;
  bool accepted = false;
  std::size_t rank_before = 0;  // columns of J when the proposal was drawn
  std::vector<Vector> null_directions;  // those columns
  bool rank_grew = false;
};
using SrObserver = std::function<void(const SrCrumbEvent&)>;

/// Covariance-matching update of x0. `logf_x0` is log f(x0) (already paid
/// for by the previous update).
StepResult cm_step(std::span<const double> x0, double logf_x0, Target& target,
                   const SamplerConfig& config, Rng& rng,
                   const CmObserver* observer = nullptr);

/// Shrinking-rank update of x0.
StepResult sr_step(std::span<const double> x0, double logf_x0, Target& target,
                   const SamplerConfig& config, Rng& rng,
                   const SrObserver* observer = nullptr);

/// Non-adaptive crumbs: sr_step with the rank update disabled.
StepResult na_step(std::span<const double> x0, double logf_x0, Target& target,
                   const SamplerConfig& config, Rng& rng,
                   const SrObserver* observer = nullptr);

namespace detail {
/// Shared kernel of sr_step / na_step.
StepResult spherical_crumb_step(std::span<const double> x0, double logf_x0,
                                Target& target, const SamplerConfig& config,
                                Rng& rng, bool adapt_rank,
                                const SrObserver* observer);
}  // namespace detail

enum class ChainStatus { ok, max_crumbs_exceeded, tuning_failed };
std::string_view status_name(ChainStatus s);

struct ChainResult {
  std::size_t dim = 0;
  Vector samples;        // row-major, n() x dim
  Vector log_densities;  // one per sample
  Vector slice_levels;   // log y0 per sample (slice samplers only)
  std::uint64_t total_density_evals = 0;
  std::uint64_t total_crumbs = 0;
  std::uint64_t total_proposals = 0;
  std::size_t kappa_fallbacks = 0;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
  SamplerConfig config;
  ChainStatus status = ChainStatus::ok;
  std::string message;
  // Metropolis baseline only.
  std::optional<double> tuned_scale;
  double acceptance_rate = 0.0;

  std::size_t n() const noexcept { return dim == 0 ? 0 : samples.size() / dim; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(samples).subspan(i * dim, dim);
  }
  double at(std::size_t i, std::size_t j) const { return samples[i * dim + j]; }
  bool ok() const noexcept { return status == ChainStatus::ok; }
};

/// Trial-tuned random-walk Metropolis chain of length n from x0.
ChainResult metropolis_trials_run(Target& target, const SamplerConfig& config,
                                  Rng& rng, std::size_t n,
                                  std::span<const double> x0);

/// Runs n updates of the configured kernel from x0 (zero vector by default).
/// Deterministic in (config, target, n, seed, x0). A crumb-limit abort
/// returns the samples drawn so far with status max_crumbs_exceeded.
ChainResult run_chain(const SamplerConfig& config, Target& target,
                      std::size_t n, std::uint64_t seed,
                      std::optional<Vector> x0 = std::nullopt);

}  // namespace crumbs
