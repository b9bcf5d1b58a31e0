#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crumbs/linalg.hpp"

namespace crumbs {

/// Analytically known mean and covariance, when the target has them.
struct ReferenceMoments {
  Vector mean;
  std::vector<Vector> covariance;
};

/// Unnormalized log density with gradient. Implementations are immutable and
/// may be shared between threads.
class LogDensity {
 public:
  virtual ~LogDensity() = default;

  virtual std::size_t dim() const = 0;
  /// Writes the gradient into `grad` and returns log f(x) up to a constant.
  virtual double evaluate(std::span<const double> x,
                          std::span<double> grad) const = 0;
};

struct Evaluation {
  double log_density;
  Vector gradient;
};

/// A named log density plus an evaluation counter. The counter makes a Target
/// stateful, so each chain owns its own instance (copies share the density).
class Target {
 public:
  Target(std::string name, std::shared_ptr<const LogDensity> density,
         std::optional<ReferenceMoments> moments = std::nullopt);

  std::size_t dim() const noexcept { return dim_; }
  const std::string& name() const noexcept { return name_; }
  const std::optional<ReferenceMoments>& reference_moments() const noexcept {
    return moments_;
  }

  /// One counted evaluation of value and gradient.
  Evaluation evaluate(std::span<const double> x);
  /// Allocation-free variant; `grad` must have length dim().
  double evaluate(std::span<const double> x, std::span<double> grad);

  std::uint64_t eval_count() const noexcept { return count_; }
  void reset_count() noexcept { count_ = 0; }

  /// Same density, counter at zero.
  Target fresh() const;

 private:
  std::string name_;
  std::shared_ptr<const LogDensity> density_;
  std::optional<ReferenceMoments> moments_;
  std::size_t dim_;
  std::uint64_t count_ = 0;
};

/// Zero-mean Gaussian with unit variances and common correlation rho.
/// Requires p >= 2 and -1/(p-1) < rho < 1.
Target make_equicorrelated_gaussian(std::size_t p, double rho);

/// N(0, I_p); p >= 1.
Target make_standard_normal(std::size_t p);

/// Gelman's eight-schools hierarchical model in (theta_1..8, mu, log tau).
Target make_eight_schools();

inline constexpr std::uint64_t kDefaultMixtureSeed = 20100308;

/// Ten equally weighted N(m_k, I) components in R^10 with modes drawn
/// uniformly on [0, 10]^10.
Target make_gaussian_mixture(std::uint64_t seed = kDefaultMixtureSeed);

/// Equally weighted unit-variance mixture with the given modes.
Target make_gaussian_mixture(const std::vector<Vector>& modes);

/// The modes used by make_gaussian_mixture(seed).
std::vector<Vector> mixture_modes(std::uint64_t seed);

/// CLI names: n4-pos, n4-neg, eight-schools, mixture10. Throws ConfigError.
Target make_target(std::string_view name);
const std::vector<std::string>& target_names();

}  // namespace crumbs
