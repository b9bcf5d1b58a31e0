#include "crumbs/targets.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "crumbs/error.hpp"
#include "crumbs/rng.hpp"

namespace crumbs {

Target::Target(std::string name, std::shared_ptr<const LogDensity> density,
               std::optional<ReferenceMoments> moments)
    : name_(std::move(name)),
      density_(std::move(density)),
      moments_(std::move(moments)),
      dim_(density_->dim()) {}

Evaluation Target::evaluate(std::span<const double> x) {
  Evaluation e{0.0, Vector(dim_, 0.0)};
  e.log_density = evaluate(x, e.gradient);
  return e;
}

double Target::evaluate(std::span<const double> x, std::span<double> grad) {
  if (x.size() != dim_ || grad.size() != dim_) {
    throw InvalidInput("Target::evaluate: dimension mismatch");
  }
  if (!all_finite(x)) {
    throw InvalidInput("Target::evaluate: non-finite point");
  }
  ++count_;
  return density_->evaluate(x, grad);
}

Target Target::fresh() const {
  Target t = *this;
  t.reset_count();
  return t;
}

namespace {

// Sigma = (1 - rho) I + rho 1 1^T, Sigma^-1 = a I + b 1 1^T.
class EquicorrelatedGaussian final : public LogDensity {
 public:
  EquicorrelatedGaussian(std::size_t p, double rho) : p_(p) {
    const double n = static_cast<double>(p);
    a_ = 1.0 / (1.0 - rho);
    b_ = -rho / ((1.0 - rho) * (1.0 + (n - 1.0) * rho));
  }

  std::size_t dim() const override { return p_; }

  double evaluate(std::span<const double> x,
                  std::span<double> grad) const override {
    double sum = 0.0;
    for (double xi : x) sum += xi;
    double quad = 0.0;
    for (std::size_t i = 0; i < p_; ++i) {
      const double pxi = a_ * x[i] + b_ * sum;
      grad[i] = -pxi;
      quad += x[i] * pxi;
    }
    return -0.5 * quad;
  }

 private:
  std::size_t p_;
  double a_;
  double b_;
};

constexpr std::array<double, 8> kSchoolEffects{28, 8, -3, 7, -1, 1, 18, 12};
constexpr std::array<double, 8> kSchoolSd{15, 10, 16, 11, 9, 11, 10, 18};

// Coordinates: theta_1..theta_8, mu, lambda = log tau. Flat priors on mu and
// tau; the trailing +lambda is the Jacobian of tau = exp(lambda).
class EightSchools final : public LogDensity {
 public:
  std::size_t dim() const override { return 10; }

  double evaluate(std::span<const double> x,
                  std::span<double> grad) const override {
    const double mu = x[8];
    const double lambda = x[9];
    const double inv_tau = std::exp(-lambda);
    double lp = 0.0;
    double dmu = 0.0;
    double scaled_ss = 0.0;
    for (std::size_t j = 0; j < 8; ++j) {
      const double prec = 1.0 / (kSchoolSd[j] * kSchoolSd[j]);
      const double resid = kSchoolEffects[j] - x[j];
      const double dev = x[j] - mu;
      // dev == 0 avoids 0 * inf when tau underflows.
      const double z = dev == 0.0 ? 0.0 : dev * inv_tau;
      const double zs = dev == 0.0 ? 0.0 : z * inv_tau;
      lp += -0.5 * resid * resid * prec - 0.5 * z * z - lambda;
      grad[j] = resid * prec - zs;
      dmu += zs;
      scaled_ss += z * z;
    }
    lp += lambda;
    grad[8] = dmu;
    grad[9] = scaled_ss - 7.0;
    return lp;
  }
};

class UnitMixture final : public LogDensity {
 public:
  explicit UnitMixture(std::vector<Vector> modes) : modes_(std::move(modes)) {
    if (modes_.empty()) throw InvalidInput("mixture: no components");
    p_ = modes_.front().size();
    for (const auto& m : modes_) {
      if (m.size() != p_ || p_ == 0 || !all_finite(m)) {
        throw InvalidInput("mixture: inconsistent modes");
      }
    }
    log_weight_ = -std::log(static_cast<double>(modes_.size()));
  }

  std::size_t dim() const override { return p_; }

  double evaluate(std::span<const double> x,
                  std::span<double> grad) const override {
    const std::size_t k = modes_.size();
    std::vector<double> comp(k);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      double ss = 0.0;
      for (std::size_t i = 0; i < p_; ++i) {
        const double d = x[i] - modes_[c][i];
        ss += d * d;
      }
      comp[c] = -0.5 * ss;
      best = std::max(best, comp[c]);
    }
    double total = 0.0;
    for (double& lc : comp) {
      lc = std::exp(lc - best);
      total += lc;
    }
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t c = 0; c < k; ++c) {
      const double w = comp[c] / total;
      for (std::size_t i = 0; i < p_; ++i) {
        grad[i] += w * (modes_[c][i] - x[i]);
      }
    }
    return best + std::log(total) + log_weight_;
  }

 private:
  std::vector<Vector> modes_;
  std::size_t p_ = 0;
  double log_weight_ = 0.0;
};

ReferenceMoments equicorrelated_moments(std::size_t p, double rho) {
  ReferenceMoments m{Vector(p, 0.0), std::vector<Vector>(p, Vector(p, rho))};
  for (std::size_t i = 0; i < p; ++i) m.covariance[i][i] = 1.0;
  return m;
}

Target equicorrelated(std::string name, std::size_t p, double rho) {
  return Target(std::move(name),
                std::make_shared<EquicorrelatedGaussian>(p, rho),
                equicorrelated_moments(p, rho));
}

}  // namespace

Target make_equicorrelated_gaussian(std::size_t p, double rho) {
  if (p < 2) throw InvalidInput("equicorrelated gaussian: p must be >= 2");
  const double lower = -1.0 / (static_cast<double>(p) - 1.0);
  if (!std::isfinite(rho) || !(rho > lower) || !(rho < 1.0)) {
    throw InvalidInput("equicorrelated gaussian: rho outside (-1/(p-1), 1)");
  }
  return equicorrelated("equicorrelated(p=" + std::to_string(p) + ")", p, rho);
}

Target make_standard_normal(std::size_t p) {
  if (p == 0) throw InvalidInput("standard normal: p must be >= 1");
  return equicorrelated("normal(p=" + std::to_string(p) + ")", p, 0.0);
}

Target make_eight_schools() {
  return Target("eight-schools", std::make_shared<EightSchools>());
}

std::vector<Vector> mixture_modes(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vector> modes(10, Vector(10));
  for (auto& m : modes) {
    for (double& v : m) v = 10.0 * rng.uniform();
  }
  return modes;
}

Target make_gaussian_mixture(std::uint64_t seed) {
  return Target("mixture10", std::make_shared<UnitMixture>(mixture_modes(seed)));
}

Target make_gaussian_mixture(const std::vector<Vector>& modes) {
  return Target("mixture", std::make_shared<UnitMixture>(modes));
}

Target make_target(std::string_view name) {
  if (name == "n4-pos") return equicorrelated("n4-pos", 4, 0.999);
  if (name == "n4-neg") return equicorrelated("n4-neg", 4, -0.3329);
  if (name == "eight-schools") return make_eight_schools();
  if (name == "mixture10") return make_gaussian_mixture(kDefaultMixtureSeed);
  throw ConfigError("unknown target '" + std::string(name) + "'");
}

const std::vector<std::string>& target_names() {
  static const std::vector<std::string> names{"n4-pos", "n4-neg",
                                              "eight-schools", "mixture10"};
  return names;
}

}  // namespace crumbs
