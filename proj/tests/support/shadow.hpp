#pragma once

// Dense O(p^3) re-computation of the covariance-matching proposal parameters
// from the logged crumbs, directions and alphas. It reproduces
//   W_1 = sigma_c^-2 I,  W_{k+1} = theta Lambda_k + alpha g g^T,
//   Lambda_k = sum W_i,  c_bar_k = Lambda_k^-1 sum W_i c_i
// with explicit extended-precision matrices and compares against the
// factor-based fast path.

#include <Eigen/Dense>

#include <algorithm>

#include "crumbs/samplers.hpp"
#include "support/oracles.hpp"

namespace crumbs::testing {

struct ShadowReport {
  std::size_t events = 0;
  std::size_t adaptations = 0;          // alpha > 0
  std::size_t negative_alpha = 0;
  double max_lambda_error = 0.0;        // relative Frobenius, R^T R vs Lambda
  double max_crumb_precision_error = 0.0;
  double max_mean_error = 0.0;          // |c_bar - dense| / max(1, |dense|)
  double max_conditional_precision_error = 0.0;  // g^T Lambda_{k+1} g vs 1/sigma^2
};

class CmShadow {
  using Matrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using Column = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

  static Matrix widen(const Eigen::MatrixXd& m) { return m.cast<long double>(); }
  static Column widen(std::span<const double> v) {
    return to_eigen(v).cast<long double>();
  }
  static double rel_frobenius(const Matrix& got, const Matrix& want) {
    return static_cast<double>((got - want).norm() / want.norm());
  }

 public:
  CmShadow(std::size_t dim, double sigma_c, double theta)
      : dim_(dim), sigma_c_(sigma_c), theta_(theta) {}

  void observe(const CmCrumbEvent& e) {
    if (e.k == 1) {
      const long double prec = 1.0L / (static_cast<long double>(sigma_c_) * sigma_c_);
      lambda_ = Matrix::Identity(dim_, dim_) * prec;
      w_ = lambda_;
      weighted_ = Column::Zero(dim_);
    }
    ++report_.events;
    weighted_ += w_ * widen(e.crumb);
    const Column mean = lambda_.llt().solve(weighted_);

    const Matrix r = widen(to_eigen(e.posterior_factor));
    const Matrix f = widen(to_eigen(e.crumb_factor));
    report_.max_lambda_error = std::max(
        report_.max_lambda_error, rel_frobenius(r.transpose() * r, lambda_));
    report_.max_crumb_precision_error = std::max(
        report_.max_crumb_precision_error, rel_frobenius(f.transpose() * f, w_));
    report_.max_mean_error = std::max(
        report_.max_mean_error,
        static_cast<double>((widen(e.crumb_mean) - mean).norm() /
                            std::max<long double>(1.0L, mean.norm())));

    if (!e.adaptation) return;
    const CmAdaptation& ad = *e.adaptation;
    if (ad.alpha < 0.0) ++report_.negative_alpha;
    Matrix w_next = static_cast<long double>(theta_) * lambda_;
    if (!ad.fallback && ad.alpha > 0.0) {
      const Column g = widen(ad.direction);
      w_next += static_cast<long double>(ad.alpha) * g * g.transpose();
      const Matrix lambda_next = lambda_ + w_next;
      const Matrix rn = widen(to_eigen(*ad.next_posterior_factor));
      const double want = 1.0 / ad.sigma_sq;
      const double dense = static_cast<double>(g.dot(lambda_next * g));
      const double fast = static_cast<double>(g.dot(rn.transpose() * rn * g));
      report_.max_conditional_precision_error =
          std::max({report_.max_conditional_precision_error,
                    std::abs(dense - want) / want, std::abs(fast - want) / want});
      ++report_.adaptations;
    }
    lambda_ += w_next;
    w_ = w_next;
  }

  const ShadowReport& report() const noexcept { return report_; }

 private:
  std::size_t dim_;
  double sigma_c_;
  double theta_;
  Matrix lambda_;
  Matrix w_;
  Column weighted_;
  ShadowReport report_;
};

/// Runs `steps` covariance-matching updates from the origin with a shadow
/// attached.
inline ShadowReport run_cm_shadow(Target& target, const SamplerConfig& config,
                                  std::size_t steps, std::uint64_t seed) {
  CmShadow shadow(target.dim(), config.sigma_c, config.theta);
  const CmObserver observer = [&](const CmCrumbEvent& e) { shadow.observe(e); };
  Rng rng(seed);
  Vector x(target.dim(), 0.0);
  Vector grad(target.dim());
  double logf = target.evaluate(x, grad);
  for (std::size_t i = 0; i < steps; ++i) {
    StepResult s = cm_step(x, logf, target, config, rng, &observer);
    x = std::move(s.x);
    logf = s.log_density;
  }
  return shadow.report();
}

}  // namespace crumbs::testing
