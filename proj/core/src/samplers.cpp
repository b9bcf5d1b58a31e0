#include "crumbs/samplers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace crumbs {

namespace {

constexpr double kMinGradientNorm = 1e-12;

// Bound on max |R_ij| / min R_ii, a lower bound on cond(R). Past about
// 1e7 the crumb-mean solve loses most of its digits.
constexpr double kMaxFactorSpread = 1e7;

double max_diagonal(const TriangularFactor& r) {
  double m = 0.0;
  for (std::size_t i = 0; i < r.dim(); ++i) m = std::max(m, r(i, i));
  return m;
}

double factor_spread(const TriangularFactor& r) {
  double hi = 0.0;
  double lo = r(0, 0);
  for (std::size_t i = 0; i < r.dim(); ++i) {
    lo = std::min(lo, r(i, i));
    for (std::size_t j = i; j < r.dim(); ++j) hi = std::max(hi, std::abs(r(i, j)));
  }
  return hi / lo;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_start(std::span<const double> x0, double logf_x0,
                 const Target& target) {
  if (x0.size() != target.dim()) {
    throw InvalidInput("step: x0 has wrong dimension");
  }
  if (!std::isfinite(logf_x0)) {
    throw InvalidInput("step: log f(x0) must be finite");
  }
}

std::vector<Vector> columns_of(const OrthonormalColumns& j) {
  std::vector<Vector> cols;
  for (std::size_t c = 0; c < j.ncols(); ++c) {
    cols.emplace_back(j.column(c).begin(), j.column(c).end());
  }
  return cols;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

}  // namespace

std::string_view method_name(Method m) {
  switch (m) {
    case Method::covariance_matching:
      return "covariance-matching";
    case Method::shrinking_rank:
      return "shrinking-rank";
    case Method::nonadaptive_crumb:
      return "nonadaptive-crumb";
    case Method::metropolis_trials:
      return "metropolis-trials";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  std::string s(name);
  std::replace(s.begin(), s.end(), '_', '-');
  for (Method m : {Method::covariance_matching, Method::shrinking_rank,
                   Method::nonadaptive_crumb, Method::metropolis_trials}) {
    if (s == method_name(m)) return m;
  }
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names{
      "covariance-matching", "shrinking-rank", "nonadaptive-crumb",
      "metropolis-trials"};
  return names;
}

std::string_view status_name(ChainStatus s) {
  switch (s) {
    case ChainStatus::ok:
      return "ok";
    case ChainStatus::max_crumbs_exceeded:
      return "max_crumbs_exceeded";
    case ChainStatus::tuning_failed:
      return "tuning_failed";
  }
  return "unknown";
}

void SamplerConfig::validate() const {
  if (!(sigma_c > 0.0) || !std::isfinite(sigma_c)) {
    throw InvalidInput("sigma_c must be positive and finite");
  }
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    throw InvalidInput("theta must be positive and finite");
  }
  if (!(shrink_factor > 0.0) || !(shrink_factor <= 1.0)) {
    throw InvalidInput("shrink_factor must lie in (0, 1]");
  }
  if (max_crumbs_per_update == 0) {
    throw InvalidInput("max_crumbs_per_update must be positive");
  }
  if (metropolis.trial_length < 2 ||
      !(metropolis.min_acceptance <= metropolis.max_acceptance) ||
      metropolis.max_decades < 0 || !(metropolis.shape_scale > 0.0)) {
    throw InvalidInput("invalid Metropolis trial settings");
  }
}

double fit_kappa(double logf_x, double grad_norm, double logf_u,
                 double delta) {
  if (!(delta > 0.0)) throw InvalidInput("fit_kappa: delta must be > 0");
  return -2.0 / (delta * delta) * (logf_u - logf_x - grad_norm * delta);
}

double parabola_peak(double logf_x, double grad_norm, double kappa) {
  if (!(kappa > 0.0)) throw NotAPeak("parabola_peak: kappa must be > 0");
  return 0.5 * grad_norm * grad_norm / kappa + logf_x;
}

double conditional_variance(double mode_estimate, double slice_level,
                            double kappa) {
  if (!(kappa > 0.0)) {
    throw InvalidInput("conditional_variance: kappa must be > 0");
  }
  if (mode_estimate < slice_level) {
    throw InvalidInput("conditional_variance: mode estimate below slice");
  }
  return (2.0 / 3.0) * (mode_estimate - slice_level) / kappa;
}

PrecisionUpdate crumb_precision_update(const TriangularFactor& posterior,
                                       std::span<const double> g,
                                       double sigma_sq, double theta) {
  if (g.size() != posterior.dim() || !all_finite(g)) {
    throw InvalidInput("crumb_precision_update: bad direction");
  }
  if (std::abs(norm(g) - 1.0) > 1e-10) {
    throw InvalidInput("crumb_precision_update: direction is not unit");
  }
  if (!(sigma_sq > 0.0)) {
    throw InvalidInput("crumb_precision_update: sigma_sq must be > 0");
  }
  if (!(theta > 0.0)) {
    throw InvalidInput("crumb_precision_update: theta must be > 0");
  }
  // g^T Lambda g = |R g|^2
  const double cond = dot(posterior.multiply(g), posterior.multiply(g));
  const double alpha = std::max(1.0 / sigma_sq - (1.0 + theta) * cond, 0.0);

  TriangularFactor f = posterior.scaled(std::sqrt(theta));
  TriangularFactor r = posterior.scaled(std::sqrt(1.0 + theta));
  if (alpha > 0.0) {
    const double s = std::sqrt(alpha);
    Vector v(g.begin(), g.end());
    for (double& x : v) x *= s;
    Vector w = v;
    f.rank_one_update(v);
    r.rank_one_update(w);
  }
  return {std::move(f), std::move(r), alpha};
}

StepResult cm_step(std::span<const double> x0, double logf_x0, Target& target,
                   const SamplerConfig& config, Rng& rng,
                   const CmObserver* observer) {
  check_start(x0, logf_x0, target);
  const std::size_t p = x0.size();
  const double theta = config.theta;

  double mode = logf_x0;
  const double y0 = draw_slice_level(logf_x0, rng);
  TriangularFactor f = TriangularFactor::scaled_identity(p, 1.0 / config.sigma_c);
  TriangularFactor r = f;
  Vector weighted_crumbs(p, 0.0);
  double unit = 1.0;
  Vector crumb_mean(p);
  Vector z(p), grad(p), grad_u(p), u(p), g(p);

  StepStats stats;
  stats.slice_level = y0;

  for (std::size_t k = 1;; ++k) {
    // A factor that overflowed can no longer shrink the proposals; report it
    // as an exhausted update.
    if (k > config.max_crumbs_per_update || !std::isfinite(max_diagonal(r))) {
      throw MaxCrumbsExceeded(Vector(x0.begin(), x0.end()), y0, k - 1);
    }
    stats.crumbs_drawn = k;

    rng.fill_normal(z);
    Vector crumb = solve_upper(f, z);
    axpy(1.0, x0, crumb);
    // Running sum of W_i c_i kept in units of unit^2, unit being the largest
    // diagonal entry of R; the unscaled sum overflows on long rejection runs.
    {
      const double next_unit = max_diagonal(r);
      const double ratio = unit / next_unit;
      for (double& v : weighted_crumbs) v *= ratio * ratio;
      unit = next_unit;
      const double scale = 1.0 / unit;
      axpy(1.0, f.scaled(scale).gram_multiply(crumb), weighted_crumbs);
      const TriangularFactor rs = r.scaled(scale);
      crumb_mean = solve_upper(rs, solve_upper_transpose(rs, weighted_crumbs));
    }

    rng.fill_normal(z);
    Vector x = solve_upper(r, z);
    axpy(1.0, crumb_mean, x);

    const double logf = target.evaluate(x, grad);
    ++stats.density_evals;

    if (logf >= y0) {
      stats.accepted_proposal_index = k;
      if (observer != nullptr) {
        (*observer)(CmCrumbEvent{k, std::move(crumb), crumb_mean, f, r, x, logf,
                                 y0, true, std::nullopt});
      }
      return {std::move(x), logf, stats};
    }

    CmAdaptation ad;
    const double grad_norm = norm(grad);
    bool adapt = std::isfinite(logf) && std::isfinite(grad_norm) &&
                 grad_norm >= kMinGradientNorm;
    if (adapt) {
      for (std::size_t i = 0; i < p; ++i) g[i] = grad[i] / grad_norm;
      double delta = 0.0;
      for (std::size_t i = 0; i < p; ++i) {
        delta += (x[i] - crumb[i]) * (x[i] - crumb[i]);
      }
      delta = std::sqrt(delta);
      if (delta == 0.0) delta = 1e-8 * config.sigma_c;

      double logf_u = y0;
      if (!config.approximate_u) {
        for (std::size_t i = 0; i < p; ++i) u[i] = x[i] + delta * g[i];
        logf_u = target.evaluate(u, grad_u);
        ++stats.density_evals;
      }

      if (std::isfinite(logf_u)) {
        ad.kappa = fit_kappa(logf, grad_norm, logf_u, delta);
      }
      adapt = std::isfinite(logf_u) && ad.kappa > 0.0 && std::isfinite(ad.kappa);
      if (adapt) {
        mode = std::max(mode, parabola_peak(logf, grad_norm, ad.kappa));
        ad.sigma_sq = conditional_variance(mode, y0, ad.kappa);
        adapt = ad.sigma_sq > 0.0 && std::isfinite(ad.sigma_sq);
      }
    }
    // A wild curvature fit (non-quadratic tails) can ask for a precision
    // that a double factor cannot hold next to the others; rescale instead.
    std::optional<PrecisionUpdate> upd;
    if (adapt) {
      upd = crumb_precision_update(r, g, ad.sigma_sq, theta);
      adapt = factor_spread(upd->posterior_factor) <= kMaxFactorSpread;
    }
    ad.mode_estimate = mode;
    ad.fallback = !adapt;

    TriangularFactor f_used = f;
    TriangularFactor r_used = r;
    if (adapt) {
      f = std::move(upd->crumb_factor);
      r = std::move(upd->posterior_factor);
      ad.alpha = upd->alpha;
      ad.direction = g;
    } else {
      ++stats.kappa_fallbacks;
      f = r.scaled(std::sqrt(theta));
      r = r.scaled(std::sqrt(1.0 + theta));
    }

    if (observer != nullptr) {
      ad.next_posterior_factor = r;
      (*observer)(CmCrumbEvent{k, std::move(crumb), crumb_mean,
                               std::move(f_used), std::move(r_used),
                               std::move(x), logf, y0, false, std::move(ad)});
    }
  }
}

namespace detail {

StepResult spherical_crumb_step(std::span<const double> x0, double logf_x0,
                                Target& target, const SamplerConfig& config,
                                Rng& rng, bool adapt_rank,
                                const SrObserver* observer) {
  check_start(x0, logf_x0, target);
  const std::size_t p = x0.size();

  const double y0 = draw_slice_level(logf_x0, rng);
  OrthonormalColumns j(p);
  double sd = config.sigma_c;
  // Posterior for x0 (origin at x0) given crumbs c_i ~ N(0, sd_i^2) in the
  // complement of J: precision sum_i sd_i^-2, mean sum_i sd_i^-2 c_i / that.
  // With a constant sd this is the plain crumb average and sd / sqrt(k).
  double precision = 0.0;
  Vector weighted(p, 0.0);
  Vector z(p), crumb(p), pre(p), x(p), grad(p);

  StepStats stats;
  stats.slice_level = y0;

  for (std::size_t k = 1;; ++k) {
    if (k > config.max_crumbs_per_update) {
      throw MaxCrumbsExceeded(Vector(x0.begin(), x0.end()), y0, k - 1);
    }
    stats.crumbs_drawn = k;

    rng.fill_normal(z);
    for (std::size_t i = 0; i < p; ++i) crumb[i] = sd * z[i];
    const double w = 1.0 / (sd * sd);
    precision += w;
    axpy(w, crumb, weighted);

    rng.fill_normal(z);
    const double proposal_sd = 1.0 / std::sqrt(precision);
    for (std::size_t i = 0; i < p; ++i) {
      pre[i] = weighted[i] / precision + proposal_sd * z[i];
    }
    const Vector offset = project_orthogonal(j, pre);
    for (std::size_t i = 0; i < p; ++i) x[i] = x0[i] + offset[i];

    const double logf = target.evaluate(x, grad);
    ++stats.density_evals;
    const std::size_t rank_before = j.ncols();

    if (logf >= y0) {
      stats.accepted_proposal_index = k;
      if (observer != nullptr) {
        (*observer)(SrCrumbEvent{k, sd, crumb, offset, logf, y0, true,
                                 rank_before, columns_of(j), false});
      }
      return {x, logf, stats};
    }

    bool grew = false;
    if (adapt_rank && !j.full() && std::isfinite(logf) && all_finite(grad)) {
      const Vector gstar = project_orthogonal(j, grad);
      const double gstar_norm = norm(gstar);
      const double grad_norm = norm(grad);
      // Angle between the gradient and its projection below 60 degrees.
      if (gstar_norm >= kMinGradientNorm &&
          dot(gstar, grad) > 0.5 * gstar_norm * grad_norm) {
        append_orthonormal_column_inplace(j, gstar);
        grew = true;
      }
    }

    if (observer != nullptr) {
      auto cols = columns_of(j);
      if (grew) cols.pop_back();
      (*observer)(SrCrumbEvent{k, sd, crumb, offset, logf, y0, false,
                               rank_before, std::move(cols), grew});
    }
    sd *= config.shrink_factor;
  }
}

}  // namespace detail

StepResult sr_step(std::span<const double> x0, double logf_x0, Target& target,
                   const SamplerConfig& config, Rng& rng,
                   const SrObserver* observer) {
  return detail::spherical_crumb_step(x0, logf_x0, target, config, rng, true,
                                      observer);
}

StepResult na_step(std::span<const double> x0, double logf_x0, Target& target,
                   const SamplerConfig& config, Rng& rng,
                   const SrObserver* observer) {
  return detail::spherical_crumb_step(x0, logf_x0, target, config, rng, false,
                                      observer);
}

namespace {

// Random-walk Metropolis driver; the proposal displacement is produced by
// `displace` from a fresh standard normal vector.
class RandomWalk {
 public:
  RandomWalk(Target& target, Rng& rng, Vector x)
      : target_(target), rng_(rng), x_(std::move(x)), grad_(x_.size()),
        z_(x_.size()), proposal_(x_.size()) {
    logf_ = target_.evaluate(x_, grad_);
    if (!std::isfinite(logf_)) {
      throw InvalidInput("metropolis: log f(x0) must be finite");
    }
  }

  template <typename Displace>
  bool step(Displace&& displace) {
    rng_.fill_normal(z_);
    const Vector d = displace(z_);
    for (std::size_t i = 0; i < x_.size(); ++i) proposal_[i] = x_[i] + d[i];
    const double logf = target_.evaluate(proposal_, grad_);
    const double diff = logf - logf_;
    const bool accept = diff >= 0.0 || std::log(rng_.uniform()) < diff;
    if (accept) {
      x_.swap(proposal_);
      logf_ = logf;
    }
    return accept;
  }

  const Vector& x() const noexcept { return x_; }
  double log_density() const noexcept { return logf_; }

 private:
  Target& target_;
  Rng& rng_;
  Vector x_;
  double logf_;
  Vector grad_, z_, proposal_;
};

std::vector<Vector> sample_covariance(const std::vector<Vector>& rows) {
  const std::size_t n = rows.size();
  const std::size_t p = rows.front().size();
  Vector mean(p, 0.0);
  for (const auto& r : rows) axpy(1.0 / static_cast<double>(n), r, mean);
  std::vector<Vector> cov(p, Vector(p, 0.0));
  for (const auto& r : rows) {
    for (std::size_t a = 0; a < p; ++a) {
      const double da = r[a] - mean[a];
      for (std::size_t b = a; b < p; ++b) cov[a][b] += da * (r[b] - mean[b]);
    }
  }
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = a; b < p; ++b) {
      cov[a][b] /= static_cast<double>(n - 1);
      cov[b][a] = cov[a][b];
    }
  }
  return cov;
}

}  // namespace

ChainResult metropolis_trials_run(Target& target, const SamplerConfig& config,
                                  Rng& rng, std::size_t n,
                                  std::span<const double> x0) {
  config.validate();
  if (n == 0) throw InvalidInput("metropolis: n must be >= 1");
  if (x0.size() != target.dim()) {
    throw InvalidInput("metropolis: x0 has wrong dimension");
  }
  const auto start = Clock::now();
  const std::uint64_t count_start = target.eval_count();
  const std::size_t p = target.dim();
  const MetropolisTuning& tune = config.metropolis;

  ChainResult res;
  res.dim = p;
  res.config = config;

  RandomWalk walk(target, rng, Vector(x0.begin(), x0.end()));

  // Trial scales sigma_c * 10^j in the order j = 0, +1, -1, +2, -2, ...
  std::optional<double> chosen;
  std::vector<Vector> trial;
  for (int step = 0; step <= 2 * tune.max_decades && !chosen; ++step) {
    const int j = step == 0 ? 0 : (step % 2 == 1 ? (step + 1) / 2 : -step / 2);
    const double scale = config.sigma_c * std::pow(10.0, j);
    trial.clear();
    std::size_t accepted = 0;
    for (std::size_t t = 0; t < tune.trial_length; ++t) {
      accepted += walk.step([&](const Vector& z) {
        Vector d = z;
        for (double& v : d) v *= scale;
        return d;
      });
      trial.push_back(walk.x());
    }
    res.total_proposals += tune.trial_length;
    const double rate =
        static_cast<double>(accepted) / static_cast<double>(tune.trial_length);
    if (rate >= tune.min_acceptance && rate <= tune.max_acceptance) {
      chosen = scale;
    }
  }

  if (!chosen) {
    res.status = ChainStatus::tuning_failed;
    res.message = "no trial scale within the acceptance window";
    res.total_density_evals = target.eval_count() - count_start;
    res.wall_seconds = seconds_since(start);
    return res;
  }
  res.tuned_scale = chosen;

  const std::optional<TriangularFactor> shape =
      cholesky_upper(sample_covariance(trial));
  const double shape_scale = tune.shape_scale / std::sqrt(static_cast<double>(p));
  auto displace = [&](const Vector& z) {
    if (shape) {
      Vector d = shape->multiply_transpose(z);
      for (double& v : d) v *= shape_scale;
      return d;
    }
    Vector d = z;
    for (double& v : d) v *= *chosen;
    return d;
  };

  res.samples.reserve(n * p);
  res.log_densities.reserve(n);
  std::size_t accepted = 0;
  for (std::size_t i = 0; i < n; ++i) {
    accepted += walk.step(displace);
    res.samples.insert(res.samples.end(), walk.x().begin(), walk.x().end());
    res.log_densities.push_back(walk.log_density());
  }
  res.total_proposals += n;
  res.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(n);
  res.total_density_evals = target.eval_count() - count_start;
  res.wall_seconds = seconds_since(start);
  return res;
}

ChainResult run_chain(const SamplerConfig& config, Target& target,
                      std::size_t n, std::uint64_t seed,
                      std::optional<Vector> x0) {
  config.validate();
  if (n == 0) throw InvalidInput("run_chain: n must be >= 1");
  Vector x = x0 ? std::move(*x0) : Vector(target.dim(), 0.0);
  if (x.size() != target.dim()) {
    throw InvalidInput("run_chain: x0 has wrong dimension");
  }
  Rng rng(seed);

  if (config.method == Method::metropolis_trials) {
    ChainResult res = metropolis_trials_run(target, config, rng, n, x);
    res.seed = seed;
    return res;
  }

  const auto start = Clock::now();
  const std::uint64_t count_start = target.eval_count();
  const std::size_t p = target.dim();

  ChainResult res;
  res.dim = p;
  res.seed = seed;
  res.config = config;
  res.samples.reserve(n * p);
  res.log_densities.reserve(n);
  res.slice_levels.reserve(n);

  Vector grad(p);
  double logf = target.evaluate(x, grad);
  if (!std::isfinite(logf)) {
    throw InvalidInput("run_chain: log f(x0) must be finite");
  }

  for (std::size_t i = 0; i < n; ++i) {
    StepResult step;
    try {
      switch (config.method) {
        case Method::covariance_matching:
          step = cm_step(x, logf, target, config, rng);
          break;
        case Method::shrinking_rank:
          step = sr_step(x, logf, target, config, rng);
          break;
        default:
          step = na_step(x, logf, target, config, rng);
          break;
      }
    } catch (const MaxCrumbsExceeded& e) {
      res.status = ChainStatus::max_crumbs_exceeded;
      res.message = e.what();
      res.total_crumbs += e.crumbs();
      res.total_proposals += e.crumbs();
      break;
    }
    x = std::move(step.x);
    logf = step.log_density;
    res.samples.insert(res.samples.end(), x.begin(), x.end());
    res.log_densities.push_back(logf);
    res.slice_levels.push_back(step.stats.slice_level);
    res.total_crumbs += step.stats.crumbs_drawn;
    res.total_proposals += step.stats.crumbs_drawn;
    res.kappa_fallbacks += step.stats.kappa_fallbacks;
  }

  res.total_density_evals = target.eval_count() - count_start;
  res.wall_seconds = seconds_since(start);
  return res;
}

}  // namespace crumbs
