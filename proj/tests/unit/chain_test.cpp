#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>

#include "crumbs/diagnostics.hpp"
#include "crumbs/error.hpp"
#include "crumbs/samplers.hpp"
#include "crumbs/targets.hpp"
#include "support/oracles.hpp"

namespace crumbs {
namespace {

class Flat final : public LogDensity {
 public:
  explicit Flat(std::size_t p) : p_(p) {}
  std::size_t dim() const override { return p_; }
  double evaluate(std::span<const double>, std::span<double> g) const override {
    std::fill(g.begin(), g.end(), 0.0);
    return 0.0;
  }

 private:
  std::size_t p_;
};

SamplerConfig config_for(Method m, double sigma_c) {
  SamplerConfig c;
  c.method = m;
  c.sigma_c = sigma_c;
  return c;
}

constexpr std::array kSliceMethods{Method::covariance_matching,
                                   Method::shrinking_rank,
                                   Method::nonadaptive_crumb};
constexpr std::array kAllMethods{Method::covariance_matching, Method::shrinking_rank,
                                 Method::nonadaptive_crumb, Method::metropolis_trials};

class EveryMethod : public ::testing::TestWithParam<Method> {};

TEST_P(EveryMethod, SameSeedGivesBitwiseIdenticalChains) {
  const SamplerConfig c = config_for(GetParam(), 1.0);
  Target a = make_target("n4-neg");
  Target b = make_target("n4-neg");
  const ChainResult ra = run_chain(c, a, 3000, 77);
  const ChainResult rb = run_chain(c, b, 3000, 77);
  ASSERT_TRUE(ra.ok()) << ra.message;
  EXPECT_EQ(ra.samples, rb.samples);
  EXPECT_EQ(ra.log_densities, rb.log_densities);
  EXPECT_EQ(ra.total_density_evals, rb.total_density_evals);

  Target d = make_target("n4-neg");
  const ChainResult rd = run_chain(c, d, 3000, 78);
  EXPECT_NE(ra.samples, rd.samples);
}

TEST_P(EveryMethod, SingleUpdateGivesOneRow) {
  Target t = make_standard_normal(3);
  const ChainResult r = run_chain(config_for(GetParam(), 1.0), t, 1, 5);
  ASSERT_TRUE(r.ok()) << r.message;
  EXPECT_EQ(r.n(), 1u);
  EXPECT_EQ(r.samples.size(), 3u);
  EXPECT_EQ(r.log_densities.size(), 1u);
}

TEST_P(EveryMethod, CountersReconcileWithTheTarget) {
  Target t = make_target("eight-schools");
  const ChainResult r = run_chain(config_for(GetParam(), 1.0), t, 2000, 9);
  ASSERT_TRUE(r.ok()) << r.message;
  EXPECT_EQ(r.total_density_evals, t.eval_count());
  EXPECT_EQ(r.n(), 2000u);
  EXPECT_EQ(r.seed, 9u);
  EXPECT_EQ(r.config.method, GetParam());
  EXPECT_TRUE(all_finite(r.samples));
  EXPECT_GE(r.wall_seconds, 0.0);
}

TEST_P(EveryMethod, RejectsBadArguments) {
  Target t = make_standard_normal(2);
  const SamplerConfig c = config_for(GetParam(), 1.0);
  EXPECT_THROW(run_chain(c, t, 0, 1), InvalidInput);
  EXPECT_THROW(run_chain(c, t, 10, 1, Vector{0.0}), InvalidInput);
  EXPECT_THROW(run_chain(c, t, 10, 1, Vector{0.0, std::nan("")}), InvalidInput);
  SamplerConfig bad = c;
  bad.sigma_c = -1.0;
  EXPECT_THROW(run_chain(bad, t, 10, 1), InvalidInput);
}

INSTANTIATE_TEST_SUITE_P(Chain, EveryMethod, ::testing::ValuesIn(kAllMethods),
                         [](const auto& info) {
                           std::string s(method_name(info.param));
                           std::replace(s.begin(), s.end(), '-', '_');
                           return s;
                         });

TEST(Chain, EveryEmittedSliceSampleLiesInItsSlice) {
  std::size_t checked = 0;
  for (const std::string& name : target_names()) {
    for (Method m : kSliceMethods) {
      for (double sigma_c : {0.1, 10.0}) {
        Target t = make_target(name);
        const ChainResult r = run_chain(config_for(m, sigma_c), t, 1000, 13);
        ASSERT_TRUE(r.ok()) << name << " " << method_name(m) << ": " << r.message;
        ASSERT_EQ(r.slice_levels.size(), r.n());
        for (std::size_t i = 0; i < r.n(); ++i) {
          ASSERT_GE(r.log_densities[i], r.slice_levels[i])
              << name << " " << method_name(m) << " update " << i;
          ++checked;
        }
      }
    }
  }
  EXPECT_EQ(checked, 4u * 3u * 2u * 1000u);
}

TEST(Chain, CrumbLimitAbortKeepsPartialResults) {
  SamplerConfig c = config_for(Method::nonadaptive_crumb, 1000.0);
  c.max_crumbs_per_update = 3;
  Target t = make_target("n4-pos");
  const ChainResult r = run_chain(c, t, 500, 21);
  EXPECT_EQ(r.status, ChainStatus::max_crumbs_exceeded);
  EXPECT_FALSE(r.ok());
  EXPECT_FALSE(r.message.empty());
  EXPECT_LT(r.n(), 500u);
  EXPECT_EQ(r.log_densities.size(), r.n());
  EXPECT_EQ(r.total_density_evals, t.eval_count());
  EXPECT_TRUE(all_finite(r.samples));
}

TEST(Chain, DefaultStartIsTheOrigin) {
  Target t = make_standard_normal(2);
  SamplerConfig c = config_for(Method::covariance_matching, 1.0);
  Target u = make_standard_normal(2);
  EXPECT_EQ(run_chain(c, t, 50, 3).samples,
            run_chain(c, u, 50, 3, Vector{0.0, 0.0}).samples);
}

TEST(Metropolis, FlatDensityAcceptsEveryProposal) {
  // Ratio f(x')/f(x) = 1 always; the window must admit a 100% rate.
  Target t("flat", std::make_shared<Flat>(3));
  SamplerConfig c = config_for(Method::metropolis_trials, 1.0);
  c.metropolis.max_acceptance = 1.0;
  const ChainResult r = run_chain(c, t, 5000, 4);
  ASSERT_TRUE(r.ok()) << r.message;
  EXPECT_EQ(r.acceptance_rate, 1.0);
  ASSERT_TRUE(r.tuned_scale.has_value());
  EXPECT_EQ(*r.tuned_scale, 1.0);
  for (std::size_t i = 1; i < r.n(); ++i) ASSERT_NE(r.at(i, 0), r.at(i - 1, 0));
}

TEST(Metropolis, FlatDensityFailsTuningWithTheDefaultWindow) {
  Target t("flat", std::make_shared<Flat>(2));
  const ChainResult r =
      run_chain(config_for(Method::metropolis_trials, 1.0), t, 100, 4);
  EXPECT_EQ(r.status, ChainStatus::tuning_failed);
  EXPECT_EQ(r.n(), 0u);
  EXPECT_FALSE(r.tuned_scale.has_value());
  // Nine trial scales plus the initial evaluation.
  EXPECT_EQ(t.eval_count(), 9u * 2000u + 1u);
  EXPECT_EQ(r.total_density_evals, t.eval_count());
}

TEST(Metropolis, AcceptanceOnStandardNormal) {
  Target t = make_standard_normal(1);
  const ChainResult r =
      run_chain(config_for(Method::metropolis_trials, 1.0), t, 100000, 8);
  ASSERT_TRUE(r.ok()) << r.message;
  EXPECT_GE(r.acceptance_rate, 0.3);
  EXPECT_LE(r.acceptance_rate, 0.6);
  EXPECT_EQ(r.total_density_evals, t.eval_count());
  EXPECT_EQ(r.total_density_evals, r.total_proposals + 1);
}

TEST(Metropolis, SearchOrderTriesLargerScaleFirst) {
  // Order 0.1, 1, 0.01, 10: the first three accept too often on N(0,1).
  Target t = make_standard_normal(1);
  const ChainResult r =
      run_chain(config_for(Method::metropolis_trials, 0.1), t, 100, 8);
  ASSERT_TRUE(r.ok()) << r.message;
  ASSERT_TRUE(r.tuned_scale.has_value());
  EXPECT_DOUBLE_EQ(*r.tuned_scale, 10.0);
  EXPECT_EQ(r.total_proposals, 4u * 2000u + 100u);
}

// Flow balance between density-ordered regions |x| < 0.5, 0.5 <= |x| < 1.5
// and |x| >= 1.5: a reversible chain moves i -> j as often as j -> i.
class FlowBalance : public ::testing::TestWithParam<Method> {};

TEST_P(FlowBalance, TransitionCountsAreSymmetric) {
  Target t = make_standard_normal(1);
  const ChainResult r = run_chain(config_for(GetParam(), 1.0), t, 200000, 31);
  ASSERT_TRUE(r.ok()) << r.message;
  auto region = [](double x) {
    const double a = std::abs(x);
    return a < 0.5 ? 0 : (a < 1.5 ? 1 : 2);
  };
  std::array<std::array<double, 3>, 3> counts{};
  for (std::size_t i = 1; i < r.n(); ++i) {
    counts[region(r.at(i - 1, 0))][region(r.at(i, 0))] += 1.0;
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      const double total = counts[i][j] + counts[j][i];
      ASSERT_GT(total, 100.0) << i << "<->" << j;
      EXPECT_LE(std::abs(counts[i][j] - counts[j][i]), 5.0 * std::sqrt(total))
          << i << "->" << j << " " << counts[i][j] << " vs " << counts[j][i];
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Chain, FlowBalance, ::testing::ValuesIn(kAllMethods),
                         [](const auto& info) {
                           std::string s(method_name(info.param));
                           std::replace(s.begin(), s.end(), '-', '_');
                           return s;
                         });

class ShortStationarity : public ::testing::TestWithParam<Method> {};

TEST_P(ShortStationarity, StandardNormalMarginals) {
  // In two dimensions no decade from 1 lands in the Metropolis window.
  const double sigma_c = GetParam() == Method::metropolis_trials ? 3.0 : 1.0;
  Target t = make_standard_normal(2);
  const ChainResult r = run_chain(config_for(GetParam(), sigma_c), t, 30000, 17);
  ASSERT_TRUE(r.ok()) << r.message;
  const ChainTau tau = chain_tau(r);
  const auto stride = static_cast<std::size_t>(std::ceil(tau.tau));
  const double ess = static_cast<double>(r.n()) / tau.tau;
  for (std::size_t j = 0; j < 2; ++j) {
    const Vector all = testing::column(r.samples, 2, j, 1);
    EXPECT_LT(std::abs(testing::mean_of(all)), 4.0 / std::sqrt(ess)) << j;
    EXPECT_NEAR(testing::variance_of(all), 1.0, 0.1) << j;
    const Vector thin = testing::column(r.samples, 2, j, stride);
    EXPECT_GT(testing::ks_pvalue(thin, testing::normal_cdf), 0.001) << j;
  }
}

INSTANTIATE_TEST_SUITE_P(Chain, ShortStationarity, ::testing::ValuesIn(kAllMethods),
                         [](const auto& info) {
                           std::string s(method_name(info.param));
                           std::replace(s.begin(), s.end(), '-', '_');
                           return s;
                         });

}  // namespace
}  // namespace crumbs
