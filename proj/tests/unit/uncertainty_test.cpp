#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "xferlaw/presets.hpp"
#include "xferlaw/synth.hpp"
#include "xferlaw/uncertainty.hpp"

namespace xferlaw {
namespace {

constexpr LawParams kEncyclopedia{284.766, 2.570, 0.730, 0.123, 0.538};

std::vector<RunRecord> grid_records(double sigma, std::uint64_t seed) {
  SynthSpec spec;
  spec.params = kEncyclopedia;
  spec.noise_sigma = sigma;
  spec.seed = seed;
  return generate(spec);
}

FitConfig coarse() {
  FitConfig config;
  config.start_grid = coarse_start_grid();
  return config;
}

TEST(Percentile, TypeSevenInterpolation) {
  const std::vector<double> v = {1.0, 2.0, 3.0, 4.0, 10.0};
  EXPECT_EQ(percentile(v, 0.0), 1.0);
  EXPECT_EQ(percentile(v, 1.0), 10.0);
  EXPECT_EQ(percentile(v, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(percentile(v, 0.9), 4.0 + 0.6 * 6.0);
  EXPECT_DOUBLE_EQ(percentile(v, 0.025), 1.1);
  EXPECT_THROW(percentile(std::vector<double>{}, 0.5), InputError);
}

TEST(SampleSd, UsesNMinusOne) {
  const std::vector<double> v = {2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0};
  EXPECT_DOUBLE_EQ(sample_standard_deviation(v), std::sqrt(32.0 / 7.0));
  EXPECT_EQ(sample_standard_deviation(std::vector<double>{3.0}), 0.0);
}

TEST(ResampleIndices, DependOnlyOnSeedAndIndex) {
  const auto a = resample_indices(150, 7, 3);
  EXPECT_EQ(a, resample_indices(150, 7, 3));
  EXPECT_NE(a, resample_indices(150, 7, 4));
  EXPECT_NE(a, resample_indices(150, 8, 3));
  for (auto i : a) EXPECT_LT(i, 150u);
}

TEST(CoefficientOfVariation, KnownValues) {
  LawParams x{1.0, 2.0, 0.5, 0.25, 3.0};
  LawParams y{3.0, 6.0, 1.5, 0.75, 9.0};
  const std::vector<LawParams> pair = {x, y};
  const auto cv = coefficient_of_variation(pair);
  for (double v : {cv.A, cv.G, cv.alpha, cv.beta, cv.E}) EXPECT_DOUBLE_EQ(v, 0.5);
  const auto sample = coefficient_of_variation(pair, SdConvention::kSample);
  EXPECT_DOUBLE_EQ(sample.A, 0.5 * std::sqrt(2.0));

  const std::vector<LawParams> same = {x, x, x};
  const auto zero = coefficient_of_variation(same);
  EXPECT_EQ(zero.alpha, 0.0);
  EXPECT_EQ(zero.E, 0.0);

  EXPECT_THROW(coefficient_of_variation(std::vector<LawParams>{x}), InputError);
  LawParams neg = x;
  neg.E = -3.0;
  EXPECT_THROW(coefficient_of_variation(std::vector<LawParams>{x, neg}), DegenerateParamsError);
}

// Independent recompute of the preset rows (numpy, double).
TEST(CoefficientOfVariation, PresetRows) {
  std::vector<LawParams> rows;
  for (const auto& preset : kDatasetPresets) rows.push_back(preset.params);
  const auto pop = coefficient_of_variation(rows);
  const auto smp = coefficient_of_variation(rows, SdConvention::kSample);
  EXPECT_NEAR(pop.alpha, 0.0845, 5e-4);
  EXPECT_NEAR(pop.beta, 0.396, 5e-4);
  EXPECT_NEAR(smp.alpha, 0.0945, 5e-4);
  EXPECT_NEAR(smp.beta, 0.4427, 5e-4);
  EXPECT_LT(smp.alpha / smp.beta, 0.25);
  EXPECT_LT(pop.alpha / pop.beta, 0.25);
}

TEST(Bootstrap, NoiselessDataGivesZeroSpread) {
  const auto records = grid_records(0.0, 0);
  BootstrapOptions options;
  options.n_resamples = 20;
  const auto report = bootstrap(records, FormId::kBase, coarse(), options);
  EXPECT_EQ(report.n_failed, 0u);
  ASSERT_EQ(report.parameters.size(), 5u);
  for (const auto& p : report.parameters) {
    EXPECT_LE(p.standard_error, 1e-6 * std::max(1.0, std::abs(p.point_estimate))) << p.name;
    EXPECT_LE(p.ci_low, p.median);
    EXPECT_LE(p.median, p.ci_high);
  }
  EXPECT_NEAR(find_parameter(report, "alpha").point_estimate, 0.730, 1e-6);
  EXPECT_THROW(find_parameter(report, "p_shift"), InputError);
}

TEST(Bootstrap, DeterministicAndThreadIndependent) {
  const auto records = grid_records(0.02, 3);
  BootstrapOptions options;
  options.n_resamples = 12;
  options.seed = 99;
  const auto a = bootstrap(records, FormId::kBase, coarse(), options);
  options.threads = 4;
  const auto b = bootstrap(records, FormId::kBase, coarse(), options);
  ASSERT_EQ(a.parameters.size(), b.parameters.size());
  for (std::size_t k = 0; k < a.parameters.size(); ++k) {
    EXPECT_EQ(a.parameters[k].standard_error, b.parameters[k].standard_error);
    EXPECT_EQ(a.parameters[k].ci_low, b.parameters[k].ci_low);
    EXPECT_EQ(a.parameters[k].ci_high, b.parameters[k].ci_high);
  }
  options.seed = 100;
  const auto c = bootstrap(records, FormId::kBase, coarse(), options);
  EXPECT_NE(a.parameters[2].standard_error, c.parameters[2].standard_error);
}

TEST(Bootstrap, ReducedStartsAgreeWithFullGrid) {
  const auto records = grid_records(0.02, 5);
  BootstrapOptions options;
  options.n_resamples = 50;
  options.seed = 1;
  const auto reduced = bootstrap(records, FormId::kBase, coarse(), options);
  options.full_grid_refits = true;
  const auto full = bootstrap(records, FormId::kBase, coarse(), options);
  for (const char* name : {"alpha", "beta"}) {
    const auto& r = find_parameter(reduced, name);
    const auto& f = find_parameter(full, name);
    EXPECT_NEAR(r.standard_error, f.standard_error, 0.05 * f.standard_error) << name;
    EXPECT_NEAR(r.median, f.median, 1e-3) << name;
  }
}

TEST(Bootstrap, RejectsBadOptions) {
  const auto records = grid_records(0.0, 0);
  BootstrapOptions options;
  options.n_resamples = 1;
  EXPECT_THROW(bootstrap(records, FormId::kBase, coarse(), options), InputError);
  options.n_resamples = 4;
  EXPECT_THROW(bootstrap(std::vector<RunRecord>{}, FormId::kBase, coarse(), options), InputError);
}

TEST(Bootstrap, TooManyFailuresIsFatal) {
  // Seven records: resamples with fewer than five distinct points fail.
  auto records = grid_records(0.02, 2);
  records.resize(7);
  BootstrapOptions options;
  options.n_resamples = 40;
  options.max_failure_fraction = 0.0;
  EXPECT_THROW(bootstrap(records, FormId::kBase, coarse(), options), FitFailedError);
}

TEST(ResampleStarts, IncludeOptimumFirst) {
  const auto records = grid_records(0.0, 0);
  const auto observations = to_eval_points(records);
  const auto fitted = fit(observations, FormId::kBase, coarse());
  const auto starts = resample_starts(fitted, coarse_start_grid());
  ASSERT_EQ(starts.size(), 6u);
  for (Eigen::Index i = 0; i < starts[0].size(); ++i) EXPECT_EQ(starts[0][i], fitted.theta[i]);
}

}  // namespace
}  // namespace xferlaw
