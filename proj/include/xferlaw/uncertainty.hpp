#pragma once

// Bootstrap standard errors and percentile intervals, plus the
// cross-dataset coefficient of variation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xferlaw/error.hpp"
#include "xferlaw/fit.hpp"
#include "xferlaw/law.hpp"
#include "xferlaw/parallel.hpp"
#include "xferlaw/records.hpp"

namespace xferlaw {

inline constexpr std::size_t kDefaultResamples = 4000;

struct ParameterSummary {
  std::string name;
  double point_estimate = 0.0;
  double standard_error = 0.0;
  double median = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct BootstrapReport {
  int form_id = 1;
  std::size_t n_resamples = 0;
  std::size_t n_failed = 0;
  std::uint64_t seed = 0;
  double confidence = 0.95;
  std::vector<ParameterSummary> parameters;
  FitResult full_fit;
  std::vector<std::size_t> failed_resamples;
};

/// Named parameter values of a fitted form, in a stable order.
inline std::vector<std::pair<std::string, double>> named_parameters(const LawForm& form,
                                                                    const LawParams& params) {
  std::vector<std::pair<std::string, double>> out = {
      {"A", params.A}, {"G", params.G}, {"alpha", params.alpha}, {"beta", params.beta}};
  if (form.has_irreducible()) out.emplace_back("E", params.E);
  if (shifts_p(form.id())) out.emplace_back("p_shift", form.p_shift());
  if (shifts_f(form.id())) out.emplace_back("f_shift", form.f_shift());
  return out;
}

/// Linear interpolation between order statistics (the common "type 7" rule).
/// `sorted` must be ascending and non-empty.
inline double percentile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw InputError("percentile of an empty sample");
  const double position = q * static_cast<double>(sorted.size() - 1);
  const auto lower = static_cast<std::size_t>(std::floor(position));
  const auto upper = std::min(lower + 1, sorted.size() - 1);
  const double weight = position - static_cast<double>(lower);
  return sorted[lower] + weight * (sorted[upper] - sorted[lower]);
}

inline double sample_standard_deviation(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double mean =
      std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += (v - mean) * (v - mean);
  return std::sqrt(sum / static_cast<double>(values.size() - 1));
}

/// Indices drawn with replacement for resample `index`; depends only on
/// (seed, index).
inline std::vector<std::size_t> resample_indices(std::size_t n, std::uint64_t seed,
                                                 std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    0xB0075u};
  std::mt19937_64 engine(seq);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> out(n);
  for (auto& i : out) i = pick(engine);
  return out;
}

/// Starts reused for every resample refit: the full-data optimum, the
/// winning grid start, and the `neighbours` grid starts nearest to it.
inline std::vector<Eigen::VectorXd> resample_starts(const FitResult& full_fit,
                                                    const StartGrid& grid,
                                                    std::size_t neighbours = 4) {
  const auto id = full_fit.form.id();
  const auto grid_starts = start_points(id, grid);
  std::vector<Eigen::VectorXd> out;
  out.push_back(Eigen::Map<const Eigen::VectorXd>(
      full_fit.theta.data(), static_cast<Eigen::Index>(full_fit.theta.size())));
  if (full_fit.start_index >= grid_starts.size()) return out;
  const auto& winner = grid_starts[full_fit.start_index];
  std::vector<std::size_t> order(grid_starts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return (grid_starts[x] - winner).squaredNorm() < (grid_starts[y] - winner).squaredNorm();
  });
  for (std::size_t k = 0; k < order.size() && k <= neighbours; ++k) {
    out.push_back(grid_starts[order[k]]);
  }
  return out;
}

struct BootstrapOptions {
  std::size_t n_resamples = kDefaultResamples;
  std::uint64_t seed = 0;
  double tokens_per_unit = kTokensPerStep;
  int threads = 1;
  double max_failure_fraction = 0.10;
  // Refit every resample from the full start grid instead of the reduced set.
  bool full_grid_refits = false;
};

inline BootstrapReport bootstrap(std::span<const RunRecord> records, FormId form,
                                 const FitConfig& fit_config, const BootstrapOptions& options) {
  if (records.empty()) throw InputError("bootstrap needs records");
  if (options.n_resamples < 2) throw InputError("bootstrap needs at least 2 resamples");
  const auto observations = to_eval_points(records, options.tokens_per_unit);

  BootstrapReport report;
  report.form_id = static_cast<int>(form);
  report.n_resamples = options.n_resamples;
  report.seed = options.seed;
  FitConfig full_config = fit_config;
  full_config.threads = options.threads;
  report.full_fit = fit(observations, form, full_config);

  const auto starts = options.full_grid_refits ? start_points(form, fit_config.start_grid)
                                               : resample_starts(report.full_fit,
                                                                 fit_config.start_grid);
  FitConfig refit_config = fit_config;
  refit_config.threads = 1;

  const auto base = named_parameters(report.full_fit.form, report.full_fit.params);
  std::vector<std::vector<double>> draws(options.n_resamples);
  std::vector<char> failed(options.n_resamples, 0);
  parallel_for(options.n_resamples, options.threads, [&](std::size_t r) {
    // Repeated draws become integer weights on the distinct observations.
    const auto picks = resample_indices(observations.size(), options.seed, r);
    std::vector<double> counts(observations.size(), 0.0);
    for (auto i : picks) counts[i] += 1.0;
    std::vector<Observation> sample;
    std::vector<double> weights;
    for (std::size_t i = 0; i < observations.size(); ++i) {
      if (counts[i] > 0.0) {
        sample.push_back(observations[i]);
        weights.push_back(counts[i]);
      }
    }
    try {
      if (sample.size() < static_cast<std::size_t>(free_parameter_count(form))) {
        throw PreconditionError("resample has too few distinct points");
      }
      const auto refit = fit_prepared(PreparedData(sample, weights), form, starts, refit_config);
      const auto values = named_parameters(refit.form, refit.params);
      draws[r].reserve(values.size());
      for (const auto& [name, value] : values) draws[r].push_back(value);
    } catch (const Error&) {
      failed[r] = 1;
    }
  });

  for (std::size_t r = 0; r < options.n_resamples; ++r) {
    if (failed[r]) report.failed_resamples.push_back(r);
  }
  report.n_failed = report.failed_resamples.size();
  if (static_cast<double>(report.n_failed) >
      options.max_failure_fraction * static_cast<double>(options.n_resamples)) {
    throw FitFailedError(std::to_string(report.n_failed) + " of " +
                         std::to_string(options.n_resamples) + " resample fits failed");
  }

  const double tail = 0.5 * (1.0 - report.confidence);
  for (std::size_t k = 0; k < base.size(); ++k) {
    std::vector<double> values;
    values.reserve(options.n_resamples);
    for (std::size_t r = 0; r < options.n_resamples; ++r) {
      if (!failed[r]) values.push_back(draws[r][k]);
    }
    std::sort(values.begin(), values.end());
    ParameterSummary summary;
    summary.name = base[k].first;
    summary.point_estimate = base[k].second;
    summary.standard_error = sample_standard_deviation(values);
    summary.median = percentile(values, 0.5);
    summary.ci_low = percentile(values, tail);
    summary.ci_high = percentile(values, 1.0 - tail);
    report.parameters.push_back(std::move(summary));
  }
  return report;
}

inline const ParameterSummary& find_parameter(const BootstrapReport& report,
                                              const std::string& name) {
  for (const auto& p : report.parameters) {
    if (p.name == name) return p;
  }
  throw InputError("bootstrap report has no parameter '" + name + "'");
}

enum class SdConvention { kPopulation, kSample };

/// Per-parameter standard deviation over mean, for A, G, alpha, beta, E
/// (returned in those fields). Population (n) denominator by default.
inline LawParams coefficient_of_variation(std::span<const LawParams> sets,
                                          SdConvention convention = SdConvention::kPopulation) {
  if (sets.size() < 2) throw InputError("coefficient of variation needs >= 2 parameter sets");
  const auto n = static_cast<double>(sets.size());
  const double denominator = convention == SdConvention::kSample ? n - 1.0 : n;
  auto cv = [&](auto member) {
    double mean = 0.0;
    for (const auto& s : sets) mean += s.*member;
    mean /= n;
    if (mean == 0.0) throw DegenerateParamsError("coefficient of variation of a zero mean");
    double var = 0.0;
    for (const auto& s : sets) var += (s.*member - mean) * (s.*member - mean);
    return std::sqrt(var / denominator) / mean;
  };
  return {cv(&LawParams::A), cv(&LawParams::G), cv(&LawParams::alpha), cv(&LawParams::beta),
          cv(&LawParams::E)};
}

}  // namespace xferlaw
