#pragma once

// Step-wise cross-validation: fit on the runs at or below a (pre-training,
// fine-tuning) threshold pair, score extrapolation on everything else.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "xferlaw/error.hpp"
#include "xferlaw/fit.hpp"
#include "xferlaw/law.hpp"
#include "xferlaw/parallel.hpp"
#include "xferlaw/records.hpp"

namespace xferlaw {

struct CvConfig {
  // Empty means "every distinct level present in the records".
  std::vector<double> p_thresholds;
  std::vector<double> f_thresholds;
  std::size_t skip_number = 1;
  std::vector<double> lambda_exp_grid = {0.0, 0.01, 0.1, 1.0, 5.0, 10.0, 50.0};
  std::vector<double> lambda_coef_grid = {0.0, 0.0001, 0.001, 0.01, 0.1};
  std::size_t min_train_size = 1;
  std::size_t min_test_size = 1;
  FitConfig fit;
  BasinHoppingConfig hopping;
  double tokens_per_unit = kTokensPerStep;
  int threads = 1;
};

struct Split {
  std::vector<RunRecord> train;
  std::vector<RunRecord> test;
};

/// train: pretrain_tokens <= p_threshold AND finetune_tokens <= f_threshold;
/// test: the complement. Throws SplitError when a side is below its minimum.
inline Split split(std::span<const RunRecord> records, double p_threshold, double f_threshold,
                   std::size_t min_train_size = 1, std::size_t min_test_size = 1) {
  Split out;
  for (const auto& record : records) {
    if (record.pretrain_tokens <= p_threshold && record.finetune_tokens <= f_threshold) {
      out.train.push_back(record);
    } else {
      out.test.push_back(record);
    }
  }
  if (out.train.size() < std::max<std::size_t>(min_train_size, 1)) {
    throw SplitError("train side has " + std::to_string(out.train.size()) + " records");
  }
  if (out.test.size() < std::max<std::size_t>(min_test_size, 1)) {
    throw SplitError("test side has " + std::to_string(out.test.size()) + " records");
  }
  return out;
}

struct CvSplitRecord {
  std::size_t combination = 0;  // index into the threshold cross product
  double p_threshold = 0.0;
  double f_threshold = 0.0;
  double lambda_exp = 0.0;
  double lambda_coef = 0.0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  bool skipped = false;
  std::string skip_reason;
  double rmse = 0.0;
  double mae = 0.0;
};

struct CvReport {
  int form_id = 1;
  std::vector<CvSplitRecord> splits;
  double lowest_rmse = 0.0;
  double lowest_mae = 0.0;
  std::size_t combinations_total = 0;
  std::size_t combinations_used = 0;
  std::size_t skipped = 0;
};

struct ErrorMetrics {
  double rmse = 0.0;
  double mae = 0.0;
};

inline ErrorMetrics error_metrics(std::span<const double> predicted,
                                  std::span<const double> observed) {
  if (predicted.size() != observed.size() || predicted.empty()) {
    throw InputError("metrics need equally sized, non-empty inputs");
  }
  double squares = 0.0;
  double absolute = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - observed[i];
    squares += d * d;
    absolute += std::abs(d);
  }
  const auto n = static_cast<double>(predicted.size());
  return {std::sqrt(squares / n), absolute / n};
}

inline std::vector<double> distinct_sorted(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  return values;
}

namespace detail {

inline void require_increasing(const std::vector<double>& values, const char* what) {
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!(values[i] > values[i - 1])) {
      throw InputError(std::string(what) + " must be strictly increasing");
    }
  }
}

}  // namespace detail

/// Threshold pairs in canonical order (p-threshold major). Only every
/// skip_number-th combination is used.
inline std::vector<std::pair<double, double>> threshold_combinations(
    std::span<const RunRecord> records, const CvConfig& config, std::size_t* total = nullptr) {
  std::vector<double> ps = config.p_thresholds;
  std::vector<double> fs = config.f_thresholds;
  if (ps.empty() || fs.empty()) {
    std::vector<double> all_p, all_f;
    for (const auto& r : records) {
      all_p.push_back(r.pretrain_tokens);
      all_f.push_back(r.finetune_tokens);
    }
    if (ps.empty()) ps = distinct_sorted(all_p);
    if (fs.empty()) fs = distinct_sorted(all_f);
  }
  detail::require_increasing(ps, "p thresholds");
  detail::require_increasing(fs, "f thresholds");
  if (config.skip_number < 1) throw InputError("skip_number must be >= 1");
  std::vector<std::pair<double, double>> out;
  std::size_t index = 0;
  for (double p : ps) {
    for (double f : fs) {
      if (index % config.skip_number == 0) out.emplace_back(p, f);
      ++index;
    }
  }
  if (total != nullptr) *total = index;
  return out;
}

/// Basin-hopping seed of work item `item`; every item draws its own restarts.
inline std::uint64_t cv_item_seed(std::uint64_t seed, std::size_t item) {
  return seed ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(item) + 1));
}

/// Fits every (threshold pair, lambda pair) work item and scores it on the
/// held-out side in linear loss space. Degenerate splits and failed fits are
/// recorded as skipped.
inline CvReport run_cv(std::span<const RunRecord> records, FormId form, const CvConfig& config) {
  if (records.empty()) throw InputError("cross-validation needs records");
  if (config.lambda_exp_grid.empty() || config.lambda_coef_grid.empty()) {
    throw InputError("regularization grids must be non-empty");
  }
  CvReport report;
  report.form_id = static_cast<int>(form);
  const auto combos = threshold_combinations(records, config, &report.combinations_total);
  report.combinations_used = combos.size();

  const std::size_t n_lambda = config.lambda_exp_grid.size() * config.lambda_coef_grid.size();
  report.splits.resize(combos.size() * n_lambda);
  parallel_for(report.splits.size(), config.threads, [&](std::size_t item) {
    const std::size_t c = item / n_lambda;
    const std::size_t l = item % n_lambda;
    CvSplitRecord& out = report.splits[item];
    // Stride index over the full threshold product.
    out.combination = c * config.skip_number;
    out.p_threshold = combos[c].first;
    out.f_threshold = combos[c].second;
    out.lambda_exp = config.lambda_exp_grid[l / config.lambda_coef_grid.size()];
    out.lambda_coef = config.lambda_coef_grid[l % config.lambda_coef_grid.size()];
    Split parts;
    try {
      parts = split(records, out.p_threshold, out.f_threshold, config.min_train_size,
                    config.min_test_size);
    } catch (const SplitError& e) {
      out.skipped = true;
      out.skip_reason = std::string("degenerate split: ") + e.what();
      return;
    }
    out.train_size = parts.train.size();
    out.test_size = parts.test.size();
    FitConfig fit_config = config.fit;
    fit_config.reg_exponents = out.lambda_exp;
    fit_config.reg_coefficients = out.lambda_coef;
    fit_config.threads = 1;
    BasinHoppingConfig hopping = config.hopping;
    hopping.seed = cv_item_seed(config.hopping.seed, item);
    try {
      const auto train = to_eval_points(parts.train, config.tokens_per_unit);
      const auto fitted = fit_basin_hopping(train, form, fit_config, hopping);
      std::vector<double> predicted, observed;
      for (const auto& record : parts.test) {
        predicted.push_back(predict(fitted, to_eval_point(record, config.tokens_per_unit)));
        observed.push_back(record.val_loss);
      }
      const auto metrics = error_metrics(predicted, observed);
      if (!std::isfinite(metrics.rmse) || !std::isfinite(metrics.mae)) {
        throw NonFiniteError("non-finite prediction on the test side");
      }
      out.rmse = metrics.rmse;
      out.mae = metrics.mae;
    } catch (const Error& e) {
      out.skipped = true;
      out.skip_reason = std::string("fit failed: ") + e.what();
    }
  });

  bool any = false;
  for (const auto& s : report.splits) {
    if (s.skipped) {
      ++report.skipped;
      continue;
    }
    if (!any || s.rmse < report.lowest_rmse) report.lowest_rmse = s.rmse;
    if (!any || s.mae < report.lowest_mae) report.lowest_mae = s.mae;
    any = true;
  }
  if (!any) throw FitFailedError("every cross-validation split was skipped");
  return report;
}

struct FormRanking {
  int form_id = 1;
  double lowest_rmse = 0.0;
  double lowest_mae = 0.0;
};

struct Comparison {
  std::vector<FormRanking> ranking;
  std::vector<CvReport> reports;  // in input order
};

/// Ranks forms by lowest RMSE, then lowest MAE, then form index.
inline Comparison compare_forms(std::span<const RunRecord> records, std::span<const FormId> forms,
                                const CvConfig& config) {
  if (forms.empty()) throw InputError("at least one form is required");
  Comparison out;
  for (FormId form : forms) {
    out.reports.push_back(run_cv(records, form, config));
    const auto& r = out.reports.back();
    out.ranking.push_back({r.form_id, r.lowest_rmse, r.lowest_mae});
  }
  std::stable_sort(out.ranking.begin(), out.ranking.end(), [](const auto& x, const auto& y) {
    return std::tie(x.lowest_rmse, x.lowest_mae, x.form_id) <
           std::tie(y.lowest_rmse, y.lowest_mae, y.form_id);
  });
  return out;
}

}  // namespace xferlaw
