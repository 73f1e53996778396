#pragma once

// Budget planning on a fitted law: split a budget between pre-training steps
// and fine-tuning data, sweep the split over the transfer gap or the cost
// ratio, trace iso-loss curves, and estimate training compute.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "xferlaw/error.hpp"
#include "xferlaw/law.hpp"
#include "xferlaw/records.hpp"

namespace xferlaw {

/// Minimize L(p, f) subject to C_p * steps + C_f * f <= B, where the law's
/// pre-training input is p = 1 + steps_to_p * steps.
struct AllocationProblem {
  double budget = 0.0;
  double cost_per_pretrain_step = 0.0;   // C_p
  double cost_per_finetune_point = 0.0;  // C_f
  LawParams params;
  // Law p units per pre-training step; 1 when the law was fitted in steps.
  double steps_to_p = 1.0;
};

struct AllocationResult {
  double p_star = 1.0;
  double pretrain_steps = 0.0;
  double f_star = 1.0;
  double loss_at_optimum = 0.0;
  double finetune_budget_fraction = 0.0;  // C_f * f_star / B
  double pretrain_spend = 0.0;            // C_p * pretrain_steps
  std::vector<std::string> warnings;
};

inline void validate(const AllocationProblem& problem) {
  if (!(problem.budget > 0.0) || !(problem.cost_per_pretrain_step > 0.0) ||
      !(problem.cost_per_finetune_point > 0.0) || !std::isfinite(problem.budget) ||
      !std::isfinite(problem.cost_per_pretrain_step) ||
      !std::isfinite(problem.cost_per_finetune_point)) {
    throw InputError("budget and unit costs must be finite and > 0");
  }
  if (!(problem.steps_to_p > 0.0)) throw InputError("steps_to_p must be > 0");
  validate(problem.params);
  if (problem.budget < problem.cost_per_finetune_point) {
    throw InfeasibleError("budget cannot buy a single fine-tuning point");
  }
}

namespace detail {

// The constrained problem along the active budget line, parametrized by the
// fine-tuning spend s = C_f * f in [C_f, B]. Then p = 1 + k (B - s) with
// k = steps_to_p / C_p, and the stationarity condition does not involve C_f.
struct AllocationCurve {
  const AllocationProblem& problem;

  double k() const { return problem.steps_to_p / problem.cost_per_pretrain_step; }
  double steps(double spend) const {
    return std::max(0.0, (problem.budget - spend) / problem.cost_per_pretrain_step);
  }
  double p(double spend) const { return 1.0 + k() * std::max(0.0, problem.budget - spend); }
  double f(double spend) const { return spend / problem.cost_per_finetune_point; }
  double loss(double spend) const { return evaluate(problem.params, {p(spend), f(spend)}); }

  // dL/ds scaled by a positive factor:
  //   alpha k A p^(-alpha-1) s - beta (A p^-alpha + G)
  double slope_sign_term(double spend) const {
    const auto& w = problem.params;
    const double pp = p(spend);
    return w.alpha * k() * w.A * std::pow(pp, -w.alpha - 1.0) * spend -
           w.beta * (w.A * std::pow(pp, -w.alpha) + w.G);
  }
};

}  // namespace detail

/// Solves the 1-D problem along the active budget constraint. Candidate
/// optima are the two ends of the budget line and every stationary point,
/// found by bracketing sign changes of dL/ds on a log/linear scan of
/// [0, B] (independent of C_f) and bisecting to 1e-12 relative width.
inline AllocationResult optimize_allocation(const AllocationProblem& problem) {
  validate(problem);
  const detail::AllocationCurve curve{problem};
  const double budget = problem.budget;
  const double lo = problem.cost_per_finetune_point;  // f = 1

  constexpr int kScan = 2000;
  std::vector<double> scan = {lo, budget};
  for (int i = 0; i <= kScan; ++i) {
    scan.push_back(budget * std::pow(10.0, -15.0 + 15.0 * i / kScan));
    scan.push_back(budget * i / kScan);
  }
  std::sort(scan.begin(), scan.end());
  scan.erase(std::unique(scan.begin(), scan.end()), scan.end());
  std::erase_if(scan, [&](double s) { return s < lo || s > budget; });

  std::vector<double> candidates = {lo, budget};
  double scan_min = std::numeric_limits<double>::infinity();
  double scan_max = -std::numeric_limits<double>::infinity();
  double prev_sign = 0.0;
  for (std::size_t i = 0; i < scan.size(); ++i) {
    const double value = curve.loss(scan[i]);
    scan_min = std::min(scan_min, value);
    scan_max = std::max(scan_max, value);
    const double sign = curve.slope_sign_term(scan[i]);
    if (i > 0 && prev_sign < 0.0 && sign >= 0.0) {
      double left = scan[i - 1];
      double right = scan[i];
      for (int it = 0; it < 200 && right - left > 1e-12 * right; ++it) {
        const double mid = 0.5 * (left + right);
        (curve.slope_sign_term(mid) < 0.0 ? left : right) = mid;
      }
      candidates.push_back(0.5 * (left + right));
    }
    prev_sign = sign;
  }

  AllocationResult result;
  double best_spend = lo;
  double best_loss = std::numeric_limits<double>::infinity();
  for (double spend : candidates) {
    const double value = curve.loss(spend);
    if (value < best_loss) {
      best_loss = value;
      best_spend = spend;
    }
  }
  result.f_star = curve.f(best_spend);
  result.pretrain_steps = curve.steps(best_spend);
  result.p_star = curve.p(best_spend);
  result.loss_at_optimum = best_loss;
  result.finetune_budget_fraction = best_spend / budget;
  result.pretrain_spend = budget - best_spend;
  if (scan_max - scan_min < 1e-12) {
    result.warnings.push_back("objective is flat over the feasible segment");
  }
  return result;
}

struct SweepPoint {
  double value = 0.0;  // the swept variable
  AllocationResult allocation;
};

namespace detail {
inline void require_positive_sorted(std::span<const double> values, const char* what) {
  if (values.empty()) throw InputError(std::string(what) + " must be non-empty");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0) || !std::isfinite(values[i])) {
      throw InputError(std::string(what) + " must be positive");
    }
    if (i > 0 && values[i] < values[i - 1]) {
      throw InputError(std::string(what) + " must be sorted ascending");
    }
  }
}
}  // namespace detail

/// Re-solves the allocation with only G replaced.
inline std::vector<SweepPoint> sweep_gap(const AllocationProblem& problem,
                                         std::span<const double> gap_values) {
  detail::require_positive_sorted(gap_values, "gap values");
  std::vector<SweepPoint> out;
  for (double gap : gap_values) {
    AllocationProblem variant = problem;
    variant.params.G = gap;
    out.push_back({gap, optimize_allocation(variant)});
  }
  return out;
}

/// Re-solves the allocation with C_f = ratio * C_p, C_p held fixed.
inline std::vector<SweepPoint> sweep_cost_ratio(const AllocationProblem& problem,
                                                std::span<const double> ratios) {
  detail::require_positive_sorted(ratios, "cost ratios");
  std::vector<SweepPoint> out;
  for (double ratio : ratios) {
    AllocationProblem variant = problem;
    variant.cost_per_finetune_point = ratio * problem.cost_per_pretrain_step;
    out.push_back({ratio, optimize_allocation(variant)});
  }
  return out;
}

inline std::vector<double> log_spaced(double first, double last, std::size_t count) {
  if (!(first > 0.0) || !(last >= first) || count == 0) {
    throw InputError("log spacing needs 0 < first <= last and count >= 1");
  }
  std::vector<double> out(count);
  const double span = std::log(last / first);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = count == 1 ? first
                        : first * std::exp(span * static_cast<double>(i) /
                                           static_cast<double>(count - 1));
  }
  out.back() = last;
  return out;
}

struct IsoLossPoint {
  double p = 1.0;
  double f = 1.0;
};

struct IsoLossCurve {
  double target_loss = 0.0;
  std::vector<IsoLossPoint> points;  // increasing p
};

/// For each p on a log grid over [p_min, p_max], the f reaching target_loss:
///   f = ((A p^-alpha + G) / (target - E))^(1 / beta).
/// Points needing f < 1 are dropped.
inline IsoLossCurve iso_loss(const LawParams& params, double target_loss, double p_min,
                             double p_max, std::size_t n_points) {
  validate(params);
  if (!(p_min >= 1.0) || !(p_max >= p_min)) throw InputError("p range must satisfy 1 <= min <= max");
  if (!(target_loss > params.E)) {
    throw UnachievableTargetError("target loss must exceed the irreducible loss E");
  }
  IsoLossCurve curve;
  curve.target_loss = target_loss;
  for (double p : log_spaced(p_min, p_max, n_points)) {
    const double f = std::pow((params.A * std::pow(p, -params.alpha) + params.G) /
                                  (target_loss - params.E),
                              1.0 / params.beta);
    if (f >= 1.0 && std::isfinite(f)) curve.points.push_back({p, f});
  }
  if (curve.points.empty()) {
    throw UnachievableTargetError("target loss is not reachable with f >= 1 in the p range");
  }
  return curve;
}

/// 6 * sum_t epochs_t * n_params * finetune_tokens_t.
inline double estimate_compute(std::span<const RunRecord> records, double n_params) {
  if (!(n_params > 0.0)) throw InputError("parameter count must be > 0");
  double total = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].epochs) {
      throw MissingEpochsError("row " + std::to_string(i + 1) +
                               " has no epochs; compute estimation needs every run's epochs");
    }
    total += *records[i].epochs * records[i].finetune_tokens;
  }
  return 6.0 * n_params * total;
}

}  // namespace xferlaw
