#pragma once

// Quasi-Newton minimization (BFGS inverse-Hessian update) with a Wolfe line
// search. The objective may return a non-finite value for points outside its
// domain; such trial steps are shortened, never accepted.

#include <cmath>
#include <cstddef>
#include <limits>

#include <Eigen/Dense>

namespace xferlaw {

struct BfgsOptions {
  int max_iterations = 2000;
  double gradient_tol = 1e-9;
};

enum class BfgsStatus {
  kGradientTolerance,  // ||g|| <= gradient_tol
  kStalled,            // line search could not decrease the objective further
  kMaxIterations,
  kNonFiniteStart,
};

struct BfgsResult {
  Eigen::VectorXd x;
  double value = std::numeric_limits<double>::infinity();
  double gradient_norm = std::numeric_limits<double>::infinity();
  int iterations = 0;
  std::size_t evaluations = 0;
  BfgsStatus status = BfgsStatus::kNonFiniteStart;
};

namespace detail {

struct LineSearchOutcome {
  bool ok = false;
  double step = 0.0;
  double value = 0.0;
  Eigen::VectorXd gradient;
};

// Nocedal & Wright, algorithms 3.5 / 3.6, with safeguarded quadratic
// interpolation inside the zoom phase.
template <class Fn>
LineSearchOutcome wolfe_line_search(Fn& fn, const Eigen::VectorXd& x, double value0,
                                    const Eigen::VectorXd& grad0, const Eigen::VectorXd& dir,
                                    double initial_step, std::size_t& evaluations) {
  constexpr double kC1 = 1e-4;
  constexpr double kC2 = 0.9;
  constexpr int kMaxBracket = 60;
  constexpr int kMaxZoom = 60;

  const double slope0 = grad0.dot(dir);
  Eigen::VectorXd trial_grad(x.size());

  auto phi = [&](double step, double& slope) {
    ++evaluations;
    const double v = fn(Eigen::VectorXd(x + step * dir), trial_grad);
    slope = std::isfinite(v) ? trial_grad.dot(dir) : std::numeric_limits<double>::quiet_NaN();
    return v;
  };

  auto zoom = [&](double lo, double value_lo, double slope_lo, const Eigen::VectorXd& grad_lo,
                  double hi, double value_hi) -> LineSearchOutcome {
    LineSearchOutcome best;
    if (lo > 0.0) best = {true, lo, value_lo, grad_lo};
    for (int k = 0; k < kMaxZoom; ++k) {
      const double width = hi - lo;
      if (std::abs(width) <= 1e-16 * std::max(1.0, std::abs(lo))) break;
      double step = 0.5 * (lo + hi);
      if (std::isfinite(value_hi)) {
        const double denom = 2.0 * (value_hi - value_lo - slope_lo * width);
        if (denom > 0.0) {
          const double candidate = lo - slope_lo * width * width / denom;
          const double a = std::min(lo, hi) + 0.1 * std::abs(width);
          const double b = std::max(lo, hi) - 0.1 * std::abs(width);
          if (candidate >= a && candidate <= b) step = candidate;
        }
      }
      double slope = 0.0;
      const double value = phi(step, slope);
      if (!std::isfinite(value) || value > value0 + kC1 * step * slope0 || value >= value_lo) {
        hi = step;
        value_hi = value;
      } else {
        if (std::abs(slope) <= -kC2 * slope0) return {true, step, value, trial_grad};
        if (slope * (hi - lo) >= 0.0) {
          hi = lo;
          value_hi = value_lo;
        }
        lo = step;
        value_lo = value;
        slope_lo = slope;
        best = {true, step, value, trial_grad};
      }
    }
    return best;
  };

  double prev_step = 0.0;
  double prev_value = value0;
  double prev_slope = slope0;
  Eigen::VectorXd prev_grad = grad0;
  double step = initial_step;
  for (int i = 0; i < kMaxBracket; ++i) {
    double slope = 0.0;
    const double value = phi(step, slope);
    if (!std::isfinite(value) || value > value0 + kC1 * step * slope0 ||
        (i > 0 && value >= prev_value)) {
      return zoom(prev_step, prev_value, prev_slope, prev_grad, step, value);
    }
    if (std::abs(slope) <= -kC2 * slope0) return {true, step, value, trial_grad};
    if (slope >= 0.0) {
      const Eigen::VectorXd grad_here = trial_grad;
      return zoom(step, value, slope, grad_here, prev_step, prev_value);
    }
    prev_step = step;
    prev_value = value;
    prev_slope = slope;
    prev_grad = trial_grad;
    step *= 2.0;
  }
  return {};
}

}  // namespace detail

/// `fn(x, grad)` returns f(x) and writes the gradient into `grad`.
template <class Fn>
BfgsResult minimize_bfgs(Fn&& fn, const Eigen::VectorXd& start, const BfgsOptions& options) {
  const Eigen::Index n = start.size();
  BfgsResult result;
  result.x = start;
  Eigen::VectorXd grad(n);
  result.value = fn(result.x, grad);
  result.evaluations = 1;
  if (!std::isfinite(result.value) || !grad.allFinite()) {
    result.status = BfgsStatus::kNonFiniteStart;
    return result;
  }
  result.gradient_norm = grad.norm();

  Eigen::MatrixXd inv_hessian = Eigen::MatrixXd::Identity(n, n);
  bool identity = true;
  for (result.iterations = 0; result.iterations < options.max_iterations; ++result.iterations) {
    if (result.gradient_norm <= options.gradient_tol) {
      result.status = BfgsStatus::kGradientTolerance;
      return result;
    }
    Eigen::VectorXd dir = -inv_hessian * grad;
    if (!(grad.dot(dir) < 0.0)) {
      inv_hessian.setIdentity();
      identity = true;
      dir = -grad;
    }
    const double initial_step =
        identity ? std::min(1.0, 1.0 / std::max(dir.norm(), 1e-300)) : 1.0;
    auto search = detail::wolfe_line_search(fn, result.x, result.value, grad, dir,
                                            initial_step, result.evaluations);
    if (!search.ok || !(search.value <= result.value)) {
      if (!identity) {
        inv_hessian.setIdentity();
        identity = true;
        continue;
      }
      result.status = BfgsStatus::kStalled;
      return result;
    }
    const Eigen::VectorXd s = search.step * dir;
    const Eigen::VectorXd y = search.gradient - grad;
    result.x += s;
    result.value = search.value;
    grad = search.gradient;
    result.gradient_norm = grad.norm();

    const double sy = s.dot(y);
    if (sy > 1e-300 && std::isfinite(sy)) {
      if (identity) inv_hessian *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = inv_hessian * y;
      inv_hessian += (rho * rho * y.dot(hy) + rho) * (s * s.transpose()) -
                     rho * (hy * s.transpose() + s * hy.transpose());
      identity = false;
    }
  }
  result.status = result.gradient_norm <= options.gradient_tol ? BfgsStatus::kGradientTolerance
                                                                : BfgsStatus::kMaxIterations;
  return result;
}

}  // namespace xferlaw
