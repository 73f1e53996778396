#pragma once

// Robust log-space fitting of the transfer law.
//
// Coefficients are optimized through their logarithms (A = exp(a),
// G = exp(g), E = exp(e)); exponents and shifts are optimized directly. The
// objective is
//
//   sum_i Huber_delta(log L_model(p_i, f_i) - log L_i)
//     + lambda_exp * (alpha^2 + beta^2) + lambda_coef * (a^2 + g^2)
//
// minimized by BFGS from every point of a start grid.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "xferlaw/bfgs.hpp"
#include "xferlaw/error.hpp"
#include "xferlaw/law.hpp"
#include "xferlaw/parallel.hpp"
#include "xferlaw/records.hpp"

namespace xferlaw {

/// Initial guesses per transformed coordinate. Shifts always start at 0.
struct StartGrid {
  std::vector<double> a;      // log A
  std::vector<double> alpha;
  std::vector<double> g;      // log G
  std::vector<double> beta;
  std::vector<double> e;      // log E

  friend bool operator==(const StartGrid&, const StartGrid&) = default;
};

inline std::vector<double> linspace(double first, double last, int count) {
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    out[static_cast<std::size_t>(i)] =
        count == 1 ? first : first + (last - first) * i / (count - 1);
  }
  return out;
}

/// 5 x 4 x 7 x 4 x 4 = 2240 starts.
inline StartGrid default_start_grid() {
  return {linspace(0.0, 8.0, 5), linspace(0.0, 1.0, 4), linspace(-5.0, 5.0, 7),
          linspace(0.0, 1.0, 4), linspace(0.0, 3.0, 4)};
}

/// 3 x 2 x 3 x 2 x 2 = 72 starts spanning the same box; used where thousands
/// of fits are needed (cross-validation sweeps).
inline StartGrid coarse_start_grid() {
  return {{2.0, 5.0, 8.0}, {0.33, 0.67}, {-2.5, 0.0, 2.5}, {0.33, 0.67}, {0.0, 1.5}};
}

struct FitConfig {
  double huber_delta = 1e-3;
  StartGrid start_grid = default_start_grid();
  int max_iterations = 2000;
  double convergence_tol = 1e-9;
  double reg_exponents = 0.0;     // lambda_exp
  double reg_coefficients = 0.0;  // lambda_coef
  int threads = 1;
};

inline void validate(const FitConfig& config) {
  const auto& grid = config.start_grid;
  if (!(config.huber_delta > 0.0)) throw InputError("huber_delta must be > 0");
  if (grid.a.empty() || grid.alpha.empty() || grid.g.empty() || grid.beta.empty() ||
      grid.e.empty()) {
    throw InputError("every start grid axis must be non-empty");
  }
  if (config.max_iterations < 1) throw InputError("max_iterations must be >= 1");
  if (!(config.reg_exponents >= 0.0) || !(config.reg_coefficients >= 0.0)) {
    throw InputError("regularization strengths must be >= 0");
  }
}

/// Position of each transformed coordinate inside a packed parameter vector.
/// Packed order: a, alpha, g, beta, [e], [p_shift], [f_shift].
struct ThetaLayout {
  FormId form = FormId::kBase;
  int size = 5;
  int e = 4;
  int p_shift = -1;
  int f_shift = -1;

  static constexpr int kA = 0;
  static constexpr int kAlpha = 1;
  static constexpr int kG = 2;
  static constexpr int kBeta = 3;

  explicit ThetaLayout(FormId id) : form(id) {
    int next = 4;
    e = has_irreducible(id) ? next++ : -1;
    p_shift = shifts_p(id) ? next++ : -1;
    f_shift = shifts_f(id) ? next++ : -1;
    size = next;
  }
};

namespace detail {
inline double safe_log(double x) { return std::log(std::max(x, 1e-300)); }
}  // namespace detail

inline Eigen::VectorXd to_theta(const LawForm& form, const LawParams& params) {
  const ThetaLayout layout(form.id());
  Eigen::VectorXd theta(layout.size);
  theta[ThetaLayout::kA] = detail::safe_log(params.A);
  theta[ThetaLayout::kAlpha] = params.alpha;
  theta[ThetaLayout::kG] = detail::safe_log(params.G);
  theta[ThetaLayout::kBeta] = params.beta;
  if (layout.e >= 0) theta[layout.e] = detail::safe_log(params.E);
  if (layout.p_shift >= 0) theta[layout.p_shift] = form.p_shift();
  if (layout.f_shift >= 0) theta[layout.f_shift] = form.f_shift();
  return theta;
}

inline std::pair<LawForm, LawParams> from_theta(FormId id, const Eigen::VectorXd& theta) {
  const ThetaLayout layout(id);
  if (theta.size() != layout.size) throw InputError("parameter vector has the wrong size");
  LawParams params;
  params.A = std::exp(theta[ThetaLayout::kA]);
  params.alpha = theta[ThetaLayout::kAlpha];
  params.G = std::exp(theta[ThetaLayout::kG]);
  params.beta = theta[ThetaLayout::kBeta];
  params.E = layout.e >= 0 ? std::exp(theta[layout.e]) : 0.0;
  const double p_shift = layout.p_shift >= 0 ? theta[layout.p_shift] : 0.0;
  const double f_shift = layout.f_shift >= 0 ? theta[layout.f_shift] : 0.0;
  return {LawForm(id, p_shift, f_shift), params};
}

inline double huber(double residual, double delta) {
  const double magnitude = std::abs(residual);
  return magnitude <= delta ? 0.5 * residual * residual : delta * (magnitude - 0.5 * delta);
}

inline double huber_derivative(double residual, double delta) {
  if (residual > delta) return delta;
  if (residual < -delta) return -delta;
  return residual;
}

/// Observations prepared for repeated objective evaluation. Distinct p and f
/// levels are stored once so each power is computed once per level, and
/// repeated observations may carry an integer weight.
class PreparedData {
 public:
  explicit PreparedData(std::span<const Observation> observations,
                        std::span<const double> weights = {}) {
    if (!weights.empty() && weights.size() != observations.size()) {
      throw InputError("weights must match observations");
    }
    std::vector<double> ps, fs;
    for (const auto& obs : observations) {
      validate(obs.point);
      if (!(obs.loss > 0.0) || !std::isfinite(obs.loss)) {
        throw InputError("observed losses must be finite and > 0");
      }
      ps.push_back(obs.point.p);
      fs.push_back(obs.point.f);
    }
    p_levels_ = sorted_levels(ps);
    f_levels_ = sorted_levels(fs);
    for (double p : p_levels_) log_p_levels_.push_back(std::log(p));
    for (double f : f_levels_) log_f_levels_.push_back(std::log(f));
    for (std::size_t i = 0; i < observations.size(); ++i) {
      const auto& obs = observations[i];
      p_index_.push_back(level_index(p_levels_, obs.point.p));
      f_index_.push_back(level_index(f_levels_, obs.point.f));
      log_loss_.push_back(std::log(obs.loss));
      weight_.push_back(weights.empty() ? 1.0 : weights[i]);
    }
  }

  std::size_t size() const noexcept { return log_loss_.size(); }

  // Evaluates the objective and, when `grad` is non-null, its gradient.
  // Returns a non-finite value instead of throwing.
  double evaluate(FormId id, const Eigen::VectorXd& theta, const FitConfig& config,
                  Eigen::VectorXd* grad) const {
    const ThetaLayout layout(id);
    const double a = theta[ThetaLayout::kA];
    const double alpha = theta[ThetaLayout::kAlpha];
    const double g = theta[ThetaLayout::kG];
    const double beta = theta[ThetaLayout::kBeta];
    const double p_shift = layout.p_shift >= 0 ? theta[layout.p_shift] : 0.0;
    const double f_shift = layout.f_shift >= 0 ? theta[layout.f_shift] : 0.0;
    const double coef_a = std::exp(a);
    const double coef_g = std::exp(g);
    const double coef_e = layout.e >= 0 ? std::exp(theta[layout.e]) : 0.0;
    const double delta = config.huber_delta;
    constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

    // Per level: A * base^-alpha, log(base), 1 / base.
    thread_local std::vector<double> pre_p, log_p, inv_p, pow_f, log_f, inv_f;
    pre_p.resize(p_levels_.size());
    log_p.resize(p_levels_.size());
    inv_p.resize(p_levels_.size());
    for (std::size_t j = 0; j < p_levels_.size(); ++j) {
      const double base = p_levels_[j] + p_shift;
      if (!(base > 0.0)) return kNaN;
      log_p[j] = p_shift == 0.0 ? log_p_levels_[j] : std::log(base);
      pre_p[j] = coef_a * std::exp(-alpha * log_p[j]);
      inv_p[j] = 1.0 / base;
    }
    pow_f.resize(f_levels_.size());
    log_f.resize(f_levels_.size());
    inv_f.resize(f_levels_.size());
    for (std::size_t k = 0; k < f_levels_.size(); ++k) {
      const double base = f_levels_[k] + f_shift;
      if (!(base > 0.0)) return kNaN;
      log_f[k] = f_shift == 0.0 ? log_f_levels_[k] : std::log(base);
      pow_f[k] = std::exp(-beta * log_f[k]);
      inv_f[k] = 1.0 / base;
    }

    double d_a = 0.0, d_alpha = 0.0, d_g = 0.0, d_beta = 0.0, d_e = 0.0, d_ps = 0.0, d_fs = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < log_loss_.size(); ++i) {
      const std::size_t j = p_index_[i];
      const std::size_t k = f_index_[i];
      const double pretrain = pre_p[j] + coef_g;
      const double model = pretrain * pow_f[k] + coef_e;
      const double residual = std::log(model) - log_loss_[i];
      total += weight_[i] * huber(residual, delta);
      if (grad != nullptr) {
        // d(log model)/d(theta) = d(model)/d(theta) / model
        const double psi = weight_[i] * huber_derivative(residual, delta) / model;
        const double term_a = psi * pre_p[j] * pow_f[k];
        const double term_f = psi * pretrain * pow_f[k];
        d_a += term_a;
        d_alpha -= term_a * log_p[j];
        d_g += psi * coef_g * pow_f[k];
        d_beta -= term_f * log_f[k];
        d_e += psi * coef_e;
        d_ps -= term_a * alpha * inv_p[j];
        d_fs -= term_f * beta * inv_f[k];
      }
    }
    if (!std::isfinite(total)) return kNaN;
    total += config.reg_exponents * (alpha * alpha + beta * beta) +
             config.reg_coefficients * (a * a + g * g);
    if (grad != nullptr) {
      grad->resize(layout.size);
      (*grad)[ThetaLayout::kA] = d_a + 2.0 * config.reg_coefficients * a;
      (*grad)[ThetaLayout::kAlpha] = d_alpha + 2.0 * config.reg_exponents * alpha;
      (*grad)[ThetaLayout::kG] = d_g + 2.0 * config.reg_coefficients * g;
      (*grad)[ThetaLayout::kBeta] = d_beta + 2.0 * config.reg_exponents * beta;
      if (layout.e >= 0) (*grad)[layout.e] = d_e;
      if (layout.p_shift >= 0) (*grad)[layout.p_shift] = d_ps;
      if (layout.f_shift >= 0) (*grad)[layout.f_shift] = d_fs;
    }
    return total;
  }

 private:
  static std::vector<double> sorted_levels(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    return values;
  }
  static std::size_t level_index(const std::vector<double>& levels, double value) {
    return static_cast<std::size_t>(std::lower_bound(levels.begin(), levels.end(), value) -
                                    levels.begin());
  }

  std::vector<double> p_levels_, f_levels_, log_p_levels_, log_f_levels_;
  std::vector<std::size_t> p_index_, f_index_;
  std::vector<double> log_loss_, weight_;
};

inline double objective(FormId id, const Eigen::VectorXd& theta,
                        std::span<const Observation> observations, const FitConfig& config) {
  if (theta.size() != ThetaLayout(id).size) throw InputError("parameter vector has the wrong size");
  const double value = PreparedData(observations).evaluate(id, theta, config, nullptr);
  if (!std::isfinite(value)) throw NonFiniteError("objective is not finite");
  return value;
}

/// Analytic gradient of `objective`.
inline Eigen::VectorXd gradient(FormId id, const Eigen::VectorXd& theta,
                                std::span<const Observation> observations,
                                const FitConfig& config) {
  if (theta.size() != ThetaLayout(id).size) throw InputError("parameter vector has the wrong size");
  Eigen::VectorXd grad;
  const double value = PreparedData(observations).evaluate(id, theta, config, &grad);
  if (!std::isfinite(value) || !grad.allFinite()) throw NonFiniteError("gradient is not finite");
  return grad;
}

struct FitResult {
  LawForm form;
  LawParams params;
  std::vector<double> theta;
  double objective = std::numeric_limits<double>::infinity();
  double gradient_norm = std::numeric_limits<double>::infinity();
  bool converged = false;
  std::size_t start_index = 0;
  std::size_t n_starts = 0;
  std::size_t n_converged = 0;
  std::size_t n_evaluations = 0;
  std::vector<std::string> warnings;
};

/// Packed start vectors in grid order: a outermost, then alpha, g, beta, e.
inline std::vector<Eigen::VectorXd> start_points(FormId id, const StartGrid& grid) {
  const ThetaLayout layout(id);
  const std::vector<double> no_e = {0.0};
  const auto& e_axis = layout.e >= 0 ? grid.e : no_e;
  std::vector<Eigen::VectorXd> out;
  out.reserve(grid.a.size() * grid.alpha.size() * grid.g.size() * grid.beta.size() *
              e_axis.size());
  for (double a : grid.a)
    for (double alpha : grid.alpha)
      for (double g : grid.g)
        for (double beta : grid.beta)
          for (double e : e_axis) {
            Eigen::VectorXd theta = Eigen::VectorXd::Zero(layout.size);
            theta[ThetaLayout::kA] = a;
            theta[ThetaLayout::kAlpha] = alpha;
            theta[ThetaLayout::kG] = g;
            theta[ThetaLayout::kBeta] = beta;
            if (layout.e >= 0) theta[layout.e] = e;
            out.push_back(std::move(theta));
          }
  return out;
}

/// Outcome of one local run from one start.
struct LocalRun {
  BfgsResult bfgs;
  bool admissible = false;
};

// A run at a precision floor still counts as converged when its gradient is
// within sqrt(tol) of stationarity relative to the objective scale.
inline bool run_converged(const BfgsResult& run, double tol) {
  if (run.status == BfgsStatus::kGradientTolerance) return true;
  if (run.status == BfgsStatus::kStalled) {
    return run.gradient_norm <= std::sqrt(tol) * std::max(1.0, std::abs(run.value));
  }
  return false;
}

inline LocalRun run_local(const PreparedData& data, FormId id, const Eigen::VectorXd& start,
                          const FitConfig& config) {
  auto fn = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
    return data.evaluate(id, theta, config, &grad);
  };
  LocalRun run;
  run.bfgs = minimize_bfgs(fn, start, {config.max_iterations, config.convergence_tol});
  const ThetaLayout layout(id);
  run.admissible = run_converged(run.bfgs, config.convergence_tol) &&
                   std::isfinite(run.bfgs.value) && run.bfgs.x.allFinite() &&
                   run.bfgs.x[ThetaLayout::kAlpha] > 0.0 && run.bfgs.x[ThetaLayout::kBeta] > 0.0;
  return run;
}

namespace detail {

inline std::size_t distinct_count(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return static_cast<std::size_t>(std::unique(values.begin(), values.end()) - values.begin());
}

inline std::vector<std::string> coverage_warnings(std::span<const Observation> observations) {
  std::vector<double> ps, fs;
  for (const auto& obs : observations) {
    ps.push_back(obs.point.p);
    fs.push_back(obs.point.f);
  }
  std::vector<std::string> out;
  if (distinct_count(ps) < 2) out.push_back("rank deficiency: all points share one p level");
  if (distinct_count(fs) < 2) out.push_back("rank deficiency: all points share one f level");
  return out;
}

inline FitResult reduce_runs(FormId id, const std::vector<LocalRun>& runs) {
  FitResult result;
  result.n_starts = runs.size();
  bool found = false;
  std::size_t best = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    result.n_evaluations += runs[i].bfgs.evaluations;
    if (!runs[i].admissible) continue;
    ++result.n_converged;
    if (!found || runs[i].bfgs.value < runs[best].bfgs.value) {
      best = i;
      found = true;
    }
  }
  if (!found) {
    throw FitFailedError("no start converged to admissible parameters (" +
                         std::to_string(runs.size()) + " starts)");
  }
  const auto& winner = runs[best].bfgs;
  auto [form, params] = from_theta(id, winner.x);
  result.form = form;
  result.params = params;
  result.theta.assign(winner.x.data(), winner.x.data() + winner.x.size());
  result.objective = winner.value;
  result.gradient_norm = winner.gradient_norm;
  result.converged = true;
  result.start_index = best;
  return result;
}

}  // namespace detail

inline void check_fit_preconditions(std::span<const Observation> observations, FormId id) {
  const auto needed = static_cast<std::size_t>(free_parameter_count(id));
  if (observations.size() < needed) {
    throw PreconditionError("form " + std::to_string(static_cast<int>(id)) + " needs at least " +
                            std::to_string(needed) + " points, got " +
                            std::to_string(observations.size()));
  }
}

/// Multi-start fit over prepared data. The winner is the lowest objective
/// among admissible runs, ties going to the lowest start index.
inline FitResult fit_prepared(const PreparedData& data, FormId id,
                              std::span<const Eigen::VectorXd> starts, const FitConfig& config) {
  std::vector<LocalRun> runs(starts.size());
  parallel_for(starts.size(), config.threads,
               [&](std::size_t i) { runs[i] = run_local(data, id, starts[i], config); });
  return detail::reduce_runs(id, runs);
}

inline FitResult fit_from_starts(std::span<const Observation> observations, FormId id,
                                 std::span<const Eigen::VectorXd> starts,
                                 const FitConfig& config) {
  validate(config);
  check_fit_preconditions(observations, id);
  auto result = fit_prepared(PreparedData(observations), id, starts, config);
  result.warnings = detail::coverage_warnings(observations);
  return result;
}

inline FitResult fit(std::span<const Observation> observations, FormId id,
                     const FitConfig& config = {}) {
  validate(config);
  const auto starts = start_points(id, config.start_grid);
  return fit_from_starts(observations, id, starts, config);
}

struct BasinHoppingConfig {
  int restarts = 8;
  double perturbation_scale = 0.5;
  std::uint64_t seed = 0;
};

/// Grid multi-start followed by seeded random restarts around the incumbent.
/// Restart r perturbs every transformed coordinate by N(0, scale^2) and is
/// kept only if it lowers the objective; its start_index is n_grid + r.
inline FitResult fit_basin_hopping(std::span<const Observation> observations, FormId id,
                                   const FitConfig& config, const BasinHoppingConfig& hopping) {
  auto best = fit(observations, id, config);
  const PreparedData data(observations);
  const std::size_t n_grid = best.n_starts;
  for (int r = 0; r < hopping.restarts; ++r) {
    std::seed_seq seq{static_cast<std::uint32_t>(hopping.seed),
                      static_cast<std::uint32_t>(hopping.seed >> 32),
                      static_cast<std::uint32_t>(r)};
    std::mt19937_64 engine(seq);
    std::normal_distribution<double> noise(0.0, hopping.perturbation_scale);
    Eigen::VectorXd start = Eigen::Map<const Eigen::VectorXd>(
        best.theta.data(), static_cast<Eigen::Index>(best.theta.size()));
    for (Eigen::Index k = 0; k < start.size(); ++k) start[k] += noise(engine);
    const auto run = run_local(data, id, start, config);
    best.n_starts += 1;
    best.n_evaluations += run.bfgs.evaluations;
    if (!run.admissible) continue;
    best.n_converged += 1;
    if (run.bfgs.value < best.objective) {
      auto [form, params] = from_theta(id, run.bfgs.x);
      best.form = form;
      best.params = params;
      best.theta.assign(run.bfgs.x.data(), run.bfgs.x.data() + run.bfgs.x.size());
      best.objective = run.bfgs.value;
      best.gradient_norm = run.bfgs.gradient_norm;
      best.start_index = n_grid + static_cast<std::size_t>(r);
    }
  }
  return best;
}

inline double predict(const FitResult& fit, EvalPoint point) {
  return evaluate(fit.form, fit.params, point);
}

}  // namespace xferlaw
