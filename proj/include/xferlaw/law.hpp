#pragma once

// Scaling law for transfer:
//
//   L(p, f) = (A * p^-alpha + G) * f^-beta + E
//
// p is the pre-training magnitude (amount seen + 1, so zero pre-training
// is p = 1) and f the fine-tuning data size. Losses are in nats/token.

#include <array>
#include <cmath>
#include <string>
#include <string_view>

#include "xferlaw/error.hpp"

namespace xferlaw {

struct LawParams {
  double A = 0.0;      // pre-training coefficient
  double G = 0.0;      // transfer gap
  double alpha = 0.0;  // pre-training exponent
  double beta = 0.0;   // fine-tuning exponent
  double E = 0.0;      // irreducible loss

  /// Loss at zero pre-training and f = 1, i.e. the C = A + G coefficient.
  double no_pretraining_coefficient() const noexcept { return A + G; }

  friend bool operator==(const LawParams&, const LawParams&) = default;
};

/// Throws DegenerateParamsError unless A > 0, G >= 0, alpha > 0, beta > 0, E >= 0.
inline void validate(const LawParams& params) {
  const bool ok = std::isfinite(params.A) && std::isfinite(params.G) &&
                  std::isfinite(params.alpha) && std::isfinite(params.beta) &&
                  std::isfinite(params.E) && params.A > 0.0 && params.G >= 0.0 &&
                  params.alpha > 0.0 && params.beta > 0.0 && params.E >= 0.0;
  if (!ok) {
    throw DegenerateParamsError(
        "law parameters must satisfy A > 0, G >= 0, alpha > 0, beta > 0, E >= 0");
  }
}

/// The five candidate functional forms.
///
///   1  (a0 p^-a1 + a2) f^-a3 + a4
///   2  (a0 p^-a1 + a2) (f + a3)^-a4 + a5
///   3  (a0 (p + a1)^-a2 + a3) f^-a4 + a5
///   4  (a0 (p + a1)^-a2 + a3) (f + a4)^-a5 + a6
///   5  (a0 p^-a1 + a2) f^-a3
enum class FormId : int {
  kBase = 1,
  kShiftF = 2,
  kShiftP = 3,
  kShiftPF = 4,
  kNoIrreducible = 5,
};

inline constexpr std::array<FormId, 5> kAllForms = {
    FormId::kBase, FormId::kShiftF, FormId::kShiftP, FormId::kShiftPF,
    FormId::kNoIrreducible};

inline bool shifts_p(FormId id) noexcept {
  return id == FormId::kShiftP || id == FormId::kShiftPF;
}
inline bool shifts_f(FormId id) noexcept {
  return id == FormId::kShiftF || id == FormId::kShiftPF;
}
inline bool has_irreducible(FormId id) noexcept {
  return id != FormId::kNoIrreducible;
}
inline int free_parameter_count(FormId id) noexcept {
  return 4 + (has_irreducible(id) ? 1 : 0) + (shifts_p(id) ? 1 : 0) +
         (shifts_f(id) ? 1 : 0);
}

inline FormId form_from_int(int index) {
  if (index < 1 || index > 5) {
    throw InputError("form index must be in 1..5, got " + std::to_string(index));
  }
  return static_cast<FormId>(index);
}

inline std::string_view form_expression(FormId id) noexcept {
  switch (id) {
    case FormId::kBase: return "(a0*p^-a1 + a2)*f^-a3 + a4";
    case FormId::kShiftF: return "(a0*p^-a1 + a2)*(f + a3)^-a4 + a5";
    case FormId::kShiftP: return "(a0*(p + a1)^-a2 + a3)*f^-a4 + a5";
    case FormId::kShiftPF: return "(a0*(p + a1)^-a2 + a3)*(f + a4)^-a5 + a6";
    case FormId::kNoIrreducible: return "(a0*p^-a1 + a2)*f^-a3";
  }
  return "";
}

/// A candidate form together with its additive shifts. Shifts that the form
/// does not carry are always zero.
class LawForm {
 public:
  constexpr LawForm() = default;
  explicit LawForm(FormId id, double p_shift = 0.0, double f_shift = 0.0) : id_(id) {
    if (!shifts_p(id) && p_shift != 0.0) {
      throw InputError("form " + std::to_string(static_cast<int>(id)) + " has no p shift");
    }
    if (!shifts_f(id) && f_shift != 0.0) {
      throw InputError("form " + std::to_string(static_cast<int>(id)) + " has no f shift");
    }
    p_shift_ = p_shift;
    f_shift_ = f_shift;
  }

  FormId id() const noexcept { return id_; }
  int index() const noexcept { return static_cast<int>(id_); }
  double p_shift() const noexcept { return p_shift_; }
  double f_shift() const noexcept { return f_shift_; }
  bool has_irreducible() const noexcept { return xferlaw::has_irreducible(id_); }
  int free_parameter_count() const noexcept { return xferlaw::free_parameter_count(id_); }

  friend bool operator==(const LawForm&, const LawForm&) = default;

 private:
  FormId id_ = FormId::kBase;
  double p_shift_ = 0.0;
  double f_shift_ = 0.0;
};

struct EvalPoint {
  double p = 1.0;  // pre-training magnitude, >= 1
  double f = 1.0;  // fine-tuning size, >= 1

  friend bool operator==(const EvalPoint&, const EvalPoint&) = default;
};

inline void validate(EvalPoint point) {
  if (!(point.p >= 1.0) || !(point.f >= 1.0)) {
    throw DomainError("evaluation point requires p >= 1 and f >= 1");
  }
}

inline double evaluate(const LawForm& form, const LawParams& params, EvalPoint point) {
  validate(point);
  const double p_base = point.p + form.p_shift();
  const double f_base = point.f + form.f_shift();
  if (!(p_base > 0.0) || !(f_base > 0.0)) {
    throw DomainError("shifted power-law base is not positive");
  }
  const double pretrain = params.A * std::pow(p_base, -params.alpha) + params.G;
  const double loss = pretrain * std::pow(f_base, -params.beta);
  return form.has_irreducible() ? loss + params.E : loss;
}

inline double evaluate(const LawParams& params, EvalPoint point) {
  return evaluate(LawForm{}, params, point);
}

/// Pointwise limit of the law as p grows without bound.
inline double limit_infinite_pretraining(const LawParams& params, double f) {
  if (!(f >= 1.0)) throw DomainError("fine-tuning size must be >= 1");
  return params.G * std::pow(f, -params.beta) + params.E;
}

/// Fine-tuning size f2 that, with zero pre-training (p = 1), reaches the loss
/// the law predicts at (p, f1). Solves
///   (G + A p^-alpha) f1^-beta = (G + A) f2^-beta.
inline double effective_finetuning_data(const LawParams& params, double p, double f1) {
  if (!(p >= 1.0) || !(f1 >= 1.0)) {
    throw DomainError("effective data requires p >= 1 and f1 >= 1");
  }
  if (params.beta == 0.0 || params.A + params.G == 0.0) {
    throw DegenerateParamsError("effective data is undefined for beta = 0 or A + G = 0");
  }
  const double ratio =
      (params.G + params.A * std::pow(p, -params.alpha)) / (params.G + params.A);
  return f1 * std::pow(ratio, -1.0 / params.beta);
}

}  // namespace xferlaw
