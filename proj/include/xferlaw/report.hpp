#pragma once

// JSON, text-table and CSV rendering of fits, bootstrap and cross-validation
// results. JSON carries full precision; tables use 3 decimals for parameters
// and 6 for cross-validation metrics.

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "xferlaw/error.hpp"
#include "xferlaw/fit.hpp"
#include "xferlaw/format.hpp"
#include "xferlaw/law.hpp"
#include "xferlaw/planner.hpp"
#include "xferlaw/selection.hpp"
#include "xferlaw/uncertainty.hpp"

namespace xferlaw {

inline constexpr std::string_view kToolName = "xferlaw";
inline constexpr std::string_view kVersion = "1.0.0";

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Law parameters

inline Json params_to_json(const LawParams& p) {
  return {{"A", p.A}, {"G", p.G}, {"alpha", p.alpha}, {"beta", p.beta}, {"E", p.E}};
}

inline LawParams params_from_json(const Json& j) {
  try {
    return {j.at("A").get<double>(), j.at("G").get<double>(), j.at("alpha").get<double>(),
            j.at("beta").get<double>(), j.at("E").get<double>()};
  } catch (const Json::exception& e) {
    throw InputError(std::string("malformed parameter object: ") + e.what());
  }
}

/// Accepts a bare parameter object, a fit result, a bootstrap report or a
/// study report with one dataset.
inline LawParams extract_params(const Json& j) {
  if (j.contains("A")) return params_from_json(j);
  if (j.contains("params")) return params_from_json(j.at("params"));
  if (j.contains("fit")) return extract_params(j.at("fit"));
  if (j.contains("full_fit")) return extract_params(j.at("full_fit"));
  if (j.contains("datasets") && j.at("datasets").size() == 1) {
    return extract_params(j.at("datasets").at(0));
  }
  throw InputError("no law parameters found in JSON document");
}

// ---------------------------------------------------------------------------
// Fit results

inline Json fit_to_json(const FitResult& r) {
  Json j;
  j["form"] = r.form.index();
  j["expression"] = std::string(form_expression(r.form.id()));
  j["params"] = params_to_json(r.params);
  j["p_shift"] = r.form.p_shift();
  j["f_shift"] = r.form.f_shift();
  j["theta"] = r.theta;
  j["objective"] = r.objective;
  j["gradient_norm"] = r.gradient_norm;
  j["converged"] = r.converged;
  j["start_index"] = r.start_index;
  j["n_starts"] = r.n_starts;
  j["n_converged"] = r.n_converged;
  j["n_evaluations"] = r.n_evaluations;
  j["warnings"] = r.warnings;
  return j;
}

inline FitResult fit_from_json(const Json& j) {
  FitResult r;
  try {
    r.form = LawForm(form_from_int(j.at("form").get<int>()), j.at("p_shift").get<double>(),
                     j.at("f_shift").get<double>());
    r.params = params_from_json(j.at("params"));
    r.theta = j.at("theta").get<std::vector<double>>();
    r.objective = j.at("objective").get<double>();
    r.gradient_norm = j.at("gradient_norm").get<double>();
    r.converged = j.at("converged").get<bool>();
    r.start_index = j.at("start_index").get<std::size_t>();
    r.n_starts = j.at("n_starts").get<std::size_t>();
    r.n_converged = j.at("n_converged").get<std::size_t>();
    r.n_evaluations = j.at("n_evaluations").get<std::size_t>();
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
  } catch (const Json::exception& e) {
    throw InputError(std::string("malformed fit result: ") + e.what());
  }
  return r;
}

// ---------------------------------------------------------------------------
// Bootstrap

inline Json bootstrap_to_json(const BootstrapReport& r) {
  Json params = Json::array();
  for (const auto& p : r.parameters) {
    params.push_back({{"name", p.name},
                      {"point_estimate", p.point_estimate},
                      {"standard_error", p.standard_error},
                      {"median", p.median},
                      {"ci_low", p.ci_low},
                      {"ci_high", p.ci_high}});
  }
  return {{"form", r.form_id},
          {"n_resamples", r.n_resamples},
          {"n_failed", r.n_failed},
          {"seed", r.seed},
          {"confidence", r.confidence},
          {"parameters", params},
          {"failed_resamples", r.failed_resamples},
          {"full_fit", fit_to_json(r.full_fit)}};
}

inline BootstrapReport bootstrap_from_json(const Json& j) {
  BootstrapReport r;
  try {
    r.form_id = j.at("form").get<int>();
    r.n_resamples = j.at("n_resamples").get<std::size_t>();
    r.n_failed = j.at("n_failed").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.confidence = j.at("confidence").get<double>();
    for (const auto& p : j.at("parameters")) {
      r.parameters.push_back({p.at("name").get<std::string>(),
                              p.at("point_estimate").get<double>(),
                              p.at("standard_error").get<double>(), p.at("median").get<double>(),
                              p.at("ci_low").get<double>(), p.at("ci_high").get<double>()});
    }
    r.failed_resamples = j.at("failed_resamples").get<std::vector<std::size_t>>();
    r.full_fit = fit_from_json(j.at("full_fit"));
  } catch (const Json::exception& e) {
    throw InputError(std::string("malformed bootstrap report: ") + e.what());
  }
  return r;
}

// ---------------------------------------------------------------------------
// Cross-validation

inline Json cv_to_json(const CvReport& r) {
  Json splits = Json::array();
  for (const auto& s : r.splits) {
    Json item = {{"combination", s.combination},
                 {"p_threshold", s.p_threshold},
                 {"f_threshold", s.f_threshold},
                 {"lambda_exp", s.lambda_exp},
                 {"lambda_coef", s.lambda_coef},
                 {"train_size", s.train_size},
                 {"test_size", s.test_size},
                 {"skipped", s.skipped},
                 {"skip_reason", s.skip_reason},
                 {"rmse", s.rmse},
                 {"mae", s.mae}};
    splits.push_back(std::move(item));
  }
  return {{"form", r.form_id},
          {"expression", std::string(form_expression(form_from_int(r.form_id)))},
          {"lowest_rmse", r.lowest_rmse},
          {"lowest_mae", r.lowest_mae},
          {"combinations_total", r.combinations_total},
          {"combinations_used", r.combinations_used},
          {"skipped", r.skipped},
          {"splits", splits}};
}

inline CvReport cv_from_json(const Json& j) {
  CvReport r;
  try {
    r.form_id = j.at("form").get<int>();
    r.lowest_rmse = j.at("lowest_rmse").get<double>();
    r.lowest_mae = j.at("lowest_mae").get<double>();
    r.combinations_total = j.at("combinations_total").get<std::size_t>();
    r.combinations_used = j.at("combinations_used").get<std::size_t>();
    r.skipped = j.at("skipped").get<std::size_t>();
    for (const auto& s : j.at("splits")) {
      CvSplitRecord out;
      out.combination = s.at("combination").get<std::size_t>();
      out.p_threshold = s.at("p_threshold").get<double>();
      out.f_threshold = s.at("f_threshold").get<double>();
      out.lambda_exp = s.at("lambda_exp").get<double>();
      out.lambda_coef = s.at("lambda_coef").get<double>();
      out.train_size = s.at("train_size").get<std::size_t>();
      out.test_size = s.at("test_size").get<std::size_t>();
      out.skipped = s.at("skipped").get<bool>();
      out.skip_reason = s.at("skip_reason").get<std::string>();
      out.rmse = s.at("rmse").get<double>();
      out.mae = s.at("mae").get<double>();
      r.splits.push_back(std::move(out));
    }
  } catch (const Json::exception& e) {
    throw InputError(std::string("malformed cross-validation report: ") + e.what());
  }
  return r;
}

inline std::string cv_to_csv(const CvReport& r) {
  std::ostringstream out;
  out << "form,combination,p_threshold,f_threshold,lambda_exp,lambda_coef,train_size,test_size,"
         "skipped,rmse,mae\n";
  for (const auto& s : r.splits) {
    out << r.form_id << ',' << s.combination << ',' << format_double(s.p_threshold) << ','
        << format_double(s.f_threshold) << ',' << format_double(s.lambda_exp) << ','
        << format_double(s.lambda_coef) << ',' << s.train_size << ',' << s.test_size << ','
        << (s.skipped ? 1 : 0) << ',' << (s.skipped ? "" : format_double(s.rmse)) << ','
        << (s.skipped ? "" : format_double(s.mae)) << '\n';
  }
  return out.str();
}

inline Json ranking_to_json(const std::vector<FormRanking>& ranking) {
  Json out = Json::array();
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    const auto& r = ranking[i];
    out.push_back({{"rank", i + 1},
                   {"form", r.form_id},
                   {"expression", std::string(form_expression(form_from_int(r.form_id)))},
                   {"lowest_rmse", r.lowest_rmse},
                   {"lowest_mae", r.lowest_mae}});
  }
  return out;
}

inline std::string ranking_to_text(const std::vector<FormRanking>& ranking) {
  std::ostringstream out;
  out << "Rank  Form  Scaling law                                   Lowest RMSE  Lowest MAE\n";
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    const auto& r = ranking[i];
    std::string expr(form_expression(form_from_int(r.form_id)));
    expr.resize(std::max<std::size_t>(expr.size(), 44), ' ');
    std::string rank = std::to_string(i + 1);
    rank.resize(6, ' ');
    std::string form = std::to_string(r.form_id);
    form.resize(6, ' ');
    std::string rmse = format_fixed(r.lowest_rmse, 6);
    rmse.resize(std::max<std::size_t>(rmse.size(), 13), ' ');
    out << rank << form << expr << "  " << rmse << format_fixed(r.lowest_mae, 6) << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Planner outputs

inline Json allocation_to_json(const AllocationResult& r) {
  return {{"p_star", r.p_star},
          {"pretrain_steps", r.pretrain_steps},
          {"f_star", r.f_star},
          {"loss_at_optimum", r.loss_at_optimum},
          {"finetune_budget_fraction", r.finetune_budget_fraction},
          {"pretrain_spend", r.pretrain_spend},
          {"warnings", r.warnings}};
}

/// Columns: <variable>,finetune_budget_fraction,pretrain_spend,p_star,f_star,loss
inline std::string sweep_to_csv(std::string_view variable, const std::vector<SweepPoint>& sweep) {
  std::ostringstream out;
  out << variable << ",finetune_budget_fraction,pretrain_spend,p_star,f_star,loss\n";
  for (const auto& s : sweep) {
    const auto& a = s.allocation;
    out << format_double(s.value) << ',' << format_double(a.finetune_budget_fraction) << ','
        << format_double(a.pretrain_spend) << ',' << format_double(a.p_star) << ','
        << format_double(a.f_star) << ',' << format_double(a.loss_at_optimum) << '\n';
  }
  return out.str();
}

/// Columns: target_loss,p,f
inline std::string iso_loss_to_csv(const std::vector<IsoLossCurve>& curves) {
  std::ostringstream out;
  out << "target_loss,p,f\n";
  for (const auto& c : curves) {
    for (const auto& pt : c.points) {
      out << format_double(c.target_loss) << ',' << format_double(pt.p) << ','
          << format_double(pt.f) << '\n';
    }
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Study report

struct DatasetSection {
  std::string name;
  std::optional<FitResult> fit;
  std::optional<BootstrapReport> bootstrap;
  std::optional<CvReport> cv;
};

struct StudyReport {
  std::string version = std::string(kVersion);
  Json config = Json::object();
  std::vector<DatasetSection> datasets;
  std::optional<LawParams> cross_dataset_cv;
};

/// Fills the cross-dataset coefficient-of-variation row from the fitted
/// datasets when at least two are present. Uses the n-1 denominator, which is
/// the convention the reference coefficients follow.
inline void attach_cross_dataset_cv(StudyReport& report) {
  std::vector<LawParams> sets;
  for (const auto& d : report.datasets) {
    if (d.fit) sets.push_back(d.fit->params);
  }
  if (sets.size() >= 2) report.cross_dataset_cv = coefficient_of_variation(sets, SdConvention::kSample);
}

inline Json to_json(const StudyReport& r) {
  Json datasets = Json::array();
  for (const auto& d : r.datasets) {
    Json item = {{"name", d.name}};
    item["fit"] = d.fit ? fit_to_json(*d.fit) : Json(nullptr);
    item["bootstrap"] = d.bootstrap ? bootstrap_to_json(*d.bootstrap) : Json(nullptr);
    item["cv"] = d.cv ? cv_to_json(*d.cv) : Json(nullptr);
    datasets.push_back(std::move(item));
  }
  return {{"tool", std::string(kToolName)},
          {"version", r.version},
          {"config", r.config},
          {"datasets", datasets},
          {"cross_dataset_cv",
           r.cross_dataset_cv ? params_to_json(*r.cross_dataset_cv) : Json(nullptr)}};
}

inline StudyReport study_from_json(const Json& j) {
  StudyReport r;
  try {
    if (j.at("tool").get<std::string>() != kToolName) throw InputError("not a study report");
    r.version = j.at("version").get<std::string>();
    r.config = j.at("config");
    for (const auto& d : j.at("datasets")) {
      DatasetSection section;
      section.name = d.at("name").get<std::string>();
      if (!d.at("fit").is_null()) section.fit = fit_from_json(d.at("fit"));
      if (!d.at("bootstrap").is_null()) section.bootstrap = bootstrap_from_json(d.at("bootstrap"));
      if (!d.at("cv").is_null()) section.cv = cv_from_json(d.at("cv"));
      r.datasets.push_back(std::move(section));
    }
    if (!j.at("cross_dataset_cv").is_null()) {
      r.cross_dataset_cv = params_from_json(j.at("cross_dataset_cv"));
    }
  } catch (const Json::exception& e) {
    throw InputError(std::string("malformed study report: ") + e.what());
  }
  return r;
}

enum class RenderFormat { kJson, kText, kCsv };

inline RenderFormat parse_render_format(std::string_view name) {
  if (name == "json") return RenderFormat::kJson;
  if (name == "text" || name == "text-table") return RenderFormat::kText;
  if (name == "csv") return RenderFormat::kCsv;
  throw InputError("unknown report format '" + std::string(name) + "'");
}

namespace detail {

inline std::string pad(std::string text, std::size_t width) {
  if (text.size() < width) text.resize(width, ' ');
  return text;
}

inline std::optional<double> standard_error_of(const DatasetSection& d, std::string_view name) {
  if (!d.bootstrap) return std::nullopt;
  for (const auto& p : d.bootstrap->parameters) {
    if (p.name == name) return p.standard_error;
  }
  return std::nullopt;
}

inline std::optional<const ParameterSummary*> summary_of(const DatasetSection& d,
                                                         std::string_view name) {
  if (!d.bootstrap) return std::nullopt;
  for (const auto& p : d.bootstrap->parameters) {
    if (p.name == name) return &p;
  }
  return std::nullopt;
}

inline constexpr std::array<std::string_view, 5> kParamNames = {"A", "G", "alpha", "beta", "E"};

inline double param_value(const LawParams& p, std::size_t i) {
  switch (i) {
    case 0: return p.A;
    case 1: return p.G;
    case 2: return p.alpha;
    case 3: return p.beta;
    default: return p.E;
  }
}

inline std::string strip_trailing_spaces(const std::string& text) {
  std::istringstream in(text);
  std::string out;
  std::string line;
  while (std::getline(in, line)) {
    line.erase(line.find_last_not_of(' ') + 1);
    out += line;
    out += '\n';
  }
  return out;
}

inline std::string render_text(const StudyReport& r) {
  std::ostringstream out;
  out << kToolName << ' ' << r.version << " study report\n";
  if (r.datasets.empty()) {
    out << "\n(no datasets)\n";
    return out.str();
  }
  std::size_t name_width = std::string_view("Coefficient of variation").size() + 2;
  for (const auto& d : r.datasets) name_width = std::max(name_width, d.name.size() + 2);
  constexpr std::size_t kCell = 18;

  const bool any_fit =
      std::any_of(r.datasets.begin(), r.datasets.end(), [](const auto& d) { return d.fit.has_value(); });
  if (any_fit) {
    out << "\nFitted parameters (standard errors in parentheses)\n";
    out << pad("Dataset", name_width);
    for (auto name : kParamNames) out << pad(std::string(name), kCell);
    out << '\n';
    for (const auto& d : r.datasets) {
      if (!d.fit) continue;
      out << pad(d.name, name_width);
      for (std::size_t i = 0; i < kParamNames.size(); ++i) {
        std::string cell = format_fixed(param_value(d.fit->params, i), 3);
        if (auto se = standard_error_of(d, kParamNames[i])) {
          cell += " (" + format_fixed(*se, 2) + ")";
        }
        out << pad(cell, kCell);
      }
      out << '\n';
    }
    if (r.cross_dataset_cv) {
      out << pad("Coefficient of variation", name_width);
      for (std::size_t i = 0; i < kParamNames.size(); ++i) {
        out << pad(format_fixed(param_value(*r.cross_dataset_cv, i), 3), kCell);
      }
      out << '\n';
    }
  }

  const bool any_boot = std::any_of(r.datasets.begin(), r.datasets.end(),
                                    [](const auto& d) { return d.bootstrap.has_value(); });
  if (any_boot) {
    out << "\nBootstrap confidence intervals\n";
    out << pad("Dataset", name_width);
    for (auto name : kParamNames) out << pad(std::string(name), kCell + 4);
    out << '\n';
    for (const auto& d : r.datasets) {
      if (!d.bootstrap) continue;
      out << pad(d.name, name_width);
      for (auto name : kParamNames) {
        const auto s = summary_of(d, name);
        const int decimals = name == "alpha" || name == "beta" ? 3 : 2;
        out << pad(s ? "[" + format_fixed((*s)->ci_low, decimals) + ", " +
                           format_fixed((*s)->ci_high, decimals) + "]"
                     : "-",
                   kCell + 4);
      }
      out << '\n';
    }
  }

  const bool any_cv =
      std::any_of(r.datasets.begin(), r.datasets.end(), [](const auto& d) { return d.cv.has_value(); });
  if (any_cv) {
    out << "\nCross-validation\n";
    out << pad("Dataset", name_width) << pad("Form", 6) << pad("Lowest RMSE", 14) << "Lowest MAE\n";
    for (const auto& d : r.datasets) {
      if (!d.cv) continue;
      out << pad(d.name, name_width) << pad(std::to_string(d.cv->form_id), 6)
          << pad(format_fixed(d.cv->lowest_rmse, 6), 14) << format_fixed(d.cv->lowest_mae, 6)
          << '\n';
    }
  }
  return strip_trailing_spaces(out.str());
}

inline std::string render_csv(const StudyReport& r) {
  std::ostringstream out;
  out << "dataset,form,A,G,alpha,beta,E,se_A,se_G,se_alpha,se_beta,se_E,cv_lowest_rmse,"
         "cv_lowest_mae\n";
  auto opt = [](std::optional<double> v) { return v ? format_double(*v) : std::string(); };
  for (const auto& d : r.datasets) {
    out << d.name << ',' << (d.fit ? std::to_string(d.fit->form.index()) : std::string());
    for (std::size_t i = 0; i < kParamNames.size(); ++i) {
      out << ',' << (d.fit ? format_double(param_value(d.fit->params, i)) : std::string());
    }
    for (auto name : kParamNames) out << ',' << opt(standard_error_of(d, name));
    out << ',' << (d.cv ? format_double(d.cv->lowest_rmse) : std::string()) << ','
        << (d.cv ? format_double(d.cv->lowest_mae) : std::string()) << '\n';
  }
  if (r.cross_dataset_cv) {
    out << "coefficient_of_variation,";
    for (std::size_t i = 0; i < kParamNames.size(); ++i) {
      out << ',' << format_double(param_value(*r.cross_dataset_cv, i));
    }
    out << ",,,,,,,\n";
  }
  return out.str();
}

}  // namespace detail

inline std::string render(const StudyReport& report, RenderFormat format) {
  switch (format) {
    case RenderFormat::kJson: return to_json(report).dump(2) + "\n";
    case RenderFormat::kText: return detail::render_text(report);
    case RenderFormat::kCsv: return detail::render_csv(report);
  }
  throw InputError("unknown report format");
}

inline std::string render(const StudyReport& report, std::string_view format) {
  return render(report, parse_render_format(format));
}

}  // namespace xferlaw
