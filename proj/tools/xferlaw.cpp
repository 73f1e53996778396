// Command-line front end: fit, cross-validate, bootstrap, plan and
// synthesize transfer scaling-law studies.
//
// Exit codes: 0 success, 1 computational failure, 2 input error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "xferlaw/error.hpp"
#include "xferlaw/fit.hpp"
#include "xferlaw/format.hpp"
#include "xferlaw/law.hpp"
#include "xferlaw/planner.hpp"
#include "xferlaw/presets.hpp"
#include "xferlaw/records.hpp"
#include "xferlaw/report.hpp"
#include "xferlaw/selection.hpp"
#include "xferlaw/synth.hpp"
#include "xferlaw/uncertainty.hpp"

namespace {

using namespace xferlaw;

struct Common {
  std::uint64_t seed = 0;
  int threads = 1;
  std::string output;  // prefix; empty means stdout
};

struct FitFlags {
  std::string data;
  int form = 1;
  std::string starts = "full";
  double huber_delta = 1e-3;
  int max_iterations = 2000;
  double tol = 1e-9;
  double lambda_exp = 0.0;
  double lambda_coef = 0.0;
  double tokens_per_unit = kTokensPerStep;
};

struct CvFlags {
  FitFlags fit;
  std::vector<int> forms = {1, 2, 3, 4, 5};
  std::size_t skip = 1;
  std::vector<double> lambda_exp = CvConfig{}.lambda_exp_grid;
  std::vector<double> lambda_coef = CvConfig{}.lambda_coef_grid;
  std::vector<double> p_thresholds;
  std::vector<double> f_thresholds;
  std::size_t min_train = 1;
  std::size_t min_test = 1;
  int restarts = 8;
  double perturbation = 0.5;
};

struct BootFlags {
  FitFlags fit;
  std::size_t n = kDefaultResamples;
  bool full_grid_refits = false;
};

struct LawSource {
  std::string params_file;
  std::string preset;
};

struct PlanFlags {
  LawSource law;
  double budget = 1e4;
  double cp = 1.0;
  double cf = 1.0;
  double steps_to_p = 1.0;
  double from = 0.1;
  double to = 10.0;
  std::size_t points = 50;
  std::vector<double> targets;
  double p_min = 1.0;
  double p_max = 3e11 / kTokensPerStep + 1.0;
  std::string data;
  double n_params = 2.8e9;
};

struct SynthFlags {
  LawSource law;
  int form = 1;
  double p_shift = 0.0;
  double f_shift = 0.0;
  double sigma = 0.0;
  std::string dataset;
  std::optional<double> epochs;
  double tokens_per_unit = kTokensPerStep;
};

struct ReportFlags {
  std::vector<std::string> inputs;
  std::string format = "text";
};

// ---------------------------------------------------------------------------
// Output

void emit(const Common& common, const std::string& extension, const std::string& content,
          bool to_stdout) {
  if (common.output.empty()) {
    if (to_stdout) std::cout << content;
    return;
  }
  const std::string path = common.output + extension;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open output file '" + path + "'");
  out << content;
  if (!out) throw Error("failed writing '" + path + "'");
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InputError("'" + path + "' is not valid JSON: " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Shared option groups

void add_fit_options(CLI::App* cmd, FitFlags& f, bool with_form) {
  cmd->add_option("data", f.data, "Run records (.csv or .json)")->required();
  if (with_form) {
    cmd->add_option("--form", f.form, "Candidate form 1-5")->check(CLI::Range(1, 5))->capture_default_str();
  }
  cmd->add_option("--starts", f.starts, "Initial-guess grid")
      ->check(CLI::IsMember({"full", "coarse"}))
      ->capture_default_str();
  cmd->add_option("--huber-delta", f.huber_delta, "Huber threshold on log residuals")->capture_default_str();
  cmd->add_option("--max-iterations", f.max_iterations, "BFGS iteration cap")->capture_default_str();
  cmd->add_option("--tol", f.tol, "Gradient-norm tolerance")->capture_default_str();
  cmd->add_option("--lambda-exp", f.lambda_exp, "Penalty on alpha^2 + beta^2")->capture_default_str();
  cmd->add_option("--lambda-coef", f.lambda_coef, "Penalty on a^2 + g^2")->capture_default_str();
  cmd->add_option("--tokens-per-unit", f.tokens_per_unit,
                  "Pre-training tokens per unit of p (p = tokens / this + 1)")
      ->capture_default_str();
}

void add_law_source(CLI::App* cmd, LawSource& law) {
  auto* params = cmd->add_option("--params", law.params_file,
                                 "Law parameters: a params object or any fit/bootstrap output");
  cmd->add_option("--preset", law.preset, "Built-in dataset parameters")->excludes(params);
}

FitConfig make_fit_config(const FitFlags& f, int threads) {
  FitConfig config;
  config.huber_delta = f.huber_delta;
  config.start_grid = f.starts == "coarse" ? coarse_start_grid() : default_start_grid();
  config.max_iterations = f.max_iterations;
  config.convergence_tol = f.tol;
  config.reg_exponents = f.lambda_exp;
  config.reg_coefficients = f.lambda_coef;
  config.threads = threads;
  validate(config);
  if (!(f.tokens_per_unit > 0.0)) throw InputError("tokens-per-unit must be > 0");
  return config;
}

Json fit_config_json(const FitFlags& f) {
  return {{"data", f.data},
          {"form", f.form},
          {"starts", f.starts},
          {"huber_delta", f.huber_delta},
          {"max_iterations", f.max_iterations},
          {"tol", f.tol},
          {"lambda_exp", f.lambda_exp},
          {"lambda_coef", f.lambda_coef},
          {"tokens_per_unit", f.tokens_per_unit}};
}

std::vector<RunRecord> load(const std::string& path) {
  auto set = load_records(path);
  for (const auto& w : set.warnings) std::cerr << "warning: " << w << '\n';
  return std::move(set.records);
}

std::string dataset_name(const std::vector<RunRecord>& records, const std::string& path) {
  if (!records.empty() && !records.front().dataset.empty()) return records.front().dataset;
  return std::filesystem::path(path).stem().string();
}

LawParams resolve_law(const LawSource& law, Json& config) {
  if (!law.params_file.empty()) {
    config["params_file"] = law.params_file;
    const auto params = extract_params(read_json_file(law.params_file));
    validate(params);
    config["params"] = params_to_json(params);
    return params;
  }
  const std::string name = law.preset.empty() ? "fictional-encyclopedia" : law.preset;
  config["preset"] = name;
  const auto params = preset_or_throw(name).params;
  config["params"] = params_to_json(params);
  return params;
}

std::string fit_summary_text(const FitResult& fit) {
  std::ostringstream out;
  out << "\nForm " << fit.form.index() << ": " << form_expression(fit.form.id()) << '\n';
  if (shifts_p(fit.form.id())) out << "p shift: " << format_fixed(fit.form.p_shift(), 6) << '\n';
  if (shifts_f(fit.form.id())) out << "f shift: " << format_fixed(fit.form.f_shift(), 6) << '\n';
  out << "Objective: " << format_double(fit.objective) << '\n';
  out << "Converged starts: " << fit.n_converged << " of " << fit.n_starts << '\n';
  for (const auto& w : fit.warnings) out << "warning: " << w << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Commands

int cmd_fit(const Common& common, const FitFlags& f) {
  const auto config = make_fit_config(f, common.threads);
  const auto records = load(f.data);
  const auto observations = to_eval_points(records, f.tokens_per_unit);
  const auto result = fit(observations, form_from_int(f.form), config);

  StudyReport report;
  report.config = {{"command", "fit"}};
  report.config.update(fit_config_json(f));
  report.config["n_records"] = records.size();
  report.datasets.push_back({dataset_name(records, f.data), result, std::nullopt, std::nullopt});
  const std::string json = render(report, RenderFormat::kJson);
  emit(common, ".json", json, true);
  emit(common, ".txt", render(report, RenderFormat::kText) + fit_summary_text(result), false);
  return 0;
}

int cmd_bootstrap(const Common& common, const BootFlags& b) {
  const auto config = make_fit_config(b.fit, common.threads);
  const auto records = load(b.fit.data);
  BootstrapOptions options;
  options.n_resamples = b.n;
  options.seed = common.seed;
  options.tokens_per_unit = b.fit.tokens_per_unit;
  options.threads = common.threads;
  options.full_grid_refits = b.full_grid_refits;
  const auto result = bootstrap(records, form_from_int(b.fit.form), config, options);

  StudyReport report;
  report.config = {{"command", "bootstrap"}};
  report.config.update(fit_config_json(b.fit));
  report.config["n_records"] = records.size();
  report.config["n_resamples"] = b.n;
  report.config["seed"] = common.seed;
  report.config["full_grid_refits"] = b.full_grid_refits;
  report.datasets.push_back(
      {dataset_name(records, b.fit.data), result.full_fit, result, std::nullopt});
  emit(common, ".json", render(report, RenderFormat::kJson), true);
  std::ostringstream text;
  text << render(report, RenderFormat::kText);
  text << "\nResamples: " << result.n_resamples << " (" << result.n_failed << " failed)\n";
  emit(common, ".txt", text.str(), false);
  return 0;
}

int cmd_cv(const Common& common, const CvFlags& c) {
  CvConfig config;
  config.fit = make_fit_config(c.fit, 1);
  config.skip_number = c.skip;
  config.lambda_exp_grid = c.lambda_exp;
  config.lambda_coef_grid = c.lambda_coef;
  config.p_thresholds = c.p_thresholds;
  config.f_thresholds = c.f_thresholds;
  config.min_train_size = c.min_train;
  config.min_test_size = c.min_test;
  config.hopping.restarts = c.restarts;
  config.hopping.perturbation_scale = c.perturbation;
  config.hopping.seed = common.seed;
  config.tokens_per_unit = c.fit.tokens_per_unit;
  config.threads = common.threads;

  std::vector<FormId> forms;
  for (int id : c.forms) forms.push_back(form_from_int(id));
  const auto records = load(c.fit.data);
  const auto comparison = compare_forms(records, forms, config);

  Json cfg = {{"command", "cv"}};
  cfg.update(fit_config_json(c.fit));
  cfg.erase("form");
  cfg["n_records"] = records.size();
  cfg["forms"] = c.forms;
  cfg["skip"] = c.skip;
  cfg["lambda_exp_grid"] = c.lambda_exp;
  cfg["lambda_coef_grid"] = c.lambda_coef;
  cfg["p_thresholds"] = c.p_thresholds;
  cfg["f_thresholds"] = c.f_thresholds;
  cfg["min_train"] = c.min_train;
  cfg["min_test"] = c.min_test;
  cfg["restarts"] = c.restarts;
  cfg["perturbation"] = c.perturbation;
  cfg["seed"] = common.seed;

  Json reports = Json::array();
  for (const auto& r : comparison.reports) reports.push_back(cv_to_json(r));
  const Json doc = {{"tool", std::string(kToolName)},
                    {"version", std::string(kVersion)},
                    {"config", cfg},
                    {"dataset", dataset_name(records, c.fit.data)},
                    {"ranking", ranking_to_json(comparison.ranking)},
                    {"reports", reports}};
  emit(common, ".json", dump(doc), true);

  std::ostringstream text;
  text << kToolName << ' ' << kVersion << " cross-validation\n\n";
  text << ranking_to_text(comparison.ranking);
  for (const auto& r : comparison.reports) {
    text << "\nForm " << r.form_id << ": " << r.combinations_used << " of "
         << r.combinations_total << " threshold combinations, " << r.skipped << " of "
         << r.splits.size() << " work items skipped\n";
  }
  emit(common, ".txt", text.str(), false);

  std::string csv;
  for (std::size_t i = 0; i < comparison.reports.size(); ++i) {
    auto part = cv_to_csv(comparison.reports[i]);
    if (i > 0) part.erase(0, part.find('\n') + 1);
    csv += part;
  }
  emit(common, ".csv", csv, false);
  return 0;
}

AllocationProblem make_problem(const PlanFlags& p, Json& cfg) {
  AllocationProblem problem;
  problem.params = resolve_law(p.law, cfg);
  problem.budget = p.budget;
  problem.cost_per_pretrain_step = p.cp;
  problem.cost_per_finetune_point = p.cf;
  problem.steps_to_p = p.steps_to_p;
  cfg["budget"] = p.budget;
  cfg["cp"] = p.cp;
  cfg["cf"] = p.cf;
  cfg["steps_to_p"] = p.steps_to_p;
  return problem;
}

Json plan_header(const std::string& action) {
  return {{"command", "plan"}, {"action", action}};
}

void emit_csv_with_config(const Common& common, const Json& cfg, const std::string& csv) {
  emit(common, ".csv", csv, true);
  const Json meta = {{"tool", std::string(kToolName)},
                     {"version", std::string(kVersion)},
                     {"config", cfg}};
  emit(common, ".json", dump(meta), false);
}

int cmd_plan_allocate(const Common& common, const PlanFlags& p) {
  Json cfg = plan_header("allocate");
  const auto problem = make_problem(p, cfg);
  const auto result = optimize_allocation(problem);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  const Json doc = {{"tool", std::string(kToolName)},
                    {"version", std::string(kVersion)},
                    {"config", cfg},
                    {"allocation", allocation_to_json(result)}};
  emit(common, ".json", dump(doc), true);
  return 0;
}

int cmd_plan_sweep(const Common& common, const PlanFlags& p, bool gap) {
  Json cfg = plan_header(gap ? "sweep-gap" : "sweep-cost");
  const auto problem = make_problem(p, cfg);
  cfg["from"] = p.from;
  cfg["to"] = p.to;
  cfg["points"] = p.points;
  const auto values = log_spaced(p.from, p.to, p.points);
  const auto sweep = gap ? sweep_gap(problem, values) : sweep_cost_ratio(problem, values);
  emit_csv_with_config(common, cfg, sweep_to_csv(gap ? "G" : "cost_ratio", sweep));
  return 0;
}

int cmd_plan_isoloss(const Common& common, const PlanFlags& p) {
  Json cfg = plan_header("isoloss");
  const auto params = resolve_law(p.law, cfg);
  if (p.targets.empty()) throw InputError("at least one --target is required");
  cfg["targets"] = p.targets;
  cfg["p_min"] = p.p_min;
  cfg["p_max"] = p.p_max;
  cfg["points"] = p.points;
  std::vector<IsoLossCurve> curves;
  for (double target : p.targets) curves.push_back(iso_loss(params, target, p.p_min, p.p_max, p.points));
  emit_csv_with_config(common, cfg, iso_loss_to_csv(curves));
  return 0;
}

int cmd_plan_compute(const Common& common, const PlanFlags& p) {
  const auto records = load(p.data);
  const double flops = estimate_compute(records, p.n_params);
  const Json cfg = {{"command", "plan"},
                    {"action", "compute"},
                    {"data", p.data},
                    {"n_params", p.n_params},
                    {"n_records", records.size()}};
  const Json doc = {{"tool", std::string(kToolName)},
                    {"version", std::string(kVersion)},
                    {"config", cfg},
                    {"compute_flops", flops}};
  emit(common, ".json", dump(doc), true);
  return 0;
}

int cmd_synth(const Common& common, const SynthFlags& s) {
  Json cfg = {{"command", "synth"}};
  SynthSpec spec;
  spec.params = resolve_law(s.law, cfg);
  spec.form = LawForm(form_from_int(s.form), s.p_shift, s.f_shift);
  spec.noise_sigma = s.sigma;
  spec.seed = common.seed;
  spec.epochs = s.epochs;
  spec.tokens_per_unit = s.tokens_per_unit;
  if (!s.dataset.empty()) {
    spec.dataset = s.dataset;
  } else if (!s.law.preset.empty() || s.law.params_file.empty()) {
    spec.dataset = cfg["preset"].get<std::string>();
  }
  cfg["form"] = s.form;
  cfg["p_shift"] = s.p_shift;
  cfg["f_shift"] = s.f_shift;
  cfg["sigma"] = s.sigma;
  cfg["seed"] = common.seed;
  cfg["dataset"] = spec.dataset;
  cfg["epochs"] = s.epochs ? Json(*s.epochs) : Json(nullptr);
  cfg["tokens_per_unit"] = s.tokens_per_unit;
  const auto records = generate(spec);
  std::ostringstream csv;
  write_records_csv(records, csv);
  emit_csv_with_config(common, cfg, csv.str());
  return 0;
}

void merge_section(StudyReport& report, DatasetSection section) {
  for (auto& existing : report.datasets) {
    if (existing.name != section.name) continue;
    if (section.fit) existing.fit = section.fit;
    if (section.bootstrap) existing.bootstrap = section.bootstrap;
    if (section.cv) existing.cv = section.cv;
    return;
  }
  report.datasets.push_back(std::move(section));
}

int cmd_report(const Common& common, const ReportFlags& r) {
  const auto format = parse_render_format(r.format);
  StudyReport report;
  report.config = {{"command", "report"}, {"inputs", r.inputs}, {"format", r.format}};
  for (const auto& path : r.inputs) {
    const Json doc = read_json_file(path);
    if (doc.contains("ranking") && doc.contains("reports")) {
      // Cross-validation output: keep the top-ranked form.
      const int best = doc.at("ranking").at(0).at("form").get<int>();
      for (const auto& item : doc.at("reports")) {
        if (item.at("form").get<int>() == best) {
          merge_section(report, {doc.at("dataset").get<std::string>(), std::nullopt,
                                 std::nullopt, cv_from_json(item)});
        }
      }
    } else {
      for (auto& section : study_from_json(doc).datasets) merge_section(report, std::move(section));
    }
  }
  attach_cross_dataset_cv(report);
  const char* extension = format == RenderFormat::kJson ? ".json"
                          : format == RenderFormat::kCsv ? ".csv"
                                                         : ".txt";
  emit(common, extension, render(report, format), true);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fit, validate and plan with scaling laws for transfer"};
  app.set_config("--config", "", "Config file whose keys mirror flag names");
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--seed", common.seed, "Seed for every random draw")->capture_default_str();
  app.add_option("--threads", common.threads, "Worker threads (does not change results)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("-o,--output", common.output,
                 "Output prefix; extensions .json/.txt/.csv are appended. Default: stdout");

  FitFlags fit_flags;
  auto* fit_cmd = app.add_subcommand("fit", "Fit one candidate form to run records");
  add_fit_options(fit_cmd, fit_flags, true);

  CvFlags cv_flags;
  cv_flags.fit.starts = "coarse";
  auto* cv_cmd = app.add_subcommand("cv", "Step-wise cross-validation across candidate forms");
  add_fit_options(cv_cmd, cv_flags.fit, false);
  cv_cmd->add_option("--forms", cv_flags.forms, "Forms to compare")
      ->check(CLI::Range(1, 5))
      ->delimiter(',')
      ->capture_default_str();
  cv_cmd->add_option("--skip", cv_flags.skip, "Use every n-th threshold combination")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cv_cmd->add_option("--lambda-exp-grid", cv_flags.lambda_exp, "Exponent penalty grid")
      ->delimiter(',')
      ->capture_default_str();
  cv_cmd->add_option("--lambda-coef-grid", cv_flags.lambda_coef, "Coefficient penalty grid")
      ->delimiter(',')
      ->capture_default_str();
  cv_cmd->add_option("--p-thresholds", cv_flags.p_thresholds,
                     "Pre-training token thresholds (default: data levels)")
      ->delimiter(',');
  cv_cmd->add_option("--f-thresholds", cv_flags.f_thresholds,
                     "Fine-tuning token thresholds (default: data levels)")
      ->delimiter(',');
  cv_cmd->add_option("--min-train", cv_flags.min_train, "Smallest train side")->capture_default_str();
  cv_cmd->add_option("--min-test", cv_flags.min_test, "Smallest test side")->capture_default_str();
  cv_cmd->add_option("--restarts", cv_flags.restarts, "Random restarts after the grid")
      ->capture_default_str();
  cv_cmd->add_option("--perturbation", cv_flags.perturbation, "Restart perturbation scale")
      ->capture_default_str();

  BootFlags boot_flags;
  auto* boot_cmd = app.add_subcommand("bootstrap", "Bootstrap standard errors and intervals");
  add_fit_options(boot_cmd, boot_flags.fit, true);
  boot_cmd->add_option("-n,--resamples", boot_flags.n, "Number of resamples")
      ->check(CLI::Range(std::size_t{2}, std::size_t{100000000}))
      ->capture_default_str();
  boot_cmd->add_flag("--full-grid-refits", boot_flags.full_grid_refits,
                     "Refit each resample from the whole start grid");

  PlanFlags plan_flags;
  auto* plan_cmd = app.add_subcommand("plan", "Budget allocation and iso-loss planning");
  plan_cmd->require_subcommand(1);
  auto add_budget = [&](CLI::App* cmd) {
    add_law_source(cmd, plan_flags.law);
    cmd->add_option("--budget", plan_flags.budget, "Total budget B")->capture_default_str();
    cmd->add_option("--cp", plan_flags.cp, "Cost per pre-training step")->capture_default_str();
    cmd->add_option("--cf", plan_flags.cf, "Cost per fine-tuning point")->capture_default_str();
    cmd->add_option("--steps-to-p", plan_flags.steps_to_p, "Law p units per pre-training step")
        ->capture_default_str();
  };
  auto* allocate_cmd = plan_cmd->add_subcommand("allocate", "Optimal split of one budget");
  add_budget(allocate_cmd);
  auto* gap_cmd = plan_cmd->add_subcommand("sweep-gap", "Budget fraction across transfer gaps");
  auto* cost_cmd = plan_cmd->add_subcommand("sweep-cost", "Budget split across cost ratios C_f/C_p");
  for (auto* cmd : {gap_cmd, cost_cmd}) {
    add_budget(cmd);
    cmd->add_option("--from", plan_flags.from, "First swept value")->capture_default_str();
    cmd->add_option("--to", plan_flags.to, "Last swept value")->capture_default_str();
    cmd->add_option("--points", plan_flags.points, "Log-spaced sweep points")->capture_default_str();
  }
  auto* iso_cmd = plan_cmd->add_subcommand("isoloss", "Iso-loss curves over p");
  add_law_source(iso_cmd, plan_flags.law);
  iso_cmd->add_option("--target", plan_flags.targets, "Target loss (repeatable)")->required();
  iso_cmd->add_option("--p-min", plan_flags.p_min, "Smallest p")->capture_default_str();
  iso_cmd->add_option("--p-max", plan_flags.p_max, "Largest p")->capture_default_str();
  iso_cmd->add_option("--points", plan_flags.points, "Log-spaced p values")->capture_default_str();
  auto* compute_cmd = plan_cmd->add_subcommand("compute", "Training FLOP estimate from records");
  compute_cmd->add_option("data", plan_flags.data, "Run records with epochs")->required();
  compute_cmd->add_option("--n-params", plan_flags.n_params, "Model parameter count")
      ->capture_default_str();

  SynthFlags synth_flags;
  auto* synth_cmd = app.add_subcommand("synth", "Generate records from known parameters");
  add_law_source(synth_cmd, synth_flags.law);
  synth_cmd->add_option("--form", synth_flags.form, "Generating form 1-5")
      ->check(CLI::Range(1, 5))
      ->capture_default_str();
  synth_cmd->add_option("--p-shift", synth_flags.p_shift, "Shift added to p (forms 3, 4)");
  synth_cmd->add_option("--f-shift", synth_flags.f_shift, "Shift added to f (forms 2, 4)");
  synth_cmd->add_option("--sigma", synth_flags.sigma, "SD of Gaussian noise on log-loss")
      ->capture_default_str();
  synth_cmd->add_option("--dataset", synth_flags.dataset, "Dataset label");
  synth_cmd->add_option("--epochs", synth_flags.epochs, "Constant epochs column");
  synth_cmd->add_option("--tokens-per-unit", synth_flags.tokens_per_unit,
                        "Pre-training tokens per unit of p")
      ->capture_default_str();

  ReportFlags report_flags;
  auto* report_cmd = app.add_subcommand("report", "Combine fit, bootstrap and cv outputs");
  report_cmd->add_option("inputs", report_flags.inputs, "JSON outputs of other commands")
      ->required()
      ->check(CLI::ExistingFile);
  report_cmd->add_option("--format", report_flags.format, "json, text or csv")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*fit_cmd) return cmd_fit(common, fit_flags);
    if (*cv_cmd) return cmd_cv(common, cv_flags);
    if (*boot_cmd) return cmd_bootstrap(common, boot_flags);
    if (*synth_cmd) return cmd_synth(common, synth_flags);
    if (*report_cmd) return cmd_report(common, report_flags);
    if (*allocate_cmd) return cmd_plan_allocate(common, plan_flags);
    if (*gap_cmd) return cmd_plan_sweep(common, plan_flags, true);
    if (*cost_cmd) return cmd_plan_sweep(common, plan_flags, false);
    if (*iso_cmd) return cmd_plan_isoloss(common, plan_flags);
    if (*compute_cmd) return cmd_plan_compute(common, plan_flags);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
