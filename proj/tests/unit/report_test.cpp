#include <string>

#include <gtest/gtest.h>

#include "xferlaw/presets.hpp"
#include "xferlaw/report.hpp"

namespace xferlaw {
namespace {

FitResult fake_fit(const LawParams& params) {
  FitResult r;
  r.params = params;
  r.theta = {1.0, 2.0, 3.0, 4.0, 5.0};
  r.objective = 1e-4;
  r.gradient_norm = 1e-9;
  r.converged = true;
  r.n_starts = 72;
  r.n_converged = 70;
  r.n_evaluations = 1234;
  return r;
}

BootstrapReport fake_bootstrap(const LawParams& params) {
  BootstrapReport b;
  b.n_resamples = 4000;
  b.seed = 3;
  b.full_fit = fake_fit(params);
  const std::pair<const char*, double> values[] = {
      {"A", params.A}, {"G", params.G}, {"alpha", params.alpha}, {"beta", params.beta}, {"E", params.E}};
  for (const auto& [name, v] : values) {
    b.parameters.push_back({name, v, 0.02 * v, v, 0.95 * v, 1.05 * v});
  }
  return b;
}

StudyReport preset_table() {
  StudyReport r;
  r.config = {{"command", "report"}};
  for (const auto& preset : kDatasetPresets) {
    DatasetSection d;
    d.name = std::string(preset.name);
    d.fit = fake_fit(preset.params);
    d.bootstrap = fake_bootstrap(preset.params);
    r.datasets.push_back(std::move(d));
  }
  attach_cross_dataset_cv(r);
  return r;
}

TEST(Report, EmptyReportRenders) {
  const StudyReport empty;
  EXPECT_NE(render(empty, "text").find("(no datasets)"), std::string::npos);
  const auto j = Json::parse(render(empty, "json"));
  EXPECT_EQ(j.at("tool"), "xferlaw");
  EXPECT_TRUE(j.at("datasets").empty());
  EXPECT_TRUE(j.at("cross_dataset_cv").is_null());
  EXPECT_EQ(render(empty, "csv").find('\n'), render(empty, "csv").size() - 1);
}

TEST(Report, TableLayout) {
  const auto text = render(preset_table(), "text-table");
  EXPECT_NE(text.find("Fitted parameters"), std::string::npos);
  EXPECT_NE(text.find("fictional-encyclopedia"), std::string::npos);
  EXPECT_NE(text.find("284.766 (5.70)"), std::string::npos);
  EXPECT_NE(text.find("0.730 (0.01)"), std::string::npos);
  // n-1 denominator over the five rows.
  EXPECT_NE(text.find("Coefficient of variation"), std::string::npos);
  EXPECT_NE(text.find("0.536"), std::string::npos);
  EXPECT_NE(text.find("0.095"), std::string::npos);
  EXPECT_NE(text.find("[0.694, 0.766]"), std::string::npos);
  for (std::size_t pos = text.find(" \n"); pos != std::string::npos; pos = text.find(" \n", pos + 1)) {
    ADD_FAILURE() << "trailing space at offset " << pos;
  }
}

TEST(Report, JsonIsAFixpoint) {
  const auto first = render(preset_table(), "json");
  const auto reparsed = study_from_json(Json::parse(first));
  EXPECT_EQ(render(reparsed, "json"), first);
  EXPECT_EQ(render(reparsed, "text"), render(preset_table(), "text"));
}

TEST(Report, RenderingIsByteStable) {
  EXPECT_EQ(render(preset_table(), "csv"), render(preset_table(), "csv"));
  EXPECT_EQ(render(preset_table(), "text"), render(preset_table(), "text"));
}

TEST(Report, CsvHasOneRowPerDatasetPlusCv) {
  const auto csv = render(preset_table(), "csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
  EXPECT_EQ(csv.rfind("coefficient_of_variation,", std::string::npos) != std::string::npos, true);
}

TEST(Report, UnknownFormatIsInputError) {
  EXPECT_THROW(render(StudyReport{}, "yaml"), InputError);
}

TEST(Report, CvRoundTrip) {
  CvReport cv;
  cv.form_id = 3;
  cv.lowest_rmse = 0.125;
  cv.lowest_mae = 0.0625;
  cv.combinations_total = 150;
  cv.combinations_used = 2;
  cv.skipped = 1;
  cv.splits.push_back({0, 5.37e8, 10.0, 0.0, 0.0, 1, 149, true, "too few", 0.0, 0.0});
  cv.splits.push_back({1, 5.37e8, 20.0, 0.1, 0.01, 2, 148, false, "", 0.125, 0.0625});
  const auto back = cv_from_json(cv_to_json(cv));
  EXPECT_EQ(cv_to_json(back), cv_to_json(cv));
  EXPECT_EQ(cv_to_csv(cv).substr(0, 5), "form,");
}

TEST(Report, ExtractParamsFromNestedDocuments) {
  const auto& fe = preset_or_throw("fictional-encyclopedia").params;
  const auto fit_doc = fit_to_json(fake_fit(fe));
  EXPECT_EQ(extract_params(fit_doc).A, fe.A);
  EXPECT_EQ(extract_params(bootstrap_to_json(fake_bootstrap(fe))).beta, fe.beta);
  StudyReport one;
  one.datasets.push_back({"x", fake_fit(fe), std::nullopt, std::nullopt});
  EXPECT_EQ(extract_params(to_json(one)).E, fe.E);
  EXPECT_THROW(extract_params(Json::object()), InputError);
  EXPECT_THROW(params_from_json(Json{{"A", 1.0}}), InputError);
}

TEST(Report, MalformedStudyIsInputError) {
  EXPECT_THROW(study_from_json(Json{{"tool", "other"}}), InputError);
  EXPECT_THROW(study_from_json(Json::object()), InputError);
}

}  // namespace
}  // namespace xferlaw
