#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "xferlaw/law.hpp"

namespace xferlaw {

/// Reference fit for one fine-tuning dataset, with bootstrap standard errors.
struct DatasetPreset {
  std::string_view name;
  std::string_view title;
  LawParams params;
  LawParams standard_errors;
};

inline constexpr std::array<DatasetPreset, 5> kDatasetPresets = {{
    {"fictional-encyclopedia", "Fictional encyclopedia",
     {284.766, 2.570, 0.730, 0.123, 0.538}, {38.55, 0.18, 0.02, 0.01, 0.19}},
    {"math-arxiv", "Math arXiv",
     {317.966, 0.166, 0.756, 0.059, 1.758}, {29.31, 0.04, 0.02, 0.01, 0.04}},
    {"statistics-textbook", "Statistics textbook",
     {177.321, 1.305, 0.627, 0.126, 1.367}, {20.93, 0.26, 0.02, 0.02, 0.19}},
    {"enron-emails", "Enron emails",
     {181.482, 0.595, 0.611, 0.159, 1.373}, {19.32, 0.11, 0.02, 0.01, 0.07}},
    {"house-cat-genome", "House cat genome",
     {43.556, 0.548, 0.718, 0.228, 2.677}, {7.85, 0.02, 0.05, 0.03, 0.04}},
}};

/// Reference cross-dataset coefficients of variation, in A, G, alpha, beta, E order.
inline constexpr std::array<double, 5> kReferenceCoefficientOfVariation = {
    0.528, 0.851, 0.094, 0.432, 0.490};

inline std::optional<DatasetPreset> find_preset(std::string_view name) {
  for (const auto& preset : kDatasetPresets) {
    if (preset.name == name) return preset;
  }
  return std::nullopt;
}

inline const DatasetPreset& preset_or_throw(std::string_view name) {
  for (const auto& preset : kDatasetPresets) {
    if (preset.name == name) return preset;
  }
  throw InputError("unknown preset '" + std::string(name) + "'");
}

}  // namespace xferlaw
