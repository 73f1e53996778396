#pragma once

// Experiment records: one row per fine-tuning run.
//
// CSV schema (header required, exact names, any column order):
//
//   dataset,pretrain_tokens,finetune_tokens,val_loss[,epochs][,trial]
//
// JSON: an array of objects with the same field names.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "xferlaw/error.hpp"
#include "xferlaw/format.hpp"
#include "xferlaw/law.hpp"

namespace xferlaw {

/// Tokens processed by one pre-training step (the reference batch size).
inline constexpr double kTokensPerStep = 2097152.0;

struct RunRecord {
  std::string dataset;
  double pretrain_tokens = 0.0;
  double finetune_tokens = 1.0;
  double val_loss = 0.0;
  std::optional<double> epochs;
  std::optional<std::string> trial;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

/// A point of the law's domain paired with the observed loss there.
struct Observation {
  EvalPoint point;
  double loss = 0.0;

  friend bool operator==(const Observation&, const Observation&) = default;
};

struct RecordSet {
  std::vector<RunRecord> records;
  std::vector<std::string> warnings;
};

struct ExperimentGrid {
  std::vector<double> pretrain_levels;
  std::vector<double> finetune_levels;

  std::size_t size() const noexcept { return pretrain_levels.size() * finetune_levels.size(); }
};

/// The 15 x 10 grid of pre-training checkpoints (tokens seen) and fine-tuning
/// sizes (tokens) used for every dataset.
inline ExperimentGrid standard_grid() {
  return {
      {5.37e8, 1.07e9, 2.10e9, 4.19e9, 6.29e9, 1.05e10, 1.68e10, 2.31e10, 3.57e10, 5.45e10,
       7.97e10, 1.22e11, 1.80e11, 2.73e11, 2.99e11},
      {10, 30, 40, 70, 100, 170, 270, 430, 690, 1100},
  };
}

inline void validate(const RunRecord& record, std::size_t row) {
  if (!std::isfinite(record.pretrain_tokens) || record.pretrain_tokens < 0.0) {
    throw ValidationError(row, "pretrain_tokens must be finite and >= 0");
  }
  if (!std::isfinite(record.finetune_tokens) || record.finetune_tokens < 1.0) {
    throw ValidationError(row, "finetune_tokens must be finite and >= 1");
  }
  if (!std::isfinite(record.val_loss) || record.val_loss <= 0.0) {
    throw ValidationError(row, "val_loss must be finite and > 0");
  }
  if (record.epochs && (!std::isfinite(*record.epochs) || *record.epochs < 1.0)) {
    throw ValidationError(row, "epochs must be finite and >= 1");
  }
}

/// Validates every record and rejects repeated (dataset, pretrain, finetune)
/// cells unless the repeats carry distinct trial tags.
inline void validate_records(std::span<const RunRecord> records) {
  using Key = std::tuple<std::string, double, double, std::string>;
  std::set<Key> seen;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& record = records[i];
    validate(record, i + 1);
    Key key{record.dataset, record.pretrain_tokens, record.finetune_tokens,
            record.trial.value_or("")};
    if (!seen.insert(key).second) {
      throw DuplicateKeyError(i + 1, "duplicate run for dataset '" + record.dataset +
                                         "' at pretrain_tokens=" +
                                         format_double(record.pretrain_tokens) +
                                         ", finetune_tokens=" +
                                         format_double(record.finetune_tokens));
    }
  }
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line, std::size_t row) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  if (quoted) throw ParseError(row, "unterminated quoted field");
  fields.push_back(std::move(field));
  return fields;
}

inline std::string quote_csv(const std::string& text) {
  if (text.find_first_of(",\"\n\r") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline double require_number(const std::string& text, std::size_t row, const char* column) {
  const auto value = parse_double(text);
  if (!value) {
    throw ParseError(row, std::string("column '") + column + "' is not a number: '" + text + "'");
  }
  return *value;
}

}  // namespace detail

inline RecordSet read_records_csv(std::istream& in) {
  static const std::vector<std::string> kKnown = {"dataset", "pretrain_tokens",
                                                  "finetune_tokens", "val_loss",
                                                  "epochs", "trial"};
  std::string line;
  if (!std::getline(in, line)) throw ParseError(0, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

  const auto header = detail::split_csv_line(line, 0);
  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (std::find(kKnown.begin(), kKnown.end(), header[i]) == kKnown.end()) {
      throw ParseError(0, "unknown column '" + header[i] + "'");
    }
    if (!column.emplace(header[i], i).second) {
      throw ParseError(0, "repeated column '" + header[i] + "'");
    }
  }
  for (const char* required : {"dataset", "pretrain_tokens", "finetune_tokens", "val_loss"}) {
    if (!column.contains(required)) {
      throw ParseError(0, std::string("missing required column '") + required + "'");
    }
  }

  RecordSet out;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    const auto fields = detail::split_csv_line(line, row);
    if (fields.size() != header.size()) {
      throw ParseError(row, "expected " + std::to_string(header.size()) + " fields, found " +
                                std::to_string(fields.size()));
    }
    RunRecord record;
    record.dataset = fields[column.at("dataset")];
    record.pretrain_tokens =
        detail::require_number(fields[column.at("pretrain_tokens")], row, "pretrain_tokens");
    record.finetune_tokens =
        detail::require_number(fields[column.at("finetune_tokens")], row, "finetune_tokens");
    record.val_loss = detail::require_number(fields[column.at("val_loss")], row, "val_loss");
    if (auto it = column.find("epochs"); it != column.end() && !fields[it->second].empty()) {
      record.epochs = detail::require_number(fields[it->second], row, "epochs");
    }
    if (auto it = column.find("trial"); it != column.end() && !fields[it->second].empty()) {
      record.trial = fields[it->second];
    }
    validate(record, row);
    out.records.push_back(std::move(record));
  }
  validate_records(out.records);
  if (out.records.empty()) out.warnings.push_back("record file contains no data rows");
  return out;
}

inline RecordSet read_records_json(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(0, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw ParseError(0, "JSON records must be an array of objects");
  RecordSet out;
  std::size_t row = 0;
  for (const auto& item : doc) {
    ++row;
    if (!item.is_object()) throw ParseError(row, "record is not an object");
    for (const auto& [key, value] : item.items()) {
      if (key != "dataset" && key != "pretrain_tokens" && key != "finetune_tokens" &&
          key != "val_loss" && key != "epochs" && key != "trial") {
        throw ParseError(row, "unknown field '" + key + "'");
      }
    }
    auto number = [&](const char* key) {
      if (!item.contains(key) || !item.at(key).is_number()) {
        throw ParseError(row, std::string("field '") + key + "' must be a number");
      }
      return item.at(key).get<double>();
    };
    RunRecord record;
    if (!item.contains("dataset") || !item.at("dataset").is_string()) {
      throw ParseError(row, "field 'dataset' must be a string");
    }
    record.dataset = item.at("dataset").get<std::string>();
    record.pretrain_tokens = number("pretrain_tokens");
    record.finetune_tokens = number("finetune_tokens");
    record.val_loss = number("val_loss");
    if (item.contains("epochs") && !item.at("epochs").is_null()) record.epochs = number("epochs");
    if (item.contains("trial") && !item.at("trial").is_null()) {
      if (!item.at("trial").is_string()) throw ParseError(row, "field 'trial' must be a string");
      record.trial = item.at("trial").get<std::string>();
    }
    validate(record, row);
    out.records.push_back(std::move(record));
  }
  validate_records(out.records);
  if (out.records.empty()) out.warnings.push_back("record file contains no data rows");
  return out;
}

/// Reads CSV, or JSON when the path ends in ".json".
inline RecordSet load_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open record file '" + path.string() + "'");
  if (path.extension() == ".json") return read_records_json(in);
  return read_records_csv(in);
}

inline void write_records_csv(std::span<const RunRecord> records, std::ostream& out) {
  const bool any_epochs =
      std::any_of(records.begin(), records.end(), [](const auto& r) { return r.epochs.has_value(); });
  const bool any_trial =
      std::any_of(records.begin(), records.end(), [](const auto& r) { return r.trial.has_value(); });
  out << "dataset,pretrain_tokens,finetune_tokens,val_loss";
  if (any_epochs) out << ",epochs";
  if (any_trial) out << ",trial";
  out << '\n';
  for (const auto& r : records) {
    out << detail::quote_csv(r.dataset) << ',' << format_double(r.pretrain_tokens) << ','
        << format_double(r.finetune_tokens) << ',' << format_double(r.val_loss);
    if (any_epochs) out << ',' << (r.epochs ? format_double(*r.epochs) : std::string());
    if (any_trial) out << ',' << (r.trial ? detail::quote_csv(*r.trial) : std::string());
    out << '\n';
  }
}

inline nlohmann::json records_to_json(std::span<const RunRecord> records) {
  auto doc = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json item = {{"dataset", r.dataset},
                           {"pretrain_tokens", r.pretrain_tokens},
                           {"finetune_tokens", r.finetune_tokens},
                           {"val_loss", r.val_loss}};
    if (r.epochs) item["epochs"] = *r.epochs;
    if (r.trial) item["trial"] = *r.trial;
    doc.push_back(std::move(item));
  }
  return doc;
}

/// Pre-training magnitude of a record in law units: tokens_per_unit tokens
/// make one unit, plus one so that zero pre-training maps to p = 1.
inline EvalPoint to_eval_point(const RunRecord& record, double tokens_per_unit = kTokensPerStep) {
  return {record.pretrain_tokens / tokens_per_unit + 1.0, record.finetune_tokens};
}

inline std::vector<Observation> to_eval_points(std::span<const RunRecord> records,
                                               double tokens_per_unit = kTokensPerStep) {
  if (!(tokens_per_unit > 0.0)) throw InputError("tokens per pre-training unit must be > 0");
  std::vector<Observation> out;
  out.reserve(records.size());
  for (const auto& record : records) {
    out.push_back({to_eval_point(record, tokens_per_unit), record.val_loss});
  }
  return out;
}

}  // namespace xferlaw
