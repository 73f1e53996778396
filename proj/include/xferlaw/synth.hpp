#pragma once

// Synthetic experiment generator: evaluates a known law on a grid and adds
// Gaussian noise to the log-loss. Each grid cell draws from its own stream
// seeded by (seed, cell index).

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "xferlaw/error.hpp"
#include "xferlaw/law.hpp"
#include "xferlaw/records.hpp"

namespace xferlaw {

struct SynthSpec {
  LawParams params;
  LawForm form;
  ExperimentGrid grid = standard_grid();
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  std::string dataset = "synthetic";
  std::optional<double> epochs;
  double tokens_per_unit = kTokensPerStep;
};

inline std::mt19937_64 cell_engine(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

inline std::vector<RunRecord> generate(const SynthSpec& spec) {
  if (!(spec.noise_sigma >= 0.0) || !std::isfinite(spec.noise_sigma)) {
    throw InputError("noise_sigma must be finite and >= 0");
  }
  std::vector<RunRecord> out;
  out.reserve(spec.grid.size());
  std::uint64_t index = 0;
  for (double pretrain : spec.grid.pretrain_levels) {
    for (double finetune : spec.grid.finetune_levels) {
      RunRecord record;
      record.dataset = spec.dataset;
      record.pretrain_tokens = pretrain;
      record.finetune_tokens = finetune;
      record.epochs = spec.epochs;
      const double clean =
          evaluate(spec.form, spec.params, to_eval_point(record, spec.tokens_per_unit));
      if (spec.noise_sigma == 0.0) {
        record.val_loss = clean;
      } else {
        auto engine = cell_engine(spec.seed, index);
        std::normal_distribution<double> noise(0.0, spec.noise_sigma);
        record.val_loss = std::exp(std::log(clean) + noise(engine));
      }
      if (!(record.val_loss > 0.0) || !std::isfinite(record.val_loss)) {
        throw DomainError("generated loss is not positive and finite");
      }
      out.push_back(std::move(record));
      ++index;
    }
  }
  return out;
}

}  // namespace xferlaw
