#pragma once

// `key = value` configuration files. Blank lines and lines starting with '#'
// are ignored; unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "mmrec/model.hpp"

namespace mmrec {

enum class TrainMode { pretrain, finetune };

struct TrainConfig {
  double lr = 1e-4;
  int batch_size = 64;
  int epochs = 40;
  int patience = 10;
  std::uint64_t seed = 0;
  double clip_norm = 5.0;  // <= 0 disables clipping
  TrainMode mode = TrainMode::finetune;
  double ndcg_threshold = 0.5;  // for the epochs-to-threshold report
  int kcore = 5;

  void validate() const;
};

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
};

RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);
std::string format_config(const RunConfig& cfg);
std::string format_model_config(const ModelConfig& cfg);

// Applies one `key = value` pair; throws ParseError for unknown keys or
// malformed values.
void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value);

std::string_view train_mode_name(TrainMode m);

}  // namespace mmrec
