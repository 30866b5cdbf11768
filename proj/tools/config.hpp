#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "skillscale/mlp.hpp"

namespace skillscale::cli {

/// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "SKILLSCALE_OUT_DIR";

/// Flat run configuration. Defaults are the large reference setup.
struct CliConfig {
  double alpha = 0.6;
  int n_s = 5;
  int n_b = 32;
  int m = 3;
  double S = 5.0;
  double eta = 0.05;  // multilinear learning rate
  int width = 1000;
  double lr = 0.05;
  double init_std = 0.01;
  int batch = 4000;
  std::int64_t steps = 500000;
  Optimizer optimizer = Optimizer::sgd;
  std::optional<double> weight_decay;  // "auto": 0 for sgd, 5e-5 for adam
  std::int64_t halve_lr_every = 0;     // 0 disables the schedule
  std::int64_t measure_every = 50;
  std::int64_t eval_samples = 20000;
  DataMode data_mode = DataMode::online;
  std::int64_t D = 100000;
  std::int64_t D_c = 800;
  std::int64_t N_c = 4;
  double b2 = 1.0 / 22.0;
  std::uint64_t seed = 0;
  std::string out_dir;

  TrainConfig train_config() const;
};

/// Every key in a stable order.
std::span<const std::string_view> config_keys();

/// Defaults, with out_dir taken from the environment when set.
CliConfig default_config();

/// Applies `key=value` lines ('#' comments and blank lines allowed). `source`
/// prefixes error messages, which also carry the 1-based line number.
void apply_config_text(CliConfig& cfg, std::string_view text, std::string_view source);

/// Applies one `key=value` override.
void apply_override(CliConfig& cfg, std::string_view assignment);

/// Defaults, then the file (if any), then the overrides in order.
CliConfig parse_config(const std::optional<std::filesystem::path>& path,
                       std::span<const std::string> overrides);

/// Every key in `config_keys()` order, one `key=value` per line.
std::string to_text(const CliConfig& cfg);

}  // namespace skillscale::cli
