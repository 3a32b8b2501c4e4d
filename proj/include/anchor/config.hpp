#pragma once

// Experiment configuration file.
//
// Plain text, one `key = value` per line, `#` starts a comment. The first
// setting must be `format = 1`. Lists are comma-separated. Unknown keys,
// duplicate keys and malformed values raise ConfigError. Every key and its
// default is listed in docs/config.md.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "anchor/ancon.hpp"
#include "anchor/data.hpp"
#include "anchor/selftrain.hpp"
#include "anchor/theory.hpp"

namespace anchor {

inline constexpr int kConfigFormat = 1;
inline constexpr const char* kOutputRootEnv = "ANCHOR_OUTPUT_ROOT";

struct ExperimentConfig {
  std::string output_dir;  // empty: $ANCHOR_OUTPUT_ROOT or ./anchor-out

  // Synthetic data.
  std::size_t classes = 5;
  std::size_t dim = 20;
  std::size_t source_n_per_class = 200;
  std::size_t target_n_per_class = 200;
  double spread = 1.0;
  double radius = 3.0;
  std::uint64_t data_seed = 0;
  ShiftKind shift_kind = ShiftKind::Rotation;
  std::vector<int> intensities = {1, 2, 3, 4, 5};
  double angle_per_level = 18.0;
  double offset_per_level = 0.6;
  std::vector<double> noise_sigmas = {0.3, 0.6, 0.9, 1.2, 1.5};
  double log_scale_per_level = 0.15;
  double holdout_fraction = 0.1;

  // External feature tables replace the generator when set.
  std::string source_csv;
  std::string target_csv;
  bool target_has_labels = true;
  bool csv_header = false;

  // Source training.
  std::size_t source_epochs = 50;
  double source_lr = 0.1;
  std::size_t source_batch_size = 32;
  std::uint64_t source_seed = 0;

  // Adaptation grid.
  std::vector<Strategy> strategies = {Strategy::Vanilla, Strategy::Ancon};
  std::vector<double> lambdas = {0.3};
  std::vector<double> betas = {0.9};
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  std::vector<double> elr_lambdas = {3.0};
  std::size_t epochs = 50;
  double lr = 0.05;
  std::size_t batch_size = 64;
  std::size_t inner_steps = 1;
  WeightScheme weight_scheme = WeightScheme::RelativeThreshold;
  PredictionScheme prediction = PredictionScheme::Hard;
  double temperature = 1.0;
  Normalization normalization = Normalization::Unnormalized;
  double elr_decay = kDefaultElrDecay;
  double gce_q = kDefaultGceQ;
  std::size_t ece_bins = kDefaultEceBins;

  // Verification suite.
  std::uint64_t verify_seed = 0;
  std::size_t verify_tail_configs = 200;
  std::size_t verify_mc_trials = 100000;
  std::size_t verify_ensemble_trials = 100000;
  std::size_t verify_identity_sets = 100;
  double l_gamma = kDefaultLGamma;

  void validate() const;
};

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every key in a fixed order with its current value; parse_config(to_text(c))
/// reproduces c.
std::string config_to_text(const ExperimentConfig& config);
/// FNV-1a of the canonical text, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

/// Applies one `key = value` assignment (as on a config line).
void set_config_value(ExperimentConfig& config, std::string_view key, std::string_view value);

std::filesystem::path resolve_output_dir(const ExperimentConfig& config);

}  // namespace anchor
