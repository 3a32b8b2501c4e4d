#pragma once

// Experiment harness behind the command-line tool: benchmark construction,
// the adaptation grid with resumable run directories, verification and
// report aggregation.
//
// Adapt output layout:
//   <root>/manifest.json
//   <root>/source/params.txt
//   <root>/summary.csv
//   <root>/i<intensity>/<run name>/{config.txt, run.json, records.jsonl,
//                                   checkpoints/epoch_NNNN.txt, state/, summary.json}

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "anchor/config.hpp"
#include "anchor/data.hpp"
#include "anchor/model.hpp"
#include "anchor/selftrain.hpp"

namespace anchor {

std::string tool_version();

/// Seeded datasets shared by every run of one configuration.
struct TargetSplit {
  int intensity = 0;
  Dataset train;
  Dataset holdout;
  std::optional<ShiftSpec> shift;  // absent for external tables
};

struct Benchmark {
  Dataset source_train;
  Dataset source_test;
  std::vector<TargetSplit> targets;
};

Benchmark build_benchmark(const ExperimentConfig& config);
ShiftSpec shift_for(const ExperimentConfig& config, int intensity);
SourceConfig source_config(const ExperimentConfig& config);

/// One cell of the adaptation grid.
struct RunSpec {
  int intensity = 0;
  Strategy strategy = Strategy::Vanilla;
  double lambda = 0.3;
  double beta = 0.9;
  double elr_lambda = 3.0;
  std::uint64_t seed = 0;

  std::string name() const;
};

/// strategies × λ × β × ELR weights × seeds × intensities. Strategies that
/// ignore a hyperparameter take only its first value.
std::vector<RunSpec> enumerate_runs(const ExperimentConfig& config);
AdaptConfig adapt_config(const ExperimentConfig& config, const RunSpec& spec);

struct RunSummary {
  RunSpec spec;
  std::size_t epochs = 0;
  std::optional<double> final_accuracy;   // adaptation split
  std::optional<double> final_holdout_accuracy;
  std::optional<double> final_ece;
  std::optional<double> peak_accuracy;
  std::size_t peak_epoch = 0;
  struct Selected {
    std::size_t epoch = 0;
    std::optional<double> accuracy;
    std::optional<double> holdout_accuracy;
    std::optional<double> ece;
  };
  Selected infomax, ent, corr_c;
};

RunSummary summarize_run(const RunSpec& spec, const std::vector<RunRecord>& records);
nlohmann::ordered_json summary_to_json(const RunSummary& summary);
RunSummary summary_from_json(const nlohmann::json& j);

struct AdaptOptions {
  /// Stop each run once this many epochs are on disk (simulates a kill).
  std::optional<std::size_t> stop_after;
  std::size_t jobs = 1;
};

struct AdaptOutcome {
  std::vector<RunSummary> completed;
  std::size_t incomplete = 0;
  std::vector<std::string> warnings;
};

/// Runs or resumes one grid cell inside `dir`. Returns nullopt when stopped early.
std::optional<RunSummary> execute_run(const ExperimentConfig& config, const RunSpec& spec,
                                      const TargetSplit& target, const LinearParams& source,
                                      const std::filesystem::path& dir,
                                      std::optional<std::size_t> stop_after = std::nullopt);

void cmd_generate(const ExperimentConfig& config, const std::filesystem::path& out);
/// Trains (or reloads) the source model under `out`/source.
LinearParams cmd_train_source(const ExperimentConfig& config, const std::filesystem::path& out,
                              std::vector<std::string>* warnings = nullptr);
AdaptOutcome cmd_adapt(const ExperimentConfig& config, const std::filesystem::path& out,
                       const AdaptOptions& options = {});

struct VerifyOutcome {
  std::size_t checks = 0;
  std::size_t failures = 0;
};
/// `fault` = "xi-sign" flips the sign of ξ inside the suite.
VerifyOutcome cmd_verify(const ExperimentConfig& config, const std::filesystem::path& out,
                         const std::string& fault = {});

struct ReportOutcome {
  std::size_t runs = 0;
  std::size_t groups = 0;
};
/// Aggregates every summary.json found under the given directories.
ReportOutcome cmd_report(const std::vector<std::filesystem::path>& inputs,
                         const std::filesystem::path& out);

}  // namespace anchor
