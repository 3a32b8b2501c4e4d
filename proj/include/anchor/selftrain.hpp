#pragma once

// Self-training engine. One outer iteration per minibatch: predictions on the
// batch update the strategy state (threshold, ensemble bank, ELR targets),
// targets are built, then inner_steps SGD steps are taken on those targets.
// Evaluation records and checkpoints are produced once per epoch.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "anchor/ancon.hpp"
#include "anchor/data.hpp"
#include "anchor/elr.hpp"
#include "anchor/metrics.hpp"
#include "anchor/model.hpp"

namespace anchor {

enum class Strategy { Vanilla, Ancon, Elr, Gce, GceAncon, ElrAsAux };

Strategy parse_strategy(std::string_view name);
std::string_view to_string(Strategy s);
bool uses_ensemble(Strategy s);

struct AdaptConfig {
  Strategy strategy = Strategy::Vanilla;
  std::size_t epochs = 50;
  double lr = 0.05;
  std::size_t batch_size = 64;
  std::size_t inner_steps = 1;
  std::uint64_t seed = 0;
  AnconConfig ancon;
  double elr_decay = kDefaultElrDecay;
  double elr_lambda = 3.0;
  double gce_q = kDefaultGceQ;
  std::size_t ece_bins = kDefaultEceBins;

  void validate() const;
};

struct RunRecord {
  std::size_t epoch = 0;  // 0-based pass index
  double train_loss = 0.0;
  std::optional<double> holdout_accuracy;
  std::optional<double> target_accuracy;  // adaptation split, reporting only
  std::optional<double> ece;              // holdout
  double infomax = 0.0;
  double ent = 0.0;
  double corr_c = 0.0;
  double mean_confidence = 0.0;
  double threshold_delta = 0.0;
  double marginal_tv = 0.0;  // pseudo-label marginal shift vs previous epoch

  bool operator==(const RunRecord&) const = default;
};

double criterion_score(const RunRecord& record, Criterion criterion);
/// Position in `records` of the selected checkpoint.
std::size_t select_checkpoint(std::span<const RunRecord> records, Criterion criterion);

/// Everything needed to continue a run after an epoch boundary.
struct AdaptState {
  LinearParams params;
  EnsembleBank bank;
  ThresholdState threshold;
  ElrState elr;
  std::size_t epochs_done = 0;
  std::size_t steps_done = 0;
  std::vector<double> last_marginal;

  bool operator==(const AdaptState&) const = default;
};

struct AdaptResult {
  LinearParams final_params;
  std::vector<RunRecord> records;
  std::vector<LinearParams> checkpoints;  // one per record
};

/// Called after each epoch with the post-epoch state; return false to stop.
using EpochHook = std::function<bool(const AdaptState&, const RunRecord&)>;

AdaptState initial_state(const Dataset& train, const LinearParams& init, const AdaptConfig& config);

AdaptResult run_adaptation(const Dataset& train, const Dataset& holdout, const LinearParams& init,
                           const AdaptConfig& config, const EpochHook& hook = {});

/// Continues from a saved state until config.epochs passes are complete.
/// Returned records and checkpoints cover only the newly run epochs.
AdaptResult resume_adaptation(const Dataset& train, const Dataset& holdout, AdaptState state,
                              const AdaptConfig& config, const EpochHook& hook = {});

/// Per-minibatch targets for the configured strategy. Mutates `state`
/// (threshold, bank, ELR targets) the way one outer iteration does and
/// returns the targets plus, for ELR-style strategies, the auxiliary rows.
struct StepTargets {
  std::vector<SoftTarget> targets;
  std::vector<std::vector<double>> aux_rows;  // empty unless an auxiliary loss applies
};
StepTargets build_targets(const Minibatch& batch, AdaptState& state, const AdaptConfig& config);

RunRecord evaluate_epoch(const LinearParams& params, const Dataset& train, const Dataset& holdout,
                         std::size_t epoch, double train_loss, const AdaptState& state,
                         std::size_t ece_bins, std::vector<double>* marginal_out);

struct SourceConfig {
  std::size_t epochs = 50;
  double lr = 0.1;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
};

/// Supervised cross-entropy training from zero weights.
LinearParams train_source(const Dataset& labeled, const SourceConfig& config,
                          std::vector<std::string>* warnings = nullptr);

}  // namespace anchor
