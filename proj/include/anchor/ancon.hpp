#pragma once

// Anchored confidence: an EMA confidence threshold selects which per-step
// predictions enter a per-instance temporal ensemble, and the ensemble is
// used as the smoothing vector for the current pseudo label.

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "anchor/matrix.hpp"
#include "anchor/model.hpp"

namespace anchor {

enum class WeightScheme { RelativeThreshold, Entropy, MaxProb };
enum class PredictionScheme { Hard, Soft };
enum class Normalization { Unnormalized, Normalized };

WeightScheme parse_weight_scheme(std::string_view name);
PredictionScheme parse_prediction_scheme(std::string_view name);
Normalization parse_normalization(std::string_view name);
std::string_view to_string(WeightScheme s);
std::string_view to_string(PredictionScheme s);
std::string_view to_string(Normalization n);

struct AnconConfig {
  double lambda = 0.3;
  double beta = 0.9;
  WeightScheme weight_scheme = WeightScheme::RelativeThreshold;
  PredictionScheme prediction = PredictionScheme::Hard;
  double temperature = 1.0;  // used by PredictionScheme::Soft only
  Normalization normalization = Normalization::Unnormalized;

  void validate() const;
};

/// EMA of batch-mean confidences, started from zero with no bias correction.
struct ThresholdState {
  double delta = 0.0;
  double beta = 0.9;
  std::size_t steps = 0;
  std::vector<double> history;  // batch-mean confidences, only when tracked
  bool track_history = false;

  static ThresholdState make(double beta, bool track_history = false);
  bool operator==(const ThresholdState&) const = default;
};

/// delta ← β·delta + (1−β)·batch_mean_conf. Throws InputError when the
/// confidence lies outside [0,1].
ThresholdState update_threshold(ThresholdState state, double batch_mean_conf);

/// Σ_{i≤m} (1−β) β^{m−i} c_i evaluated directly.
double closed_form_threshold(std::span<const double> confidences, double beta);

/// Per-step ensemble weight of one prediction.
double compute_weight(const ProbVec& pred, const ThresholdState& state, WeightScheme scheme);

/// Natural-log entropy of a distribution; zero entries contribute zero.
double entropy(std::span<const double> p);

/// Distribution a single prediction contributes to the ensemble: one-hot at
/// the argmax (hard) or the temperature softmax of the logits (soft).
ProbVec ensemble_contribution(std::span<const double> logits, PredictionScheme scheme,
                              double temperature);

/// Accumulated weighted prediction counts F (n×K) and total weights Q (n).
class EnsembleBank {
 public:
  EnsembleBank() = default;
  EnsembleBank(std::size_t instances, std::size_t classes);

  std::size_t instances() const { return counts_.rows(); }
  std::size_t classes() const { return counts_.cols(); }

  /// counts[instance] += weight·contribution; visits[instance] += weight.
  void add(std::size_t instance, const ProbVec& contribution, double weight);

  std::span<const double> counts(std::size_t instance) const;
  double visits(std::size_t instance) const;

  const Matrix& count_matrix() const { return counts_; }
  const std::vector<double>& visit_vector() const { return visits_; }

  /// Rebuilds a bank from raw tables; throws InputError on inconsistent shapes.
  static EnsembleBank from_tables(Matrix counts, std::vector<double> visits);

  bool operator==(const EnsembleBank&) const = default;

 private:
  void check_index(std::size_t instance) const;

  Matrix counts_;
  std::vector<double> visits_;
};

/// Adds one prediction to the bank. For the soft scheme the temperature is
/// applied to log(pred), which equals the logits up to a constant.
void ensemble_update(EnsembleBank& bank, std::size_t instance, const ProbVec& pred, double weight,
                     PredictionScheme scheme, double temperature = 1.0);

/// counts / visits, or nullopt when the instance has no weight yet.
std::optional<ProbVec> ensemble_distribution(const EnsembleBank& bank, std::size_t instance);

/// (1−λ)·onehot(pseudo) + λ·bank row (raw counts when unnormalized,
/// normalized distribution otherwise). Instances without history get the
/// plain one-hot.
SoftTarget smooth_target(ClassIndex pseudo, const EnsembleBank& bank, std::size_t instance,
                         double lambda, Normalization normalization);

}  // namespace anchor
