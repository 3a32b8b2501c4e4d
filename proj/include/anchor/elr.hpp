#pragma once

// Early-learning regularization: a per-instance EMA of past soft predictions
// and the auxiliary loss log(1 − ⟨f, target⟩) that rewards agreement with it.

#include <cstddef>
#include <span>
#include <vector>

#include "anchor/matrix.hpp"
#include "anchor/model.hpp"

namespace anchor {

inline constexpr double kDefaultElrDecay = 0.7;
inline constexpr double kElrClamp = 1e-8;

class ElrState {
 public:
  ElrState() = default;
  ElrState(std::size_t instances, std::size_t classes, double decay = kDefaultElrDecay);

  double decay() const { return decay_; }
  std::size_t instances() const { return targets_.rows(); }
  std::size_t classes() const { return targets_.cols(); }

  std::span<const double> target(std::size_t instance) const;
  const Matrix& targets() const { return targets_; }

  /// row ← decay·row + (1−decay)·pred
  void update(std::size_t instance, const ProbVec& pred);

  static ElrState from_table(Matrix targets, double decay);

  bool operator==(const ElrState&) const = default;

 private:
  void check_index(std::size_t instance) const;

  Matrix targets_;
  double decay_ = kDefaultElrDecay;
};

/// log(1 − ⟨pred, target⟩) with the argument clamped below at 1e-8.
double elr_loss(const ProbVec& pred, std::span<const double> target_row);

/// Gradient of elr_loss with respect to the logits, target held constant.
/// Zero where the clamp is active.
std::vector<double> elr_logit_grad(const ProbVec& pred, std::span<const double> target_row);

}  // namespace anchor
