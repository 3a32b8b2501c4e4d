#pragma once

// Linear softmax classifier f_k(x) = exp(Θ_kᵀx) / Σ_i exp(Θ_iᵀx) with
// soft-target cross-entropy and generalized cross-entropy losses, analytic
// gradients and plain SGD.

#include <cstddef>
#include <span>
#include <vector>

#include "anchor/matrix.hpp"

namespace anchor {

using ClassIndex = std::size_t;

/// Parameter matrix of shape d×K; column k holds Θ_k.
class LinearParams {
 public:
  LinearParams() = default;
  LinearParams(std::size_t dim, std::size_t classes);
  explicit LinearParams(Matrix weights);

  std::size_t dim() const { return weights_.rows(); }
  std::size_t classes() const { return weights_.cols(); }

  Matrix& weights() { return weights_; }
  const Matrix& weights() const { return weights_; }

  bool operator==(const LinearParams&) const = default;

 private:
  Matrix weights_;
};

/// A point on the probability simplex.
class ProbVec {
 public:
  ProbVec() = default;
  /// Throws InputError unless entries lie in [0,1] and sum to 1 within 1e-9.
  explicit ProbVec(std::vector<double> probs);

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t k) const { return probs_[k]; }
  std::span<const double> values() const { return probs_; }

  static ProbVec uniform(std::size_t classes);
  static ProbVec one_hot(std::size_t classes, ClassIndex k);

  bool operator==(const ProbVec&) const = default;

 private:
  struct Unchecked {};
  ProbVec(std::vector<double> probs, Unchecked) : probs_(std::move(probs)) {}
  friend ProbVec softmax(std::span<const double> logits);

  std::vector<double> probs_;
};

/// Nonnegative target vector whose total mass need not be one.
class SoftTarget {
 public:
  SoftTarget() = default;
  /// Throws InputError on negative entries or zero mass.
  explicit SoftTarget(std::vector<double> values);
  /// Uses a declared mass, which must match the entry sum within 1e-9 relative.
  SoftTarget(std::vector<double> values, double mass);

  static SoftTarget one_hot(std::size_t classes, ClassIndex k);
  static SoftTarget from(const ProbVec& p);

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t k) const { return values_[k]; }
  std::span<const double> values() const { return values_; }
  double mass() const { return mass_; }

  bool operator==(const SoftTarget&) const = default;

 private:
  std::vector<double> values_;
  double mass_ = 0.0;
};

/// b feature rows plus the dataset indices they were drawn from.
struct Minibatch {
  Matrix inputs;
  std::vector<std::size_t> indices;

  std::size_t size() const { return inputs.rows(); }
};

std::vector<double> logits(const LinearParams& params, std::span<const double> x);
ProbVec softmax(std::span<const double> logits);
ProbVec temperature_softmax(std::span<const double> logits, double temperature);
ProbVec softmax_forward(const LinearParams& params, std::span<const double> x);

double confidence(const ProbVec& p);
/// Argmax; ties go to the lowest index.
ClassIndex pseudo_label(const ProbVec& p);

double ce_soft_loss(const ProbVec& p, const SoftTarget& t);
double gce_loss(const ProbVec& p, const SoftTarget& t, double q);

// Per-row loss gradients with respect to the logits.
std::vector<double> ce_logit_grad(const ProbVec& p, const SoftTarget& t);
std::vector<double> gce_logit_grad(const ProbVec& p, const SoftTarget& t, double q);

/// (1/b) Σ_i x_i ⊗ g_i for per-row logit gradients g_i.
Matrix accumulate_gradient(const Matrix& inputs, std::span<const std::vector<double>> logit_grads,
                           std::size_t classes);

/// Gradient of the mean soft-target cross-entropy over the batch:
/// (1/b) Σ_i (mass_i·f(x_i) − t_i) ⊗ x_i.
Matrix grad_linear_ce(const LinearParams& params, const Minibatch& batch,
                      std::span<const SoftTarget> targets);
Matrix grad_linear_gce(const LinearParams& params, const Minibatch& batch,
                       std::span<const SoftTarget> targets, double q);

double mean_ce_loss(const LinearParams& params, const Minibatch& batch,
                    std::span<const SoftTarget> targets);
double mean_gce_loss(const LinearParams& params, const Minibatch& batch,
                     std::span<const SoftTarget> targets, double q);

LinearParams sgd_step(const LinearParams& params, const Matrix& grad, double lr);

/// Max relative discrepancy between grad_linear_ce and a central-difference
/// gradient of mean_ce_loss. Entries where both gradients are below
/// kFiniteDiffFloor in magnitude are compared on an absolute scale.
double finite_diff_check(const LinearParams& params, const Minibatch& batch,
                         std::span<const SoftTarget> targets, double eps);

inline constexpr double kLogClamp = 1e-12;
inline constexpr double kFiniteDiffFloor = 1e-4;
inline constexpr double kDefaultGceQ = 0.8;

}  // namespace anchor
