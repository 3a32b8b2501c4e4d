#pragma once

// Numerical checks of the ensemble-error and neighborhood-size guarantees:
// the binomial Chernoff tail, a Monte-Carlo majority-vote simulation, and the
// biased-gradient quantities λ†, N(λ), g^E, g^KL, g^C on linear instances
// with a numerically solved optimum θ*.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "anchor/ancon.hpp"
#include "anchor/data.hpp"
#include "anchor/matrix.hpp"
#include "anchor/model.hpp"

namespace anchor {

/// 2z − 1 − log(2z) on [0.5, 1].
double xi(double z);

/// exp(o·(q − p̄ − q·log(q/p̄))) for independent Bernoulli(p_i), q < p̄.
double chernoff_tail_bound(std::span<const double> success_probs, double q);

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Seeded Monte-Carlo estimate of P(S_o ≤ q·o).
McEstimate mc_tail_estimate(std::span<const double> success_probs, double q, std::size_t trials,
                            std::uint64_t seed);

/// Majority-vote error of a hard temporal ensemble fed one prediction per
/// confident step, where step i is correct with probability step_accuracy[i].
/// Wrong votes all go to a single competing class and ties count as errors,
/// which is the least favourable reading. Runs through EnsembleBank.
McEstimate simulate_ensemble_error(std::span<const double> step_accuracy, std::size_t classes,
                                   std::size_t trials, std::uint64_t seed);

struct SolveOptions {
  double ridge = 1e-6;
  double tol = 1e-8;
  std::size_t max_iterations = 500000;
};

/// Minimizer of mean CE + ridge·‖θ‖²/2 by accelerated full-batch gradient
/// descent with adaptive restart. Throws NumericError without convergence.
LinearParams solve_theta_star(const Dataset& labeled, const SolveOptions& options = {});
/// Gradient of the objective solve_theta_star minimizes.
Matrix full_gradient(const LinearParams& params, const Dataset& labeled, double ridge);

/// ∇ of the minibatch CE against the pseudo labels of `theta_m`, at `theta`.
Matrix grad_tilde_l(const Minibatch& batch, const LinearParams& theta, const LinearParams& theta_m);

/// (1/b) Σ_i (f̄(x_i) − onehot(Ŷ(x_i; θ_m))) ⊗ x_i. Rows with no ensemble
/// history contribute zero.
Matrix hat_g(const Minibatch& batch, const LinearParams& theta_m, const EnsembleBank& bank);

struct LambdaDagger {
  double value = 0.0;
  bool degenerate = false;  // every ĝ sample was zero
};

/// E⟨u, v⟩ / (E‖v‖² + (2/Lγ)‖E v‖²) for u = ∇l̃_ξ(θ*), v = ĝ_ξ.
LambdaDagger lambda_dagger(std::span<const Matrix> grad_star_samples,
                           std::span<const Matrix> hat_g_samples, double l_gamma);

/// λ²‖E v‖² + (Lγ/2)·E‖u − λ v‖².
double neighborhood_n(double lambda, std::span<const Matrix> grad_star_samples,
                      std::span<const Matrix> hat_g_samples, double l_gamma);

/// (E⟨u, v⟩)² / ((E‖v‖² + (2/Lγ)‖E v‖²)·E‖u‖²), which equals 1 − N(λ†)/N(0).
double reduction_ratio(std::span<const Matrix> grad_star_samples,
                       std::span<const Matrix> hat_g_samples, double l_gamma);

/// Pseudo-label error rate E[1(Ŷ ≠ Y)].
double g_error(const LinearParams& params, const Dataset& labeled);

inline constexpr double kKlSmoothing = 1e-12;

/// Mean KL(f(x; θ*) ‖ f̄(x)) over rows with ensemble history; f̄ is smoothed
/// as (f̄ + ε)/(1 + Kε).
double g_kl(const LinearParams& theta_star, const EnsembleBank& bank, const Dataset& dataset);

/// ‖E[f̄] − E[onehot(Ŷ(θ_m))]‖², rows without history using the one-hot.
double g_c(const EnsembleBank& bank, const LinearParams& theta_m, const Dataset& dataset);

/// A small convex instance: labeled data, its optimum θ*, an iterate θ_m,
/// the ensemble bank accumulated while self-training to θ_m, and minibatch
/// samples of ∇l̃_ξ(θ*) and ĝ_ξ.
struct TheoryInstance {
  Dataset dataset;
  LinearParams theta_star;
  LinearParams theta_m;
  EnsembleBank bank;
  double l_gamma = 2.0;
  std::vector<Matrix> grad_star_samples;
  std::vector<Matrix> hat_g_samples;
};

struct TheoryInstanceOptions {
  std::size_t classes = 3;
  std::size_t dim = 4;
  std::size_t n_per_class = 60;
  double spread = 1.2;
  int shift_intensity = 3;
  std::size_t adapt_epochs = 5;
  std::size_t batch_size = 16;
  std::size_t samples = 64;
  double l_gamma = 2.0;
  std::uint64_t seed = 0;
};

/// Builds an instance by training on a source domain, shifting it, running
/// anchored self-training for a few epochs, and drawing minibatch samples.
TheoryInstance make_theory_instance(const TheoryInstanceOptions& options);

inline constexpr double kDefaultLGamma = 2.0;

/// One row of a verification report.
struct VerifyCheck {
  std::string config_id;
  std::string quantity;
  double value = 0.0;
  double bound = 0.0;
  bool pass = false;
};

struct VerifyOptions {
  std::uint64_t seed = 0;
  std::size_t tail_configs = 200;
  std::size_t mc_trials = 100000;
  std::size_t ensemble_trials = 100000;
  std::size_t identity_sets = 100;
  double l_gamma = kDefaultLGamma;
  /// Replaces xi() inside the suite; used to confirm the suite detects a
  /// broken implementation.
  std::function<double(double)> xi_override;
};

std::vector<VerifyCheck> run_verification(const VerifyOptions& options);
std::string verification_csv(std::span<const VerifyCheck> checks);

}  // namespace anchor
