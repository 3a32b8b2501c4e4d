#pragma once

// Accuracy, expected calibration error and the unsupervised checkpoint
// selection scores (InfoMax, marginal entropy, class correlation).

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "anchor/data.hpp"
#include "anchor/matrix.hpp"
#include "anchor/model.hpp"

namespace anchor {

struct PredictionTable {
  Matrix probs;  // n×K, rows on the simplex
  std::optional<std::vector<ClassIndex>> labels;

  std::size_t size() const { return probs.rows(); }
  std::size_t classes() const { return probs.cols(); }
};

PredictionTable predict(const LinearParams& params, const Dataset& dataset);

double accuracy(const PredictionTable& table);
/// Accuracy restricted to rows of each true class; NaN for absent classes.
std::vector<double> per_class_accuracy(const PredictionTable& table);

inline constexpr std::size_t kDefaultEceBins = 10;

/// Σ_g (|B_g|/n)·|acc(B_g) − conf(B_g)| over bins [g/G, (g+1)/G), with a
/// confidence of exactly 1 placed in the last bin.
double ece(const PredictionTable& table, std::size_t bins = kDefaultEceBins);
std::size_t ece_bin(double confidence, std::size_t bins);

double infomax(const PredictionTable& table);
double ent_score(const PredictionTable& table);
/// Mean |Ĉ_ij| over i≠j for Ĉ = C/(‖C‖_F/√K), C = Σ_n f(x_n) f(x_n)ᵀ.
double corr_c(const PredictionTable& table);

double mean_confidence(const PredictionTable& table);
/// Pseudo-label class frequencies.
std::vector<double> pseudo_label_marginal(const PredictionTable& table);
double total_variation(std::span<const double> p, std::span<const double> q);

enum class Criterion { InfoMax, Ent, CorrC };
Criterion parse_criterion(std::string_view name);
std::string_view to_string(Criterion c);

/// argmax for InfoMax, argmin otherwise; ties go to the earliest index.
std::size_t select_checkpoint(std::span<const double> scores, Criterion criterion);

}  // namespace anchor
