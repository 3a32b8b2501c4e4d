#pragma once

// Labeled/unlabeled feature tables, a Gaussian-cluster source generator, a
// desk-scale covariate-shift ladder and CSV ingestion.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "anchor/matrix.hpp"
#include "anchor/model.hpp"

namespace anchor {

struct Dataset {
  Matrix features;                                 // n×d
  std::optional<std::vector<ClassIndex>> labels;  // n entries in [0, classes)
  std::size_t classes = 0;
  double support_bound = 0.0;  // max row norm
  std::string provenance;

  std::size_t size() const { return features.rows(); }
  std::size_t dim() const { return features.cols(); }
  bool labeled() const { return labels.has_value(); }

  /// Rows at the given positions, labels and provenance carried along.
  Dataset subset(const std::vector<std::size_t>& rows) const;
  /// Minibatch over the given row positions; indices are the positions.
  Minibatch batch(const std::vector<std::size_t>& rows) const;

  bool operator==(const Dataset&) const = default;
};

double max_row_norm(const Matrix& features);

/// Infers K = max(label)+1 (at least 2) and recomputes the support bound.
Dataset make_dataset(Matrix features, std::optional<std::vector<ClassIndex>> labels,
                     std::string provenance, std::size_t classes = 0);

struct ClusterSpec {
  std::size_t classes = 5;
  std::size_t dim = 20;
  std::size_t n_per_class = 200;
  double spread = 1.0;  // per-coordinate standard deviation
  double radius = 3.0;  // norm of every cluster mean
  std::uint64_t seed = 0;           // fixes the cluster means
  std::uint64_t sample_stream = 0;  // independent draws around the same means
};

/// K isotropic Gaussian clusters whose means are seeded random directions
/// scaled to the given radius. Rows are ordered by class.
Dataset gen_clusters(const ClusterSpec& spec);
Dataset gen_clusters(std::size_t classes, std::size_t dim, std::size_t n_per_class, double spread,
                     std::uint64_t seed);

enum class ShiftKind { Rotation, Translation, GaussianNoise, FeatureScale };

ShiftKind parse_shift_kind(std::string_view name);
std::string_view to_string(ShiftKind kind);

struct ShiftSpec {
  ShiftKind kind = ShiftKind::Rotation;
  int intensity = 1;  // 0 is the identity, 1..5 the ladder
  std::uint64_t seed = 0;
  double angle_per_level_deg = 18.0;
  double offset_per_level = 0.6;
  std::vector<double> noise_sigmas = {0.3, 0.6, 0.9, 1.2, 1.5};
  double log_scale_per_level = 0.15;

  void validate() const;
};

/// Transforms features only; labels are copied unchanged.
Dataset apply_shift(const Dataset& dataset, const ShiftSpec& spec);

/// Seeded shuffle, then the first round(fraction·n) shuffled rows become the
/// holdout. Returns (train, holdout).
std::pair<Dataset, Dataset> split_holdout(const Dataset& dataset, double fraction,
                                          std::uint64_t seed);

/// Rescales rows whose norm exceeds the bound onto the ball of that radius.
Dataset clip_to_norm(const Dataset& dataset, double bound);

/// Comma-separated rows; with labels, the last column is an integer class.
Dataset load_csv(const std::filesystem::path& path, bool has_labels, bool has_header = false);
Dataset parse_csv(std::string_view text, bool has_labels, bool has_header = false,
                  std::string provenance = "<memory>");
void write_csv(const std::filesystem::path& path, const Dataset& dataset);
std::string to_csv(const Dataset& dataset);

/// Mean Euclidean distance between corresponding rows.
double mean_displacement(const Dataset& a, const Dataset& b);

/// Deterministic 0..n-1 permutation for a seed.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

}  // namespace anchor
