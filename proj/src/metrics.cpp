#include "anchor/metrics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "anchor/ancon.hpp"
#include "anchor/error.hpp"

namespace anchor {

namespace {

const std::vector<ClassIndex>& require_labels(const PredictionTable& table) {
  if (!table.labels) throw InputError("metric requires labels");
  if (table.labels->size() != table.size()) throw InputError("label count mismatch");
  return *table.labels;
}

ClassIndex row_argmax(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < row.size(); ++k)
    if (row[k] > row[best]) best = k;
  return best;
}

std::vector<double> column_mean(const Matrix& m) {
  std::vector<double> mean(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t k = 0; k < r.size(); ++k) mean[k] += r[k];
  }
  if (m.rows() > 0)
    for (double& v : mean) v /= static_cast<double>(m.rows());
  return mean;
}

}  // namespace

PredictionTable predict(const LinearParams& params, const Dataset& dataset) {
  PredictionTable table;
  table.probs = Matrix(dataset.size(), params.classes());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const ProbVec p = softmax_forward(params, dataset.features.row(i));
    std::copy(p.values().begin(), p.values().end(), table.probs.row(i).begin());
  }
  table.labels = dataset.labels;
  return table;
}

double accuracy(const PredictionTable& table) {
  const auto& ys = require_labels(table);
  if (table.size() == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < table.size(); ++i)
    if (row_argmax(table.probs.row(i)) == ys[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(table.size());
}

std::vector<double> per_class_accuracy(const PredictionTable& table) {
  const auto& ys = require_labels(table);
  std::vector<double> hits(table.classes(), 0.0), totals(table.classes(), 0.0);
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (ys[i] >= table.classes()) throw InputError("label out of range");
    totals[ys[i]] += 1.0;
    if (row_argmax(table.probs.row(i)) == ys[i]) hits[ys[i]] += 1.0;
  }
  std::vector<double> out(table.classes());
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = totals[k] > 0.0 ? hits[k] / totals[k] : std::numeric_limits<double>::quiet_NaN();
  return out;
}

std::size_t ece_bin(double confidence, std::size_t bins) {
  const double g_count = static_cast<double>(bins);
  auto g = static_cast<std::size_t>(std::max(0.0, std::floor(confidence * g_count)));
  // Correct rounding in confidence·G against the exact edges g/G.
  if (g > 0 && static_cast<double>(g) / g_count > confidence) --g;
  if (g + 1 < bins && static_cast<double>(g + 1) / g_count <= confidence) ++g;
  return std::min(g, bins - 1);
}

double ece(const PredictionTable& table, std::size_t bins) {
  if (bins < 1) throw ParameterError("ece: bin count must be >= 1");
  const auto& ys = require_labels(table);
  if (table.size() == 0) return 0.0;
  std::vector<double> count(bins, 0.0), conf(bins, 0.0), acc(bins, 0.0);
  for (std::size_t i = 0; i < table.size(); ++i) {
    auto row = table.probs.row(i);
    const ClassIndex pred = row_argmax(row);
    const double c = row[pred];
    const std::size_t g = ece_bin(c, bins);
    count[g] += 1.0;
    conf[g] += c;
    if (pred == ys[i]) acc[g] += 1.0;
  }
  double total = 0.0;
  const double n = static_cast<double>(table.size());
  for (std::size_t g = 0; g < bins; ++g) {
    if (count[g] == 0.0) continue;
    total += (count[g] / n) * std::abs(acc[g] / count[g] - conf[g] / count[g]);
  }
  return total;
}

double ent_score(const PredictionTable& table) {
  return entropy(column_mean(table.probs));
}

double infomax(const PredictionTable& table) {
  if (table.size() == 0) return 0.0;
  double cond = 0.0;
  for (std::size_t i = 0; i < table.size(); ++i) cond += entropy(table.probs.row(i));
  cond /= static_cast<double>(table.size());
  return ent_score(table) - cond;
}

double corr_c(const PredictionTable& table) {
  const std::size_t K = table.classes();
  Matrix c(K, K, 0.0);
  for (std::size_t n = 0; n < table.size(); ++n) {
    auto f = table.probs.row(n);
    for (std::size_t i = 0; i < K; ++i)
      for (std::size_t j = 0; j < K; ++j) c(i, j) += f[i] * f[j];
  }
  const double fro = frobenius_norm(c);
  if (fro == 0.0 || K < 2) return 0.0;
  const double scale = std::sqrt(static_cast<double>(K)) / fro;
  double off = 0.0;
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t j = 0; j < K; ++j)
      if (i != j) off += std::abs(c(i, j) * scale);
  return off / static_cast<double>(K * (K - 1));
}

double mean_confidence(const PredictionTable& table) {
  if (table.size() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    auto r = table.probs.row(i);
    total += r[row_argmax(r)];
  }
  return total / static_cast<double>(table.size());
}

std::vector<double> pseudo_label_marginal(const PredictionTable& table) {
  std::vector<double> m(table.classes(), 0.0);
  for (std::size_t i = 0; i < table.size(); ++i) m[row_argmax(table.probs.row(i))] += 1.0;
  if (table.size() > 0)
    for (double& v : m) v /= static_cast<double>(table.size());
  return m;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw InputError("total_variation: size mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) s += std::abs(p[k] - q[k]);
  return 0.5 * s;
}

Criterion parse_criterion(std::string_view name) {
  if (name == "infomax") return Criterion::InfoMax;
  if (name == "ent") return Criterion::Ent;
  if (name == "corr_c" || name == "corr-c") return Criterion::CorrC;
  throw ConfigError("unknown selection criterion '" + std::string(name) + "'");
}

std::string_view to_string(Criterion c) {
  switch (c) {
    case Criterion::InfoMax: return "infomax";
    case Criterion::Ent: return "ent";
    case Criterion::CorrC: return "corr_c";
  }
  return "?";
}

std::size_t select_checkpoint(std::span<const double> scores, Criterion criterion) {
  if (scores.empty()) throw InputError("select_checkpoint: no records");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    const bool better = criterion == Criterion::InfoMax ? scores[i] > scores[best]
                                                        : scores[i] < scores[best];
    if (better) best = i;
  }
  return best;
}

}  // namespace anchor
