#include "anchor/ancon.hpp"

#include <cmath>
#include <string>

#include "anchor/error.hpp"

namespace anchor {

WeightScheme parse_weight_scheme(std::string_view name) {
  if (name == "relative-threshold") return WeightScheme::RelativeThreshold;
  if (name == "entropy") return WeightScheme::Entropy;
  if (name == "maxprob") return WeightScheme::MaxProb;
  throw ConfigError("unknown weight scheme '" + std::string(name) + "'");
}

PredictionScheme parse_prediction_scheme(std::string_view name) {
  if (name == "hard") return PredictionScheme::Hard;
  if (name == "soft") return PredictionScheme::Soft;
  throw ConfigError("unknown prediction scheme '" + std::string(name) + "'");
}

Normalization parse_normalization(std::string_view name) {
  if (name == "unnormalized") return Normalization::Unnormalized;
  if (name == "normalized") return Normalization::Normalized;
  throw ConfigError("unknown normalization '" + std::string(name) + "'");
}

std::string_view to_string(WeightScheme s) {
  switch (s) {
    case WeightScheme::RelativeThreshold: return "relative-threshold";
    case WeightScheme::Entropy: return "entropy";
    case WeightScheme::MaxProb: return "maxprob";
  }
  return "?";
}

std::string_view to_string(PredictionScheme s) {
  return s == PredictionScheme::Hard ? "hard" : "soft";
}

std::string_view to_string(Normalization n) {
  return n == Normalization::Unnormalized ? "unnormalized" : "normalized";
}

void AnconConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ParameterError("ancon: lambda must lie in [0,1]");
  if (!(beta >= 0.0 && beta < 1.0)) throw ParameterError("ancon: beta must lie in [0,1)");
  if (!(temperature > 0.0)) throw ParameterError("ancon: temperature must be > 0");
}

ThresholdState ThresholdState::make(double beta, bool track_history) {
  if (!(beta >= 0.0 && beta < 1.0)) throw ParameterError("threshold: beta must lie in [0,1)");
  ThresholdState s;
  s.beta = beta;
  s.track_history = track_history;
  return s;
}

ThresholdState update_threshold(ThresholdState state, double batch_mean_conf) {
  if (!(batch_mean_conf >= 0.0 && batch_mean_conf <= 1.0))
    throw InputError("update_threshold: batch-mean confidence outside [0,1]");
  state.delta = state.beta * state.delta + (1.0 - state.beta) * batch_mean_conf;
  ++state.steps;
  if (state.track_history) state.history.push_back(batch_mean_conf);
  return state;
}

double closed_form_threshold(std::span<const double> confidences, double beta) {
  const std::size_t m = confidences.size();
  double delta = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    delta += (1.0 - beta) * std::pow(beta, static_cast<double>(m - 1 - i)) * confidences[i];
  return delta;
}

double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

double compute_weight(const ProbVec& pred, const ThresholdState& state, WeightScheme scheme) {
  switch (scheme) {
    case WeightScheme::RelativeThreshold: return confidence(pred) > state.delta ? 1.0 : 0.0;
    case WeightScheme::Entropy: return std::exp(-entropy(pred.values()));
    case WeightScheme::MaxProb: return confidence(pred);
  }
  return 0.0;
}

ProbVec ensemble_contribution(std::span<const double> logits, PredictionScheme scheme,
                              double temperature) {
  if (scheme == PredictionScheme::Hard) {
    const ProbVec p = softmax(logits);
    return ProbVec::one_hot(p.size(), pseudo_label(p));
  }
  return temperature_softmax(logits, temperature);
}

EnsembleBank::EnsembleBank(std::size_t instances, std::size_t classes)
    : counts_(instances, classes, 0.0), visits_(instances, 0.0) {}

void EnsembleBank::check_index(std::size_t instance) const {
  if (instance >= visits_.size())
    throw InputError("ensemble bank: instance " + std::to_string(instance) + " out of range (n=" +
                     std::to_string(visits_.size()) + ")");
}

void EnsembleBank::add(std::size_t instance, const ProbVec& contribution, double weight) {
  check_index(instance);
  if (!(weight >= 0.0) || !std::isfinite(weight))
    throw InputError("ensemble bank: weight must be finite and >= 0");
  if (contribution.size() != classes()) throw InputError("ensemble bank: class count mismatch");
  if (weight == 0.0) return;
  auto row = counts_.row(instance);
  for (std::size_t k = 0; k < row.size(); ++k) row[k] += weight * contribution[k];
  visits_[instance] += weight;
}

std::span<const double> EnsembleBank::counts(std::size_t instance) const {
  check_index(instance);
  return counts_.row(instance);
}

double EnsembleBank::visits(std::size_t instance) const {
  check_index(instance);
  return visits_[instance];
}

EnsembleBank EnsembleBank::from_tables(Matrix counts, std::vector<double> visits) {
  if (counts.rows() != visits.size()) throw InputError("ensemble bank: row count mismatch");
  for (double v : counts.values())
    if (!(v >= 0.0)) throw InputError("ensemble bank: negative count");
  for (double v : visits)
    if (!(v >= 0.0)) throw InputError("ensemble bank: negative visits");
  EnsembleBank bank;
  bank.counts_ = std::move(counts);
  bank.visits_ = std::move(visits);
  return bank;
}

void ensemble_update(EnsembleBank& bank, std::size_t instance, const ProbVec& pred, double weight,
                     PredictionScheme scheme, double temperature) {
  if (scheme == PredictionScheme::Hard) {
    bank.add(instance, ProbVec::one_hot(pred.size(), pseudo_label(pred)), weight);
    return;
  }
  std::vector<double> log_p(pred.size());
  for (std::size_t k = 0; k < pred.size(); ++k) log_p[k] = std::log(std::max(pred[k], 1e-300));
  bank.add(instance, temperature_softmax(log_p, temperature), weight);
}

std::optional<ProbVec> ensemble_distribution(const EnsembleBank& bank, std::size_t instance) {
  const double q = bank.visits(instance);
  if (q <= 0.0) return std::nullopt;
  auto row = bank.counts(instance);
  std::vector<double> p(row.begin(), row.end());
  double sum = 0.0;
  for (double v : p) sum += v;
  // visits equals the row sum up to rounding; normalize by the row sum so the
  // result is a valid simplex point either way.
  for (double& v : p) v /= sum;
  return ProbVec(std::move(p));
}

SoftTarget smooth_target(ClassIndex pseudo, const EnsembleBank& bank, std::size_t instance,
                         double lambda, Normalization normalization) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ParameterError("smooth_target: lambda must lie in [0,1]");
  const std::size_t K = bank.classes();
  if (pseudo >= K) throw InputError("smooth_target: pseudo label out of range");
  const double q = bank.visits(instance);
  if (q <= 0.0 || lambda == 0.0) return SoftTarget::one_hot(K, pseudo);
  auto row = bank.counts(instance);
  std::vector<double> t(K, 0.0);
  const double scale = normalization == Normalization::Normalized ? lambda / q : lambda;
  for (std::size_t k = 0; k < K; ++k) t[k] = scale * row[k];
  t[pseudo] += 1.0 - lambda;
  if (normalization == Normalization::Unnormalized) {
    const double mass = (1.0 - lambda) + lambda * q;
    return SoftTarget(std::move(t), mass);
  }
  return SoftTarget(std::move(t), 1.0);
}

}  // namespace anchor
