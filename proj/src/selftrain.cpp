#include "anchor/selftrain.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "anchor/error.hpp"
#include "anchor/format.hpp"

namespace anchor {

Strategy parse_strategy(std::string_view name) {
  if (name == "vanilla") return Strategy::Vanilla;
  if (name == "ancon") return Strategy::Ancon;
  if (name == "elr") return Strategy::Elr;
  if (name == "gce") return Strategy::Gce;
  if (name == "gce+ancon") return Strategy::GceAncon;
  if (name == "elr-as-aux") return Strategy::ElrAsAux;
  throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::Vanilla: return "vanilla";
    case Strategy::Ancon: return "ancon";
    case Strategy::Elr: return "elr";
    case Strategy::Gce: return "gce";
    case Strategy::GceAncon: return "gce+ancon";
    case Strategy::ElrAsAux: return "elr-as-aux";
  }
  return "?";
}

bool uses_ensemble(Strategy s) {
  return s == Strategy::Ancon || s == Strategy::GceAncon || s == Strategy::ElrAsAux;
}

namespace {

bool uses_gce(Strategy s) { return s == Strategy::Gce || s == Strategy::GceAncon; }
bool uses_aux(Strategy s) { return s == Strategy::Elr || s == Strategy::ElrAsAux; }

}  // namespace

void AdaptConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ParameterError("adapt: lr must be finite and >= 0");
  if (batch_size == 0) throw ParameterError("adapt: batch_size must be positive");
  if (inner_steps == 0) throw ParameterError("adapt: inner_steps must be positive");
  if (ece_bins == 0) throw ParameterError("adapt: ece_bins must be positive");
  ancon.validate();
  if (!(elr_decay >= 0.0 && elr_decay < 1.0)) throw ParameterError("adapt: elr_decay must lie in [0,1)");
  if (!(elr_lambda >= 0.0)) throw ParameterError("adapt: elr_lambda must be >= 0");
  if (!(gce_q > 0.0 && gce_q <= 1.0)) throw ParameterError("adapt: gce_q must lie in (0,1]");
}

double criterion_score(const RunRecord& record, Criterion criterion) {
  switch (criterion) {
    case Criterion::InfoMax: return record.infomax;
    case Criterion::Ent: return record.ent;
    case Criterion::CorrC: return record.corr_c;
  }
  return 0.0;
}

std::size_t select_checkpoint(std::span<const RunRecord> records, Criterion criterion) {
  std::vector<double> scores;
  scores.reserve(records.size());
  for (const auto& r : records) scores.push_back(criterion_score(r, criterion));
  return select_checkpoint(std::span<const double>(scores), criterion);
}

AdaptState initial_state(const Dataset& train, const LinearParams& init, const AdaptConfig& config) {
  AdaptState state;
  state.params = init;
  const std::size_t K = init.classes();
  if (uses_ensemble(config.strategy)) state.bank = EnsembleBank(train.size(), K);
  if (config.strategy == Strategy::Elr) state.elr = ElrState(train.size(), K, config.elr_decay);
  state.threshold = ThresholdState::make(config.ancon.beta);
  state.last_marginal = pseudo_label_marginal(predict(init, train));
  return state;
}

StepTargets build_targets(const Minibatch& batch, AdaptState& state, const AdaptConfig& config) {
  const LinearParams& params = state.params;
  const std::size_t b = batch.size();
  const std::size_t K = params.classes();
  std::vector<std::vector<double>> z(b);
  std::vector<ProbVec> preds(b);
  double conf_sum = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    z[i] = logits(params, batch.inputs.row(i));
    preds[i] = softmax(z[i]);
    conf_sum += confidence(preds[i]);
  }
  // The threshold is tracked for every strategy so that records stay
  // comparable; only ensemble strategies consume it.
  const double batch_conf = std::clamp(conf_sum / static_cast<double>(b), 0.0, 1.0);
  state.threshold = update_threshold(std::move(state.threshold), batch_conf);

  StepTargets out;
  out.targets.reserve(b);
  const AnconConfig& ac = config.ancon;
  for (std::size_t i = 0; i < b; ++i) {
    const std::size_t idx = batch.indices[i];
    const ClassIndex yhat = pseudo_label(preds[i]);
    if (uses_ensemble(config.strategy)) {
      const double w = compute_weight(preds[i], state.threshold, ac.weight_scheme);
      state.bank.add(idx, ensemble_contribution(z[i], ac.prediction, ac.temperature), w);
    }
    switch (config.strategy) {
      case Strategy::Vanilla:
      case Strategy::Gce:
        out.targets.push_back(SoftTarget::one_hot(K, yhat));
        break;
      case Strategy::Ancon:
      case Strategy::GceAncon:
        out.targets.push_back(smooth_target(yhat, state.bank, idx, ac.lambda, ac.normalization));
        break;
      case Strategy::Elr: {
        state.elr.update(idx, preds[i]);
        auto row = state.elr.target(idx);
        out.targets.push_back(SoftTarget::one_hot(K, yhat));
        out.aux_rows.emplace_back(row.begin(), row.end());
        break;
      }
      case Strategy::ElrAsAux: {
        out.targets.push_back(SoftTarget::one_hot(K, yhat));
        auto dist = ensemble_distribution(state.bank, idx);
        if (dist)
          out.aux_rows.emplace_back(dist->values().begin(), dist->values().end());
        else
          out.aux_rows.emplace_back(K, 0.0);
        break;
      }
    }
  }
  return out;
}

namespace {

// Loss at the current parameters and its gradient for one minibatch.
std::pair<double, Matrix> loss_and_gradient(const LinearParams& params, const Minibatch& batch,
                                            const StepTargets& st, const AdaptConfig& config) {
  const std::size_t b = batch.size();
  std::vector<std::vector<double>> grads(b);
  double loss = 0.0;
  const bool gce = uses_gce(config.strategy);
  const bool aux = uses_aux(config.strategy);
  for (std::size_t i = 0; i < b; ++i) {
    const ProbVec p = softmax_forward(params, batch.inputs.row(i));
    const SoftTarget& t = st.targets[i];
    if (gce) {
      loss += gce_loss(p, t, config.gce_q);
      grads[i] = gce_logit_grad(p, t, config.gce_q);
    } else {
      loss += ce_soft_loss(p, t);
      grads[i] = ce_logit_grad(p, t);
    }
    if (aux) {
      loss += config.elr_lambda * elr_loss(p, st.aux_rows[i]);
      const auto ag = elr_logit_grad(p, st.aux_rows[i]);
      for (std::size_t k = 0; k < ag.size(); ++k) grads[i][k] += config.elr_lambda * ag[k];
    }
  }
  return {loss / static_cast<double>(b), accumulate_gradient(batch.inputs, grads, params.classes())};
}

}  // namespace

RunRecord evaluate_epoch(const LinearParams& params, const Dataset& train, const Dataset& holdout,
                         std::size_t epoch, double train_loss, const AdaptState& state,
                         std::size_t ece_bins, std::vector<double>* marginal_out) {
  RunRecord rec;
  rec.epoch = epoch;
  rec.train_loss = train_loss;
  rec.threshold_delta = state.threshold.delta;
  const Dataset& eval_set = holdout.size() > 0 ? holdout : train;
  const PredictionTable table = predict(params, eval_set);
  rec.infomax = infomax(table);
  rec.ent = ent_score(table);
  rec.corr_c = corr_c(table);
  rec.mean_confidence = mean_confidence(table);
  if (holdout.size() > 0 && holdout.labeled()) {
    rec.holdout_accuracy = accuracy(table);
    rec.ece = ece(table, ece_bins);
  }
  const PredictionTable train_table = predict(params, train);
  if (train.labeled()) rec.target_accuracy = accuracy(train_table);
  auto marginal = pseudo_label_marginal(train_table);
  if (state.last_marginal.size() == marginal.size())
    rec.marginal_tv = total_variation(state.last_marginal, marginal);
  if (marginal_out) *marginal_out = std::move(marginal);
  return rec;
}

AdaptResult resume_adaptation(const Dataset& train, const Dataset& holdout, AdaptState state,
                              const AdaptConfig& config, const EpochHook& hook) {
  config.validate();
  if (train.size() == 0) throw InputError("adaptation: empty dataset");
  if (train.dim() != state.params.dim())
    throw InputError("adaptation: feature dimension does not match parameters");
  if (holdout.size() > 0 && holdout.dim() != train.dim())
    throw InputError("adaptation: holdout dimension mismatch");

  AdaptResult result;
  const std::size_t n = train.size();
  while (state.epochs_done < config.epochs) {
    const std::size_t epoch = state.epochs_done;
    const auto order = seeded_permutation(n, derive_seed(config.seed, epoch));
    double loss_total = 0.0;
    std::size_t batches = 0;
    std::vector<double> marginal;
    RunRecord rec;
    try {
      for (std::size_t start = 0; start < n; start += config.batch_size) {
        const std::size_t end = std::min(n, start + config.batch_size);
        std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                      order.begin() + static_cast<std::ptrdiff_t>(end));
        const Minibatch batch = train.batch(rows);
        const StepTargets st = build_targets(batch, state, config);
        for (std::size_t t = 0; t < config.inner_steps; ++t) {
          auto [loss, grad] = loss_and_gradient(state.params, batch, st, config);
          if (!std::isfinite(loss))
            throw NumericError("adaptation: non-finite loss at epoch " + std::to_string(epoch));
          if (t == 0) loss_total += loss;
          if (!all_finite(grad.values()))
            throw NumericError("adaptation: non-finite gradient at epoch " + std::to_string(epoch));
          state.params = sgd_step(state.params, grad, config.lr);
        }
        ++batches;
        ++state.steps_done;
      }
      rec = evaluate_epoch(state.params, train, holdout, epoch,
                           loss_total / static_cast<double>(batches), state, config.ece_bins,
                           &marginal);
    } catch (const NumericError& e) {
      const std::string what = e.what();
      if (what.find("at epoch") != std::string::npos) throw;
      throw NumericError("adaptation: " + what + " at epoch " + std::to_string(epoch));
    }
    state.last_marginal = std::move(marginal);
    state.epochs_done = epoch + 1;
    result.records.push_back(rec);
    result.checkpoints.push_back(state.params);
    if (hook && !hook(state, rec)) break;
  }
  result.final_params = state.params;
  return result;
}

AdaptResult run_adaptation(const Dataset& train, const Dataset& holdout, const LinearParams& init,
                           const AdaptConfig& config, const EpochHook& hook) {
  config.validate();
  if (train.size() == 0) throw InputError("adaptation: empty dataset");
  return resume_adaptation(train, holdout, initial_state(train, init, config), config, hook);
}

LinearParams train_source(const Dataset& labeled, const SourceConfig& config,
                          std::vector<std::string>* warnings) {
  if (!labeled.labeled()) throw InputError("train_source: labels required");
  if (labeled.size() == 0) throw InputError("train_source: empty dataset");
  if (config.batch_size == 0) throw ParameterError("train_source: batch_size must be positive");
  if (!(config.lr >= 0.0)) throw ParameterError("train_source: lr must be >= 0");
  const auto& ys = *labeled.labels;
  const std::size_t K = std::max<std::size_t>(labeled.classes, 2);
  if (std::all_of(ys.begin(), ys.end(), [&](ClassIndex y) { return y == ys.front(); }) && warnings)
    warnings->push_back("train_source: labels contain a single class; the predictor is degenerate");

  LinearParams params(labeled.dim(), K);
  const std::size_t n = labeled.size();
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = seeded_permutation(n, derive_seed(config.seed, epoch));
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t end = std::min(n, start + config.batch_size);
      std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                    order.begin() + static_cast<std::ptrdiff_t>(end));
      const Minibatch batch = labeled.batch(rows);
      std::vector<SoftTarget> targets;
      for (std::size_t r : rows) targets.push_back(SoftTarget::one_hot(K, ys[r]));
      const Matrix grad = grad_linear_ce(params, batch, targets);
      params = sgd_step(params, grad, config.lr);
    }
  }
  return params;
}

}  // namespace anchor
