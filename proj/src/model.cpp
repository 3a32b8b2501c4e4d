#include "anchor/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "anchor/error.hpp"

namespace anchor {

namespace {

void check_params_shape(std::size_t dim, std::size_t classes) {
  if (dim < 1) throw InputError("LinearParams: dimension must be >= 1");
  if (classes < 2) throw InputError("LinearParams: class count must be >= 2");
}

void check_batch(const LinearParams& params, const Minibatch& batch, std::size_t targets) {
  if (batch.size() == 0) throw InputError("empty minibatch");
  if (batch.inputs.cols() != params.dim())
    throw InputError("minibatch feature dimension " + std::to_string(batch.inputs.cols()) +
                     " does not match parameter dimension " + std::to_string(params.dim()));
  if (targets != batch.size())
    throw InputError("expected one target per minibatch row, got " + std::to_string(targets) +
                     " targets for " + std::to_string(batch.size()) + " rows");
}

}  // namespace

LinearParams::LinearParams(std::size_t dim, std::size_t classes) : weights_(dim, classes, 0.0) {
  check_params_shape(dim, classes);
}

LinearParams::LinearParams(Matrix weights) : weights_(std::move(weights)) {
  check_params_shape(weights_.rows(), weights_.cols());
  if (!all_finite(weights_.values())) throw InputError("LinearParams: non-finite weight");
}

ProbVec::ProbVec(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw InputError("ProbVec: empty");
  double sum = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0 && p <= 1.0)) throw InputError("ProbVec: entry outside [0,1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InputError("ProbVec: entries do not sum to 1");
}

ProbVec ProbVec::uniform(std::size_t classes) {
  return ProbVec(std::vector<double>(classes, 1.0 / static_cast<double>(classes)), Unchecked{});
}

ProbVec ProbVec::one_hot(std::size_t classes, ClassIndex k) {
  if (k >= classes) throw InputError("one_hot: class index out of range");
  std::vector<double> v(classes, 0.0);
  v[k] = 1.0;
  return ProbVec(std::move(v), Unchecked{});
}

SoftTarget::SoftTarget(std::vector<double> values) : values_(std::move(values)) {
  for (double v : values_) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InputError("SoftTarget: negative or non-finite entry");
    mass_ += v;
  }
  if (!(mass_ > 0.0)) throw InputError("SoftTarget: zero mass");
}

SoftTarget::SoftTarget(std::vector<double> values, double mass) : SoftTarget(std::move(values)) {
  if (std::abs(mass - mass_) > 1e-9 * std::max(1.0, mass_))
    throw InputError("SoftTarget: declared mass does not match entry sum");
  mass_ = mass;
}

SoftTarget SoftTarget::one_hot(std::size_t classes, ClassIndex k) {
  if (k >= classes) throw InputError("one_hot: class index out of range");
  std::vector<double> v(classes, 0.0);
  v[k] = 1.0;
  return SoftTarget(std::move(v));
}

SoftTarget SoftTarget::from(const ProbVec& p) {
  return SoftTarget(std::vector<double>(p.values().begin(), p.values().end()));
}

std::vector<double> logits(const LinearParams& params, std::span<const double> x) {
  if (x.size() != params.dim())
    throw InputError("input dimension " + std::to_string(x.size()) +
                     " does not match parameter dimension " + std::to_string(params.dim()));
  const Matrix& w = params.weights();
  std::vector<double> z(params.classes(), 0.0);
  for (std::size_t j = 0; j < params.dim(); ++j) {
    const double xj = x[j];
    if (xj == 0.0) continue;
    auto wrow = w.row(j);
    for (std::size_t k = 0; k < z.size(); ++k) z[k] += wrow[k] * xj;
  }
  return z;
}

ProbVec softmax(std::span<const double> z) {
  if (z.empty()) throw InputError("softmax: empty logits");
  const double zmax = *std::max_element(z.begin(), z.end());
  if (!std::isfinite(zmax)) throw NumericError("softmax: non-finite logits");
  std::vector<double> p(z.size());
  double denom = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    p[k] = std::exp(z[k] - zmax);
    denom += p[k];
  }
  for (double& v : p) v /= denom;
  return ProbVec(std::move(p), ProbVec::Unchecked{});
}

ProbVec temperature_softmax(std::span<const double> z, double temperature) {
  if (!(temperature > 0.0)) throw ParameterError("temperature must be > 0");
  std::vector<double> scaled(z.begin(), z.end());
  for (double& v : scaled) v /= temperature;
  return softmax(scaled);
}

ProbVec softmax_forward(const LinearParams& params, std::span<const double> x) {
  return softmax(logits(params, x));
}

double confidence(const ProbVec& p) {
  return *std::max_element(p.values().begin(), p.values().end());
}

ClassIndex pseudo_label(const ProbVec& p) {
  // max_element returns the first maximum.
  auto v = p.values();
  return static_cast<ClassIndex>(std::max_element(v.begin(), v.end()) - v.begin());
}

double ce_soft_loss(const ProbVec& p, const SoftTarget& t) {
  if (p.size() != t.size()) throw InputError("ce_soft_loss: size mismatch");
  double loss = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (t[k] == 0.0) continue;
    loss -= t[k] * std::log(std::max(p[k], kLogClamp));
  }
  return loss;
}

double gce_loss(const ProbVec& p, const SoftTarget& t, double q) {
  if (!(q > 0.0 && q <= 1.0)) throw ParameterError("gce_loss: q must lie in (0,1]");
  if (p.size() != t.size()) throw InputError("gce_loss: size mismatch");
  double loss = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) loss += t[k] * (1.0 - std::pow(p[k], q)) / q;
  return loss;
}

std::vector<double> ce_logit_grad(const ProbVec& p, const SoftTarget& t) {
  std::vector<double> g(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) g[k] = t.mass() * p[k] - t[k];
  return g;
}

std::vector<double> gce_logit_grad(const ProbVec& p, const SoftTarget& t, double q) {
  if (!(q > 0.0 && q <= 1.0)) throw ParameterError("gce: q must lie in (0,1]");
  // d/dz_j Σ_k t_k (1 − p_k^q)/q = −t_j p_j^q + p_j Σ_k t_k p_k^q
  std::vector<double> pq(p.size());
  double weighted = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    pq[k] = std::pow(p[k], q);
    weighted += t[k] * pq[k];
  }
  std::vector<double> g(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) g[j] = p[j] * weighted - t[j] * pq[j];
  return g;
}

Matrix accumulate_gradient(const Matrix& inputs, std::span<const std::vector<double>> logit_grads,
                           std::size_t classes) {
  const std::size_t b = inputs.rows();
  Matrix grad(inputs.cols(), classes, 0.0);
  for (std::size_t i = 0; i < b; ++i) {
    auto x = inputs.row(i);
    const auto& g = logit_grads[i];
    for (std::size_t j = 0; j < x.size(); ++j) {
      auto grow = grad.row(j);
      for (std::size_t k = 0; k < classes; ++k) grow[k] += g[k] * x[j];
    }
  }
  const double inv_b = 1.0 / static_cast<double>(b);
  for (double& v : grad.values()) v *= inv_b;
  return grad;
}

Matrix grad_linear_ce(const LinearParams& params, const Minibatch& batch,
                      std::span<const SoftTarget> targets) {
  check_batch(params, batch, targets.size());
  std::vector<std::vector<double>> gs(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (targets[i].size() != params.classes()) throw InputError("target size mismatch");
    gs[i] = ce_logit_grad(softmax_forward(params, batch.inputs.row(i)), targets[i]);
  }
  return accumulate_gradient(batch.inputs, gs, params.classes());
}

Matrix grad_linear_gce(const LinearParams& params, const Minibatch& batch,
                       std::span<const SoftTarget> targets, double q) {
  check_batch(params, batch, targets.size());
  std::vector<std::vector<double>> gs(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (targets[i].size() != params.classes()) throw InputError("target size mismatch");
    gs[i] = gce_logit_grad(softmax_forward(params, batch.inputs.row(i)), targets[i], q);
  }
  return accumulate_gradient(batch.inputs, gs, params.classes());
}

double mean_ce_loss(const LinearParams& params, const Minibatch& batch,
                    std::span<const SoftTarget> targets) {
  check_batch(params, batch, targets.size());
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i)
    total += ce_soft_loss(softmax_forward(params, batch.inputs.row(i)), targets[i]);
  return total / static_cast<double>(batch.size());
}

double mean_gce_loss(const LinearParams& params, const Minibatch& batch,
                     std::span<const SoftTarget> targets, double q) {
  check_batch(params, batch, targets.size());
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i)
    total += gce_loss(softmax_forward(params, batch.inputs.row(i)), targets[i], q);
  return total / static_cast<double>(batch.size());
}

LinearParams sgd_step(const LinearParams& params, const Matrix& grad, double lr) {
  if (!(lr >= 0.0)) throw ParameterError("sgd_step: learning rate must be >= 0");
  if (grad.rows() != params.dim() || grad.cols() != params.classes())
    throw InputError("sgd_step: gradient shape mismatch");
  if (!all_finite(grad.values())) throw NumericError("sgd_step: non-finite gradient");
  Matrix w = params.weights();
  auto& wv = w.values();
  const auto& gv = grad.values();
  for (std::size_t i = 0; i < wv.size(); ++i) wv[i] -= lr * gv[i];
  return LinearParams(std::move(w));
}

double finite_diff_check(const LinearParams& params, const Minibatch& batch,
                         std::span<const SoftTarget> targets, double eps) {
  if (!(eps > 0.0)) throw ParameterError("finite_diff_check: eps must be > 0");
  const Matrix analytic = grad_linear_ce(params, batch, targets);
  double worst = 0.0;
  LinearParams probe = params;
  auto& w = probe.weights().values();
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double saved = w[i];
    w[i] = saved + eps;
    const double up = mean_ce_loss(probe, batch, targets);
    w[i] = saved - eps;
    const double down = mean_ce_loss(probe, batch, targets);
    w[i] = saved;
    const double numeric = (up - down) / (2.0 * eps);
    const double a = analytic.values()[i];
    const double scale = std::max({std::abs(a), std::abs(numeric), kFiniteDiffFloor});
    worst = std::max(worst, std::abs(a - numeric) / scale);
  }
  return worst;
}

}  // namespace anchor
