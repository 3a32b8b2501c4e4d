#include "anchor/elr.hpp"

#include <cmath>
#include <string>

#include "anchor/error.hpp"

namespace anchor {

ElrState::ElrState(std::size_t instances, std::size_t classes, double decay)
    : targets_(instances, classes, 0.0), decay_(decay) {
  if (!(decay >= 0.0 && decay < 1.0)) throw ParameterError("elr: decay must lie in [0,1)");
}

void ElrState::check_index(std::size_t instance) const {
  if (instance >= targets_.rows())
    throw InputError("elr: instance " + std::to_string(instance) + " out of range");
}

std::span<const double> ElrState::target(std::size_t instance) const {
  check_index(instance);
  return targets_.row(instance);
}

void ElrState::update(std::size_t instance, const ProbVec& pred) {
  check_index(instance);
  if (pred.size() != classes()) throw InputError("elr: class count mismatch");
  auto row = targets_.row(instance);
  for (std::size_t k = 0; k < row.size(); ++k) row[k] = decay_ * row[k] + (1.0 - decay_) * pred[k];
}

ElrState ElrState::from_table(Matrix targets, double decay) {
  ElrState s(0, targets.cols() == 0 ? 2 : targets.cols(), decay);
  s.targets_ = std::move(targets);
  return s;
}

double elr_loss(const ProbVec& pred, std::span<const double> target_row) {
  if (target_row.size() != pred.size()) throw InputError("elr_loss: size mismatch");
  const double agreement = dot(pred.values(), target_row);
  return std::log(std::max(1.0 - agreement, kElrClamp));
}

std::vector<double> elr_logit_grad(const ProbVec& pred, std::span<const double> target_row) {
  if (target_row.size() != pred.size()) throw InputError("elr_logit_grad: size mismatch");
  const double s = dot(pred.values(), target_row);
  std::vector<double> g(pred.size(), 0.0);
  if (1.0 - s <= kElrClamp) return g;
  // ∂s/∂z_j = p_j (t_j − s)
  for (std::size_t j = 0; j < g.size(); ++j) g[j] = -pred[j] * (target_row[j] - s) / (1.0 - s);
  return g;
}

}  // namespace anchor
