#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "anchor/data.hpp"
#include "anchor/matrix.hpp"
#include "anchor/model.hpp"

namespace testing {

inline anchor::Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  anchor::Matrix m(r, c);
  for (auto& v : m.values()) v = n(rng);
  return m;
}

inline std::vector<double> random_simplex(std::size_t k, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> p(k);
  double s = 0.0;
  for (auto& v : p) s += (v = e(rng));
  for (auto& v : p) v /= s;
  return p;
}

inline anchor::Minibatch make_batch(anchor::Matrix inputs) {
  anchor::Minibatch b;
  for (std::size_t i = 0; i < inputs.rows(); ++i) b.indices.push_back(i);
  b.inputs = std::move(inputs);
  return b;
}

// Written independently of the library: direct softmax cross-entropy with
// unnormalized soft targets.
inline double naive_loss(const anchor::Matrix& w, const anchor::Matrix& x,
                         const std::vector<std::vector<double>>& t) {
  const std::size_t d = w.rows(), K = w.cols();
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    std::vector<double> z(K, 0.0);
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t j = 0; j < d; ++j) z[k] += w(j, k) * x(i, j);
    double m = z[0];
    for (double v : z) m = std::max(m, v);
    double s = 0.0;
    for (double v : z) s += std::exp(v - m);
    for (std::size_t k = 0; k < K; ++k) total -= t[i][k] * (z[k] - m - std::log(s));
  }
  return total / static_cast<double>(x.rows());
}

}  // namespace testing
