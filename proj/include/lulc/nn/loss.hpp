#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "lulc/nn/tensor.hpp"

namespace lulc::nn {

/// Row-wise softmax of N×K logits, evaluated in double with max subtraction.
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
  expect_rank(logits, 2, "softmax logits");
  const std::size_t N = logits.dim(0), K = logits.dim(1);
  Tensor<T> probs(logits.shape());
  for (std::size_t n = 0; n < N; ++n) {
    const T* row = logits.data() + n * K;
    double mx = row[0];
    for (std::size_t k = 1; k < K; ++k) mx = std::max(mx, static_cast<double>(row[k]));
    double z = 0.0;
    for (std::size_t k = 0; k < K; ++k) z += std::exp(static_cast<double>(row[k]) - mx);
    for (std::size_t k = 0; k < K; ++k) probs[n * K + k] = static_cast<T>(std::exp(static_cast<double>(row[k]) - mx) / z);
  }
  return probs;
}

template <typename T>
struct LossResult {
  double loss = 0.0;
  Tensor<T> grad_logits;
};

/// Mean negative log-likelihood of the targets under softmax(logits);
/// grad = (softmax - onehot) / N.
template <typename T>
LossResult<T> cross_entropy(const Tensor<T>& logits, std::span<const int> targets) {
  expect_rank(logits, 2, "cross_entropy logits");
  const std::size_t N = logits.dim(0), K = logits.dim(1);
  if (targets.size() != N)
    throw ShapeError("cross_entropy got " + std::to_string(targets.size()) + " targets for " + std::to_string(N) +
                     " rows");
  LossResult<T> out{0.0, Tensor<T>(logits.shape())};
  double total = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    const int t = targets[n];
    if (t < 0 || static_cast<std::size_t>(t) >= K)
      throw IndexError("target " + std::to_string(t) + " at row " + std::to_string(n) + " outside [0, " +
                       std::to_string(K) + ")");
    const T* row = logits.data() + n * K;
    double mx = row[0];
    for (std::size_t k = 1; k < K; ++k) mx = std::max(mx, static_cast<double>(row[k]));
    double z = 0.0;
    for (std::size_t k = 0; k < K; ++k) z += std::exp(static_cast<double>(row[k]) - mx);
    const double log_z = mx + std::log(z);
    total += log_z - static_cast<double>(row[t]);
    for (std::size_t k = 0; k < K; ++k) {
      const double p = std::exp(static_cast<double>(row[k]) - log_z);
      out.grad_logits[n * K + k] = static_cast<T>((p - (static_cast<std::size_t>(t) == k ? 1.0 : 0.0)) /
                                                  static_cast<double>(N));
    }
  }
  out.loss = total / static_cast<double>(N);
  return out;
}

/// Index of the largest value in each row; ties resolve to the lowest index.
template <typename T>
std::vector<int> argmax_rows(const Tensor<T>& m) {
  const std::size_t N = m.dim(0), K = m.dim(1);
  std::vector<int> out(N);
  for (std::size_t n = 0; n < N; ++n) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < K; ++k)
      if (m[n * K + k] > m[n * K + best]) best = k;
    out[n] = static_cast<int>(best);
  }
  return out;
}

}  // namespace lulc::nn
