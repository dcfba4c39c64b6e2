#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "lulc/core/text.hpp"
#include "lulc/geo/types.hpp"

namespace lulc::bench {

inline constexpr std::size_t K = geo::kNumClasses;

/// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, K>, K> counts{};

  void update(int truth, int predicted) {
    if (truth < 0 || truth >= static_cast<int>(K) || predicted < 0 || predicted >= static_cast<int>(K))
      throw IndexError("confusion update (" + std::to_string(truth) + ", " + std::to_string(predicted) +
                       ") outside [0, " + std::to_string(K) + ")");
    ++counts[static_cast<std::size_t>(truth)][static_cast<std::size_t>(predicted)];
  }

  std::uint64_t row_sum(std::size_t i) const {
    std::uint64_t s = 0;
    for (auto v : counts[i]) s += v;
    return s;
  }
  std::uint64_t total() const {
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < K; ++i) s += row_sum(i);
    return s;
  }
  std::uint64_t trace() const {
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < K; ++i) s += counts[i][i];
    return s;
  }

  /// Empty when nothing has been scored.
  std::optional<double> overall_accuracy() const {
    const auto n = total();
    if (n == 0) return std::nullopt;
    return static_cast<double>(trace()) / static_cast<double>(n);
  }

  /// Entry i is empty when class i never occurs as a true label.
  std::array<std::optional<double>, K> per_class_accuracy() const {
    std::array<std::optional<double>, K> out;
    for (std::size_t i = 0; i < K; ++i)
      if (const auto n = row_sum(i)) out[i] = static_cast<double>(counts[i][i]) / static_cast<double>(n);
    return out;
  }

  std::array<std::uint64_t, K> prediction_counts() const {
    std::array<std::uint64_t, K> out{};
    for (std::size_t i = 0; i < K; ++i)
      for (std::size_t j = 0; j < K; ++j) out[j] += counts[i][j];
    return out;
  }

  bool operator==(const ConfusionMatrix&) const = default;
};

/// `true\pred,0..9` header then one row per true class.
inline std::string confusion_csv(const ConfusionMatrix& cm) {
  std::string out = "true\\pred";
  for (std::size_t j = 0; j < K; ++j) out += "," + std::to_string(j);
  out += '\n';
  for (std::size_t i = 0; i < K; ++i) {
    out += std::to_string(i);
    for (std::size_t j = 0; j < K; ++j) out += "," + std::to_string(cm.counts[i][j]);
    out += '\n';
  }
  return out;
}

/// class_id,class_name,support,correct,accuracy,predicted (accuracy blank for absent classes).
inline std::string per_class_csv(const ConfusionMatrix& cm) {
  std::string out = "class_id,class_name,support,correct,accuracy,predicted\n";
  const auto acc = cm.per_class_accuracy();
  const auto pred = cm.prediction_counts();
  for (std::size_t i = 0; i < K; ++i) {
    out += csv_join({std::to_string(i), geo::eurosat_class_names()[i], std::to_string(cm.row_sum(i)),
                     std::to_string(cm.counts[i][i]), acc[i] ? format_number(*acc[i]) : std::string(),
                     std::to_string(pred[i])});
    out += '\n';
  }
  return out;
}

}  // namespace lulc::bench
