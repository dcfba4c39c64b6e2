#pragma once

#include <cmath>
#include <filesystem>
#include <vector>

#include "lulc/core/text.hpp"
#include "lulc/geo/types.hpp"

namespace lulc::geo {

inline constexpr double kStdFloor = 1e-6;

/// Per-channel mean and population standard deviation over every pixel of every
/// chip. Accumulates in double with Welford updates; std is floored at 1e-6.
inline ChannelStats compute_channel_stats(const std::vector<TileChip>& chips) {
  if (chips.empty()) throw InvalidArgument("compute_channel_stats needs at least one chip");
  const std::size_t bands = chips.front().bands;
  std::vector<double> mean(bands, 0.0), m2(bands, 0.0);
  std::vector<std::size_t> n(bands, 0);
  for (const auto& chip : chips) {
    if (chip.bands != bands) throw InvalidArgument("chips disagree on band count");
    const std::size_t plane = chip.size * chip.size;
    for (std::size_t b = 0; b < bands; ++b)
      for (std::size_t i = 0; i < plane; ++i) {
        const double x = chip.data[b * plane + i];
        ++n[b];
        const double d = x - mean[b];
        mean[b] += d / static_cast<double>(n[b]);
        m2[b] += d * (x - mean[b]);
      }
  }
  ChannelStats stats;
  stats.mean = mean;
  stats.stddev.resize(bands);
  for (std::size_t b = 0; b < bands; ++b)
    stats.stddev[b] = std::max(kStdFloor, std::sqrt(m2[b] / static_cast<double>(n[b])));
  return stats;
}

/// out = (in - mean) / std per channel.
inline TileChip standardize(TileChip chip, const ChannelStats& stats) {
  stats.check_invariants();
  if (stats.mean.size() != chip.bands) throw InvalidArgument("channel stats do not match chip band count");
  const std::size_t plane = chip.size * chip.size;
  for (std::size_t b = 0; b < chip.bands; ++b) {
    const double mu = stats.mean[b];
    const double sd = stats.stddev[b];
    for (std::size_t i = 0; i < plane; ++i) {
      auto& v = chip.data[b * plane + i];
      v = static_cast<float>((v - mu) / sd);
    }
  }
  return chip;
}

/// Inverse of standardize: out = in * std + mean.
inline TileChip unstandardize(TileChip chip, const ChannelStats& stats) {
  stats.check_invariants();
  const std::size_t plane = chip.size * chip.size;
  for (std::size_t b = 0; b < chip.bands; ++b)
    for (std::size_t i = 0; i < plane; ++i) {
      auto& v = chip.data[b * plane + i];
      v = static_cast<float>(v * stats.stddev[b] + stats.mean[b]);
    }
  return chip;
}

inline void write_channel_stats(const std::filesystem::path& path, const ChannelStats& stats) {
  std::string text = "channel,mean,std\n";
  for (std::size_t b = 0; b < stats.mean.size(); ++b)
    text += std::to_string(b) + "," + format_number(stats.mean[b]) + "," + format_number(stats.stddev[b]) + "\n";
  write_text_file(path, text);
}

inline ChannelStats read_channel_stats(const std::filesystem::path& path) {
  const auto t = read_csv(path);
  ChannelStats s;
  const auto cm = t.column("mean"), cs = t.column("std");
  for (const auto& row : t.rows) {
    s.mean.push_back(parse_double(row[cm], "mean"));
    s.stddev.push_back(parse_double(row[cs], "std"));
  }
  try {
    s.check_invariants();
  } catch (const InvalidArgument& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return s;
}

}  // namespace lulc::geo
