#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lulc/core/random.hpp"
#include "lulc/core/text.hpp"
#include "lulc/geo/chip_archive.hpp"

namespace lulc::data {

using geo::kNumClasses;
using geo::TileChip;

/// Chips that all carry a label in [0, 10).
struct LabeledSet {
  std::vector<TileChip> chips;
  std::array<std::string, kNumClasses> class_names = geo::eurosat_class_names();

  void check_invariants() const {
    for (std::size_t i = 0; i < chips.size(); ++i) {
      const auto& c = chips[i];
      if (!c.label) throw InvalidArgument("chip " + c.uuid + " has no label");
      if (*c.label < 0 || *c.label >= static_cast<int>(kNumClasses))
        throw InvalidArgument("chip " + c.uuid + " has label " + std::to_string(*c.label) + " outside [0, 9]");
    }
  }
  int label(std::size_t i) const { return *chips[i].label; }
  std::size_t size() const { return chips.size(); }
};

/// Keeps the labelled chips of an archive, in archive order.
inline LabeledSet labeled_set(const geo::ChipArchive& archive) {
  LabeledSet set;
  for (const auto& c : archive.chips)
    if (c.label) set.chips.push_back(c);
  set.check_invariants();
  return set;
}

enum class SplitPart { train = 0, val = 1, test = 2 };

inline const char* part_name(SplitPart p) {
  switch (p) {
    case SplitPart::train: return "train";
    case SplitPart::val: return "val";
    case SplitPart::test: return "test";
  }
  return "?";
}

inline SplitPart parse_part(std::string_view s) {
  if (s == "train") return SplitPart::train;
  if (s == "val") return SplitPart::val;
  if (s == "test") return SplitPart::test;
  throw FormatError("unknown split part '" + std::string(s) + "'");
}

struct SplitAssignment {
  std::vector<std::size_t> train_idx, val_idx, test_idx;
  std::uint64_t seed = 0;

  const std::vector<std::size_t>& part(SplitPart p) const {
    return p == SplitPart::train ? train_idx : p == SplitPart::val ? val_idx : test_idx;
  }
  std::vector<std::size_t>& part(SplitPart p) {
    return p == SplitPart::train ? train_idx : p == SplitPart::val ? val_idx : test_idx;
  }
};

/// Largest-remainder apportionment of n items over fractions. Leftover items go
/// to the largest fractional parts; equal fractional parts go to the earlier entry.
inline std::array<std::size_t, 3> apportion(std::size_t n, const std::array<double, 3>& fractions) {
  std::array<std::size_t, 3> out{};
  std::array<double, 3> rem{};
  std::size_t used = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double q = fractions[i] * static_cast<double>(n);
    // Snap values that are integral up to rounding noise (0.15 * 2700 = 404.99999...).
    const double qr = std::round(q);
    const double qq = std::abs(q - qr) < 1e-9 * std::max(1.0, q) ? qr : q;
    out[i] = static_cast<std::size_t>(std::floor(qq));
    rem[i] = qq - std::floor(qq);
    used += out[i];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; used < n; ++k, ++used) ++out[order[k % 3]];
  return out;
}

/// Per-class shuffle (seeded per class) followed by largest-remainder partition.
/// Classes are processed in index order and indices within a part are sorted.
inline SplitAssignment stratified_split(const LabeledSet& set, const std::array<double, 3>& fractions,
                                        std::uint64_t seed) {
  set.check_invariants();
  double sum = 0;
  for (double f : fractions) {
    if (!(f >= 0.0 && f <= 1.0)) throw InvalidArgument("split fractions must lie in [0, 1]");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("split fractions must sum to 1");
  std::array<std::vector<std::size_t>, kNumClasses> by_class;
  for (std::size_t i = 0; i < set.size(); ++i) by_class[static_cast<std::size_t>(set.label(i))].push_back(i);
  for (std::size_t c = 0; c < kNumClasses; ++c)
    if (!by_class[c].empty() && by_class[c].size() < 3)
      throw InvalidArgument("class " + std::to_string(c) + " (" + set.class_names[c] + ") has only " +
                            std::to_string(by_class[c].size()) + " chips; at least 3 are needed to split");

  SplitAssignment out;
  out.seed = seed;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    auto idx = by_class[c];
    Rng rng = make_rng(seed, "split", c);
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[uniform_index(rng, i)]);
    const auto counts = apportion(idx.size(), fractions);
    std::size_t pos = 0;
    for (std::size_t p = 0; p < 3; ++p) {
      auto& dst = out.part(static_cast<SplitPart>(p));
      dst.insert(dst.end(), idx.begin() + static_cast<long>(pos), idx.begin() + static_cast<long>(pos + counts[p]));
      pos += counts[p];
    }
  }
  for (auto p : {SplitPart::train, SplitPart::val, SplitPart::test}) std::sort(out.part(p).begin(), out.part(p).end());
  return out;
}

/// `uuid,label,part` rows in set order, preceded by a `# seed=<n>` line.
inline void write_split(const std::filesystem::path& path, const LabeledSet& set, const SplitAssignment& split) {
  std::vector<const char*> part_of(set.size(), nullptr);
  for (auto p : {SplitPart::train, SplitPart::val, SplitPart::test})
    for (auto i : split.part(p)) part_of.at(i) = part_name(p);
  std::string text = "# seed=" + std::to_string(split.seed) + "\nuuid,label,part\n";
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (!part_of[i]) continue;
    text += csv_join({set.chips[i].uuid, std::to_string(set.label(i)), part_of[i]}) + "\n";
  }
  write_text_file(path, text);
}

/// Resolves a split file against a set by uuid.
inline SplitAssignment read_split(const std::filesystem::path& path, const LabeledSet& set) {
  if (!std::filesystem::exists(path)) throw MissingArtifactError("split file not found: " + path.string());
  std::string text = read_text_file(path);
  SplitAssignment out;
  if (text.rfind("# seed=", 0) == 0) {
    const auto nl = text.find('\n');
    out.seed = static_cast<std::uint64_t>(parse_int(std::string_view(text).substr(7, nl - 7), "split seed"));
    text.erase(0, nl == std::string::npos ? text.size() : nl + 1);
  }
  const auto table = parse_csv(text);
  const auto cu = table.column("uuid"), cl = table.column("label"), cp = table.column("part");
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < set.size(); ++i) pos[set.chips[i].uuid] = i;
  for (const auto& row : table.rows) {
    auto it = pos.find(row[cu]);
    if (it == pos.end()) throw FormatError(path.string() + ": uuid " + row[cu] + " is not in the chip set");
    if (parse_int(row[cl], "label") != set.label(it->second))
      throw FormatError(path.string() + ": label of " + row[cu] + " disagrees with the chip set");
    out.part(parse_part(row[cp])).push_back(it->second);
  }
  for (auto p : {SplitPart::train, SplitPart::val, SplitPart::test}) std::sort(out.part(p).begin(), out.part(p).end());
  return out;
}

}  // namespace lulc::data
