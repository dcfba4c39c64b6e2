#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lulc/core/text.hpp"
#include "lulc/train/trainer.hpp"

namespace lulc::train {

inline constexpr const char* kHistoryHeader =
    "epoch,train_loss,train_acc,val_loss,val_acc,epoch_seconds,train_it_s,val_it_s";

inline std::string history_csv(const std::vector<EpochRecord>& records) {
  std::string out = std::string(kHistoryHeader) + "\n";
  for (const auto& r : records) {
    out += csv_join({std::to_string(r.epoch), format_number(r.train_loss), format_number(r.train_acc),
                     format_number(r.val_loss), format_number(r.val_acc), format_number(r.epoch_seconds),
                     format_number(r.train_it_per_s), format_number(r.val_it_per_s)});
    out += '\n';
  }
  return out;
}

inline void write_history(const std::filesystem::path& path, const std::vector<EpochRecord>& records) {
  write_text_file(path, history_csv(records));
}

inline std::vector<EpochRecord> read_history(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw MissingArtifactError("history file not found: " + path.string());
  const auto t = read_csv(path);
  std::vector<EpochRecord> out;
  const auto ce = t.column("epoch"), ctl = t.column("train_loss"), cta = t.column("train_acc"),
             cvl = t.column("val_loss"), cva = t.column("val_acc"), ces = t.column("epoch_seconds"),
             ctr = t.column("train_it_s"), cvr = t.column("val_it_s");
  for (const auto& row : t.rows) {
    EpochRecord r;
    r.epoch = static_cast<std::size_t>(parse_int(row[ce], "epoch"));
    r.train_loss = parse_double(row[ctl], "train_loss");
    r.train_acc = parse_double(row[cta], "train_acc");
    r.val_loss = parse_double(row[cvl], "val_loss");
    r.val_acc = parse_double(row[cva], "val_acc");
    r.epoch_seconds = parse_double(row[ces], "epoch_seconds");
    r.train_it_per_s = parse_double(row[ctr], "train_it_s");
    r.val_it_per_s = parse_double(row[cvr], "val_it_s");
    out.push_back(r);
  }
  return out;
}

}  // namespace lulc::train
