#pragma once

#include <condition_variable>
#include <deque>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>

#include "lulc/core/parallel.hpp"
#include "lulc/data/augment.hpp"
#include "lulc/data/dataset.hpp"
#include "lulc/nn/tensor.hpp"

namespace lulc::data {

struct Batch {
  nn::Tensor<float> images;  // N × C × target × target
  std::vector<int> labels;
  std::vector<std::size_t> indices;  // positions in the LabeledSet
};

struct BatchOptions {
  std::size_t batch_size = 16;
  bool shuffle = false;
  std::uint64_t seed = 0;
  bool augment = false;  // training view when true, evaluation view otherwise
  AugmentationConfig aug;
  geo::ChannelStats stats{{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}};
  std::size_t prefetch = 0;  // batches prepared ahead on a background thread

  void validate() const {
    if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
    aug.validate();
  }
};

inline std::size_t batch_count(std::size_t n, std::size_t batch_size) { return (n + batch_size - 1) / batch_size; }

/// Visiting order for one epoch. With shuffle, epoch e uses a Fisher-Yates
/// permutation drawn from the stream derive_seed(seed, "shuffle", e), so every
/// epoch gets a fresh order and any epoch can be replayed on its own.
inline std::vector<std::size_t> epoch_order(std::vector<std::size_t> indices, bool shuffle, std::uint64_t seed,
                                            std::uint64_t epoch) {
  if (!shuffle) return indices;
  Rng rng = make_rng(seed, "shuffle", epoch);
  for (std::size_t i = indices.size(); i > 1; --i) std::swap(indices[i - 1], indices[uniform_index(rng, i)]);
  return indices;
}

/// Batch b of an epoch. Sample k of the epoch draws its augmentation from
/// derive_seed(seed, "augment", epoch, k), independent of batching and threads.
inline Batch make_batch(const LabeledSet& set, const std::vector<std::size_t>& order, std::size_t b,
                        const BatchOptions& opt, std::uint64_t epoch) {
  const std::size_t begin = b * opt.batch_size;
  const std::size_t end = std::min(order.size(), begin + opt.batch_size);
  if (begin >= end) throw IndexError("batch " + std::to_string(b) + " is past the end of the epoch");
  const std::size_t n = end - begin;
  const std::size_t C = set.chips[order[begin]].bands, S = opt.aug.target_size;
  Batch batch{nn::Tensor<float>({n, C, S, S}), std::vector<int>(n), std::vector<std::size_t>(n)};
  parallel_for(n, [&](std::size_t i) {
    const std::size_t pos = begin + i;
    const auto& chip = set.chips.at(order[pos]);
    if (chip.bands != C) throw ShapeError("chip " + chip.uuid + " has a different band count from its batch");
    const Image src = image_from_chip(chip);
    Image img;
    if (opt.augment) {
      Rng rng = make_rng(opt.seed, "augment", epoch, pos);
      img = train_transform(src, opt.aug, opt.stats, rng);
    } else {
      img = eval_transform(src, opt.aug, opt.stats);
    }
    std::copy(img.data.begin(), img.data.end(), batch.images.data() + i * C * S * S);
    batch.labels[i] = *chip.label;
    batch.indices[i] = order[pos];
  });
  return batch;
}

/// Yields the batches of one epoch in order. With prefetch depth k > 0 a
/// background thread prepares up to k batches ahead; the delivered sequence is
/// the same as without prefetch.
class BatchStream {
 public:
  BatchStream(const LabeledSet& set, const std::vector<std::size_t>& indices, BatchOptions opt, std::uint64_t epoch)
      : set_(set), opt_(std::move(opt)), epoch_(epoch) {
    opt_.validate();
    order_ = epoch_order(indices, opt_.shuffle, opt_.seed, epoch_);
    total_ = batch_count(order_.size(), opt_.batch_size);
    if (opt_.prefetch > 0 && total_ > 0) worker_ = std::thread([this] { produce(); });
  }
  ~BatchStream() {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    if (worker_.joinable()) worker_.join();
  }
  BatchStream(const BatchStream&) = delete;
  BatchStream& operator=(const BatchStream&) = delete;

  std::size_t size() const { return total_; }
  const std::vector<std::size_t>& order() const { return order_; }

  std::optional<Batch> next() {
    if (delivered_ >= total_) return std::nullopt;
    if (!worker_.joinable()) return make_batch(set_, order_, delivered_++, opt_, epoch_);
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return !queue_.empty() || failure_; });
    if (queue_.empty()) std::rethrow_exception(failure_);
    Batch b = std::move(queue_.front());
    queue_.pop_front();
    ++delivered_;
    cv_.notify_all();
    return b;
  }

 private:
  void produce() {
    try {
      for (std::size_t b = 0; b < total_; ++b) {
        {
          std::unique_lock lock(mu_);
          cv_.wait(lock, [&] { return stop_ || queue_.size() < opt_.prefetch; });
          if (stop_) return;
        }
        Batch batch = make_batch(set_, order_, b, opt_, epoch_);
        {
          std::lock_guard lock(mu_);
          queue_.push_back(std::move(batch));
        }
        cv_.notify_all();
      }
    } catch (...) {
      std::lock_guard lock(mu_);
      failure_ = std::current_exception();
      cv_.notify_all();
    }
  }

  const LabeledSet& set_;
  BatchOptions opt_;
  std::uint64_t epoch_;
  std::vector<std::size_t> order_;
  std::size_t total_ = 0;
  std::size_t delivered_ = 0;

  std::thread worker_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Batch> queue_;
  std::exception_ptr failure_;
  bool stop_ = false;
};

}  // namespace lulc::data
