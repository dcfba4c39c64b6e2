#pragma once

#include <algorithm>
#include <chrono>

namespace lulc {

/// Time source in seconds. Durations are differences of now() readings.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual double now() = 0;
};

/// std::chrono::steady_clock, seconds since construction.
class SteadyClock final : public Clock {
 public:
  double now() override {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// Test clock that only moves when told to.
class ManualClock final : public Clock {
 public:
  double now() override { return t_; }
  void advance(double seconds) { t_ += seconds; }
  void set(double t) { t_ = t; }

 private:
  double t_ = 0.0;
};

/// Every reading advances time by a fixed step. Runs that read the clock the
/// same number of times report the same durations, which makes timing columns
/// reproducible byte for byte.
class StepClock final : public Clock {
 public:
  explicit StepClock(double step = 1e-3) : step_(step) {}
  double now() override { return t_ += step_; }

 private:
  double step_;
  double t_ = 0.0;
};

/// Never returns a reading earlier than a previous one, so durations measured
/// through it are non-negative even if the underlying source steps backwards.
class MonotonicClock final : public Clock {
 public:
  explicit MonotonicClock(Clock& inner) : inner_(inner) {}
  double now() override {
    last_ = std::max(last_, inner_.now());
    return last_;
  }

 private:
  Clock& inner_;
  double last_ = -1e300;
};

}  // namespace lulc
