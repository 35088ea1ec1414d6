#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

#include "remedy/journal.hpp"

namespace remedy::testing {

/// Stands in for process death inside Journal::append.
struct SimulatedCrash : std::runtime_error {
  SimulatedCrash() : std::runtime_error("simulated crash") {}
};

/// Memory journal that stamps every append with a tick of a logical clock
/// shared with the simulator.
class RecordingJournal final : public Journal {
 public:
  explicit RecordingJournal(std::shared_ptr<std::atomic<std::uint64_t>> clock) : clock_(std::move(clock)) {}

  std::uint64_t append(WalEntry entry) override {
    std::lock_guard lock(mu_);
    const auto seq = inner_.append(std::move(entry));
    stamps_[seq] = ++(*clock_);
    return seq;
  }
  [[nodiscard]] std::vector<WalEntry> entries() const override { return inner_.entries(); }
  /// Logical time at which entry `seq` became durable.
  [[nodiscard]] std::uint64_t stamp(std::uint64_t seq) const {
    std::lock_guard lock(mu_);
    return stamps_.at(seq);
  }

 private:
  std::shared_ptr<std::atomic<std::uint64_t>> clock_;
  mutable std::mutex mu_;
  MemoryJournal inner_;
  std::map<std::uint64_t, std::uint64_t> stamps_;
};

/// Journal that dies at a chosen append: before it is written or right
/// after. Appends are counted from 1 per instance.
class CrashingJournal final : public Journal {
 public:
  enum class When { Before, After };

  CrashingJournal(std::vector<WalEntry> existing, std::size_t crash_at, When when)
      : inner_(std::move(existing)), crash_at_(crash_at), when_(when) {}

  std::uint64_t append(WalEntry entry) override {
    const auto n = ++appends_;
    if (n == crash_at_ && when_ == When::Before) throw SimulatedCrash();
    const auto seq = inner_.append(std::move(entry));
    if (n == crash_at_ && when_ == When::After) throw SimulatedCrash();
    return seq;
  }
  [[nodiscard]] std::vector<WalEntry> entries() const override { return inner_.entries(); }
  [[nodiscard]] std::size_t appends() const noexcept { return appends_; }

 private:
  MemoryJournal inner_;
  std::size_t crash_at_;
  When when_;
  std::size_t appends_ = 0;
};

}  // namespace remedy::testing
