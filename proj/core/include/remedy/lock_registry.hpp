#pragma once

#include <condition_variable>
#include <cstddef>
#include <map>
#include <mutex>
#include <set>
#include <utility>
#include <vector>

#include "remedy/isa.hpp"

namespace remedy {

class LockRegistry;

/// Releases its locks on destruction.
class LockHandle {
 public:
  LockHandle() = default;
  LockHandle(LockHandle&& other) noexcept;
  LockHandle& operator=(LockHandle&& other) noexcept;
  LockHandle(const LockHandle&) = delete;
  LockHandle& operator=(const LockHandle&) = delete;
  ~LockHandle();

  void release();
  [[nodiscard]] bool held() const noexcept { return registry_ != nullptr; }
  [[nodiscard]] const std::set<ConflictKey>& keys() const noexcept { return keys_; }

 private:
  friend class LockRegistry;
  enum class Mode { IntentExclusive, Exclusive };
  using Request = std::vector<std::pair<ConflictKey, Mode>>;

  LockHandle(LockRegistry* registry, std::set<ConflictKey> keys, Request request)
      : registry_(registry), keys_(std::move(keys)), request_(std::move(request)) {}

  LockRegistry* registry_ = nullptr;
  std::set<ConflictKey> keys_;
  Request request_;
};

/// Multi-granularity lock table. A Service key takes intention locks on its
/// namespace and the cluster, a Namespace key on the cluster, so keys that
/// overlap (one subsumes the other) conflict and all others are compatible.
/// Resources are taken one at a time in ConflictKey order, which rules out
/// deadlock among blocking acquirers.
class LockRegistry {
 public:
  /// Blocks until every key is held.
  LockHandle acquire(const std::set<ConflictKey>& keys);
  /// All-or-nothing, never blocks.
  std::optional<LockHandle> try_acquire(const std::set<ConflictKey>& keys);

  /// Resources currently held with an exclusive lock.
  [[nodiscard]] std::set<ConflictKey> exclusive_holds() const;

 private:
  friend class LockHandle;
  using Mode = LockHandle::Mode;
  struct Slot {
    std::size_t intent = 0;
    bool exclusive = false;
  };

  static LockHandle::Request plan(const std::set<ConflictKey>& keys);
  static bool grantable(const Slot& slot, Mode mode) noexcept;
  static void take(Slot& slot, Mode mode) noexcept;
  void release(const LockHandle::Request& request);

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::map<ConflictKey, Slot> slots_;
};

}  // namespace remedy
