#include "remedy/lock_registry.hpp"

namespace remedy {

LockHandle::LockHandle(LockHandle&& other) noexcept
    : registry_(std::exchange(other.registry_, nullptr)),
      keys_(std::move(other.keys_)),
      request_(std::move(other.request_)) {}

LockHandle& LockHandle::operator=(LockHandle&& other) noexcept {
  if (this != &other) {
    release();
    registry_ = std::exchange(other.registry_, nullptr);
    keys_ = std::move(other.keys_);
    request_ = std::move(other.request_);
  }
  return *this;
}

LockHandle::~LockHandle() { release(); }

void LockHandle::release() {
  if (auto* r = std::exchange(registry_, nullptr)) r->release(request_);
}

LockHandle::Request LockRegistry::plan(const std::set<ConflictKey>& keys) {
  std::map<ConflictKey, Mode> modes;
  auto want = [&](const ConflictKey& k, Mode m) {
    auto [it, inserted] = modes.emplace(k, m);
    if (!inserted && m == Mode::Exclusive) it->second = Mode::Exclusive;
  };
  for (const auto& k : keys) {
    switch (k.granularity()) {
      case Granularity::Service:
        want(ConflictKey::of_namespace(k.ns()), Mode::IntentExclusive);
        [[fallthrough]];
      case Granularity::Namespace:
        want(ConflictKey::cluster(), Mode::IntentExclusive);
        [[fallthrough]];
      case Granularity::Cluster:
        want(k, Mode::Exclusive);
        break;
    }
  }
  // std::map iterates in ConflictKey order: cluster, namespaces, services.
  return {modes.begin(), modes.end()};
}

bool LockRegistry::grantable(const Slot& slot, Mode mode) noexcept {
  if (slot.exclusive) return false;
  return mode == Mode::IntentExclusive || slot.intent == 0;
}

void LockRegistry::take(Slot& slot, Mode mode) noexcept {
  if (mode == Mode::Exclusive) {
    slot.exclusive = true;
  } else {
    ++slot.intent;
  }
}

LockHandle LockRegistry::acquire(const std::set<ConflictKey>& keys) {
  auto request = plan(keys);
  std::unique_lock lock(mu_);
  for (const auto& [key, mode] : request) {
    // Re-look up the slot on every wake: release() erases idle slots.
    cv_.wait(lock, [&] { return grantable(slots_[key], mode); });
    take(slots_[key], mode);
  }
  return LockHandle(this, keys, std::move(request));
}

std::optional<LockHandle> LockRegistry::try_acquire(const std::set<ConflictKey>& keys) {
  auto request = plan(keys);
  std::lock_guard lock(mu_);
  for (const auto& [key, mode] : request) {
    auto it = slots_.find(key);
    if (it != slots_.end() && !grantable(it->second, mode)) return std::nullopt;
  }
  for (const auto& [key, mode] : request) take(slots_[key], mode);
  return LockHandle(this, keys, std::move(request));
}

std::set<ConflictKey> LockRegistry::exclusive_holds() const {
  std::lock_guard lock(mu_);
  std::set<ConflictKey> out;
  for (const auto& [key, slot] : slots_) {
    if (slot.exclusive) out.insert(key);
  }
  return out;
}

void LockRegistry::release(const LockHandle::Request& request) {
  {
    std::lock_guard lock(mu_);
    for (const auto& [key, mode] : request) {
      auto it = slots_.find(key);
      if (it == slots_.end()) continue;
      if (mode == Mode::Exclusive) {
        it->second.exclusive = false;
      } else if (it->second.intent > 0) {
        --it->second.intent;
      }
      if (!it->second.exclusive && it->second.intent == 0) slots_.erase(it);
    }
  }
  cv_.notify_all();
}

}  // namespace remedy
