#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <future>
#include <random>
#include <thread>

#include "remedy/lock_registry.hpp"

using namespace remedy;
using namespace std::chrono_literals;

namespace {
ConflictKey svc(const char* ns, const char* name) { return ConflictKey::of_service(ServiceRef(ns, name)); }
}  // namespace

TEST(Locks, DisjointServiceKeysCoexist) {
  LockRegistry reg;
  auto a = reg.acquire({svc("prod", "a")});
  auto b = reg.try_acquire({svc("prod", "b")});
  EXPECT_TRUE(b);
  EXPECT_FALSE(reg.try_acquire({svc("prod", "a")}));
}

TEST(Locks, NamespaceAndClusterConflictWithServices) {
  LockRegistry reg;
  auto a = reg.acquire({svc("prod", "cart")});
  EXPECT_FALSE(reg.try_acquire({ConflictKey::of_namespace("prod")}));
  EXPECT_FALSE(reg.try_acquire({ConflictKey::cluster()}));
  EXPECT_TRUE(reg.try_acquire({ConflictKey::of_namespace("staging")}));
  a.release();
  auto ns = reg.try_acquire({ConflictKey::of_namespace("prod")});
  ASSERT_TRUE(ns);
  EXPECT_FALSE(reg.try_acquire({svc("prod", "x")}));
  EXPECT_TRUE(reg.try_acquire({svc("dev", "x")}));
  EXPECT_EQ(reg.exclusive_holds(), std::set<ConflictKey>{ConflictKey::of_namespace("prod")});
}

TEST(Locks, ServiceRequestBlocksUntilNamespaceReleased) {
  LockRegistry reg;
  auto ns = reg.acquire({ConflictKey::of_namespace("prod")});
  std::atomic<bool> got{false};
  auto waiter = std::async(std::launch::async, [&] {
    auto h = reg.acquire({svc("prod", "cart")});
    got = true;
  });
  std::this_thread::sleep_for(50ms);
  EXPECT_FALSE(got.load());
  ns.release();
  ASSERT_EQ(waiter.wait_for(5s), std::future_status::ready);
  EXPECT_TRUE(got.load());
}

TEST(Locks, HandleMoveAndRelease) {
  LockRegistry reg;
  LockHandle outer;
  {
    auto h = reg.acquire({svc("prod", "a")});
    outer = std::move(h);
    EXPECT_FALSE(h.held());
  }
  EXPECT_TRUE(outer.held());
  EXPECT_FALSE(reg.try_acquire({svc("prod", "a")}));
  outer.release();
  EXPECT_TRUE(reg.try_acquire({svc("prod", "a")}));
  EXPECT_TRUE(reg.exclusive_holds().empty());
}

TEST(Locks, RandomOverlappingSetsNeverDeadlock) {
  LockRegistry reg;
  std::vector<ConflictKey> universe{ConflictKey::cluster(), ConflictKey::of_namespace("a"),
                                    ConflictKey::of_namespace("b")};
  for (const char* ns : {"a", "b"})
    for (const char* n : {"1", "2", "3", "4"}) universe.push_back(svc(ns, n));
  std::atomic<int> done{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 6; ++t) {
    threads.emplace_back([&, t] {
      std::mt19937_64 rng(static_cast<unsigned>(t));
      for (int i = 0; i < 200; ++i) {
        std::set<ConflictKey> keys;
        const auto n = 1 + rng() % 3;
        for (std::size_t k = 0; k < n; ++k) keys.insert(universe[rng() % universe.size()]);
        auto h = reg.acquire(keys);
        // Overlapping keys must not be held by anyone else right now.
        for (const auto& k : keys) EXPECT_FALSE(reg.try_acquire({k}));
      }
      ++done;
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(done.load(), 6);
}
