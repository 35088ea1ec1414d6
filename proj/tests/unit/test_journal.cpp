#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>
#include <unistd.h>

#include "remedy/error.hpp"
#include "remedy/journal.hpp"

using namespace remedy;

namespace {

std::filesystem::path temp_wal(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "remedy-journal-tests";
  std::filesystem::create_directories(dir);
  auto p = dir / (name + "-" + std::to_string(::getpid()) + ".wal");
  std::filesystem::remove(p);
  return p;
}

std::vector<WalEntry> sample_entries() {
  return {WalEntry::txn_start("t1", nlohmann::json{{"txn_id", "t1"}}), WalEntry::action_complete("t1", 0, "t1/a0.0"),
          WalEntry::rollback_begin("t1"), WalEntry::undo_complete("t1", 0, "t1/u0"),
          WalEntry::outcome_of("t1", TxnOutcome::RolledBack)};
}

}  // namespace

TEST(Wal, EntryJsonRoundTrip) {
  std::uint64_t seq = 0;
  for (auto e : sample_entries()) {
    e.seq = ++seq;
    EXPECT_EQ(WalEntry::from_json(e.to_json()), e);
  }
  EXPECT_THROW(WalEntry::from_json(nlohmann::json{{"seq", 1}, {"kind", "bogus"}, {"txn_id", "x"}}), SchemaError);
}

TEST(Wal, MemoryJournalSequencesFromOne) {
  MemoryJournal j;
  EXPECT_EQ(j.append(WalEntry::txn_start("a", {})), 1u);
  EXPECT_EQ(j.append(WalEntry::outcome_of("a", TxnOutcome::Committed)), 2u);
  MemoryJournal resumed(j.entries());
  EXPECT_EQ(resumed.append(WalEntry::txn_start("b", {})), 3u);
}

TEST(Wal, ConcurrentAppendsAreTotallyOrdered) {
  MemoryJournal j;
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 250; ++i) j.append(WalEntry::txn_start("t" + std::to_string(t) + "-" + std::to_string(i), {}));
    });
  }
  for (auto& t : threads) t.join();
  const auto entries = j.entries();
  ASSERT_EQ(entries.size(), 1000u);
  for (std::size_t i = 0; i < entries.size(); ++i) EXPECT_EQ(entries[i].seq, i + 1);
}

TEST(Wal, StructureChecks) {
  auto entries = sample_entries();
  std::uint64_t seq = 0;
  for (auto& e : entries) e.seq = ++seq;
  EXPECT_NO_THROW(check_wal_structure(entries));

  auto after_outcome = entries;
  after_outcome.push_back(WalEntry::action_complete("t1", 1, "x"));
  EXPECT_THROW(check_wal_structure(after_outcome), WalCorruptionError);

  std::vector<WalEntry> orphan{WalEntry::action_complete("t9", 0, "x")};
  EXPECT_THROW(check_wal_structure(orphan), WalCorruptionError);

  std::vector<WalEntry> decreasing{WalEntry::txn_start("t", {}), WalEntry::action_complete("t", 1, "a"),
                                   WalEntry::action_complete("t", 1, "b")};
  EXPECT_THROW(check_wal_structure(decreasing), WalCorruptionError);

  std::vector<WalEntry> twice{WalEntry::txn_start("t", {}), WalEntry::txn_start("t", {})};
  EXPECT_THROW(check_wal_structure(twice), WalCorruptionError);
}

TEST(Wal, TornTailIsDroppedWithDiagnostic) {
  std::ostringstream text;
  std::uint64_t seq = 0;
  for (auto e : sample_entries()) {
    e.seq = ++seq;
    text << e.to_json().dump() << '\n';
  }
  const auto full = text.str();
  std::istringstream torn(full.substr(0, full.size() - 7));
  const auto r = read_wal(torn);
  EXPECT_TRUE(r.tail_truncated);
  EXPECT_EQ(r.entries.size(), 4u);
  EXPECT_NE(r.diagnostic.find("line 5"), std::string::npos);

  std::istringstream garbage_last(full + "{\"seq\": 6, \"kind\"\n");
  EXPECT_TRUE(read_wal(garbage_last).tail_truncated);

  std::istringstream intact(full);
  const auto ok = read_wal(intact);
  EXPECT_FALSE(ok.tail_truncated);
  EXPECT_EQ(ok.entries.size(), 5u);
}

TEST(Wal, DamageBeforeTailIsFatal) {
  std::ostringstream text;
  std::uint64_t seq = 0;
  for (auto e : sample_entries()) {
    e.seq = ++seq;
    text << e.to_json().dump() << '\n';
    if (seq == 2) text << "garbage\n";
  }
  std::istringstream in(text.str());
  EXPECT_THROW(read_wal(in), WalCorruptionError);

  std::istringstream non_increasing(
      "{\"seq\":2,\"kind\":\"rollback_begin\",\"txn_id\":\"a\"}\n{\"seq\":2,\"kind\":\"rollback_begin\",\"txn_id\":\"a\"}\n");
  EXPECT_THROW(read_wal(non_increasing), WalCorruptionError);
}

TEST(Wal, FileJournalPersistsAndRepairsTail) {
  const auto path = temp_wal("file");
  {
    FileJournal j(path);
    for (auto e : sample_entries()) j.append(std::move(e));
  }
  {
    std::ofstream out(path, std::ios::app);
    out << "{\"seq\":6,\"kind\":\"txn_st";  // torn write
  }
  FileJournal reopened(path);
  ASSERT_TRUE(reopened.recovery_diagnostic());
  EXPECT_EQ(reopened.entries().size(), 5u);
  EXPECT_EQ(reopened.append(WalEntry::txn_start("t2", {})), 6u);
  const auto back = read_wal_file(path);
  EXPECT_FALSE(back.tail_truncated);
  ASSERT_EQ(back.entries.size(), 6u);
  EXPECT_EQ(back.entries.back().txn_id, "t2");
  std::filesystem::remove(path);
  EXPECT_THROW(read_wal_file(path), NotFoundError);
}
