#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace remedy {

enum class TxnOutcome { Committed, RolledBack, Aborted, CompensationFailed };
std::string_view to_string(TxnOutcome outcome) noexcept;
/// Throws ParseError.
TxnOutcome parse_txn_outcome(std::string_view text);

/// One journal record. Besides the three core kinds the log carries
/// RollbackBegin and UndoComplete so an interrupted rollback can resume
/// without re-running undo steps that already took effect.
struct WalEntry {
  enum class Kind { TxnStart, ActionComplete, RollbackBegin, UndoComplete, Outcome };

  std::uint64_t seq = 0;
  Kind kind = Kind::TxnStart;
  std::string txn_id;
  nlohmann::json document;       // TxnStart
  std::size_t action_index = 0;  // ActionComplete, UndoComplete
  std::string token;             // ActionComplete, UndoComplete
  TxnOutcome outcome = TxnOutcome::Committed;  // Outcome

  static WalEntry txn_start(std::string txn_id, nlohmann::json document);
  static WalEntry action_complete(std::string txn_id, std::size_t index, std::string token);
  static WalEntry rollback_begin(std::string txn_id);
  static WalEntry undo_complete(std::string txn_id, std::size_t index, std::string token);
  static WalEntry outcome_of(std::string txn_id, TxnOutcome outcome);

  [[nodiscard]] nlohmann::json to_json() const;
  /// Throws SchemaError.
  static WalEntry from_json(const nlohmann::json& doc);

  friend bool operator==(const WalEntry&, const WalEntry&) = default;
};

std::string_view to_string(WalEntry::Kind kind) noexcept;

/// Ordered, durable append-only log. An entry is durable once append()
/// returns. Implementations are safe for concurrent appends.
class Journal {
 public:
  virtual ~Journal() = default;
  /// Assigns the next sequence number and returns it.
  virtual std::uint64_t append(WalEntry entry) = 0;
  [[nodiscard]] virtual std::vector<WalEntry> entries() const = 0;
};

class MemoryJournal final : public Journal {
 public:
  MemoryJournal() = default;
  explicit MemoryJournal(std::vector<WalEntry> existing);

  std::uint64_t append(WalEntry entry) override;
  [[nodiscard]] std::vector<WalEntry> entries() const override;

 private:
  mutable std::mutex mu_;
  std::vector<WalEntry> entries_;
};

struct WalReadResult {
  std::vector<WalEntry> entries;
  bool tail_truncated = false;
  std::string diagnostic;
};

/// Reads a JSON Lines WAL. A torn final record (unterminated or unparsable
/// last line) is dropped and reported; any earlier damage, or a sequence
/// number that does not strictly increase, throws WalCorruptionError.
WalReadResult read_wal(std::istream& in);
WalReadResult read_wal_file(const std::filesystem::path& path);

/// Per-transaction structure: one TxnStart first, increasing ActionComplete
/// indices, nothing after Outcome. Throws WalCorruptionError.
void check_wal_structure(const std::vector<WalEntry>& entries);

/// JSON Lines file journal. Opening an existing file loads it (truncating a
/// torn tail on disk) and continues its sequence.
class FileJournal final : public Journal {
 public:
  struct Options {
    /// An append is durable once it returns. Turn off only for scratch journals.
    bool fsync = true;
  };

  explicit FileJournal(std::filesystem::path path, Options options);
  explicit FileJournal(std::filesystem::path path) : FileJournal(std::move(path), Options{}) {}
  ~FileJournal() override;
  FileJournal(const FileJournal&) = delete;
  FileJournal& operator=(const FileJournal&) = delete;

  std::uint64_t append(WalEntry entry) override;
  [[nodiscard]] std::vector<WalEntry> entries() const override;
  /// Diagnostic from opening, if a torn tail was dropped.
  [[nodiscard]] const std::optional<std::string>& recovery_diagnostic() const noexcept { return diagnostic_; }

 private:
  std::filesystem::path path_;
  Options options_;
  int fd_ = -1;
  mutable std::mutex mu_;
  std::vector<WalEntry> entries_;
  std::optional<std::string> diagnostic_;
};

}  // namespace remedy
