#include "remedy/journal.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "remedy/error.hpp"

namespace remedy {

std::string_view to_string(TxnOutcome outcome) noexcept {
  switch (outcome) {
    case TxnOutcome::Committed: return "committed";
    case TxnOutcome::RolledBack: return "rolled_back";
    case TxnOutcome::Aborted: return "aborted";
    case TxnOutcome::CompensationFailed: return "compensation_failed";
  }
  return "unknown";
}

TxnOutcome parse_txn_outcome(std::string_view text) {
  for (auto o : {TxnOutcome::Committed, TxnOutcome::RolledBack, TxnOutcome::Aborted, TxnOutcome::CompensationFailed}) {
    if (to_string(o) == text) return o;
  }
  throw ParseError("unknown transaction outcome \"" + std::string(text) + "\"");
}

std::string_view to_string(WalEntry::Kind kind) noexcept {
  switch (kind) {
    case WalEntry::Kind::TxnStart: return "txn_start";
    case WalEntry::Kind::ActionComplete: return "action_complete";
    case WalEntry::Kind::RollbackBegin: return "rollback_begin";
    case WalEntry::Kind::UndoComplete: return "undo_complete";
    case WalEntry::Kind::Outcome: return "outcome";
  }
  return "unknown";
}

WalEntry WalEntry::txn_start(std::string txn_id, nlohmann::json document) {
  WalEntry e;
  e.kind = Kind::TxnStart;
  e.txn_id = std::move(txn_id);
  e.document = std::move(document);
  return e;
}

WalEntry WalEntry::action_complete(std::string txn_id, std::size_t index, std::string token) {
  WalEntry e;
  e.kind = Kind::ActionComplete;
  e.txn_id = std::move(txn_id);
  e.action_index = index;
  e.token = std::move(token);
  return e;
}

WalEntry WalEntry::rollback_begin(std::string txn_id) {
  WalEntry e;
  e.kind = Kind::RollbackBegin;
  e.txn_id = std::move(txn_id);
  return e;
}

WalEntry WalEntry::undo_complete(std::string txn_id, std::size_t index, std::string token) {
  auto e = action_complete(std::move(txn_id), index, std::move(token));
  e.kind = Kind::UndoComplete;
  return e;
}

WalEntry WalEntry::outcome_of(std::string txn_id, TxnOutcome outcome) {
  WalEntry e;
  e.kind = Kind::Outcome;
  e.txn_id = std::move(txn_id);
  e.outcome = outcome;
  return e;
}

nlohmann::json WalEntry::to_json() const {
  nlohmann::json j = {{"seq", seq}, {"kind", to_string(kind)}, {"txn_id", txn_id}};
  switch (kind) {
    case Kind::TxnStart: j["txn"] = document; break;
    case Kind::ActionComplete:
    case Kind::UndoComplete:
      j["action_index"] = action_index;
      j["token"] = token;
      break;
    case Kind::Outcome: j["outcome"] = to_string(outcome); break;
    case Kind::RollbackBegin: break;
  }
  return j;
}

WalEntry WalEntry::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw SchemaError("wal entry: expected an object");
  auto get = [&](const char* key) -> const nlohmann::json& {
    auto it = doc.find(key);
    if (it == doc.end()) throw SchemaError(std::string("wal entry: missing ") + key);
    return *it;
  };
  WalEntry e;
  const auto& seq = get("seq");
  if (!seq.is_number_unsigned()) throw SchemaError("wal entry: seq must be a positive integer");
  e.seq = seq.get<std::uint64_t>();
  const auto& id = get("txn_id");
  if (!id.is_string()) throw SchemaError("wal entry: txn_id must be a string");
  e.txn_id = id.get<std::string>();
  const auto& kind = get("kind");
  if (!kind.is_string()) throw SchemaError("wal entry: kind must be a string");
  const auto k = kind.get<std::string>();
  if (k == "txn_start") {
    e.kind = Kind::TxnStart;
    e.document = get("txn");
  } else if (k == "action_complete" || k == "undo_complete") {
    e.kind = k == "undo_complete" ? Kind::UndoComplete : Kind::ActionComplete;
    const auto& idx = get("action_index");
    const auto& tok = get("token");
    if (!idx.is_number_unsigned() || !tok.is_string()) throw SchemaError("wal entry: bad action_index/token");
    e.action_index = idx.get<std::size_t>();
    e.token = tok.get<std::string>();
  } else if (k == "rollback_begin") {
    e.kind = Kind::RollbackBegin;
  } else if (k == "outcome") {
    e.kind = Kind::Outcome;
    const auto& o = get("outcome");
    if (!o.is_string()) throw SchemaError("wal entry: outcome must be a string");
    try {
      e.outcome = parse_txn_outcome(o.get<std::string>());
    } catch (const ParseError& err) {
      throw SchemaError(std::string("wal entry: ") + err.what());
    }
  } else {
    throw SchemaError("wal entry: unknown kind \"" + k + "\"");
  }
  return e;
}

// ---------------------------------------------------------------------------

MemoryJournal::MemoryJournal(std::vector<WalEntry> existing) : entries_(std::move(existing)) {}

std::uint64_t MemoryJournal::append(WalEntry entry) {
  std::lock_guard lock(mu_);
  entry.seq = entries_.empty() ? 1 : entries_.back().seq + 1;
  entries_.push_back(std::move(entry));
  return entries_.back().seq;
}

std::vector<WalEntry> MemoryJournal::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

// ---------------------------------------------------------------------------

namespace {

struct ParsedWal {
  WalReadResult result;
  std::size_t valid_bytes = 0;
};

ParsedWal parse_wal_text(const std::string& text) {
  ParsedWal out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    ++line_no;
    const auto nl = text.find('\n', pos);
    const bool terminated = nl != std::string::npos;
    const auto end = terminated ? nl : text.size();
    const std::string_view line(text.data() + pos, end - pos);
    const bool last = !terminated || end + 1 == text.size();

    std::optional<WalEntry> entry;
    std::string problem;
    if (!terminated) {
      problem = "unterminated record";
    } else {
      auto doc = nlohmann::json::parse(line, nullptr, false);
      if (doc.is_discarded()) {
        problem = "unparsable JSON";
      } else {
        try {
          entry = WalEntry::from_json(doc);
        } catch (const SchemaError& e) {
          problem = e.what();
        }
      }
    }
    if (!problem.empty()) {
      if (last) {
        out.result.tail_truncated = true;
        out.result.diagnostic = "dropped torn WAL tail at line " + std::to_string(line_no) + ": " + problem;
        return out;
      }
      throw WalCorruptionError("WAL corrupt at line " + std::to_string(line_no) + ": " + problem);
    }
    const std::uint64_t prev = out.result.entries.empty() ? 0 : out.result.entries.back().seq;
    if (entry->seq <= prev) {
      throw WalCorruptionError("WAL corrupt at line " + std::to_string(line_no) + ": seq " + std::to_string(entry->seq) +
                               " does not follow " + std::to_string(prev));
    }
    out.result.entries.push_back(*std::move(entry));
    pos = end + 1;
    out.valid_bytes = pos;
  }
  return out;
}

std::string slurp(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

WalReadResult read_wal(std::istream& in) { return parse_wal_text(slurp(in)).result; }

WalReadResult read_wal_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open WAL file " + path.string());
  return read_wal(in);
}

void check_wal_structure(const std::vector<WalEntry>& entries) {
  struct State {
    long long last_action = -1;
    bool rolling_back = false;
    bool done = false;
  };
  std::map<std::string, State> txns;
  for (const auto& e : entries) {
    const auto where = "seq " + std::to_string(e.seq) + " (" + e.txn_id + ")";
    auto it = txns.find(e.txn_id);
    if (e.kind == WalEntry::Kind::TxnStart) {
      if (it != txns.end()) throw WalCorruptionError(where + ": duplicate txn_start");
      txns.emplace(e.txn_id, State{});
      continue;
    }
    if (it == txns.end()) throw WalCorruptionError(where + ": entry before txn_start");
    auto& st = it->second;
    if (st.done) throw WalCorruptionError(where + ": entry after outcome");
    switch (e.kind) {
      case WalEntry::Kind::ActionComplete:
        if (st.rolling_back) throw WalCorruptionError(where + ": action_complete after rollback_begin");
        if (static_cast<long long>(e.action_index) <= st.last_action) {
          throw WalCorruptionError(where + ": action indices not strictly increasing");
        }
        st.last_action = static_cast<long long>(e.action_index);
        break;
      case WalEntry::Kind::RollbackBegin:
        if (st.rolling_back) throw WalCorruptionError(where + ": duplicate rollback_begin");
        st.rolling_back = true;
        break;
      case WalEntry::Kind::UndoComplete:
        if (!st.rolling_back) throw WalCorruptionError(where + ": undo_complete without rollback_begin");
        break;
      case WalEntry::Kind::Outcome:
        st.done = true;
        break;
      case WalEntry::Kind::TxnStart:
        break;
    }
  }
}

// ---------------------------------------------------------------------------

FileJournal::FileJournal(std::filesystem::path path, Options options) : path_(std::move(path)), options_(options) {
  const bool existed = std::filesystem::exists(path_);
  if (existed) {
    std::ifstream in(path_, std::ios::binary);
    if (!in) throw Error("cannot read WAL file " + path_.string());
    auto parsed = parse_wal_text(slurp(in));
    in.close();
    if (parsed.result.tail_truncated) {
      std::filesystem::resize_file(path_, parsed.valid_bytes);
      diagnostic_ = parsed.result.diagnostic;
    }
    entries_ = std::move(parsed.result.entries);
  }
  fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) throw Error("cannot open WAL file " + path_.string() + ": " + std::strerror(errno));
  if (options_.fsync && !existed) {
    // Make the new directory entry durable too.
    auto dir = path_.parent_path();
    if (dir.empty()) dir = ".";
    const int dfd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
    if (dfd >= 0) {
      ::fsync(dfd);
      ::close(dfd);
    }
  }
}

FileJournal::~FileJournal() {
  if (fd_ >= 0) ::close(fd_);
}

std::uint64_t FileJournal::append(WalEntry entry) {
  std::lock_guard lock(mu_);
  entry.seq = entries_.empty() ? 1 : entries_.back().seq + 1;
  const std::string line = entry.to_json().dump() + "\n";
  std::size_t written = 0;
  while (written < line.size()) {
    const auto n = ::write(fd_, line.data() + written, line.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error("WAL append failed: " + std::string(std::strerror(errno)));
    }
    written += static_cast<std::size_t>(n);
  }
  if (options_.fsync && ::fsync(fd_) != 0) throw Error("WAL fsync failed: " + std::string(std::strerror(errno)));
  entries_.push_back(std::move(entry));
  return entries_.back().seq;
}

std::vector<WalEntry> FileJournal::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

}  // namespace remedy
