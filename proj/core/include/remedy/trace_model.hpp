#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "remedy/service_ref.hpp"

namespace remedy {

enum class SpanStatus { Ok, Error };

/// One row of trace data: a single caller -> callee invocation.
struct SpanRecord {
  std::string trace_id;
  std::string span_id;
  std::optional<std::string> parent_span_id;
  std::optional<ServiceRef> caller;
  ServiceRef callee;
  std::int64_t start_us = 0;
  std::int64_t duration_us = 0;
  SpanStatus status = SpanStatus::Ok;

  /// No caller and no parent span.
  [[nodiscard]] bool is_root() const noexcept { return !caller && !parent_span_id; }

  friend bool operator==(const SpanRecord&, const SpanRecord&) = default;
};

/// Half-open interval [start, end) in microseconds.
class TimeWindow {
 public:
  /// Throws ConfigError unless start < end.
  TimeWindow(std::int64_t start_us, std::int64_t end_us);

  /// The widest representable window.
  static TimeWindow unbounded() noexcept;
  /// Parses `start:end` (microseconds). Throws ConfigError.
  static TimeWindow parse(std::string_view text);

  [[nodiscard]] std::int64_t start() const noexcept { return start_; }
  [[nodiscard]] std::int64_t end() const noexcept { return end_; }
  [[nodiscard]] bool contains(std::int64_t t) const noexcept { return t >= start_ && t < end_; }

  friend bool operator==(const TimeWindow&, const TimeWindow&) = default;

 private:
  TimeWindow() = default;
  std::int64_t start_ = std::numeric_limits<std::int64_t>::min();
  std::int64_t end_ = std::numeric_limits<std::int64_t>::max();
};

// ---------------------------------------------------------------------------
// Ingestion

enum class TraceFormat { JsonLines, AlibabaCsv };

/// Accepts `jsonl` / `json-lines` and `alibaba-csv` / `alibaba`.
/// Throws ConfigError for anything else.
TraceFormat parse_trace_format(std::string_view tag);

struct IngestReport {
  std::size_t rows_read = 0;
  std::size_t rows_skipped = 0;
  std::size_t self_calls_dropped = 0;

  friend bool operator==(const IngestReport&, const IngestReport&) = default;
};

struct IngestOptions {
  /// Namespace given to bare service names (Alibaba rows carry no namespace).
  std::string default_namespace = "default";
};

struct IngestResult {
  std::vector<SpanRecord> spans;
  IngestReport report;
};

/// Reads span rows from `in`. Malformed rows are skipped and counted, valid
/// rows keep their input order, self-calls are dropped. Blank lines are not
/// rows. Throws IngestError if the stream is unreadable.
IngestResult ingest_spans(std::istream& in, TraceFormat format, const IngestOptions& options = {});
IngestResult ingest_file(const std::filesystem::path& path, TraceFormat format, const IngestOptions& options = {});

// ---------------------------------------------------------------------------
// Call graph

using NodeId = std::uint32_t;

struct WeightedEdge {
  ServiceRef caller;
  ServiceRef callee;
  std::uint64_t count = 1;

  friend bool operator==(const WeightedEdge&, const WeightedEdge&) = default;
};

struct Adjacent {
  NodeId node;
  std::uint64_t weight;
};

/// Immutable weighted service dependency graph. Services are stored in
/// canonical order so NodeId order equals ServiceRef order.
class CallGraph {
 public:
  CallGraph() = default;

  /// Builds a graph from explicit services and edges. Edge endpoints are
  /// added to the service set; duplicate edges are summed; self-loops and
  /// zero-count edges are ignored.
  static CallGraph from_edges(std::vector<ServiceRef> services, std::span<const WeightedEdge> edges,
                              TimeWindow window = TimeWindow::unbounded());

  [[nodiscard]] const TimeWindow& window() const noexcept { return window_; }
  [[nodiscard]] std::size_t service_count() const noexcept { return services_.size(); }
  [[nodiscard]] std::size_t edge_count() const noexcept { return out_adj_.size(); }
  [[nodiscard]] std::span<const ServiceRef> services() const noexcept { return services_; }
  [[nodiscard]] const ServiceRef& service(NodeId id) const { return services_.at(id); }

  [[nodiscard]] std::optional<NodeId> find(const ServiceRef& ref) const noexcept;
  /// Throws NotFoundError.
  [[nodiscard]] NodeId require(const ServiceRef& ref) const;
  [[nodiscard]] bool contains(const ServiceRef& ref) const noexcept { return find(ref).has_value(); }

  /// Outgoing edges sorted by callee id.
  [[nodiscard]] std::span<const Adjacent> callees(NodeId id) const noexcept;
  /// Incoming edges sorted by caller id.
  [[nodiscard]] std::span<const Adjacent> callers(NodeId id) const noexcept;
  [[nodiscard]] std::size_t fan_in(NodeId id) const noexcept { return callers(id).size(); }
  [[nodiscard]] std::size_t fan_out(NodeId id) const noexcept { return callees(id).size(); }

  /// Zero when there is no such edge.
  [[nodiscard]] std::uint64_t weight(NodeId caller, NodeId callee) const noexcept;
  [[nodiscard]] std::uint64_t out_weight(NodeId id) const noexcept;
  [[nodiscard]] std::uint64_t total_weight() const noexcept;

  /// All edges in (caller, callee) canonical order.
  [[nodiscard]] std::vector<WeightedEdge> edges() const;

  friend bool operator==(const CallGraph& a, const CallGraph& b);

 private:
  TimeWindow window_ = TimeWindow::unbounded();
  std::vector<ServiceRef> services_;
  std::vector<std::uint32_t> out_offsets_{0};
  std::vector<Adjacent> out_adj_;
  std::vector<std::uint32_t> in_offsets_{0};
  std::vector<Adjacent> in_adj_;
};

/// Counts spans whose start lies in `window`. Spans without a caller add
/// only their callee as a node.
CallGraph build_call_graph(std::span<const SpanRecord> spans, const TimeWindow& window);

/// Number of services with a directed path to `service` (transitive
/// upstream callers), excluding the service itself. Throws NotFoundError.
std::size_t blast_radius(const CallGraph& graph, const ServiceRef& service);
std::size_t blast_radius(const CallGraph& graph, NodeId service);

struct ServiceConnectivity {
  ServiceRef service;
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;

  friend bool operator==(const ServiceConnectivity&, const ServiceConnectivity&) = default;
};

struct ConnectivityReport {
  std::vector<ServiceConnectivity> services;  // canonical order
  std::optional<ServiceConnectivity> max_fan_in;
  std::optional<ServiceConnectivity> max_fan_out;
};

/// Distinct caller / callee counts per service. Extremes break ties by
/// canonical order.
ConnectivityReport connectivity_stats(const CallGraph& graph);

}  // namespace remedy
