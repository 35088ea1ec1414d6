#include "remedy/trace_model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <nlohmann/json.hpp>
#include <tuple>
#include <unordered_set>
#include <utility>

#include "remedy/error.hpp"

namespace remedy {

// ---------------------------------------------------------------------------
// TimeWindow

TimeWindow::TimeWindow(std::int64_t start_us, std::int64_t end_us) : start_(start_us), end_(end_us) {
  if (!(start_us < end_us)) {
    throw ConfigError("time window requires start < end (got " + std::to_string(start_us) + ":" +
                      std::to_string(end_us) + ")");
  }
}

TimeWindow TimeWindow::unbounded() noexcept { return TimeWindow{}; }

namespace {

template <class T>
std::optional<T> parse_number(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
  if (text.empty()) return std::nullopt;
  T value{};
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) return std::nullopt;
  return value;
}

}  // namespace

TimeWindow TimeWindow::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw ConfigError("window must be start:end, got \"" + std::string(text) + "\"");
  auto start = parse_number<std::int64_t>(text.substr(0, colon));
  auto end = parse_number<std::int64_t>(text.substr(colon + 1));
  if (!start || !end) throw ConfigError("window bounds must be integers, got \"" + std::string(text) + "\"");
  return TimeWindow(*start, *end);
}

// ---------------------------------------------------------------------------
// Ingestion

TraceFormat parse_trace_format(std::string_view tag) {
  if (tag == "jsonl" || tag == "json-lines" || tag == "jsonlines") return TraceFormat::JsonLines;
  if (tag == "alibaba-csv" || tag == "alibaba") return TraceFormat::AlibabaCsv;
  throw ConfigError("unknown trace format \"" + std::string(tag) + "\" (expected jsonl or alibaba-csv)");
}

namespace {

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(), [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

std::optional<SpanRecord> parse_json_row(std::string_view line) {
  auto doc = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) return std::nullopt;

  auto text_field = [&](const char* key) -> const std::string* {
    auto it = doc.find(key);
    if (it == doc.end() || !it->is_string()) return nullptr;
    return it->get_ptr<const std::string*>();
  };
  auto optional_text = [&](const char* key, bool& ok) -> std::optional<std::string> {
    auto it = doc.find(key);
    if (it == doc.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) {
      ok = false;
      return std::nullopt;
    }
    return it->get<std::string>();
  };

  SpanRecord span;
  const auto* trace_id = text_field("trace_id");
  const auto* span_id = text_field("span_id");
  const auto* callee = text_field("callee");
  if (!trace_id || !span_id || !callee || trace_id->empty() || span_id->empty()) return std::nullopt;
  span.trace_id = *trace_id;
  span.span_id = *span_id;

  auto callee_ref = ServiceRef::try_parse(*callee);
  if (!callee_ref) return std::nullopt;
  span.callee = *std::move(callee_ref);

  bool ok = true;
  span.parent_span_id = optional_text("parent_span_id", ok);
  if (auto caller = optional_text("caller", ok)) {
    auto caller_ref = ServiceRef::try_parse(*caller);
    if (!caller_ref) return std::nullopt;
    span.caller = *std::move(caller_ref);
  }
  if (!ok) return std::nullopt;

  auto start = doc.find("start_us");
  if (start == doc.end() || !start->is_number_integer()) return std::nullopt;
  span.start_us = start->get<std::int64_t>();

  if (auto dur = doc.find("duration_us"); dur != doc.end()) {
    if (!dur->is_number_integer()) return std::nullopt;
    span.duration_us = dur->get<std::int64_t>();
    if (span.duration_us < 0) return std::nullopt;
  }

  if (auto status = doc.find("status"); status != doc.end() && !status->is_null()) {
    if (!status->is_string()) return std::nullopt;
    const auto& s = status->get_ref<const std::string&>();
    if (s == "ok" || s == "Ok" || s == "OK") {
      span.status = SpanStatus::Ok;
    } else if (s == "error" || s == "Error" || s == "ERROR") {
      span.status = SpanStatus::Error;
    } else {
      return std::nullopt;
    }
  }
  return span;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    out.push_back(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  for (auto& field : out) {
    while (!field.empty() && (field.front() == ' ' || field.front() == '"')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '"' || field.back() == '\r')) field.remove_suffix(1);
  }
  return out;
}

struct AlibabaColumns {
  std::size_t timestamp, traceid, rpcid, um, dm, rt;
  std::size_t required_width;
};

AlibabaColumns locate_columns(std::string_view header) {
  auto names = split_csv(header);
  auto find = [&](std::string_view col) -> std::size_t {
    for (std::size_t i = 0; i < names.size(); ++i) {
      std::string lower(names[i]);
      std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
      if (lower == col) return i;
    }
    throw IngestError("alibaba csv header is missing column \"" + std::string(col) + "\"");
  };
  AlibabaColumns cols{find("timestamp"), find("traceid"), find("rpcid"), find("um"), find("dm"), find("rt"), 0};
  cols.required_width = 1 + std::max({cols.timestamp, cols.traceid, cols.rpcid, cols.um, cols.dm, cols.rt});
  return cols;
}

bool missing_endpoint(std::string_view v) { return v.empty() || v == "?" || v == "(?)" || v == "UNKNOWN" || v == "UNAVAILABLE"; }

std::optional<ServiceRef> alibaba_ref(std::string_view v, const IngestOptions& options) {
  if (v.find('/') != std::string_view::npos) return ServiceRef::try_parse(v);
  return ServiceRef{options.default_namespace, std::string(v)};
}

std::optional<SpanRecord> parse_alibaba_row(std::string_view line, const AlibabaColumns& cols,
                                            const IngestOptions& options) {
  auto fields = split_csv(line);
  if (fields.size() < cols.required_width) return std::nullopt;
  const auto um = fields[cols.um];
  const auto dm = fields[cols.dm];
  if (missing_endpoint(um) || missing_endpoint(dm)) return std::nullopt;
  if (fields[cols.traceid].empty() || fields[cols.rpcid].empty()) return std::nullopt;

  auto ts_ms = parse_number<std::int64_t>(fields[cols.timestamp]);
  auto rt_ms = parse_number<double>(fields[cols.rt]);
  if (!ts_ms || !rt_ms) return std::nullopt;

  auto caller = alibaba_ref(um, options);
  auto callee = alibaba_ref(dm, options);
  if (!caller || !callee) return std::nullopt;

  SpanRecord span;
  span.trace_id = std::string(fields[cols.traceid]);
  span.span_id = std::string(fields[cols.rpcid]);
  const auto rpcid = fields[cols.rpcid];
  if (auto dot = rpcid.rfind('.'); dot != std::string_view::npos) span.parent_span_id = std::string(rpcid.substr(0, dot));
  span.caller = *std::move(caller);
  span.callee = *std::move(callee);
  span.start_us = *ts_ms * 1000;
  // Asynchronous calls report negative response times; they still witness
  // the dependency, so keep the edge with zero duration.
  span.duration_us = *rt_ms > 0 ? static_cast<std::int64_t>(*rt_ms * 1000.0) : 0;
  return span;
}

}  // namespace

IngestResult ingest_spans(std::istream& in, TraceFormat format, const IngestOptions& options) {
  if (!in.good() && !in.eof()) throw IngestError("trace source is not readable");

  IngestResult result;
  std::unordered_set<std::string> seen_ids;
  std::optional<AlibabaColumns> columns;
  std::string line;

  while (std::getline(in, line)) {
    if (is_blank(line)) continue;
    if (format == TraceFormat::AlibabaCsv && !columns) {
      columns = locate_columns(line);
      continue;
    }
    ++result.report.rows_read;

    std::optional<SpanRecord> span = format == TraceFormat::JsonLines ? parse_json_row(line)
                                                                       : parse_alibaba_row(line, *columns, options);
    if (!span) {
      ++result.report.rows_skipped;
      continue;
    }
    std::string key = span->trace_id;
    key.push_back('\x1f');
    key.append(span->span_id);
    if (!seen_ids.insert(std::move(key)).second) {
      ++result.report.rows_skipped;
      continue;
    }
    if (span->caller && *span->caller == span->callee) {
      ++result.report.self_calls_dropped;
      continue;
    }
    result.spans.push_back(*std::move(span));
  }
  if (in.bad()) throw IngestError("I/O error while reading trace source");
  return result;
}

IngestResult ingest_file(const std::filesystem::path& path, TraceFormat format, const IngestOptions& options) {
  std::ifstream file(path);
  if (!file.is_open()) throw IngestError("cannot open trace file " + path.string());
  return ingest_spans(file, format, options);
}

// ---------------------------------------------------------------------------
// CallGraph

CallGraph CallGraph::from_edges(std::vector<ServiceRef> services, std::span<const WeightedEdge> edges,
                                TimeWindow window) {
  CallGraph g;
  g.window_ = window;
  services.reserve(services.size() + 2 * edges.size());
  for (const auto& e : edges) {
    services.push_back(e.caller);
    services.push_back(e.callee);
  }
  std::sort(services.begin(), services.end());
  services.erase(std::unique(services.begin(), services.end()), services.end());
  g.services_ = std::move(services);

  std::vector<std::tuple<NodeId, NodeId, std::uint64_t>> triples;
  triples.reserve(edges.size());
  for (const auto& e : edges) {
    if (e.count == 0 || e.caller == e.callee) continue;
    triples.emplace_back(*g.find(e.caller), *g.find(e.callee), e.count);
  }
  std::sort(triples.begin(), triples.end());

  std::vector<std::tuple<NodeId, NodeId, std::uint64_t>> merged;
  merged.reserve(triples.size());
  for (const auto& t : triples) {
    if (!merged.empty() && std::get<0>(merged.back()) == std::get<0>(t) && std::get<1>(merged.back()) == std::get<1>(t)) {
      std::get<2>(merged.back()) += std::get<2>(t);
    } else {
      merged.push_back(t);
    }
  }

  const std::size_t n = g.services_.size();
  g.out_offsets_.assign(n + 1, 0);
  g.in_offsets_.assign(n + 1, 0);
  for (const auto& [u, v, w] : merged) {
    ++g.out_offsets_[u + 1];
    ++g.in_offsets_[v + 1];
  }
  for (std::size_t i = 0; i < n; ++i) {
    g.out_offsets_[i + 1] += g.out_offsets_[i];
    g.in_offsets_[i + 1] += g.in_offsets_[i];
  }
  g.out_adj_.resize(merged.size());
  g.in_adj_.resize(merged.size());
  std::vector<std::uint32_t> in_cursor(g.in_offsets_.begin(), g.in_offsets_.end() - 1);
  // `merged` is sorted by (caller, callee), so out lists fill in callee
  // order and in lists fill in caller order.
  std::size_t k = 0;
  for (const auto& [u, v, w] : merged) {
    g.out_adj_[k++] = Adjacent{v, w};
    g.in_adj_[in_cursor[v]++] = Adjacent{u, w};
  }
  return g;
}

std::optional<NodeId> CallGraph::find(const ServiceRef& ref) const noexcept {
  auto it = std::lower_bound(services_.begin(), services_.end(), ref);
  if (it == services_.end() || *it != ref) return std::nullopt;
  return static_cast<NodeId>(it - services_.begin());
}

NodeId CallGraph::require(const ServiceRef& ref) const {
  if (auto id = find(ref)) return *id;
  throw NotFoundError("service " + ref.str() + " is not in the call graph");
}

std::span<const Adjacent> CallGraph::callees(NodeId id) const noexcept {
  return std::span<const Adjacent>(out_adj_).subspan(out_offsets_[id], out_offsets_[id + 1] - out_offsets_[id]);
}

std::span<const Adjacent> CallGraph::callers(NodeId id) const noexcept {
  return std::span<const Adjacent>(in_adj_).subspan(in_offsets_[id], in_offsets_[id + 1] - in_offsets_[id]);
}

std::uint64_t CallGraph::weight(NodeId caller, NodeId callee) const noexcept {
  auto out = callees(caller);
  auto it = std::lower_bound(out.begin(), out.end(), callee, [](const Adjacent& a, NodeId v) { return a.node < v; });
  return (it != out.end() && it->node == callee) ? it->weight : 0;
}

std::uint64_t CallGraph::out_weight(NodeId id) const noexcept {
  std::uint64_t total = 0;
  for (const auto& a : callees(id)) total += a.weight;
  return total;
}

std::uint64_t CallGraph::total_weight() const noexcept {
  std::uint64_t total = 0;
  for (const auto& a : out_adj_) total += a.weight;
  return total;
}

std::vector<WeightedEdge> CallGraph::edges() const {
  std::vector<WeightedEdge> out;
  out.reserve(out_adj_.size());
  for (NodeId u = 0; u < services_.size(); ++u) {
    for (const auto& a : callees(u)) out.push_back(WeightedEdge{services_[u], services_[a.node], a.weight});
  }
  return out;
}

bool operator==(const CallGraph& a, const CallGraph& b) {
  if (a.window_ != b.window_ || a.services_ != b.services_ || a.out_offsets_ != b.out_offsets_) return false;
  return std::equal(a.out_adj_.begin(), a.out_adj_.end(), b.out_adj_.begin(), b.out_adj_.end(),
                    [](const Adjacent& x, const Adjacent& y) { return x.node == y.node && x.weight == y.weight; });
}

CallGraph build_call_graph(std::span<const SpanRecord> spans, const TimeWindow& window) {
  std::vector<ServiceRef> services;
  std::map<std::pair<ServiceRef, ServiceRef>, std::uint64_t> counts;
  for (const auto& span : spans) {
    if (!window.contains(span.start_us)) continue;
    services.push_back(span.callee);
    if (!span.caller) continue;
    services.push_back(*span.caller);
    if (*span.caller == span.callee) continue;
    ++counts[{*span.caller, span.callee}];
  }
  std::vector<WeightedEdge> edges;
  edges.reserve(counts.size());
  for (auto& [pair, count] : counts) edges.push_back(WeightedEdge{pair.first, pair.second, count});
  return CallGraph::from_edges(std::move(services), edges, window);
}

// ---------------------------------------------------------------------------
// Statistics

std::size_t blast_radius(const CallGraph& graph, NodeId service) {
  std::vector<char> seen(graph.service_count(), 0);
  std::vector<NodeId> stack{service};
  seen[service] = 1;
  std::size_t count = 0;
  while (!stack.empty()) {
    const NodeId v = stack.back();
    stack.pop_back();
    for (const auto& a : graph.callers(v)) {
      if (seen[a.node]) continue;
      seen[a.node] = 1;
      ++count;
      stack.push_back(a.node);
    }
  }
  return count;
}

std::size_t blast_radius(const CallGraph& graph, const ServiceRef& service) {
  return blast_radius(graph, graph.require(service));
}

ConnectivityReport connectivity_stats(const CallGraph& graph) {
  ConnectivityReport report;
  report.services.reserve(graph.service_count());
  for (NodeId v = 0; v < graph.service_count(); ++v) {
    ServiceConnectivity row{graph.service(v), graph.fan_in(v), graph.fan_out(v)};
    if (!report.max_fan_in || row.fan_in > report.max_fan_in->fan_in) report.max_fan_in = row;
    if (!report.max_fan_out || row.fan_out > report.max_fan_out->fan_out) report.max_fan_out = row;
    report.services.push_back(std::move(row));
  }
  return report;
}

}  // namespace remedy
