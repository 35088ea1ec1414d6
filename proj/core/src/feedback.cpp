#include "remedy/feedback.hpp"

#include <array>

namespace remedy {

namespace {

struct Template {
  RejectCode code;
  std::string_view prefix;
  std::string_view suffix;
};

constexpr std::array<Template, 7> kTemplates{{
    {RejectCode::MissingCapability, "REJECT: missing_capability(\"", "\")"},
    {RejectCode::OutOfScope, "REJECT: out_of_scope(\"", "\" not in recovery_group)"},
    {RejectCode::IrreversibleEffect, "REJECT: irreversible_effect(\"", "\") requires break_glass"},
    {RejectCode::Conflict, "REJECT: conflict(", ")"},
    {RejectCode::RateLimited, "REJECT: rate_limited(", ")"},
    {RejectCode::PreconditionFailed, "REJECT: precondition_failed(\"", "\")"},
    {RejectCode::SchemaError, "REJECT: schema_error(\"", "\")"},
}};

const Template& template_for(RejectCode code) {
  for (const auto& t : kTemplates) {
    if (t.code == code) return t;
  }
  return kTemplates.back();
}

}  // namespace

std::string_view to_string(RejectCode code) noexcept {
  switch (code) {
    case RejectCode::MissingCapability: return "missing_capability";
    case RejectCode::OutOfScope: return "out_of_scope";
    case RejectCode::IrreversibleEffect: return "irreversible_effect";
    case RejectCode::Conflict: return "conflict";
    case RejectCode::RateLimited: return "rate_limited";
    case RejectCode::PreconditionFailed: return "precondition_failed";
    case RejectCode::SchemaError: return "schema_error";
  }
  return "unknown";
}

std::string RejectionFeedback::render() const {
  const auto& t = template_for(code);
  std::string out;
  out.reserve(t.prefix.size() + detail.size() + t.suffix.size());
  out.append(t.prefix).append(detail).append(t.suffix);
  return out;
}

std::optional<RejectionFeedback> RejectionFeedback::parse(std::string_view text) {
  // Longest prefix first so "conflict(" never shadows a quoted template.
  const Template* best = nullptr;
  for (const auto& t : kTemplates) {
    if (text.size() < t.prefix.size() + t.suffix.size()) continue;
    if (!text.starts_with(t.prefix) || !text.ends_with(t.suffix)) continue;
    if (!best || t.prefix.size() > best->prefix.size()) best = &t;
  }
  if (!best) return std::nullopt;
  auto inner = text.substr(best->prefix.size(), text.size() - best->prefix.size() - best->suffix.size());
  return RejectionFeedback{best->code, std::string(inner)};
}

RejectionFeedback RejectionFeedback::missing_capability(std::string_view verb, std::string_view service_name) {
  return {RejectCode::MissingCapability, std::string(verb) + ":svc/" + std::string(service_name)};
}

RejectionFeedback RejectionFeedback::out_of_scope(std::string_view service_name) {
  return {RejectCode::OutOfScope, "svc/" + std::string(service_name)};
}

RejectionFeedback RejectionFeedback::irreversible_effect(std::string_view kind) {
  return {RejectCode::IrreversibleEffect, std::string(kind)};
}

RejectionFeedback RejectionFeedback::conflict(std::string_view resource, std::string_view txn_id) {
  return {RejectCode::Conflict, "resource=\"" + std::string(resource) + "\", txn=\"" + std::string(txn_id) + "\""};
}

RejectionFeedback RejectionFeedback::rate_limited(std::string_view ns, unsigned limit) {
  return {RejectCode::RateLimited, "namespace=\"" + std::string(ns) + "\", limit=" + std::to_string(limit)};
}

RejectionFeedback RejectionFeedback::precondition_failed(std::string_view description) {
  return {RejectCode::PreconditionFailed, std::string(description)};
}

RejectionFeedback RejectionFeedback::schema_error(std::string_view message) {
  return {RejectCode::SchemaError, std::string(message)};
}

}  // namespace remedy
