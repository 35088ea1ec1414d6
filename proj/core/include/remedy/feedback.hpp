#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace remedy {

enum class RejectCode {
  MissingCapability,
  OutOfScope,
  IrreversibleEffect,
  Conflict,
  RateLimited,
  PreconditionFailed,
  SchemaError,
};

std::string_view to_string(RejectCode code) noexcept;

/// Machine-readable reason a transaction was refused.
///
/// `detail` is the argument inside the rendered template:
///   MissingCapability   restart:svc/payment
///   OutOfScope          svc/cart
///   IrreversibleEffect  drop_table
///   Conflict            resource="namespace/prod", txn="t-7"
///   RateLimited         namespace="prod", limit=10
///   PreconditionFailed  service_exists(prod/cart)
///   SchemaError         free text
struct RejectionFeedback {
  RejectCode code = RejectCode::SchemaError;
  std::string detail;

  [[nodiscard]] std::string render() const;
  /// Inverse of render(); nullopt if `text` matches no template.
  static std::optional<RejectionFeedback> parse(std::string_view text);

  static RejectionFeedback missing_capability(std::string_view verb, std::string_view service_name);
  static RejectionFeedback out_of_scope(std::string_view service_name);
  static RejectionFeedback irreversible_effect(std::string_view kind);
  static RejectionFeedback conflict(std::string_view resource, std::string_view txn_id);
  static RejectionFeedback rate_limited(std::string_view ns, unsigned limit);
  static RejectionFeedback precondition_failed(std::string_view description);
  static RejectionFeedback schema_error(std::string_view message);

  friend bool operator==(const RejectionFeedback&, const RejectionFeedback&) = default;
};

}  // namespace remedy
