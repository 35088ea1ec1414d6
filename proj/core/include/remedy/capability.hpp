#pragma once

#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "remedy/service_ref.hpp"

namespace remedy {

/// One grant: `verb:pattern`, optionally prefixed with `!` to deny.
/// Patterns are `ns/name`, `ns/*` or `*`. The verb is an action kind name.
struct Grant {
  enum class Scope { Cluster, Namespace, Exact };

  std::string verb;
  Scope scope = Scope::Exact;
  std::string ns;
  std::string name;
  bool deny = false;

  /// Throws ParseError.
  static Grant parse(std::string_view text);
  [[nodiscard]] std::string str() const;
  [[nodiscard]] bool matches(std::string_view verb, const ServiceRef& target) const noexcept;

  friend bool operator==(const Grant&, const Grant&) = default;
};

/// Most-specific grant wins; on equal specificity a deny wins. An empty set
/// permits nothing.
class CapabilitySet {
 public:
  CapabilitySet() = default;
  CapabilitySet(std::initializer_list<std::string_view> grants);

  void add(Grant grant) { grants_.push_back(std::move(grant)); }
  void add(std::string_view text) { grants_.push_back(Grant::parse(text)); }

  [[nodiscard]] bool permits(std::string_view verb, const ServiceRef& target) const noexcept;
  [[nodiscard]] const std::vector<Grant>& grants() const noexcept { return grants_; }
  [[nodiscard]] bool empty() const noexcept { return grants_.empty(); }

  /// Every built-in verb on `*`.
  static CapabilitySet all_builtin();

 private:
  std::vector<Grant> grants_;
};

}  // namespace remedy
