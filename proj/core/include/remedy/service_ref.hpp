#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

namespace remedy {

/// Namespace-qualified service name. The canonical text form is
/// `namespace/name`; ordering is lexicographic on that form.
struct ServiceRef {
  std::string ns;
  std::string name;

  ServiceRef() = default;
  ServiceRef(std::string ns_, std::string name_);

  /// Parses `ns/name`. Both parts must be non-empty and the namespace may
  /// not contain `/`. Throws ParseError.
  static ServiceRef parse(std::string_view text);
  static std::optional<ServiceRef> try_parse(std::string_view text) noexcept;

  [[nodiscard]] std::string str() const;

  friend bool operator==(const ServiceRef&, const ServiceRef&) = default;
  friend std::strong_ordering operator<=>(const ServiceRef& a, const ServiceRef& b) noexcept;
};

std::ostream& operator<<(std::ostream& os, const ServiceRef& ref);

}  // namespace remedy

template <>
struct std::hash<remedy::ServiceRef> {
  std::size_t operator()(const remedy::ServiceRef& ref) const noexcept {
    std::size_t h = std::hash<std::string>{}(ref.ns);
    return h ^ (std::hash<std::string>{}(ref.name) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
  }
};
