#include "remedy/service_ref.hpp"

#include <utility>

#include "remedy/error.hpp"

namespace remedy {

ServiceRef::ServiceRef(std::string ns_, std::string name_) : ns(std::move(ns_)), name(std::move(name_)) {}

std::optional<ServiceRef> ServiceRef::try_parse(std::string_view text) noexcept {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos || slash == 0 || slash + 1 == text.size()) return std::nullopt;
  const auto name = text.substr(slash + 1);
  if (name.find('/') != std::string_view::npos) return std::nullopt;
  return ServiceRef{std::string(text.substr(0, slash)), std::string(name)};
}

ServiceRef ServiceRef::parse(std::string_view text) {
  if (auto ref = try_parse(text)) return *std::move(ref);
  throw ParseError("invalid service reference \"" + std::string(text) + "\" (expected namespace/name)");
}

std::string ServiceRef::str() const {
  std::string out;
  out.reserve(ns.size() + 1 + name.size());
  out.append(ns).push_back('/');
  out.append(name);
  return out;
}

// Compares the canonical `ns/name` strings without materializing them.
std::strong_ordering operator<=>(const ServiceRef& a, const ServiceRef& b) noexcept {
  const std::size_t la = a.ns.size() + 1 + a.name.size();
  const std::size_t lb = b.ns.size() + 1 + b.name.size();
  auto at = [](const ServiceRef& r, std::size_t i) -> unsigned char {
    if (i < r.ns.size()) return static_cast<unsigned char>(r.ns[i]);
    if (i == r.ns.size()) return '/';
    return static_cast<unsigned char>(r.name[i - r.ns.size() - 1]);
  };
  const std::size_t n = la < lb ? la : lb;
  for (std::size_t i = 0; i < n; ++i) {
    const auto ca = at(a, i);
    const auto cb = at(b, i);
    if (ca != cb) return ca <=> cb;
  }
  return la <=> lb;
}

std::ostream& operator<<(std::ostream& os, const ServiceRef& ref) { return os << ref.ns << '/' << ref.name; }

}  // namespace remedy
