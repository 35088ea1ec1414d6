#include "remedy/capability.hpp"

#include "remedy/error.hpp"
#include "remedy/isa.hpp"

namespace remedy {

Grant Grant::parse(std::string_view text) {
  Grant g;
  const std::string original(text);
  if (text.starts_with('!')) {
    g.deny = true;
    text.remove_prefix(1);
  }
  const auto colon = text.find(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 == text.size()) {
    throw ParseError("grant \"" + original + "\" is not of the form verb:pattern");
  }
  g.verb = std::string(text.substr(0, colon));
  const auto pattern = text.substr(colon + 1);
  if (pattern == "*") {
    g.scope = Scope::Cluster;
    return g;
  }
  const auto slash = pattern.find('/');
  if (slash == std::string_view::npos || slash == 0 || slash + 1 == pattern.size() ||
      pattern.find('/', slash + 1) != std::string_view::npos) {
    throw ParseError("grant \"" + original + "\" has an invalid target pattern");
  }
  g.ns = std::string(pattern.substr(0, slash));
  const auto name = pattern.substr(slash + 1);
  if (name == "*") {
    g.scope = Scope::Namespace;
  } else {
    g.scope = Scope::Exact;
    g.name = std::string(name);
  }
  return g;
}

std::string Grant::str() const {
  std::string out = deny ? "!" : "";
  out += verb + ":";
  switch (scope) {
    case Scope::Cluster: return out + "*";
    case Scope::Namespace: return out + ns + "/*";
    case Scope::Exact: return out + ns + "/" + name;
  }
  return out;
}

bool Grant::matches(std::string_view v, const ServiceRef& target) const noexcept {
  if (v != verb) return false;
  switch (scope) {
    case Scope::Cluster: return true;
    case Scope::Namespace: return target.ns == ns;
    case Scope::Exact: return target.ns == ns && target.name == name;
  }
  return false;
}

CapabilitySet::CapabilitySet(std::initializer_list<std::string_view> grants) {
  for (auto g : grants) add(g);
}

bool CapabilitySet::permits(std::string_view verb, const ServiceRef& target) const noexcept {
  int best = -1;
  bool allowed = false;
  for (const auto& g : grants_) {
    if (!g.matches(verb, target)) continue;
    const int specificity = static_cast<int>(g.scope);
    if (specificity > best) {
      best = specificity;
      allowed = !g.deny;
    } else if (specificity == best && g.deny) {
      allowed = false;
    }
  }
  return allowed;
}

CapabilitySet CapabilitySet::all_builtin() {
  CapabilitySet caps;
  for (const auto kind : kBuiltinKinds) caps.add(Grant{std::string(to_string(kind)), Grant::Scope::Cluster, {}, {}, false});
  return caps;
}

}  // namespace remedy
