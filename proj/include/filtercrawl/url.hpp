#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "filtercrawl/domain.hpp"

namespace filtercrawl {

/// Canonical http(s) URL. Fragment is never stored; default ports are elided
/// from str(); path is dot-segment-free with canonical percent-encoding.
struct Url {
  std::string scheme; // "http" or "https"
  DomainName host;
  std::uint16_t port = 80;
  std::string path = "/";
  std::string query; // without '?'; empty when absent

  bool tls() const { return scheme == "https"; }
  std::uint16_t default_port() const { return tls() ? 443 : 80; }
  /// Path plus query, as sent in a request line.
  std::string target() const { return query.empty() ? path : path + "?" + query; }
  std::string str() const;

  friend bool operator==(const Url& a, const Url& b) { return a.str() == b.str(); }
};

/// Resolves `raw` against `base` (when relative) and canonicalizes it.
/// Throws InvalidInput for malformed input, non-http(s) schemes and IP-literal hosts.
Url normalize_url(std::string_view raw, const Url* base = nullptr);
std::optional<Url> try_normalize_url(std::string_view raw, const Url* base = nullptr) noexcept;

} // namespace filtercrawl
