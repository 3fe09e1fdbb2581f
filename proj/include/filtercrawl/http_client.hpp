#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "filtercrawl/domain.hpp"
#include "filtercrawl/util.hpp"

namespace filtercrawl {

enum class FetchKind { content, timeout, error };

struct ConnectTarget {
  std::string host;
  std::uint16_t port = 0;
};

/// Address rewriting in the style of curl's --connect-to: an HTTP request
/// addressed to `address` is physically sent to the mapped target while the
/// Host header still names the original site. When `strict`, unmapped
/// addresses fail with a connection error instead of touching the network.
class ConnectMap {
public:
  explicit ConnectMap(bool strict = true) : strict_(strict) {}

  void add(Ipv4Address address, ConnectTarget target) { routes_[address] = std::move(target); }
  std::optional<ConnectTarget> find(Ipv4Address address) const;
  bool strict() const { return strict_; }
  std::size_t size() const { return routes_.size(); }

private:
  bool strict_;
  std::map<Ipv4Address, ConnectTarget> routes_;
};

struct HttpRequest {
  Ipv4Address address;
  std::uint16_t port = 80;
  std::string host; // Host header / TLS server name
  std::string path = "/";
  bool tls = false;
  Seconds timeout{10.0};
  std::size_t max_body = 5u << 20;
};

struct HttpResponse {
  FetchKind kind = FetchKind::error;
  int status = 0;
  std::string body;
  bool truncated = false;
  std::string location; // Location header, when present
  std::string detail;   // error description for non-content outcomes
};

/// One GET, no redirect following. Any HTTP response (any status) is `content`.
HttpResponse http_get(const HttpRequest& request, const ConnectMap* connect_map);

} // namespace filtercrawl
