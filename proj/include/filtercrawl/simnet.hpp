#pragma once

// Loopback DNS resolvers and HTTP servers that act out a WorldSpec.

#include <atomic>
#include <functional>
#include <memory>
#include <optional>
#include <thread>
#include <vector>

#include "filtercrawl/dns_wire.hpp"
#include "filtercrawl/filtercheck.hpp"
#include "filtercrawl/world.hpp"

namespace filtercrawl::sim {

struct DnsReply {
  dns::Rcode rcode = dns::Rcode::NoError;
  std::vector<Ipv4Address> addresses;
};

/// Returns nullopt to drop the query without answering.
using DnsHandler = std::function<std::optional<DnsReply>(const DomainName&)>;

/// UDP and TCP DNS server on 127.0.0.1 (same ephemeral port for both).
class DnsServer {
public:
  explicit DnsServer(DnsHandler handler);
  ~DnsServer();
  DnsServer(const DnsServer&) = delete;
  DnsServer& operator=(const DnsServer&) = delete;

  std::uint16_t port() const { return port_; }
  void stop();

private:
  void run();

  DnsHandler handler_;
  int udp_fd_ = -1;
  int tcp_fd_ = -1;
  int wake_[2] = {-1, -1};
  std::uint16_t port_ = 0;
  std::jthread thread_;
};

/// One loopback listener per served world address; requests are answered by
/// address, ignoring the Host header.
class HttpFarm {
public:
  struct Site {
    std::map<std::string, PageSpec> pages;    // by path, for domains
    std::optional<std::uint64_t> block_length; // for block-page servers
  };

  explicit HttpFarm(const WorldSpec& world);
  ~HttpFarm();
  HttpFarm(const HttpFarm&) = delete;
  HttpFarm& operator=(const HttpFarm&) = delete;

  /// Maps every served or blackholed world address to its loopback listener.
  std::shared_ptr<ConnectMap> connect_map() const { return connect_map_; }
  std::uint64_t requests_served() const { return served_.load(); }
  void stop();

private:
  struct Listener;
  void run();

  std::vector<std::unique_ptr<Listener>> listeners_;
  std::vector<int> blackhole_fds_;
  std::shared_ptr<ConnectMap> connect_map_;
  int wake_[2] = {-1, -1};
  std::atomic<std::uint64_t> served_{0};
  std::jthread thread_;
};

/// A running world: control, measurement and fake resolvers plus the HTTP farm.
class SimNetwork {
public:
  explicit SimNetwork(WorldSpec world);
  ~SimNetwork();

  const WorldSpec& world() const { return world_; }
  /// Profile whose endpoints point at the loopback resolvers.
  ResolverProfile profile() const;
  std::shared_ptr<ConnectMap> connect_map() const { return http_->connect_map(); }
  /// CheckConfig wired to the farm, with the given timeout.
  CheckConfig check_config(Seconds timeout) const;

  /// Takes one resolver offline (closing its sockets).
  void stop_resolver(ResolverRole role);
  std::uint64_t dns_queries() const { return queries_.load(); }
  std::uint64_t http_requests() const { return http_->requests_served(); }

private:
  std::optional<DnsReply> answer(ResolverRole role, const DomainName& name);

  WorldSpec world_;
  std::map<DomainName, const DomainSpec*> index_;
  std::atomic<std::uint64_t> queries_{0};
  std::unique_ptr<HttpFarm> http_;
  std::unique_ptr<DnsServer> control_, measurement_, fake_;
};

} // namespace filtercrawl::sim
