#pragma once

// DNS-based filtering check: decides whether a measurement resolver in the
// target country manipulates answers for a domain.

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "filtercrawl/domain.hpp"
#include "filtercrawl/http_client.hpp"
#include "filtercrawl/util.hpp"

namespace filtercrawl {

enum class ResolverRole { control, measurement, fake };

struct ResolverEndpoint {
  Ipv4Address address;
  std::uint16_t port = 53;
  ResolverRole role = ResolverRole::control;

  std::string str() const { return address.str() + ":" + std::to_string(port); }
};

struct ResolverProfile {
  std::string country; // ISO 3166-1 alpha-2
  ResolverEndpoint control;
  std::vector<ResolverEndpoint> measurement;
  std::vector<ResolverEndpoint> fake;

  /// Throws ConfigError when roles are inconsistent or lists are empty.
  void validate() const;
};

enum class DnsKind { answered, nxdomain, timeout, error };

struct DnsOutcome {
  DnsKind kind = DnsKind::error;
  std::vector<Ipv4Address> addresses; // non-empty iff answered
  std::chrono::milliseconds latency{0};
  std::string server;       // endpoint queried
  std::optional<int> rcode; // set whenever a response arrived
  std::string detail;

  bool answered() const { return kind == DnsKind::answered; }
  /// The server replied at all (answer, NXDOMAIN or an error rcode).
  bool responded() const { return rcode.has_value(); }
};

struct FetchOutcome {
  FetchKind kind = FetchKind::error;
  Ipv4Address address;
  std::optional<int> status_code;
  std::optional<std::uint64_t> body_length;
  std::optional<std::string> body_digest;
  std::string detail;

  bool has_content() const { return kind == FetchKind::content; }
};

struct CheckConfig {
  double maxdiff = 0.5;
  Seconds timeout{10.0};
  std::uint16_t http_port = 80;
  std::size_t max_body_bytes = 5u << 20;
  /// Literal pseudocode mode: ratio test len_m/len_c and "not filtered" when
  /// both resolvers fail.
  bool strict_alg1 = false;
  std::shared_ptr<const ConnectMap> connect_map;

  void validate() const;
};

enum class FilterStatus { filtered, not_filtered, indeterminate };

enum class FilterReason {
  intercepted_fake,
  measurement_timeout,
  private_ip,
  measurement_http_dead,
  control_http_dead,
  content_length_mismatch,
  none,
};

std::string to_string(ResolverRole r);
std::string to_string(DnsKind k);
std::string to_string(FetchKind k);
std::string to_string(FilterStatus s);
std::string to_string(FilterReason r);
ResolverRole parse_resolver_role(std::string_view s);
DnsKind parse_dns_kind(std::string_view s);
FetchKind parse_fetch_kind(std::string_view s);
FilterStatus parse_filter_status(std::string_view s);
FilterReason parse_filter_reason(std::string_view s);

/// Everything the decision consults. Fetch outcomes are absent when the
/// address-set gate did not open.
struct Evidence {
  std::vector<DnsOutcome> fake;
  DnsOutcome measurement;
  DnsOutcome control;
  std::optional<FetchOutcome> measurement_fetch;
  std::optional<FetchOutcome> control_fetch;
};

struct FilterVerdict {
  DomainName domain;
  FilterStatus status = FilterStatus::indeterminate;
  FilterReason reason = FilterReason::none;
  std::string country;
  Evidence evidence;
  std::optional<double> divergence;
  Clock::time_point checked_at{};
  std::string note; // internal failure description for indeterminate verdicts

  bool filtered() const { return status == FilterStatus::filtered; }
};

DnsOutcome resolve(const DomainName& domain, const ResolverEndpoint& endpoint, Seconds timeout);

/// GET "/" at address:http_port with Host = host. No redirects.
FetchOutcome fetch_http(Ipv4Address address, const DomainName& host, const CheckConfig& config);

bool is_private_ip(Ipv4Address address);

/// |len_m - len_c| / max(len_c, 1)
double content_length_divergence(std::uint64_t len_m, std::uint64_t len_c);

/// True when the measurement and control answers share no address.
bool address_sets_differ(const DnsOutcome& measurement, const DnsOutcome& control);

struct Decision {
  FilterStatus status = FilterStatus::not_filtered;
  FilterReason reason = FilterReason::none;
  std::optional<double> divergence;
};

/// Pure decision over collected evidence; the six checks in order, first hit wins.
Decision decide(const Evidence& evidence, const CheckConfig& config);

FilterVerdict check_domain(const DomainName& domain, const ResolverProfile& profile, const CheckConfig& config);

/// One verdict per input, in input order, at most `parallelism` probes in flight.
/// A limiter, when given, paces probe starts.
std::vector<FilterVerdict> check_batch(std::span<const DomainName> domains, const ResolverProfile& profile,
                                       const CheckConfig& config, int parallelism, RateLimiter* limiter = nullptr);

nlohmann::json to_json(const DnsOutcome& o);
nlohmann::json to_json(const FetchOutcome& o);
/// JSON-lines verdict record: {domain, status, reason, country, checked_at, evidence}.
nlohmann::json to_json(const FilterVerdict& v);
FilterVerdict verdict_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ResolverProfile& p);
ResolverProfile profile_from_json(const nlohmann::json& j);

} // namespace filtercrawl
