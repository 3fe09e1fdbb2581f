#include "filtercrawl/filtercheck.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <future>
#include <thread>

#include "filtercrawl/error.hpp"

namespace filtercrawl {

using nlohmann::json;

namespace {

template <class E, std::size_t N>
E parse_enum(std::string_view s, const std::array<std::pair<E, const char*>, N>& table, const char* what) {
  for (const auto& [value, name] : table)
    if (s == name)
      return value;
  throw InvalidInput(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

template <class E, std::size_t N>
std::string enum_name(E v, const std::array<std::pair<E, const char*>, N>& table) {
  for (const auto& [value, name] : table)
    if (value == v)
      return name;
  return "?";
}

constexpr std::array<std::pair<ResolverRole, const char*>, 3> kRoles{{
    {ResolverRole::control, "control"},
    {ResolverRole::measurement, "measurement"},
    {ResolverRole::fake, "fake"},
}};
constexpr std::array<std::pair<DnsKind, const char*>, 4> kDnsKinds{{
    {DnsKind::answered, "answered"},
    {DnsKind::nxdomain, "nxdomain"},
    {DnsKind::timeout, "timeout"},
    {DnsKind::error, "error"},
}};
constexpr std::array<std::pair<FetchKind, const char*>, 3> kFetchKinds{{
    {FetchKind::content, "content"},
    {FetchKind::timeout, "timeout"},
    {FetchKind::error, "error"},
}};
constexpr std::array<std::pair<FilterStatus, const char*>, 3> kStatuses{{
    {FilterStatus::filtered, "filtered"},
    {FilterStatus::not_filtered, "not_filtered"},
    {FilterStatus::indeterminate, "indeterminate"},
}};
constexpr std::array<std::pair<FilterReason, const char*>, 7> kReasons{{
    {FilterReason::intercepted_fake, "intercepted_fake"},
    {FilterReason::measurement_timeout, "measurement_timeout"},
    {FilterReason::private_ip, "private_ip"},
    {FilterReason::measurement_http_dead, "measurement_http_dead"},
    {FilterReason::control_http_dead, "control_http_dead"},
    {FilterReason::content_length_mismatch, "content_length_mismatch"},
    {FilterReason::none, "none"},
}};

Decision filtered(FilterReason r) { return {FilterStatus::filtered, r, std::nullopt}; }

} // namespace

std::string to_string(ResolverRole r) { return enum_name(r, kRoles); }
std::string to_string(DnsKind k) { return enum_name(k, kDnsKinds); }
std::string to_string(FetchKind k) { return enum_name(k, kFetchKinds); }
std::string to_string(FilterStatus s) { return enum_name(s, kStatuses); }
std::string to_string(FilterReason r) { return enum_name(r, kReasons); }
ResolverRole parse_resolver_role(std::string_view s) { return parse_enum(s, kRoles, "resolver role"); }
DnsKind parse_dns_kind(std::string_view s) { return parse_enum(s, kDnsKinds, "dns outcome"); }
FetchKind parse_fetch_kind(std::string_view s) { return parse_enum(s, kFetchKinds, "fetch outcome"); }
FilterStatus parse_filter_status(std::string_view s) { return parse_enum(s, kStatuses, "status"); }
FilterReason parse_filter_reason(std::string_view s) { return parse_enum(s, kReasons, "reason"); }

void ResolverProfile::validate() const {
  if (country.size() != 2)
    throw ConfigError("profile country must be an ISO 3166-1 alpha-2 code, got '" + country + "'");
  if (control.role != ResolverRole::control)
    throw ConfigError("control endpoint must have role=control");
  if (measurement.empty())
    throw ConfigError("profile needs at least one measurement resolver");
  if (fake.empty())
    throw ConfigError("profile needs at least one fake resolver");
  for (const auto& m : measurement)
    if (m.role != ResolverRole::measurement)
      throw ConfigError("measurement endpoint " + m.str() + " has wrong role");
  for (const auto& f : fake)
    if (f.role != ResolverRole::fake)
      throw ConfigError("fake endpoint " + f.str() + " has wrong role");
}

void CheckConfig::validate() const {
  if (!(maxdiff > 0.0 && maxdiff <= 1.0))
    throw ConfigError("maxdiff must be in (0, 1]");
  if (!(timeout.count() > 0.0))
    throw ConfigError("timeout must be positive");
  if (http_port == 0)
    throw ConfigError("http_port must be non-zero");
}

bool is_private_ip(Ipv4Address a) {
  const auto v = a.value;
  return (v >> 24) == 10                      // 10/8
         || (v >> 20) == ((172u << 4) | 1)    // 172.16/12
         || (v >> 16) == ((192u << 8) | 168)  // 192.168/16
         || (v >> 24) == 127                  // loopback
         || (v >> 16) == ((169u << 8) | 254)  // link-local
         || v == 0;                           // unspecified
}

double content_length_divergence(std::uint64_t len_m, std::uint64_t len_c) {
  const double diff = len_m > len_c ? static_cast<double>(len_m - len_c) : static_cast<double>(len_c - len_m);
  return diff / static_cast<double>(std::max<std::uint64_t>(len_c, 1));
}

bool address_sets_differ(const DnsOutcome& m, const DnsOutcome& c) {
  for (const auto& a : m.addresses)
    if (std::find(c.addresses.begin(), c.addresses.end(), a) != c.addresses.end())
      return false;
  return true;
}

Decision decide(const Evidence& ev, const CheckConfig& config) {
  // 1. any answer from a non-existent resolver means in-path interception
  for (const auto& f : ev.fake)
    if (f.answered())
      return filtered(FilterReason::intercepted_fake);

  const bool m_ok = ev.measurement.answered();
  const bool c_ok = ev.control.answered();

  // 2. measurement silent while control answers
  if (!m_ok && c_ok)
    return filtered(FilterReason::measurement_timeout);
  if (!m_ok && !c_ok)
    return {config.strict_alg1 ? FilterStatus::not_filtered : FilterStatus::indeterminate, FilterReason::none, {}};

  if (!address_sets_differ(ev.measurement, ev.control))
    return {};

  // 3. private answer where control has none
  const bool m_private = std::any_of(ev.measurement.addresses.begin(), ev.measurement.addresses.end(), is_private_ip);
  const bool c_private = std::any_of(ev.control.addresses.begin(), ev.control.addresses.end(), is_private_ip);
  if (m_private && !c_private)
    return filtered(FilterReason::private_ip);

  const bool m_content = ev.measurement_fetch && ev.measurement_fetch->has_content();
  const bool c_content = ev.control_fetch && ev.control_fetch->has_content();
  // 4.
  if (!m_content && c_content)
    return filtered(FilterReason::measurement_http_dead);
  // 5.
  if (m_content && !c_content)
    return filtered(FilterReason::control_http_dead);
  // 6.
  if (m_content && c_content) {
    const auto len_m = ev.measurement_fetch->body_length.value_or(0);
    const auto len_c = ev.control_fetch->body_length.value_or(0);
    const double div = config.strict_alg1
                           ? static_cast<double>(len_m) / static_cast<double>(std::max<std::uint64_t>(len_c, 1))
                           : content_length_divergence(len_m, len_c);
    if (div > config.maxdiff)
      return {FilterStatus::filtered, FilterReason::content_length_mismatch, div};
    return {FilterStatus::not_filtered, FilterReason::none, div};
  }
  return {};
}

FetchOutcome fetch_http(Ipv4Address address, const DomainName& host, const CheckConfig& config) {
  HttpRequest req;
  req.address = address;
  req.port = config.http_port;
  req.host = host.str();
  req.path = "/";
  req.timeout = config.timeout;
  req.max_body = config.max_body_bytes;
  auto resp = http_get(req, config.connect_map.get());

  FetchOutcome out;
  out.kind = resp.kind;
  out.address = address;
  out.detail = resp.detail;
  if (resp.kind == FetchKind::content) {
    out.status_code = resp.status;
    out.body_length = resp.body.size();
    out.body_digest = sha256_hex(resp.body);
  }
  return out;
}

FilterVerdict check_domain(const DomainName& domain, const ResolverProfile& profile, const CheckConfig& config) {
  FilterVerdict v;
  v.domain = domain;
  v.country = profile.country;
  try {
    if (profile.measurement.empty() || profile.fake.empty())
      throw ConfigError("profile needs measurement and fake resolvers");

    std::vector<std::future<DnsOutcome>> fakes;
    for (const auto& f : profile.fake)
      fakes.push_back(std::async(std::launch::async, [&, f] { return resolve(domain, f, config.timeout); }));
    auto m = std::async(std::launch::async, [&] { return resolve(domain, profile.measurement.front(), config.timeout); });
    v.evidence.control = resolve(domain, profile.control, config.timeout);
    v.evidence.measurement = m.get();
    for (auto& f : fakes)
      v.evidence.fake.push_back(f.get());

    auto d = decide(v.evidence, config);
    const bool gate_open = d.status == FilterStatus::not_filtered && v.evidence.measurement.answered() &&
                           address_sets_differ(v.evidence.measurement, v.evidence.control);
    if (gate_open) {
      const auto m_addr = v.evidence.measurement.addresses.front();
      auto mf = std::async(std::launch::async, [&] { return fetch_http(m_addr, domain, config); });
      if (v.evidence.control.answered())
        v.evidence.control_fetch = fetch_http(v.evidence.control.addresses.front(), domain, config);
      v.evidence.measurement_fetch = mf.get();
      d = decide(v.evidence, config);
    }
    v.status = d.status;
    v.reason = d.reason;
    v.divergence = d.divergence;
  } catch (const std::exception& e) {
    v.status = FilterStatus::indeterminate;
    v.reason = FilterReason::none;
    v.note = e.what();
  }
  v.checked_at = Clock::now();
  return v;
}

std::vector<FilterVerdict> check_batch(std::span<const DomainName> domains, const ResolverProfile& profile,
                                       const CheckConfig& config, int parallelism, RateLimiter* limiter) {
  if (parallelism < 1)
    throw ConfigError("parallelism must be >= 1");
  std::vector<FilterVerdict> out(domains.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < domains.size(); i = next++) {
      if (limiter)
        limiter->acquire();
      out[i] = check_domain(domains[i], profile, config);
    }
  };
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(parallelism), domains.size());
  if (n <= 1) {
    worker();
    return out;
  }
  std::vector<std::jthread> pool;
  pool.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    pool.emplace_back(worker);
  pool.clear();
  return out;
}

json to_json(const DnsOutcome& o) {
  json addrs = json::array();
  for (const auto& a : o.addresses)
    addrs.push_back(a.str());
  json j{{"server", o.server}, {"kind", to_string(o.kind)}, {"addresses", addrs}, {"latency_ms", o.latency.count()}};
  j["rcode"] = o.rcode ? json(*o.rcode) : json(nullptr);
  if (!o.detail.empty())
    j["detail"] = o.detail;
  return j;
}

json to_json(const FetchOutcome& o) {
  json j{{"address", o.address.str()}, {"kind", to_string(o.kind)}};
  j["status_code"] = o.status_code ? json(*o.status_code) : json(nullptr);
  j["body_length"] = o.body_length ? json(*o.body_length) : json(nullptr);
  j["body_digest"] = o.body_digest ? json(*o.body_digest) : json(nullptr);
  if (!o.detail.empty())
    j["detail"] = o.detail;
  return j;
}

namespace {

DnsOutcome dns_from_json(const json& j) {
  DnsOutcome o;
  o.server = j.value("server", "");
  o.kind = parse_dns_kind(j.at("kind").get<std::string>());
  for (const auto& a : j.at("addresses"))
    o.addresses.push_back(Ipv4Address::parse(a.get<std::string>()));
  o.latency = std::chrono::milliseconds(j.value("latency_ms", 0));
  if (j.contains("rcode") && !j["rcode"].is_null())
    o.rcode = j["rcode"].get<int>();
  o.detail = j.value("detail", "");
  return o;
}

FetchOutcome fetch_from_json(const json& j) {
  FetchOutcome o;
  o.address = Ipv4Address::parse(j.at("address").get<std::string>());
  o.kind = parse_fetch_kind(j.at("kind").get<std::string>());
  if (!j.at("status_code").is_null())
    o.status_code = j["status_code"].get<int>();
  if (!j.at("body_length").is_null())
    o.body_length = j["body_length"].get<std::uint64_t>();
  if (!j.at("body_digest").is_null())
    o.body_digest = j["body_digest"].get<std::string>();
  o.detail = j.value("detail", "");
  return o;
}

json endpoint_json(const ResolverEndpoint& e) { return json{{"address", e.address.str()}, {"port", e.port}}; }

ResolverEndpoint endpoint_from_json(const json& j, ResolverRole role) {
  ResolverEndpoint e;
  e.address = Ipv4Address::parse(j.at("address").get<std::string>());
  e.port = j.value("port", std::uint16_t{53});
  e.role = j.contains("role") ? parse_resolver_role(j["role"].get<std::string>()) : role;
  return e;
}

} // namespace

json to_json(const FilterVerdict& v) {
  json fakes = json::array();
  for (const auto& f : v.evidence.fake)
    fakes.push_back(to_json(f));
  json ev{{"fake", fakes}, {"measurement", to_json(v.evidence.measurement)}, {"control", to_json(v.evidence.control)}};
  ev["measurement_fetch"] = v.evidence.measurement_fetch ? to_json(*v.evidence.measurement_fetch) : json(nullptr);
  ev["control_fetch"] = v.evidence.control_fetch ? to_json(*v.evidence.control_fetch) : json(nullptr);
  ev["divergence"] = v.divergence ? json(*v.divergence) : json(nullptr);
  if (!v.note.empty())
    ev["note"] = v.note;
  return json{{"domain", v.domain.str()},
              {"status", to_string(v.status)},
              {"reason", to_string(v.reason)},
              {"country", v.country},
              {"checked_at", format_timestamp(v.checked_at)},
              {"evidence", ev}};
}

FilterVerdict verdict_from_json(const json& j) {
  FilterVerdict v;
  v.domain = DomainName::parse(j.at("domain").get<std::string>());
  v.status = parse_filter_status(j.at("status").get<std::string>());
  v.reason = parse_filter_reason(j.at("reason").get<std::string>());
  v.country = j.value("country", "");
  v.checked_at = parse_timestamp(j.at("checked_at").get<std::string>());
  const auto& ev = j.at("evidence");
  for (const auto& f : ev.at("fake"))
    v.evidence.fake.push_back(dns_from_json(f));
  v.evidence.measurement = dns_from_json(ev.at("measurement"));
  v.evidence.control = dns_from_json(ev.at("control"));
  if (!ev.at("measurement_fetch").is_null())
    v.evidence.measurement_fetch = fetch_from_json(ev["measurement_fetch"]);
  if (!ev.at("control_fetch").is_null())
    v.evidence.control_fetch = fetch_from_json(ev["control_fetch"]);
  if (ev.contains("divergence") && !ev["divergence"].is_null())
    v.divergence = ev["divergence"].get<double>();
  v.note = ev.value("note", "");
  return v;
}

json to_json(const ResolverProfile& p) {
  json m = json::array(), f = json::array();
  for (const auto& e : p.measurement)
    m.push_back(endpoint_json(e));
  for (const auto& e : p.fake)
    f.push_back(endpoint_json(e));
  return json{{"country", p.country}, {"control", endpoint_json(p.control)}, {"measurement", m}, {"fake", f}};
}

ResolverProfile profile_from_json(const json& j) {
  ResolverProfile p;
  try {
    p.country = j.at("country").get<std::string>();
    p.control = endpoint_from_json(j.at("control"), ResolverRole::control);
    for (const auto& e : j.at("measurement"))
      p.measurement.push_back(endpoint_from_json(e, ResolverRole::measurement));
    for (const auto& e : j.at("fake"))
      p.fake.push_back(endpoint_from_json(e, ResolverRole::fake));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad resolver profile: ") + e.what());
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("bad resolver profile: ") + e.what());
  }
  p.validate();
  return p;
}

} // namespace filtercrawl
