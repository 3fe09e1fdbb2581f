#pragma once

// World documents for the simulated network: which domains exist, which are
// filtered and how, and what their pages contain.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "filtercrawl/domain.hpp"

namespace filtercrawl::sim {

struct PageSpec {
  std::string path = "/";
  std::vector<std::string> links;            // URL text as written in the page
  std::optional<std::uint64_t> body_length;  // exact body size; smallest fitting size when absent
  std::optional<std::string> redirect;       // answer 301 with this Location instead of a page
};

struct DomainSpec {
  DomainName name;
  bool filtered = false;
  bool exists = true;
  std::optional<Ipv4Address> address; // assigned on load when absent
  std::vector<PageSpec> pages;
};

enum class MeasurementKind { honest, timeout, nxdomain, poison, blockpage };
enum class FakeKind { silent, intercept };

struct MeasurementScript {
  MeasurementKind kind = MeasurementKind::honest;
  std::optional<Ipv4Address> address; // poison target, or assigned block-page server
  std::uint64_t length = 0;           // block-page size
};

struct FakeScript {
  FakeKind kind = FakeKind::silent;
  Ipv4Address address;
};

struct ResolverScript {
  MeasurementScript measurement;
  FakeScript fake;
};

struct WorldSpec {
  std::string country = "ZZ";
  std::vector<DomainSpec> domains;
  std::map<DomainName, ResolverScript> resolver_behaviors; // domains without an entry use defaults
  std::vector<std::string> seeds;
  std::vector<DomainName> external;
  std::vector<Ipv4Address> blackholes; // accept connections, never answer
  nlohmann::json generator;           // generator parameters, when generated

  const DomainSpec* find(const DomainName& name) const;
  /// Effective script: explicit entry, else intercept for filtered domains, else honest/silent.
  ResolverScript script_for(const DomainName& name) const;
  /// Block-page servers keyed by address, derived from the scripts.
  std::map<Ipv4Address, std::uint64_t> blockpages() const;
};

/// Parses and validates a world document, assigning addresses where absent.
/// Throws InvalidInput naming the offending domain/page/link.
WorldSpec load_world(std::string_view text);
WorldSpec world_from_json(const nlohmann::json& j);
nlohmann::json to_json(const WorldSpec& w);

/// Exact page body served for `page` (links as anchors, padded to body_length).
std::string render_page(const PageSpec& page);

std::string to_string(MeasurementKind k);
std::string to_string(FakeKind k);

} // namespace filtercrawl::sim
