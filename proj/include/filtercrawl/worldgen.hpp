#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>

#include <json.hpp>

#include "filtercrawl/tldenum.hpp"
#include "filtercrawl/world.hpp"

namespace filtercrawl::sim {

struct GeneratorParams {
  int domains = 100;           // total host entries, variants included
  double filtered_frac = 0.3;
  std::uint64_t seed = 1;
  int clique = 0;              // size of one fully interlinked group of filtered sites
  double out_degree = 4.0;     // mean links per page
  int external = 3;            // hosts outside the world that pages may link to
};

nlohmann::json to_json(const GeneratorParams& p);
GeneratorParams generator_params_from_json(const nlohmann::json& j);

/// Seeded random world. Same parameters, same world.
WorldSpec generate_world(const GeneratorParams& params);

/// Breadth-first discovery computed straight from the world document, with
/// no network involved: the reference answer for a crawl of that world.
struct OracleOptions {
  int max_depth = 100;
  std::set<std::string> asset_extensions; // empty means the default set
};

struct OracleResult {
  std::set<DomainName> discovered;   // hosts confirmed filtered
  std::set<DomainName> probed;       // every host a crawl has to check
  std::set<std::string> fetched;     // page URLs a crawl fetches
  std::set<std::string> extracted;   // links kept after asset/self-link removal
  std::set<std::string> filtered;    // extracted links on discovered hosts
  std::map<std::pair<std::string, std::string>, std::uint64_t> edges; // registrable from/to, distinct source URLs
};

OracleResult oracle_discover(const WorldSpec& world, const SuffixRuleSet& rules, const OracleOptions& options = {});

} // namespace filtercrawl::sim
