#pragma once

// One configured run: profile, check and crawl settings, rule and provider
// files, and optionally a simulated world standing in for the network.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "filtercrawl/crawler.hpp"
#include "filtercrawl/filtercheck.hpp"
#include "filtercrawl/tldenum.hpp"

namespace filtercrawl {

namespace sim {
class SimNetwork;
}

struct ProviderSettings {
  std::string category_table; // local CSV
  std::string category_url;   // remote service base URL
  std::string category_api_key;
  std::string geo_db; // CSV ranges
};

struct RunConfig {
  ResolverProfile profile;
  CheckConfig check;
  int check_parallelism = 8;
  CrawlConfig crawl;
  EnumerationOptions enumerate;
  std::string seed_path;
  std::string output_dir = ".";
  std::string psl_path;
  bool include_private_psl = true;
  ProviderSettings providers;
  std::string world_path; // non-empty: serve this world on loopback and measure it

  /// The profile is checked when a session first measures, not here.
  void validate() const;
};

/// Control 8.8.8.8, maxdiff 0.5, 10 s timeout, depth 100.
RunConfig default_run_config();
/// Keys absent from `j` keep their defaults. "profile_path" loads a profile file.
RunConfig run_config_from_json(const nlohmann::json& j);

struct CrawlOutcome {
  CrawlState state;
  std::vector<std::string> rejected_seeds;
};

class Session {
public:
  explicit Session(RunConfig config);
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const RunConfig& config() const { return config_; }
  const ResolverProfile& profile() const { return config_.profile; }
  const SuffixRuleSet& rules();

  /// One domain per line; returns one JSON verdict per line.
  std::string check(std::string_view domains_text);
  /// Writes events.jsonl, snapshot.json, edges.csv, adjacency.json and
  /// verdicts.jsonl under the output directory.
  CrawlOutcome crawl(std::string_view seeds_text, bool resume);
  /// Bare public suffixes and malformed rows are skipped with a warning.
  std::string enumerate(std::string_view domains_text);
  /// Request: {kind, log, format, exclusions, exclude_categories, baseline, top, enumeration, country}.
  std::string report(const nlohmann::json& request);

  std::string output_path(const std::string& name) const;

private:
  const ResolverProfile& measuring_profile() const;

  RunConfig config_;
  std::optional<SuffixRuleSet> rules_;
  std::unique_ptr<sim::SimNetwork> world_;
};

/// The generated world document for the given generator parameters.
std::string generate_world_document(const nlohmann::json& params);

} // namespace filtercrawl
