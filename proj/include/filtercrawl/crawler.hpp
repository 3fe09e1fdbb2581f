#pragma once

// Recursive traversal: fetch pages on filtered hosts, extract their links,
// check the linked hosts and queue links that land on filtered ones.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "filtercrawl/events.hpp"
#include "filtercrawl/filtercheck.hpp"
#include "filtercrawl/linkgraph.hpp"
#include "filtercrawl/tldenum.hpp"
#include "filtercrawl/url.hpp"

namespace filtercrawl {

std::set<std::string> default_asset_extensions();

struct CrawlConfig {
  int max_depth = 100;
  int parallelism = 8;
  std::chrono::milliseconds per_host_delay{500};
  std::set<std::string> asset_extensions = default_asset_extensions();
  std::size_t max_page_bytes = 5u << 20;
  int max_redirects = 5;
  std::optional<Seconds> deadline;            // wall-clock limit for this invocation
  std::optional<std::uint64_t> page_budget;   // stop abruptly after this many fetches, as a kill would
  std::optional<DomainName> canary = DomainName::parse("example.com"); // resolver health probe
  std::string snapshot_path;                  // empty: no snapshots

  void validate() const;
};

nlohmann::json to_json(const CrawlConfig& c);
/// Fields absent from `j` keep the values already in `base`.
CrawlConfig crawl_config_from_json(const nlohmann::json& j, CrawlConfig base = {});

struct CrawlTask {
  Url url;
  int depth = 0;
  std::optional<DomainName> referrer_domain;
};

bool is_static_asset(const Url& url, const CrawlConfig& config);
/// Same registrable domain; hosts without one compare as whole names.
bool is_self_reference(const Url& url, const DomainName& page_domain, const SuffixRuleSet& rules);

struct CrawlStats {
  std::uint64_t urls_extracted = 0;
  std::uint64_t urls_filtered = 0;
  std::uint64_t domains_filtered = 0;
  std::uint64_t pages_fetched = 0;  // fetches that returned a page
  std::uint64_t fetch_attempts = 0;
  std::uint64_t probes = 0;
};

/// Crawl progress, rebuilt by applying events in order. Snapshots are this
/// state serialized with the sequence number of the next event.
class CrawlState {
public:
  std::string country;
  std::uint64_t next_seq = 0;
  std::string stop_reason; // "exhausted", "deadline", "budget", "aborted"

  void apply(const nlohmann::json& event, const SuffixRuleSet& rules);

  bool visited(const std::string& url) const { return visited_.contains(url); }
  const FilterVerdict* verdict(const DomainName& host) const;
  const std::map<DomainName, FilterVerdict>& verdicts() const { return verdicts_; }
  /// Pending tasks in queue order.
  std::vector<CrawlTask> frontier() const;
  std::size_t frontier_size() const { return frontier_.size(); }
  std::set<DomainName> discovered() const;
  const std::set<std::string>& extracted_urls() const { return extracted_; }
  const std::set<std::string>& filtered_urls() const { return filtered_; }
  const FilteredGraph& graph() const { return graph_; }
  CrawlStats stats() const;

  nlohmann::json to_json() const;
  static CrawlState from_json(const nlohmann::json& j);

private:
  struct Pending {
    CrawlTask task;
    std::string key;
  };
  std::unordered_set<std::string> visited_;
  std::map<DomainName, FilterVerdict> verdicts_;
  std::map<std::uint64_t, Pending> frontier_;
  std::unordered_map<std::string, std::uint64_t> frontier_index_;
  std::uint64_t next_order_ = 0;
  std::set<std::string> extracted_;
  std::set<std::string> filtered_;
  FilteredGraph graph_;
  std::uint64_t pages_fetched_ = 0;
  std::uint64_t fetch_attempts_ = 0;
};

/// Runs (or continues, when `state` is non-empty) a crawl. Seeds are checked
/// first; only seeds on filtered hosts are queued. Throws RunAborted after
/// writing a snapshot when a resolver stops answering, ConfigError when the
/// state belongs to another country.
CrawlState crawl(const std::vector<Url>& seeds, const ResolverProfile& profile, const CheckConfig& check_cfg,
                 const CrawlConfig& crawl_cfg, const SuffixRuleSet& rules, EventSink& sink, CrawlState state = {});

/// Snapshot plus replay of the log records the snapshot has not seen. A torn
/// final log line is cut from the file. Missing files give an empty state.
CrawlState load_crawl_state(const std::string& snapshot_path, const std::string& log_path,
                            const SuffixRuleSet& rules);

/// Seed list: one URL per line, optional further CSV columns, '#' comments,
/// optional "url" header. Unusable rows are skipped and reported in `rejected`.
std::vector<Url> parse_seed_list(std::string_view text, std::vector<std::string>* rejected = nullptr);

} // namespace filtercrawl
