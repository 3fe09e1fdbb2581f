#pragma once

// Analysis tables computed from closed crawl logs and enumeration results.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "filtercrawl/crawler.hpp"
#include "filtercrawl/enrichment.hpp"
#include "filtercrawl/events.hpp"
#include "filtercrawl/filtercheck.hpp"
#include "filtercrawl/linkgraph.hpp"
#include "filtercrawl/tldenum.hpp"

namespace filtercrawl {

/// Domains to leave out of counts: listed domains and their subdomains, plus
/// domains carrying any of the excluded categories.
class Exclusions {
public:
  /// One registrable domain per line, '#' comments.
  void add_domain_list(std::string_view text, std::string label = "exclusion list");
  void add_domain(const DomainName& d) { domains_.insert(d); }
  void add_categories(std::set<std::string> categories, std::shared_ptr<CategoryCache> cache);

  bool excluded(const DomainName& host) const;
  bool empty() const { return domains_.empty() && categories_.empty(); }
  /// Human-readable description of each active filter.
  std::vector<std::string> labels() const;

private:
  std::set<DomainName> domains_;
  std::vector<std::string> labels_;
  std::set<std::string> categories_;
  std::shared_ptr<CategoryCache> cache_;
};

struct RunSummary {
  std::string country;
  std::uint64_t extracted_urls = 0;
  std::uint64_t filtered_urls = 0;
  std::uint64_t filtered_domains = 0;
  std::uint64_t filtered_domains_excl = 0;
};

/// One pass over the log. Throws InvalidInput naming the last good sequence
/// number when the log is torn or has gaps.
RunSummary summarize(const EventLog& log, const Exclusions& exclusions = {});

/// Hosts with a filtered verdict in the log, and their verdicts.
std::map<DomainName, FilterVerdict> filtered_verdicts(const EventLog& log);

struct ComparisonRow {
  std::string country;
  std::uint64_t baseline_count = 0; // baseline hosts that re-verify as filtered
  std::uint64_t ours_count = 0;
  std::vector<std::string> exclusions_applied;
};

/// Re-checks every baseline host before counting it.
ComparisonRow compare(const std::set<DomainName>& ours, const std::vector<Url>& baseline,
                      const ResolverProfile& profile, const CheckConfig& config, const Exclusions& exclusions,
                      int parallelism = 8);

struct BreakdownRow {
  std::string key;
  std::uint64_t count = 0;
  double fraction = 0;
};

struct Breakdown {
  std::string dimension; // "category" or "host_country"
  std::uint64_t total = 0;
  std::vector<BreakdownRow> rows; // by count, then key; "unknown" last
};

/// Buckets each domain by its primary category.
Breakdown breakdown_by_category(const std::vector<DomainName>& domains, CategoryCache& categories);
/// Buckets each verdict by the country of its control-resolved address.
Breakdown breakdown_by_host_country(const std::vector<FilterVerdict>& verdicts, const GeoDatabase& geo);

struct EnumerationCounts {
  std::string country;
  std::uint64_t candidates = 0;
  std::uint64_t filtered = 0;
  std::uint64_t filtered_host_exists = 0;
  std::uint64_t filtered_dead = 0;
};

/// Counts rows of an enumeration CSV ("candidate,status,reason,host_exists").
EnumerationCounts count_enumeration(std::string_view csv, std::string country);

/// A report ready for output: fixed column order, JSON-typed cells.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<nlohmann::json>> rows;
};

Table to_table(const RunSummary& s);
Table to_table(const ComparisonRow& r);
Table to_table(const Breakdown& b);
Table to_table(const EnumerationCounts& c);
Table ranking_table(const std::vector<std::pair<DomainName, std::uint64_t>>& ranked, std::string_view count_column);

enum class ReportFormat { csv, json };
ReportFormat parse_report_format(std::string_view s);
std::string emit(const Table& t, ReportFormat format);
/// Inverse of emit for either format.
Table parse_table(std::string_view text, ReportFormat format);

} // namespace filtercrawl
