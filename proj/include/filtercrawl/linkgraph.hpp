#pragma once

// Directed hyperlink graph between filtered sites (registrable domains).

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "filtercrawl/filtercheck.hpp"
#include "filtercrawl/tldenum.hpp"
#include "filtercrawl/url.hpp"

namespace filtercrawl {

struct LinkEdge {
  DomainName from_domain;
  DomainName to_domain;
  std::uint64_t weight = 1; // distinct source URLs

  friend bool operator==(const LinkEdge&, const LinkEdge&) = default;
};

/// Status of a host's cached verdict, nullopt when the host was never checked.
using VerdictLookup = std::function<std::optional<FilterStatus>(const DomainName&)>;

enum class RankBy { backlinks, forward };

class FilteredGraph {
public:
  /// Adds the link when both hosts are filtered and belong to different sites.
  /// Returns the edge with its updated weight, or nullopt when no edge applies.
  /// Throws InvalidInput when either host has no verdict.
  std::optional<LinkEdge> record_link(const Url& from_url, const Url& to_url, const VerdictLookup& verdicts,
                                      const SuffixRuleSet& rules);

  void add_node(const DomainName& d) { nodes_.insert(d); }
  /// Sets an edge's weight directly (import path).
  void set_edge(const DomainName& from, const DomainName& to, std::uint64_t weight);

  const std::set<DomainName>& nodes() const { return nodes_; }
  /// Sorted by (from, to).
  std::vector<LinkEdge> edges() const;
  std::size_t edge_count() const { return weights_.size(); }
  std::uint64_t weight(const DomainName& from, const DomainName& to) const;

  /// Distinct in-neighbour / out-neighbour sites per node (zero entries included).
  std::map<DomainName, std::uint64_t> backlink_counts() const;
  std::map<DomainName, std::uint64_t> forward_counts() const;
  /// Same, summing edge weights instead of counting neighbours.
  std::map<DomainName, std::uint64_t> weighted_backlink_counts() const;
  std::map<DomainName, std::uint64_t> weighted_forward_counts() const;

  /// Full internal state, including which source URLs were already counted.
  nlohmann::json state_json() const;
  static FilteredGraph from_state_json(const nlohmann::json& j);

  friend bool operator==(const FilteredGraph& a, const FilteredGraph& b) {
    return a.nodes_ == b.nodes_ && a.weights_ == b.weights_;
  }

private:
  std::set<DomainName> nodes_;
  std::map<std::pair<DomainName, DomainName>, std::uint64_t> weights_;
  std::set<std::pair<std::string, DomainName>> sources_; // (from_url, to site) already counted
};

/// Highest counts first; ties in ascending domain order. Excluded nodes are
/// dropped before ranking.
std::vector<std::pair<DomainName, std::uint64_t>> top_n(const FilteredGraph& graph, RankBy direction, std::size_t n,
                                                        const std::function<bool(const DomainName&)>& exclude = {});

/// "from_domain,to_domain,weight" with header, rows sorted.
std::string export_edge_csv(const FilteredGraph& graph);
/// {domain: {out: [...], in: [...], out_weight: {to: weight}}}, keys sorted.
std::string export_adjacency_json(const FilteredGraph& graph);
FilteredGraph import_edge_csv(std::string_view text);
FilteredGraph import_adjacency_json(std::string_view text);

} // namespace filtercrawl
