#include <gtest/gtest.h>

#include <random>

#include "filtercrawl/error.hpp"
#include "filtercrawl/linkgraph.hpp"
#include "test_support.hpp"

using namespace filtercrawl;
using namespace testsupport;

namespace {

VerdictLookup all_filtered_except(std::set<std::string> clean) {
  return [clean](const DomainName& d) -> std::optional<FilterStatus> {
    return clean.contains(d.str()) ? FilterStatus::not_filtered : FilterStatus::filtered;
  };
}

DomainName dn(const char* s) { return DomainName::parse(s); }

} // namespace

TEST(Graph, RecordLinkRules) {
  FilteredGraph g;
  const auto v = all_filtered_except({"clean.test"});
  auto e = g.record_link(normalize_url("http://a.test/1"), normalize_url("http://b.test/"), v, psl());
  ASSERT_TRUE(e);
  EXPECT_EQ(e->weight, 1u);
  // same source URL again does not add weight
  EXPECT_EQ(g.record_link(normalize_url("http://a.test/1"), normalize_url("http://b.test/x"), v, psl())->weight, 1u);
  EXPECT_EQ(g.record_link(normalize_url("http://a.test/2"), normalize_url("http://www.b.test/"), v, psl())->weight, 2u);
  EXPECT_FALSE(g.record_link(normalize_url("http://a.test/"), normalize_url("http://clean.test/"), v, psl()));
  EXPECT_FALSE(g.record_link(normalize_url("http://a.test/"), normalize_url("http://cdn.a.test/"), v, psl()));
  EXPECT_EQ(g.edge_count(), 1u);
  EXPECT_FALSE(g.nodes().contains(dn("clean.test")));
}

TEST(Graph, MissingVerdictThrows) {
  FilteredGraph g;
  VerdictLookup none = [](const DomainName&) { return std::optional<FilterStatus>{}; };
  EXPECT_THROW(g.record_link(normalize_url("http://a.test/"), normalize_url("http://b.test/"), none, psl()),
               InvalidInput);
}

TEST(Graph, CountsAndTopN) {
  FilteredGraph g;
  g.set_edge(dn("a.test"), dn("hub.test"), 3);
  g.set_edge(dn("b.test"), dn("hub.test"), 1);
  g.set_edge(dn("c.test"), dn("hub.test"), 1);
  g.set_edge(dn("a.test"), dn("b.test"), 1);
  g.set_edge(dn("c.test"), dn("a.test"), 1);
  EXPECT_EQ(g.backlink_counts().at(dn("hub.test")), 3u);
  EXPECT_EQ(g.weighted_backlink_counts().at(dn("hub.test")), 5u);
  EXPECT_EQ(g.backlink_counts().at(dn("c.test")), 0u);
  const auto top = top_n(g, RankBy::backlinks, 3);
  ASSERT_EQ(top.size(), 3u);
  EXPECT_EQ(top[0].first, dn("hub.test"));
  // a and b tie at one backlink: ascending name
  EXPECT_EQ(top[1].first, dn("a.test"));
  EXPECT_EQ(top[2].first, dn("b.test"));
  const auto fwd = top_n(g, RankBy::forward, 10, [](const DomainName& d) { return d.str() == "a.test"; });
  EXPECT_EQ(fwd.size(), 3u);
  EXPECT_EQ(fwd[0].first, dn("c.test"));
  EXPECT_TRUE(top_n(FilteredGraph{}, RankBy::forward, 5).empty());
  EXPECT_THROW(g.set_edge(dn("a.test"), dn("a.test"), 1), InvalidInput);
}

TEST(Graph, ExportImportRoundTrip) {
  FilteredGraph g;
  g.set_edge(dn("a.test"), dn("b.test"), 2);
  g.set_edge(dn("b.test"), dn("c.co.uk"), 1);
  g.set_edge(dn("c.co.uk"), dn("a.test"), 7);
  const auto csv = export_edge_csv(g);
  EXPECT_TRUE(csv.starts_with("from_domain,to_domain,weight\n"));
  EXPECT_TRUE(import_edge_csv(csv) == g);
  EXPECT_TRUE(import_adjacency_json(export_adjacency_json(g)) == g);
  EXPECT_EQ(export_edge_csv(import_edge_csv(csv)), csv);
  EXPECT_EQ(import_edge_csv("from_domain,to_domain,weight\n").edge_count(), 0u);
  EXPECT_THROW(import_edge_csv("from_domain,to_domain,weight\na.test,b.test,zero\n"), InvalidInput);
}

TEST(Graph, StateJsonKeepsCountedSources) {
  FilteredGraph g;
  const auto v = all_filtered_except({});
  g.record_link(normalize_url("http://a.test/1"), normalize_url("http://b.test/"), v, psl());
  auto back = FilteredGraph::from_state_json(g.state_json());
  EXPECT_EQ(back.record_link(normalize_url("http://a.test/1"), normalize_url("http://b.test/"), v, psl())->weight, 1u);
}

// Property: weights equal the number of distinct source URLs per site pair,
// recomputed independently from the raw link list.
TEST(Graph, RecountProperty) {
  std::mt19937_64 rng(3);
  const std::vector<std::string> hosts = {"a.test", "www.a.test", "b.test", "c.co.uk", "x.c.co.uk", "d.test", "e.test"};
  const std::set<std::string> clean = {"e.test"};
  auto site = [](const std::string& h) { return registrable_domain(DomainName::parse(h), psl())->str(); };
  for (int trial = 0; trial < 20; ++trial) {
    FilteredGraph g;
    std::map<std::pair<std::string, std::string>, std::set<std::string>> sources;
    for (int i = 0; i < 200; ++i) {
      const auto& fh = hosts[rng() % hosts.size()];
      const auto& th = hosts[rng() % hosts.size()];
      const auto from = "http://" + fh + "/p" + std::to_string(rng() % 5);
      const auto to = "http://" + th + "/q" + std::to_string(rng() % 5);
      g.record_link(normalize_url(from), normalize_url(to), all_filtered_except(clean), psl());
      if (!clean.contains(fh) && !clean.contains(th) && site(fh) != site(th))
        sources[{site(fh), site(th)}].insert(from);
    }
    ASSERT_EQ(g.edge_count(), sources.size());
    for (const auto& [k, s] : sources)
      EXPECT_EQ(g.weight(dn(k.first.c_str()), dn(k.second.c_str())), s.size());
  }
}
