#include "filtercrawl/linkgraph.hpp"

#include <algorithm>

#include <json.hpp>

#include "filtercrawl/error.hpp"
#include "filtercrawl/util.hpp"

namespace filtercrawl {

using nlohmann::json;

namespace {

DomainName site_of(const DomainName& host, const SuffixRuleSet& rules) {
  auto reg = registrable_domain(host, rules);
  return reg ? *reg : host;
}

} // namespace

std::optional<LinkEdge> FilteredGraph::record_link(const Url& from_url, const Url& to_url, const VerdictLookup& verdicts,
                                                   const SuffixRuleSet& rules) {
  const auto from_status = verdicts(from_url.host);
  const auto to_status = verdicts(to_url.host);
  if (!from_status || !to_status)
    throw InvalidInput("no verdict for " + (from_status ? to_url.host : from_url.host).str());
  if (*from_status != FilterStatus::filtered || *to_status != FilterStatus::filtered)
    return std::nullopt;
  auto from = site_of(from_url.host, rules);
  auto to = site_of(to_url.host, rules);
  if (from == to)
    return std::nullopt;
  nodes_.insert(from);
  nodes_.insert(to);
  auto& w = weights_[{from, to}];
  if (sources_.emplace(from_url.str(), to).second)
    ++w;
  return LinkEdge{from, to, w};
}

void FilteredGraph::set_edge(const DomainName& from, const DomainName& to, std::uint64_t weight) {
  if (from == to)
    throw InvalidInput("self edge on " + from.str());
  if (weight == 0)
    throw InvalidInput("edge weight must be positive");
  nodes_.insert(from);
  nodes_.insert(to);
  weights_[{from, to}] = weight;
}

std::vector<LinkEdge> FilteredGraph::edges() const {
  std::vector<LinkEdge> out;
  out.reserve(weights_.size());
  for (const auto& [k, w] : weights_)
    out.push_back({k.first, k.second, w});
  return out;
}

std::uint64_t FilteredGraph::weight(const DomainName& from, const DomainName& to) const {
  auto it = weights_.find({from, to});
  return it == weights_.end() ? 0 : it->second;
}

std::map<DomainName, std::uint64_t> FilteredGraph::backlink_counts() const {
  std::map<DomainName, std::uint64_t> out;
  for (const auto& n : nodes_)
    out[n] = 0;
  for (const auto& [k, w] : weights_)
    ++out[k.second];
  return out;
}

std::map<DomainName, std::uint64_t> FilteredGraph::forward_counts() const {
  std::map<DomainName, std::uint64_t> out;
  for (const auto& n : nodes_)
    out[n] = 0;
  for (const auto& [k, w] : weights_)
    ++out[k.first];
  return out;
}

std::map<DomainName, std::uint64_t> FilteredGraph::weighted_backlink_counts() const {
  std::map<DomainName, std::uint64_t> out;
  for (const auto& n : nodes_)
    out[n] = 0;
  for (const auto& [k, w] : weights_)
    out[k.second] += w;
  return out;
}

std::map<DomainName, std::uint64_t> FilteredGraph::weighted_forward_counts() const {
  std::map<DomainName, std::uint64_t> out;
  for (const auto& n : nodes_)
    out[n] = 0;
  for (const auto& [k, w] : weights_)
    out[k.first] += w;
  return out;
}

json FilteredGraph::state_json() const {
  json nodes = json::array();
  for (const auto& n : nodes_)
    nodes.push_back(n.str());
  json edges = json::array();
  for (const auto& [k, w] : weights_)
    edges.push_back(json::array({k.first.str(), k.second.str(), w}));
  json sources = json::array();
  for (const auto& [url, to] : sources_)
    sources.push_back(json::array({url, to.str()}));
  return json{{"nodes", nodes}, {"edges", edges}, {"sources", sources}};
}

FilteredGraph FilteredGraph::from_state_json(const json& j) {
  FilteredGraph g;
  for (const auto& n : j.at("nodes"))
    g.nodes_.insert(DomainName::parse(n.get<std::string>()));
  for (const auto& e : j.at("edges"))
    g.set_edge(DomainName::parse(e.at(0).get<std::string>()), DomainName::parse(e.at(1).get<std::string>()),
               e.at(2).get<std::uint64_t>());
  for (const auto& s : j.at("sources"))
    g.sources_.emplace(s.at(0).get<std::string>(), DomainName::parse(s.at(1).get<std::string>()));
  return g;
}

std::vector<std::pair<DomainName, std::uint64_t>> top_n(const FilteredGraph& graph, RankBy direction, std::size_t n,
                                                        const std::function<bool(const DomainName&)>& exclude) {
  if (n == 0)
    throw InvalidInput("top_n needs n >= 1");
  const auto counts = direction == RankBy::backlinks ? graph.backlink_counts() : graph.forward_counts();
  std::vector<std::pair<DomainName, std::uint64_t>> ranked;
  for (const auto& [d, c] : counts)
    if (!exclude || !exclude(d))
      ranked.emplace_back(d, c);
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > n)
    ranked.resize(n);
  return ranked;
}

std::string export_edge_csv(const FilteredGraph& graph) {
  std::string out = "from_domain,to_domain,weight\n";
  for (const auto& e : graph.edges())
    out += e.from_domain.str() + "," + e.to_domain.str() + "," + std::to_string(e.weight) + "\n";
  return out;
}

std::string export_adjacency_json(const FilteredGraph& graph) {
  json out = json::object();
  for (const auto& n : graph.nodes())
    out[n.str()] = json{{"out", json::array()}, {"in", json::array()}, {"out_weight", json::object()}};
  for (const auto& e : graph.edges()) {
    out[e.from_domain.str()]["out"].push_back(e.to_domain.str());
    out[e.from_domain.str()]["out_weight"][e.to_domain.str()] = e.weight;
    out[e.to_domain.str()]["in"].push_back(e.from_domain.str());
  }
  return out.dump(2) + "\n";
}

FilteredGraph import_edge_csv(std::string_view text) {
  FilteredGraph g;
  bool header = true;
  for (const auto& raw : split(text, '\n')) {
    auto line = trim(raw);
    if (line.empty())
      continue;
    if (header) {
      header = false;
      if (line == "from_domain,to_domain,weight")
        continue;
    }
    auto cols = split(line, ',');
    if (cols.size() != 3)
      throw InvalidInput("edge row needs 3 columns: '" + line + "'");
    std::uint64_t w = 0;
    try {
      w = std::stoull(cols[2]);
    } catch (const std::exception&) {
      throw InvalidInput("bad weight in '" + line + "'");
    }
    g.set_edge(DomainName::parse(cols[0]), DomainName::parse(cols[1]), w);
  }
  return g;
}

FilteredGraph import_adjacency_json(std::string_view text) {
  FilteredGraph g;
  try {
    const auto j = json::parse(text);
    for (const auto& [name, entry] : j.items()) {
      const auto from = DomainName::parse(name);
      g.add_node(from);
      const auto weights = entry.value("out_weight", json::object());
      for (const auto& to : entry.at("out"))
        g.set_edge(from, DomainName::parse(to.get<std::string>()),
                   weights.value(to.get<std::string>(), std::uint64_t{1}));
    }
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("bad adjacency document: ") + e.what());
  }
  return g;
}

} // namespace filtercrawl
