#include "filtercrawl/worldgen.hpp"

#include <algorithm>
#include <random>

#include "filtercrawl/error.hpp"

namespace filtercrawl::sim {

using nlohmann::json;

json to_json(const GeneratorParams& p) {
  return json{{"domains", p.domains}, {"filtered_frac", p.filtered_frac}, {"seed", p.seed},
              {"clique", p.clique},   {"out_degree", p.out_degree},       {"external", p.external}};
}

GeneratorParams generator_params_from_json(const json& j) {
  GeneratorParams p;
  p.domains = j.value("domains", p.domains);
  p.filtered_frac = j.value("filtered_frac", p.filtered_frac);
  p.seed = j.value("seed", p.seed);
  p.clique = j.value("clique", p.clique);
  p.out_degree = j.value("out_degree", p.out_degree);
  p.external = j.value("external", p.external);
  return p;
}

namespace {

struct Host {
  std::string name;
  int base = 0; // index of the site this host belongs to
  bool filtered = false;
  bool exists = true;
  bool has_pages = true;
  std::vector<std::string> paths;
};

} // namespace

WorldSpec generate_world(const GeneratorParams& params) {
  if (params.domains < 4)
    throw ConfigError("generator needs at least 4 domains");
  if (params.filtered_frac < 0 || params.filtered_frac > 1)
    throw ConfigError("filtered fraction must be within [0, 1]");
  if (params.out_degree < 0)
    throw ConfigError("out degree must be non-negative");

  std::mt19937_64 rng(params.seed);
  auto chance = [&](double p) { return std::bernoulli_distribution(p)(rng); };
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  auto between = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  std::vector<Host> hosts;
  int base_id = 0;
  while (static_cast<int>(hosts.size()) < params.domains) {
    Host h;
    h.name = "d" + std::to_string(base_id) + ".test";
    h.base = base_id;
    h.filtered = chance(params.filtered_frac);
    hosts.push_back(h);
    if (static_cast<int>(hosts.size()) < params.domains && chance(0.12)) {
      Host v = h;
      v.name = (chance(0.5) ? "www." : "blog.") + h.name;
      hosts.push_back(v);
    }
    ++base_id;
  }
  // The first three sites are seeds and always filtered.
  for (auto& h : hosts)
    if (h.base < 3)
      h.filtered = true;

  WorldSpec w;
  w.country = "ZZ";
  w.generator = to_json(params);
  for (int e = 0; e < params.external; ++e)
    w.external.push_back(DomainName::parse("ext" + std::to_string(e) + ".example"));

  for (auto& h : hosts) {
    if (h.base >= 3) {
      if (chance(h.filtered ? 0.08 : 0.05)) {
        h.exists = false;
        h.has_pages = false;
      } else if (h.filtered && chance(0.04)) {
        h.has_pages = false; // resolvable but nothing listens
      }
    }
    if (h.has_pages) {
      h.paths.push_back("/");
      for (int p = 1, n = between(0, 2); p <= n; ++p)
        h.paths.push_back("/p" + std::to_string(p));
    }
  }

  std::vector<std::size_t> filtered_idx, live_idx;
  for (std::size_t i = 0; i < hosts.size(); ++i) {
    if (hosts[i].filtered)
      filtered_idx.push_back(i);
    if (hosts[i].has_pages)
      live_idx.push_back(i);
  }

  // Resolver scripts: each filtered host gets a mechanism that fires on its own.
  int private_octet = 1;
  int unserved_octet = 1;
  for (const auto& h : hosts) {
    if (!h.filtered)
      continue;
    ResolverScript s;
    const auto name = DomainName::parse(h.name);
    int mechanism = h.exists ? between(0, 4) : between(0, 1);
    if (!h.has_pages && h.exists)
      mechanism = 4; // block page against a dead control site
    switch (mechanism) {
    case 0:
      s.fake.kind = FakeKind::intercept;
      s.fake.address = Ipv4Address::from_octets(10, 10, 34, 36);
      break;
    case 1:
      s.measurement.kind = MeasurementKind::poison;
      s.measurement.address = Ipv4Address::from_octets(10, 0, static_cast<std::uint8_t>(private_octet / 250),
                                                       static_cast<std::uint8_t>(private_octet % 250 + 1));
      ++private_octet;
      break;
    case 2:
      s.measurement.kind = MeasurementKind::timeout;
      break;
    case 3:
      s.measurement.kind = MeasurementKind::poison; // public address with no server behind it
      s.measurement.address = Ipv4Address::from_octets(198, 18, static_cast<std::uint8_t>(unserved_octet / 250),
                                                       static_cast<std::uint8_t>(unserved_octet % 250 + 1));
      ++unserved_octet;
      break;
    default:
      s.measurement.kind = MeasurementKind::blockpage;
      s.measurement.length = 100;
      break;
    }
    w.resolver_behaviors[name] = s;
  }

  auto page_url = [&](const Host& h, const std::string& path) { return "http://" + h.name + path; };
  auto random_target = [&](const Host& from) -> std::string {
    if (chance(0.06) && !w.external.empty())
      return "http://" + w.external[pick(w.external.size())].str() + "/";
    const bool to_filtered = from.filtered && !filtered_idx.empty() && chance(0.5);
    const auto& pool = to_filtered ? filtered_idx : live_idx;
    const auto& t = hosts[pool.empty() ? pick(hosts.size()) : pool[pick(pool.size())]];
    if (t.paths.empty() || chance(0.05))
      return page_url(t, chance(0.5) ? "/" : "/missing");
    return page_url(t, t.paths[pick(t.paths.size())]);
  };

  std::map<std::pair<std::size_t, std::string>, std::vector<std::string>> links;
  for (std::size_t i = 0; i < hosts.size(); ++i) {
    const auto& h = hosts[i];
    for (const auto& path : h.paths) {
      auto& out = links[{i, path}];
      const int n = between(0, static_cast<int>(std::lround(2 * params.out_degree)));
      for (int k = 0; k < n; ++k)
        out.push_back(random_target(h));
      if (chance(0.3))
        out.push_back(chance(0.5) ? "/static/app.js" : page_url(h, "/img/logo.png"));
      if (chance(0.3) && !h.paths.empty())
        out.push_back(h.paths[pick(h.paths.size())]); // same host, relative
      if (chance(0.2)) {
        for (std::size_t j = 0; j < hosts.size(); ++j)
          if (j != i && hosts[j].base == h.base) {
            out.push_back(page_url(hosts[j], "/"));
            break;
          }
      }
      if (chance(0.2) && !out.empty())
        out.push_back(out[pick(out.size())]);
    }
  }

  // Clique of filtered sites with pages: every root links to every other root.
  std::vector<std::size_t> clique_pool;
  for (auto i : filtered_idx)
    if (hosts[i].has_pages)
      clique_pool.push_back(i);
  std::shuffle(clique_pool.begin(), clique_pool.end(), rng);
  clique_pool.resize(std::min<std::size_t>(clique_pool.size(), static_cast<std::size_t>(std::max(params.clique, 0))));
  for (auto a : clique_pool)
    for (auto b : clique_pool)
      if (a != b)
        links[{a, "/"}].push_back(page_url(hosts[b], "/"));

  for (std::size_t i = 0; i < hosts.size(); ++i) {
    const auto& h = hosts[i];
    DomainSpec d;
    d.name = DomainName::parse(h.name);
    d.filtered = h.filtered;
    d.exists = h.exists;
    for (const auto& path : h.paths) {
      PageSpec p;
      p.path = path;
      p.links = links[{i, path}];
      const auto min_size = render_page(p).size();
      const auto wanted = static_cast<std::uint64_t>(path == "/" ? between(1000, 3000) : between(300, 2000));
      p.body_length = std::max<std::uint64_t>(min_size, wanted);
      d.pages.push_back(std::move(p));
    }
    w.domains.push_back(std::move(d));
  }

  for (const auto& h : hosts)
    if (h.base < 3 && h.has_pages)
      w.seeds.push_back(page_url(h, "/"));
  if (!live_idx.empty())
    for (auto i : live_idx)
      if (!hosts[i].filtered) {
        w.seeds.push_back(page_url(hosts[i], "/"));
        break;
      }

  // Round-trip through the loader so addresses are assigned and the result validated.
  return world_from_json(to_json(w));
}

} // namespace filtercrawl::sim
