// Reference discovery over a world document. Deliberately shares no code with
// the crawler beyond the suffix list: its own URL handling, its own asset
// rule, and plain level-by-level BFS over the world document.

#include <algorithm>
#include <deque>
#include <map>

#include "filtercrawl/error.hpp"
#include "filtercrawl/worldgen.hpp"

namespace filtercrawl::sim {

namespace {

const std::set<std::string> kAssetExtensions = {"js",  "css", "png",  "jpg",   "jpeg", "gif", "svg", "ico",
                                                "woff", "woff2", "ttf", "mp4", "webm", "pdf", "zip"};

struct SimpleUrl {
  std::string scheme;
  std::string host;
  std::string path; // including any query
  std::string text() const { return scheme + "://" + host + path; }
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// Handles the link shapes worlds use: absolute, scheme-relative, root-relative
// and plain relative. Dot segments are not expected in worlds and are refused
// loudly so a mismatch with the crawler cannot go unnoticed.
std::optional<SimpleUrl> resolve_link(std::string link, const SimpleUrl& base) {
  if (auto hash = link.find('#'); hash != std::string::npos)
    link.resize(hash);
  if (link.find("/./") != std::string::npos || link.find("/../") != std::string::npos || link == "." || link == "..")
    throw InvalidInput("reference discovery does not handle dot segments: " + link);
  SimpleUrl u;
  std::string rest;
  if (auto colon = link.find("://"); colon != std::string::npos) {
    u.scheme = lower(link.substr(0, colon));
    if (u.scheme != "http" && u.scheme != "https")
      return std::nullopt;
    rest = link.substr(colon + 3);
  } else if (link.starts_with("//")) {
    u.scheme = base.scheme;
    rest = link.substr(2);
  } else if (link.find(':') != std::string::npos && link.find(':') < link.find('/')) {
    return std::nullopt; // mailto:, javascript: and friends
  } else {
    u.scheme = base.scheme;
    u.host = base.host;
    if (link.empty())
      u.path = base.path;
    else if (link.front() == '/')
      u.path = link;
    else if (link.front() == '?')
      u.path = base.path.substr(0, base.path.find('?')) + link;
    else
      u.path = base.path.substr(0, base.path.substr(0, base.path.find('?')).rfind('/') + 1) + link;
    return u;
  }
  const auto slash = rest.find_first_of("/?");
  std::string authority = rest.substr(0, slash);
  u.path = slash == std::string::npos ? "/" : rest.substr(slash);
  if (u.path.front() == '?')
    u.path = "/" + u.path;
  if (auto at = authority.rfind('@'); at != std::string::npos)
    authority = authority.substr(at + 1);
  if (auto colon = authority.find(':'); colon != std::string::npos) {
    const auto port = authority.substr(colon + 1);
    authority.resize(colon);
    if (!port.empty() && port != (u.scheme == "https" ? "443" : "80"))
      authority += ":" + port;
  }
  u.host = lower(authority);
  if (!u.host.empty() && u.host.back() == '.')
    u.host.pop_back();
  if (u.host.empty() || Ipv4Address::try_parse(u.host))
    return std::nullopt;
  return u;
}

bool is_asset(const SimpleUrl& u, const std::set<std::string>& extensions) {
  auto path = u.path.substr(0, u.path.find('?'));
  auto last = path.substr(path.rfind('/') + 1);
  auto dot = last.rfind('.');
  if (dot == std::string::npos)
    return false;
  return extensions.contains(lower(last.substr(dot + 1)));
}

std::string site_of(const std::string& host, const SuffixRuleSet& rules) {
  auto name = DomainName::try_parse(host);
  if (!name)
    return host;
  auto reg = registrable_domain(*name, rules);
  return reg ? reg->str() : name->str();
}

} // namespace

OracleResult oracle_discover(const WorldSpec& world, const SuffixRuleSet& rules, const OracleOptions& options) {
  const auto& extensions = options.asset_extensions.empty() ? kAssetExtensions : options.asset_extensions;

  std::map<std::string, const DomainSpec*> by_name;
  for (const auto& d : world.domains)
    by_name[d.name.str()] = &d;
  auto is_filtered = [&](const std::string& host) {
    auto it = by_name.find(host);
    return it != by_name.end() && it->second->filtered;
  };
  // Page lookup: nullptr when the fetch yields no page body worth parsing.
  auto page_at = [&](const SimpleUrl& u) -> const PageSpec* {
    auto it = by_name.find(u.host);
    if (it == by_name.end() || !it->second->exists)
      return nullptr;
    for (const auto& p : it->second->pages)
      if (p.path == u.path)
        return &p;
    return nullptr;
  };

  OracleResult r;
  std::set<std::string> known;   // hosts with a verdict
  std::set<std::string> visited; // URLs ever queued or reached by redirect
  struct Task {
    SimpleUrl url;
    int depth;
  };
  std::deque<Task> queue;

  const SimpleUrl none{"http", "", "/"};
  for (const auto& s : world.seeds) {
    auto u = resolve_link(s, none);
    if (!u)
      continue;
    known.insert(u->host);
    r.probed.insert(DomainName::parse(u->host));
    if (is_filtered(u->host) && visited.insert(u->text()).second)
      queue.push_back({*u, 0});
  }

  while (!queue.empty()) {
    auto task = queue.front();
    queue.pop_front();
    r.fetched.insert(task.url.text());

    // Follow same-host redirects; a redirect elsewhere becomes an ordinary link.
    SimpleUrl page_url = task.url;
    const PageSpec* page = page_at(page_url);
    std::vector<std::string> links;
    for (int hops = 0; page && page->redirect; ++hops) {
      auto target = resolve_link(*page->redirect, page_url);
      if (!target) {
        page = nullptr;
        break;
      }
      if (target->host != page_url.host || target->scheme != page_url.scheme) {
        links.push_back(*page->redirect);
        page = nullptr;
        break;
      }
      if (hops == 5 || !visited.insert(target->text()).second) {
        page = nullptr;
        break;
      }
      r.fetched.insert(target->text());
      page_url = *target;
      page = page_at(page_url);
    }
    if (page)
      links.insert(links.end(), page->links.begin(), page->links.end());

    const auto from_site = site_of(page_url.host, rules);
    const bool may_probe = task.depth + 1 <= options.max_depth;
    std::set<std::string> seen_on_page;
    std::set<std::string> sites_linked;
    for (const auto& link : links) {
      auto u = resolve_link(link, page_url);
      if (!u || !seen_on_page.insert(u->text()).second)
        continue;
      if (is_asset(*u, extensions))
        continue;
      const auto to_site = site_of(u->host, rules);
      if (to_site == from_site)
        continue;
      r.extracted.insert(u->text());
      if (may_probe && known.insert(u->host).second)
        r.probed.insert(DomainName::parse(u->host));
      if (!known.contains(u->host) || !is_filtered(u->host))
        continue;
      r.filtered.insert(u->text());
      if (sites_linked.insert(to_site).second)
        ++r.edges[{from_site, to_site}]; // each page is processed once, so this counts distinct pages
      if (may_probe && visited.insert(u->text()).second)
        queue.push_back({*u, task.depth + 1});
    }
  }
  for (const auto& h : known)
    if (is_filtered(h))
      r.discovered.insert(DomainName::parse(h));
  return r;
}

} // namespace filtercrawl::sim
