#include "filtercrawl/world.hpp"

#include <set>

#include "filtercrawl/error.hpp"
#include "filtercrawl/url.hpp"

namespace filtercrawl::sim {

using nlohmann::json;

namespace {

constexpr std::string_view kPageHead = "<!DOCTYPE html>\n<html><head><title>page</title></head><body>\n";
constexpr std::string_view kPageTail = "</body></html>\n";

std::string html_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
    case '&': out += "&amp;"; break;
    case '"': out += "&quot;"; break;
    case '<': out += "&lt;"; break;
    case '>': out += "&gt;"; break;
    default: out.push_back(c);
    }
  }
  return out;
}

std::string page_skeleton(const PageSpec& page) {
  std::string out(kPageHead);
  for (const auto& link : page.links)
    out += "<a href=\"" + html_escape(link) + "\">link</a>\n";
  return out;
}

// Documentation ranges, .1 through .254 each.
std::vector<Ipv4Address> address_pool() {
  std::vector<Ipv4Address> pool;
  for (auto [a, b, c] : {std::tuple{192, 0, 2}, std::tuple{198, 51, 100}, std::tuple{203, 0, 113}})
    for (int d = 1; d <= 254; ++d)
      pool.push_back(Ipv4Address::from_octets(static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b),
                                              static_cast<std::uint8_t>(c), static_cast<std::uint8_t>(d)));
  return pool;
}

MeasurementScript measurement_from_json(const json& j, const std::string& where) {
  MeasurementScript s;
  const std::string kind = j.is_string() ? j.get<std::string>() : j.at("kind").get<std::string>();
  if (kind == "honest")
    s.kind = MeasurementKind::honest;
  else if (kind == "timeout")
    s.kind = MeasurementKind::timeout;
  else if (kind == "nxdomain")
    s.kind = MeasurementKind::nxdomain;
  else if (kind == "poison") {
    s.kind = MeasurementKind::poison;
    s.address = Ipv4Address::parse(j.at("address").get<std::string>());
  } else if (kind == "redirect_to_blockpage" || kind == "blockpage") {
    s.kind = MeasurementKind::blockpage;
    s.length = j.at("length").get<std::uint64_t>();
    if (j.is_object() && j.contains("address"))
      s.address = Ipv4Address::parse(j.at("address").get<std::string>());
  } else {
    throw InvalidInput(where + ": unknown measurement behavior '" + kind + "'");
  }
  return s;
}

FakeScript fake_from_json(const json& j, const std::string& where) {
  FakeScript s;
  const std::string kind = j.is_string() ? j.get<std::string>() : j.at("kind").get<std::string>();
  if (kind == "silent")
    s.kind = FakeKind::silent;
  else if (kind == "intercept") {
    s.kind = FakeKind::intercept;
    s.address = Ipv4Address::parse(j.at("address").get<std::string>());
  } else {
    throw InvalidInput(where + ": unknown fake behavior '" + kind + "'");
  }
  return s;
}

void validate(WorldSpec& w) {
  std::set<DomainName> names;
  for (const auto& d : w.domains)
    if (!names.insert(d.name).second)
      throw InvalidInput("duplicate domain " + d.name.str());
  std::set<DomainName> external(w.external.begin(), w.external.end());

  for (const auto& [name, script] : w.resolver_behaviors)
    if (!names.contains(name))
      throw InvalidInput("resolver_behaviors." + name.str() + ": domain not declared");

  for (const auto& d : w.domains) {
    if (!d.exists && !d.pages.empty())
      throw InvalidInput(d.name.str() + ": a non-existent domain cannot have pages");
    std::set<std::string> paths;
    for (std::size_t p = 0; p < d.pages.size(); ++p) {
      const auto& page = d.pages[p];
      const std::string where = d.name.str() + page.path;
      if (page.path.empty() || page.path.front() != '/')
        throw InvalidInput(where + ": page path must start with '/'");
      if (!paths.insert(page.path).second)
        throw InvalidInput(where + ": duplicate page");
      const Url page_url = normalize_url("http://" + d.name.str() + page.path);
      std::vector<std::string> targets = page.links;
      if (page.redirect)
        targets.push_back(*page.redirect);
      for (const auto& link : targets) {
        auto u = try_normalize_url(link, &page_url);
        if (!u)
          continue; // unusable links are legal page content; crawlers skip them
        if (!names.contains(u->host) && !external.contains(u->host))
          throw InvalidInput(where + ": link '" + link + "' targets undeclared domain " + u->host.str());
      }
      if (page.body_length && !page.redirect) {
        const auto min_size = page_skeleton(page).size() + kPageTail.size();
        if (*page.body_length < min_size)
          throw InvalidInput(where + ": body_length " + std::to_string(*page.body_length) + " is below the " +
                             std::to_string(min_size) + " bytes its links need");
      }
    }
  }
  for (const auto& s : w.seeds) {
    auto u = try_normalize_url(s);
    if (!u)
      throw InvalidInput("seed '" + s + "' is not a usable URL");
    if (!names.contains(u->host) && !external.contains(u->host))
      throw InvalidInput("seed '" + s + "' targets undeclared domain " + u->host.str());
  }
}

void assign_addresses(WorldSpec& w) {
  std::set<Ipv4Address> used(w.blackholes.begin(), w.blackholes.end());
  for (const auto& d : w.domains)
    if (d.address && !used.insert(*d.address).second)
      throw InvalidInput(d.name.str() + ": address " + d.address->str() + " already in use");
  for (const auto& [name, s] : w.resolver_behaviors) {
    if (s.measurement.address)
      used.insert(*s.measurement.address);
    if (s.fake.kind == FakeKind::intercept)
      used.insert(s.fake.address);
  }
  auto pool = address_pool();
  auto next = pool.begin();
  auto take = [&]() {
    while (next != pool.end() && used.contains(*next))
      ++next;
    if (next == pool.end())
      throw InvalidInput("world needs more addresses than the documentation ranges provide");
    used.insert(*next);
    return *next++;
  };
  for (auto& d : w.domains)
    if (d.exists && !d.address)
      d.address = take();

  std::map<std::uint64_t, Ipv4Address> by_length;
  std::map<Ipv4Address, std::uint64_t> claimed;
  for (auto& [name, s] : w.resolver_behaviors) {
    auto& m = s.measurement;
    if (m.kind != MeasurementKind::blockpage)
      continue;
    if (!m.address) {
      auto it = by_length.find(m.length);
      m.address = it != by_length.end() ? it->second : by_length.emplace(m.length, take()).first->second;
    }
    if (auto [it, fresh] = claimed.emplace(*m.address, m.length); !fresh && it->second != m.length)
      throw InvalidInput(name.str() + ": block page address " + m.address->str() + " serves two lengths");
  }
  for (const auto& d : w.domains)
    if (d.address && claimed.contains(*d.address))
      throw InvalidInput(d.name.str() + ": address doubles as a block page");
}

} // namespace

std::string to_string(MeasurementKind k) {
  switch (k) {
  case MeasurementKind::honest: return "honest";
  case MeasurementKind::timeout: return "timeout";
  case MeasurementKind::nxdomain: return "nxdomain";
  case MeasurementKind::poison: return "poison";
  case MeasurementKind::blockpage: return "redirect_to_blockpage";
  }
  return "honest";
}

std::string to_string(FakeKind k) { return k == FakeKind::intercept ? "intercept" : "silent"; }

const DomainSpec* WorldSpec::find(const DomainName& name) const {
  for (const auto& d : domains)
    if (d.name == name)
      return &d;
  return nullptr;
}

ResolverScript WorldSpec::script_for(const DomainName& name) const {
  if (auto it = resolver_behaviors.find(name); it != resolver_behaviors.end())
    return it->second;
  ResolverScript s;
  if (auto d = find(name); d && d->filtered) {
    s.fake.kind = FakeKind::intercept;
    s.fake.address = Ipv4Address::from_octets(10, 10, 34, 36);
  }
  return s;
}

std::map<Ipv4Address, std::uint64_t> WorldSpec::blockpages() const {
  std::map<Ipv4Address, std::uint64_t> out;
  for (const auto& [name, s] : resolver_behaviors)
    if (s.measurement.kind == MeasurementKind::blockpage && s.measurement.address)
      out.emplace(*s.measurement.address, s.measurement.length);
  return out;
}

std::string render_page(const PageSpec& page) {
  if (page.redirect)
    return "moved\n";
  std::string body = page_skeleton(page);
  if (page.body_length) {
    const auto fill = *page.body_length - body.size() - kPageTail.size();
    body.append(fill, '.');
  }
  body += kPageTail;
  return body;
}

WorldSpec world_from_json(const json& j) {
  WorldSpec w;
  try {
    w.country = j.value("country", std::string("ZZ"));
    for (const auto& dj : j.at("domains")) {
      DomainSpec d;
      d.name = DomainName::parse(dj.at("name").get<std::string>());
      d.filtered = dj.value("filtered", false);
      d.exists = dj.value("exists", true);
      if (dj.contains("address"))
        d.address = Ipv4Address::parse(dj.at("address").get<std::string>());
      for (const auto& pj : dj.value("pages", json::array())) {
        PageSpec p;
        p.path = pj.value("path", std::string("/"));
        p.links = pj.value("links", std::vector<std::string>{});
        if (pj.contains("body_length"))
          p.body_length = pj.at("body_length").get<std::uint64_t>();
        if (pj.contains("redirect"))
          p.redirect = pj.at("redirect").get<std::string>();
        d.pages.push_back(std::move(p));
      }
      w.domains.push_back(std::move(d));
    }
    const auto behaviors = j.value("resolver_behaviors", json::object());
    for (const auto& [name, bj] : behaviors.items()) {
      ResolverScript s;
      const auto domain = DomainName::parse(name);
      if (bj.contains("measurement"))
        s.measurement = measurement_from_json(bj.at("measurement"), "resolver_behaviors." + name);
      if (bj.contains("fake"))
        s.fake = fake_from_json(bj.at("fake"), "resolver_behaviors." + name);
      w.resolver_behaviors[domain] = s;
    }
    w.seeds = j.value("seeds", std::vector<std::string>{});
    for (const auto& e : j.value("external", std::vector<std::string>{}))
      w.external.push_back(DomainName::parse(e));
    for (const auto& b : j.value("blackholes", std::vector<std::string>{}))
      w.blackholes.push_back(Ipv4Address::parse(b));
    if (j.contains("generator"))
      w.generator = j.at("generator");
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed world document: ") + e.what());
  }
  validate(w);
  assign_addresses(w);
  return w;
}

WorldSpec load_world(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("world is not valid JSON: ") + e.what());
  }
  return world_from_json(j);
}

json to_json(const WorldSpec& w) {
  json domains = json::array();
  for (const auto& d : w.domains) {
    json dj{{"name", d.name.str()}, {"filtered", d.filtered}, {"exists", d.exists}};
    if (d.address)
      dj["address"] = d.address->str();
    json pages = json::array();
    for (const auto& p : d.pages) {
      json pj{{"path", p.path}, {"links", p.links}};
      if (p.body_length)
        pj["body_length"] = *p.body_length;
      if (p.redirect)
        pj["redirect"] = *p.redirect;
      pages.push_back(std::move(pj));
    }
    dj["pages"] = std::move(pages);
    domains.push_back(std::move(dj));
  }
  json behaviors = json::object();
  for (const auto& [name, s] : w.resolver_behaviors) {
    json m{{"kind", to_string(s.measurement.kind)}};
    if (s.measurement.address)
      m["address"] = s.measurement.address->str();
    if (s.measurement.kind == MeasurementKind::blockpage)
      m["length"] = s.measurement.length;
    json f{{"kind", to_string(s.fake.kind)}};
    if (s.fake.kind == FakeKind::intercept)
      f["address"] = s.fake.address.str();
    behaviors[name.str()] = json{{"measurement", m}, {"fake", f}};
  }
  json external = json::array();
  for (const auto& e : w.external)
    external.push_back(e.str());
  json blackholes = json::array();
  for (const auto& b : w.blackholes)
    blackholes.push_back(b.str());
  json out{{"country", w.country}, {"domains", domains},   {"resolver_behaviors", behaviors},
           {"seeds", w.seeds},     {"external", external}, {"blackholes", blackholes}};
  if (!w.generator.is_null())
    out["generator"] = w.generator;
  return out;
}

} // namespace filtercrawl::sim
