#include "filtercrawl/enrichment.hpp"

#include <algorithm>
#include <set>

#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "filtercrawl/error.hpp"

namespace filtercrawl {

using nlohmann::json;

LocalCategoryTable LocalCategoryTable::parse(std::string_view text) {
  LocalCategoryTable t;
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty() || line.starts_with("#"))
      continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw InvalidInput("category table line " + std::to_string(line_no) + ": expected 'domain,categories'");
    const auto first = trim(line.substr(0, comma));
    if (line_no == 1 && first == "domain")
      continue; // header row
    auto domain = DomainName::try_parse(first);
    if (!domain) {
      throw InvalidInput("category table line " + std::to_string(line_no) + ": bad domain");
    }
    auto& labels = t.table_[*domain];
    for (const auto& c : split(line.substr(comma + 1), ';'))
      if (auto name = trim(c); !name.empty())
        labels.push_back({name, std::nullopt});
  }
  return t;
}

LocalCategoryTable LocalCategoryTable::load(const std::string& path) { return parse(read_file(path)); }

std::vector<CategoryLabel> LocalCategoryTable::lookup(const DomainName& domain) {
  auto it = table_.find(domain);
  return it == table_.end() ? std::vector<CategoryLabel>{} : it->second;
}

RemoteCategoryClient::RemoteCategoryClient(std::string base_url, std::string api_key, Seconds timeout)
    : base_url_(std::move(base_url)), api_key_(std::move(api_key)), timeout_(timeout) {
  while (!base_url_.empty() && base_url_.back() == '/')
    base_url_.pop_back();
}

std::vector<CategoryLabel> RemoteCategoryClient::lookup(const DomainName& domain) {
  // Split "scheme://host:port/prefix" into the client origin and a path prefix.
  const auto scheme_end = base_url_.find("://");
  const auto path_start = base_url_.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  const auto origin = base_url_.substr(0, path_start);
  const auto prefix = path_start == std::string::npos ? std::string() : base_url_.substr(path_start);

  httplib::Client cli(origin);
  const auto t = std::chrono::duration_cast<std::chrono::microseconds>(timeout_);
  cli.set_connection_timeout(t);
  cli.set_read_timeout(t);
  httplib::Headers headers;
  if (!api_key_.empty())
    headers.emplace("Authorization", "Bearer " + api_key_);
  auto res = cli.Get(prefix + "/categories/" + domain.str(), headers);
  if (!res)
    throw IoError("category service: " + httplib::to_string(res.error()));
  if (res->status == 404)
    return {};
  if (res->status != 200)
    throw IoError("category service answered HTTP " + std::to_string(res->status));
  std::vector<CategoryLabel> out;
  try {
    const auto doc = json::parse(res->body);
    for (const auto& c : doc.at("categories")) {
      CategoryLabel l{c.at("name").get<std::string>(), std::nullopt};
      if (c.contains("confidence") && !c.at("confidence").is_null())
        l.confidence = c.at("confidence").get<double>();
      if (!l.name.empty())
        out.push_back(std::move(l));
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("category service sent malformed JSON: ") + e.what());
  }
  return out;
}

std::vector<CategoryLabel> CategoryCache::categorize(const DomainName& domain) {
  {
    std::lock_guard lock(mu_);
    if (auto it = cache_.find(domain); it != cache_.end())
      return it->second;
    ++calls_;
  }
  std::vector<CategoryLabel> labels;
  try {
    labels = provider_->lookup(domain);
  } catch (const std::exception& e) {
    spdlog::warn("category lookup for {} failed: {}", domain.str(), e.what());
  }
  std::lock_guard lock(mu_);
  return cache_.emplace(domain, std::move(labels)).first->second;
}

std::size_t CategoryCache::provider_calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::optional<CategoryLabel> primary_category(const std::vector<CategoryLabel>& labels) {
  const CategoryLabel* best = nullptr;
  for (const auto& l : labels)
    if (!best || l.confidence.value_or(-1.0) > best->confidence.value_or(-1.0))
      best = &l;
  return best ? std::optional(*best) : std::nullopt;
}

GeoDatabase GeoDatabase::parse(std::string_view text) {
  std::vector<Range> raw;
  std::size_t line_no = 0;
  for (const auto& line_raw : split(text, '\n')) {
    ++line_no;
    auto line = trim(line_raw);
    if (line.empty() || line.starts_with("#"))
      continue;
    auto cols = split(line, ',');
    if (cols.size() != 3)
      throw InvalidInput("geo table line " + std::to_string(line_no) + ": expected start_ip,end_ip,country");
    auto start = Ipv4Address::try_parse(trim(cols[0]));
    auto end = Ipv4Address::try_parse(trim(cols[1]));
    if (!start || !end) {
      if (line_no == 1)
        continue; // header row
      throw InvalidInput("geo table line " + std::to_string(line_no) + ": bad address");
    }
    if (end->value < start->value)
      throw InvalidInput("geo table line " + std::to_string(line_no) + ": range ends before it starts");
    raw.push_back({start->value, end->value, trim(cols[2])});
  }

  // Sweep over range boundaries keeping the open ranges ordered by width, so
  // every elementary interval takes the narrowest covering range.
  struct Event {
    std::uint64_t at;
    bool open;
    std::size_t idx;
  };
  std::vector<Event> events;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    events.push_back({raw[i].start, true, i});
    events.push_back({std::uint64_t{raw[i].end} + 1, false, i});
  }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.at < b.at; });
  auto width = [&](std::size_t i) { return std::uint64_t{raw[i].end} - raw[i].start; };
  auto cmp = [&](std::size_t a, std::size_t b) { return width(a) != width(b) ? width(a) < width(b) : a < b; };
  std::set<std::size_t, decltype(cmp)> open(cmp);

  GeoDatabase db;
  for (std::size_t e = 0; e < events.size();) {
    const auto at = events[e].at;
    for (; e < events.size() && events[e].at == at; ++e) {
      if (events[e].open)
        open.insert(events[e].idx);
      else
        open.erase(events[e].idx);
    }
    if (open.empty() || e == events.size())
      continue;
    const auto next = events[e].at;
    const auto& winner = raw[*open.begin()];
    auto& out = db.ranges_;
    if (!out.empty() && out.back().end + std::uint64_t{1} == at && out.back().country == winner.country)
      out.back().end = static_cast<std::uint32_t>(next - 1);
    else
      out.push_back({static_cast<std::uint32_t>(at), static_cast<std::uint32_t>(next - 1), winner.country});
  }
  return db;
}

GeoDatabase GeoDatabase::load(const std::string& path) { return parse(read_file(path)); }

GeoRecord GeoDatabase::geolocate(Ipv4Address address) const {
  auto it = std::upper_bound(ranges_.begin(), ranges_.end(), address.value,
                             [](std::uint32_t v, const Range& r) { return v < r.start; });
  if (it == ranges_.begin())
    return {address, std::nullopt};
  --it;
  if (address.value > it->end)
    return {address, std::nullopt};
  return {address, it->country};
}

bool host_exists(const DomainName& domain, const ResolverEndpoint& control, Seconds timeout, DnsOutcome* evidence) {
  auto outcome = resolve(domain, control, timeout);
  const bool exists = outcome.answered();
  if (evidence)
    *evidence = std::move(outcome);
  return exists;
}

} // namespace filtercrawl
