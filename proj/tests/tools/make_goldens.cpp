// Writes the expected report files for a world by walking the world document
// with the discovery oracle. No crawl and no network are involved; only the
// table formatting is shared with the library.
//
// make_goldens <world.json> <psl> <categories.csv> <geo.csv> <baseline.csv> <exclusions.txt> <out_dir>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>

#include "filtercrawl/report.hpp"
#include "filtercrawl/util.hpp"
#include "filtercrawl/worldgen.hpp"

using namespace filtercrawl;

namespace {

std::string csv_first_cell(const std::string& line) {
  auto cell = trim(line.substr(0, line.find(',')));
  if (cell.size() >= 2 && cell.front() == '"' && cell.back() == '"')
    cell = cell.substr(1, cell.size() - 2);
  return cell;
}

bool excluded_by(const std::set<std::string>& list, const DomainName& host) {
  std::string name = host.str();
  while (true) {
    if (list.contains(name))
      return true;
    const auto dot = name.find('.');
    if (dot == std::string::npos)
      return false;
    name = name.substr(dot + 1);
  }
}

Breakdown tally(std::string dimension, const std::vector<std::optional<std::string>>& keys) {
  std::map<std::string, std::uint64_t> counts;
  std::uint64_t unknown = 0;
  for (const auto& k : keys)
    k ? ++counts[*k] : ++unknown;
  std::vector<std::pair<std::string, std::uint64_t>> ordered(counts.begin(), counts.end());
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  Breakdown b;
  b.dimension = std::move(dimension);
  b.total = keys.size();
  for (const auto& [k, c] : ordered)
    b.rows.push_back({k, c, static_cast<double>(c) / static_cast<double>(b.total)});
  if (unknown)
    b.rows.push_back({"unknown", unknown, static_cast<double>(unknown) / static_cast<double>(b.total)});
  return b;
}

} // namespace

int main(int argc, char** argv) {
  if (argc != 8) {
    std::cerr << "usage: make_goldens world psl categories geo baseline exclusions out_dir\n";
    return 2;
  }
  const auto world = sim::load_world(read_file(argv[1]));
  const auto rules = parse_psl(read_file(argv[2]));
  const auto oracle = sim::oracle_discover(world, rules);
  const std::string out_dir = argv[7];
  std::filesystem::create_directories(out_dir);
  auto put = [&](const std::string& name, const std::string& text) {
    write_file_atomic((std::filesystem::path(out_dir) / name).string(), text);
  };

  std::set<std::string> exclusion_list;
  for (const auto& line : split(read_file(argv[6]), '\n')) {
    const auto t = trim(line.substr(0, line.find('#')));
    if (!t.empty())
      exclusion_list.insert(t);
  }
  const auto exclusions_label =
      std::filesystem::path(argv[6]).filename().string() + " (" + std::to_string(exclusion_list.size()) + " domains)";

  std::vector<DomainName> kept;
  for (const auto& d : oracle.discovered)
    if (!excluded_by(exclusion_list, d))
      kept.push_back(d);

  RunSummary summary{world.country, oracle.extracted.size(), oracle.filtered.size(), oracle.discovered.size(),
                     kept.size()};
  put("summary.csv", emit(to_table(summary), ReportFormat::csv));
  put("summary.json", emit(to_table(summary), ReportFormat::json));

  // Baseline hosts count when the world marks them filtered.
  std::set<std::string> baseline_hosts;
  bool first = true;
  for (const auto& line : split(read_file(argv[5]), '\n')) {
    const auto cell = csv_first_cell(line);
    if (cell.empty() || cell.starts_with("#"))
      continue;
    if (std::exchange(first, false) && cell == "url")
      continue;
    if (auto u = try_normalize_url(cell); u && !excluded_by(exclusion_list, u->host))
      baseline_hosts.insert(u->host.str());
  }
  ComparisonRow row{world.country, 0, kept.size(), {exclusions_label}};
  for (const auto& h : baseline_hosts)
    if (auto d = world.find(DomainName::parse(h)); d && d->filtered)
      ++row.baseline_count;
  put("compare.csv", emit(to_table(row), ReportFormat::csv));

  // First listed category is the primary one (the table has no confidences).
  std::map<std::string, std::string> primary;
  for (const auto& line : split(read_file(argv[3]), '\n')) {
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.starts_with("domain,"))
      continue;
    const auto cats = split(line.substr(comma + 1), ';');
    if (!cats.empty() && !trim(cats[0]).empty())
      primary.emplace(trim(line.substr(0, comma)), trim(cats[0]));
  }
  std::vector<std::optional<std::string>> category_keys;
  for (const auto& d : kept) {
    auto it = primary.find(d.str());
    category_keys.push_back(it == primary.end() ? std::nullopt : std::optional(it->second));
  }
  put("categories.csv", emit(to_table(tally("category", category_keys)), ReportFormat::csv));

  // Narrowest listed range containing the host's world address.
  struct Range {
    std::uint32_t lo, hi;
    std::string country;
  };
  std::vector<Range> ranges;
  for (const auto& line : split(read_file(argv[4]), '\n')) {
    const auto cols = split(line, ',');
    if (cols.size() != 3)
      continue;
    auto lo = Ipv4Address::try_parse(trim(cols[0]));
    auto hi = Ipv4Address::try_parse(trim(cols[1]));
    if (lo && hi)
      ranges.push_back({lo->value, hi->value, trim(cols[2])});
  }
  std::vector<std::optional<std::string>> country_keys;
  for (const auto& d : kept) {
    std::optional<std::string> country;
    const auto* spec = world.find(d);
    if (spec && spec->exists && spec->address) {
      std::uint64_t best = UINT64_MAX;
      for (const auto& r : ranges)
        if (spec->address->value >= r.lo && spec->address->value <= r.hi && std::uint64_t{r.hi} - r.lo < best) {
          best = std::uint64_t{r.hi} - r.lo;
          country = r.country;
        }
    }
    country_keys.push_back(country);
  }
  put("locations.csv", emit(to_table(tally("host_country", country_keys)), ReportFormat::csv));
  return 0;
}
