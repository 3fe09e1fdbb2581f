#include "filtercrawl/report.hpp"

#include <algorithm>

#include "filtercrawl/error.hpp"
#include "filtercrawl/url.hpp"
#include "filtercrawl/util.hpp"

namespace filtercrawl {

using nlohmann::json;
using nlohmann::ordered_json;

void Exclusions::add_domain_list(std::string_view text, std::string label) {
  std::size_t n = 0;
  for (const auto& raw : split(text, '\n')) {
    auto line = trim(raw.substr(0, raw.find('#')));
    if (line.empty())
      continue;
    domains_.insert(DomainName::parse(line));
    ++n;
  }
  labels_.push_back(label + " (" + std::to_string(n) + " domains)");
}

void Exclusions::add_categories(std::set<std::string> categories, std::shared_ptr<CategoryCache> cache) {
  for (const auto& c : categories)
    labels_.push_back("category " + c);
  categories_.insert(categories.begin(), categories.end());
  cache_ = std::move(cache);
}

bool Exclusions::excluded(const DomainName& host) const {
  for (std::size_t n = 1; n <= host.label_count(); ++n)
    if (domains_.contains(host.suffix(n)))
      return true;
  if (!categories_.empty() && cache_)
    for (const auto& l : cache_->categorize(host))
      if (categories_.contains(l.name))
        return true;
  return false;
}

std::vector<std::string> Exclusions::labels() const { return labels_; }

namespace {

void require_intact(const EventLog& log) {
  if (log.intact())
    return;
  const auto last = log.gap_after ? log.gap_after : log.last_seq();
  throw InvalidInput("event log is truncated; last complete record is seq " +
                     (last ? std::to_string(*last) : std::string("none")));
}

} // namespace

std::map<DomainName, FilterVerdict> filtered_verdicts(const EventLog& log) {
  require_intact(log);
  std::map<DomainName, FilterVerdict> out;
  for (const auto& rec : log.records)
    if (rec.at("kind") == "verdict") {
      auto v = verdict_from_json(rec.at("verdict"));
      if (v.filtered())
        out.emplace(v.domain, std::move(v));
    }
  return out;
}

RunSummary summarize(const EventLog& log, const Exclusions& exclusions) {
  require_intact(log);
  RunSummary s;
  std::map<DomainName, bool> filtered; // host -> filtered?
  std::set<std::string> extracted, filtered_urls; // verdicts may trail links
  for (const auto& rec : log.records) {
    const auto kind = rec.at("kind").get<std::string>();
    if (kind == "verdict") {
      const auto& v = rec.at("verdict");
      if (s.country.empty())
        s.country = v.value("country", std::string());
      filtered.emplace(DomainName::parse(v.at("domain").get<std::string>()), v.at("status") == "filtered");
    } else if (kind == "link") {
      const auto to = rec.at("to_url").get<std::string>();
      extracted.insert(to);
    }
  }
  for (const auto& to : extracted) {
    auto it = filtered.find(normalize_url(to).host);
    if (it != filtered.end() && it->second)
      filtered_urls.insert(to);
  }
  s.extracted_urls = extracted.size();
  s.filtered_urls = filtered_urls.size();
  for (const auto& [d, f] : filtered) {
    if (!f)
      continue;
    ++s.filtered_domains;
    if (!exclusions.excluded(d))
      ++s.filtered_domains_excl;
  }
  return s;
}

ComparisonRow compare(const std::set<DomainName>& ours, const std::vector<Url>& baseline,
                      const ResolverProfile& profile, const CheckConfig& config, const Exclusions& exclusions,
                      int parallelism) {
  ComparisonRow row;
  row.country = profile.country;
  row.exclusions_applied = exclusions.labels();
  std::vector<DomainName> hosts;
  std::set<DomainName> seen;
  for (const auto& u : baseline)
    if (!exclusions.excluded(u.host) && seen.insert(u.host).second)
      hosts.push_back(u.host);
  for (const auto& v : check_batch(hosts, profile, config, parallelism))
    if (v.filtered())
      ++row.baseline_count;
  for (const auto& d : ours)
    if (!exclusions.excluded(d))
      ++row.ours_count;
  return row;
}

namespace {

Breakdown finish(std::string dimension, const std::map<std::string, std::uint64_t>& counts, std::uint64_t unknown) {
  Breakdown b;
  b.dimension = std::move(dimension);
  for (const auto& [k, c] : counts)
    b.total += c;
  b.total += unknown;
  for (const auto& [k, c] : counts)
    b.rows.push_back({k, c, 0});
  std::stable_sort(b.rows.begin(), b.rows.end(), [](const auto& a, const auto& x) { return a.count > x.count; });
  if (unknown)
    b.rows.push_back({"unknown", unknown, 0});
  for (auto& r : b.rows)
    r.fraction = static_cast<double>(r.count) / static_cast<double>(b.total);
  return b;
}

} // namespace

Breakdown breakdown_by_category(const std::vector<DomainName>& domains, CategoryCache& categories) {
  std::map<std::string, std::uint64_t> counts;
  std::uint64_t unknown = 0;
  for (const auto& d : domains) {
    if (auto p = primary_category(categories.categorize(d)))
      ++counts[p->name];
    else
      ++unknown;
  }
  return finish("category", counts, unknown);
}

Breakdown breakdown_by_host_country(const std::vector<FilterVerdict>& verdicts, const GeoDatabase& geo) {
  std::map<std::string, std::uint64_t> counts;
  std::uint64_t unknown = 0;
  for (const auto& v : verdicts) {
    const auto& c = v.evidence.control;
    std::optional<std::string> country;
    if (c.answered())
      country = geo.geolocate(c.addresses.front()).country;
    if (country)
      ++counts[*country];
    else
      ++unknown;
  }
  return finish("host_country", counts, unknown);
}

EnumerationCounts count_enumeration(std::string_view csv, std::string country) {
  EnumerationCounts c;
  c.country = std::move(country);
  bool header = true;
  for (const auto& raw : split(csv, '\n')) {
    auto line = trim(raw);
    if (line.empty())
      continue;
    if (header) {
      header = false;
      if (line.starts_with("candidate,"))
        continue;
    }
    auto cols = split(line, ',');
    if (cols.size() != 4)
      throw InvalidInput("enumeration row needs 4 columns: '" + line + "'");
    ++c.candidates;
    if (cols[1] == "filtered") {
      ++c.filtered;
      if (cols[3] == "true")
        ++c.filtered_host_exists;
      else
        ++c.filtered_dead;
    }
  }
  return c;
}

Table to_table(const RunSummary& s) {
  return {{"country", "extracted_urls", "filtered_urls", "filtered_domains", "filtered_domains_excl"},
          {{s.country, s.extracted_urls, s.filtered_urls, s.filtered_domains, s.filtered_domains_excl}}};
}

Table to_table(const ComparisonRow& r) {
  return {{"country", "baseline_count", "ours_count", "exclusions_applied"},
          {{r.country, r.baseline_count, r.ours_count, r.exclusions_applied}}};
}

Table to_table(const Breakdown& b) {
  Table t{{b.dimension, "count", "total", "fraction"}, {}};
  for (const auto& r : b.rows)
    t.rows.push_back({r.key, r.count, b.total, r.fraction});
  return t;
}

Table to_table(const EnumerationCounts& c) {
  return {{"country", "candidates", "filtered", "filtered_host_exists", "filtered_dead"},
          {{c.country, c.candidates, c.filtered, c.filtered_host_exists, c.filtered_dead}}};
}

Table ranking_table(const std::vector<std::pair<DomainName, std::uint64_t>>& ranked, std::string_view count_column) {
  Table t{{"rank", "domain", std::string(count_column)}, {}};
  std::uint64_t rank = 0;
  for (const auto& [d, c] : ranked)
    t.rows.push_back({++rank, d.str(), c});
  return t;
}

ReportFormat parse_report_format(std::string_view s) {
  if (s == "csv")
    return ReportFormat::csv;
  if (s == "json")
    return ReportFormat::json;
  throw ConfigError("unknown report format '" + std::string(s) + "'");
}

namespace {

std::string csv_cell(const json& v) {
  std::string text;
  if (v.is_string())
    text = v.get<std::string>();
  else if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i)
      text += (i ? ";" : "") + csv_cell(v[i]);
  } else
    text = v.dump();
  if (text.find_first_of(",\"\n") == std::string::npos)
    return text;
  std::string quoted = "\"";
  for (char c : text)
    quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
  return quoted + "\"";
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cells.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cells.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.emplace_back();
    } else {
      cells.back() += c;
    }
  }
  return cells;
}

json typed_cell(const std::string& text) {
  if (!text.empty() && text.find_first_not_of("0123456789.-e+E") == std::string::npos) {
    try {
      return json::parse(text);
    } catch (const json::exception&) {
    }
  }
  return text;
}

} // namespace

std::string emit(const Table& t, ReportFormat format) {
  if (format == ReportFormat::csv) {
    std::string out;
    for (std::size_t i = 0; i < t.columns.size(); ++i)
      out += (i ? "," : "") + csv_cell(t.columns[i]);
    out += "\n";
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < row.size(); ++i)
        out += (i ? "," : "") + csv_cell(row[i]);
      out += "\n";
    }
    return out;
  }
  ordered_json doc;
  doc["columns"] = t.columns;
  doc["rows"] = ordered_json::array();
  for (const auto& row : t.rows) {
    ordered_json r = ordered_json::object();
    for (std::size_t i = 0; i < t.columns.size() && i < row.size(); ++i)
      r[t.columns[i]] = ordered_json::parse(row[i].dump());
    doc["rows"].push_back(std::move(r));
  }
  return doc.dump(2) + "\n";
}

Table parse_table(std::string_view text, ReportFormat format) {
  Table t;
  if (format == ReportFormat::csv) {
    bool header = true;
    for (const auto& line : split(text, '\n')) {
      if (line.empty())
        continue;
      auto cells = split_csv_line(line);
      if (header) {
        t.columns = cells;
        header = false;
        continue;
      }
      std::vector<json> row;
      for (const auto& c : cells)
        row.push_back(typed_cell(c));
      t.rows.push_back(std::move(row));
    }
    return t;
  }
  try {
    const auto doc = ordered_json::parse(text);
    t.columns = doc.at("columns").get<std::vector<std::string>>();
    for (const auto& r : doc.at("rows")) {
      std::vector<json> row;
      for (const auto& c : t.columns)
        row.push_back(json::parse(r.at(c).dump()));
      t.rows.push_back(std::move(row));
    }
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("bad report document: ") + e.what());
  }
  return t;
}

} // namespace filtercrawl
