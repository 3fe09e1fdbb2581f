#include "filtercrawl/session.hpp"

#include <filesystem>

#include <spdlog/spdlog.h>

#include "filtercrawl/enrichment.hpp"
#include "filtercrawl/error.hpp"
#include "filtercrawl/events.hpp"
#include "filtercrawl/report.hpp"
#include "filtercrawl/simnet.hpp"
#include "filtercrawl/worldgen.hpp"

namespace filtercrawl {

using nlohmann::json;
namespace fs = std::filesystem;

RunConfig default_run_config() {
  RunConfig c;
  c.profile.control.address = Ipv4Address::parse("8.8.8.8");
  c.profile.control.role = ResolverRole::control;
  return c;
}

void RunConfig::validate() const {
  check.validate();
  crawl.validate();
  if (check_parallelism < 1)
    throw ConfigError("check parallelism must be at least 1");
  if (enumerate.parallelism < 1)
    throw ConfigError("enumeration parallelism must be at least 1");
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c = default_run_config();
  try {
    if (j.contains("profile_path"))
      c.profile = profile_from_json(json::parse(read_file(j["profile_path"].get<std::string>())));
    if (j.contains("profile"))
      c.profile = profile_from_json(j["profile"]);
    if (j.contains("country"))
      c.profile.country = j["country"].get<std::string>();
    if (j.contains("check")) {
      const auto& k = j["check"];
      c.check.maxdiff = k.value("maxdiff", c.check.maxdiff);
      if (k.contains("timeout_s"))
        c.check.timeout = Seconds(k["timeout_s"].get<double>());
      c.check.http_port = k.value("http_port", c.check.http_port);
      c.check.max_body_bytes = k.value("max_body_bytes", c.check.max_body_bytes);
      c.check.strict_alg1 = k.value("strict_alg1", c.check.strict_alg1);
      c.check_parallelism = k.value("parallelism", c.check_parallelism);
    }
    if (j.contains("crawl"))
      c.crawl = crawl_config_from_json(j["crawl"], c.crawl);
    if (j.contains("enumerate")) {
      const auto& e = j["enumerate"];
      c.enumerate.probe_synthetic = e.value("probe_synthetic", c.enumerate.probe_synthetic);
      c.enumerate.probes_per_second = e.value("probes_per_second", c.enumerate.probes_per_second);
      c.enumerate.parallelism = e.value("parallelism", c.enumerate.parallelism);
    }
    c.seed_path = j.value("seed_path", c.seed_path);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.psl_path = j.value("psl_path", c.psl_path);
    c.include_private_psl = j.value("include_private_psl", c.include_private_psl);
    c.world_path = j.value("world", c.world_path);
    if (j.contains("providers")) {
      const auto& p = j["providers"];
      c.providers.category_table = p.value("category_table", c.providers.category_table);
      c.providers.category_url = p.value("category_url", c.providers.category_url);
      c.providers.category_api_key = p.value("category_api_key", c.providers.category_api_key);
      c.providers.geo_db = p.value("geo_db", c.providers.geo_db);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad run configuration: ") + e.what());
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  c.validate();
  return c;
}

Session::Session(RunConfig config) : config_(std::move(config)) {
  if (!config_.world_path.empty()) {
    auto world = sim::load_world(read_file(config_.world_path));
    world_ = std::make_unique<sim::SimNetwork>(std::move(world));
    const auto country = config_.profile.country;
    config_.profile = world_->profile();
    if (!country.empty())
      config_.profile.country = country;
    config_.check.connect_map = world_->connect_map();
  }
  config_.validate();
}

Session::~Session() = default;

// Reports read logs only; the resolver profile matters once something is measured.
const ResolverProfile& Session::measuring_profile() const {
  config_.profile.validate();
  return config_.profile;
}

const SuffixRuleSet& Session::rules() {
  if (!rules_) {
    if (config_.psl_path.empty())
      throw ConfigError("no public suffix list configured");
    try {
      rules_ = parse_psl(read_file(config_.psl_path), PslOptions{config_.include_private_psl});
    } catch (const InvalidInput& e) {
      throw ConfigError("public suffix list " + config_.psl_path + ": " + e.what());
    } catch (const IoError& e) {
      throw ConfigError(e.what());
    }
  }
  return *rules_;
}

std::string Session::output_path(const std::string& name) const { return (fs::path(config_.output_dir) / name).string(); }

namespace {

std::vector<DomainName> parse_domain_lines(std::string_view text) {
  std::vector<DomainName> out;
  for (const auto& raw : split(text, '\n')) {
    auto line = trim(raw.substr(0, raw.find('#')));
    if (line.empty())
      continue;
    line = trim(line.substr(0, line.find(',')));
    if (auto d = DomainName::try_parse(line))
      out.push_back(std::move(*d));
    else if (line != "domain")
      spdlog::warn("skipping unusable domain '{}'", line);
  }
  return out;
}

} // namespace

std::string Session::check(std::string_view domains_text) {
  const auto domains = parse_domain_lines(domains_text);
  std::string out;
  for (const auto& v : check_batch(domains, measuring_profile(), config_.check, config_.check_parallelism))
    out += to_json(v).dump() + "\n";
  return out;
}

CrawlOutcome Session::crawl(std::string_view seeds_text, bool resume) {
  const auto& psl = rules();
  const auto& profile = measuring_profile();
  CrawlOutcome result;
  const auto seeds = parse_seed_list(seeds_text, &result.rejected_seeds);
  for (const auto& r : result.rejected_seeds)
    spdlog::warn("skipping unusable seed '{}'", r);

  fs::create_directories(config_.output_dir);
  const auto log_path = output_path("events.jsonl");
  const auto snapshot_path = output_path("snapshot.json");

  CrawlState state;
  const bool previous = fs::exists(snapshot_path) || (fs::exists(log_path) && fs::file_size(log_path) > 0);
  if (previous && !resume)
    throw ConfigError("output directory " + config_.output_dir + " already holds a run; resume it or pick another");
  if (resume)
    state = load_crawl_state(snapshot_path, log_path, psl);
  if (seeds.empty() && state.next_seq == 0)
    throw ConfigError("no usable seeds");

  auto crawl_cfg = config_.crawl;
  crawl_cfg.snapshot_path = snapshot_path;
  JsonlFileSink sink(log_path);
  result.state = filtercrawl::crawl(seeds, profile, config_.check, crawl_cfg, psl, sink, std::move(state));

  const auto& graph = result.state.graph();
  write_file_atomic(output_path("edges.csv"), export_edge_csv(graph));
  write_file_atomic(output_path("adjacency.json"), export_adjacency_json(graph));
  std::string verdicts;
  for (const auto& [d, v] : result.state.verdicts())
    if (v.filtered())
      verdicts += to_json(v).dump() + "\n";
  write_file_atomic(output_path("verdicts.jsonl"), verdicts);
  return result;
}

std::string Session::enumerate(std::string_view domains_text) {
  const auto& psl = rules();
  const auto& profile = measuring_profile();
  std::vector<EnumerationResult> all;
  for (const auto& d : parse_domain_lines(domains_text)) {
    if (psl.public_suffix_length(d) >= d.label_count()) {
      spdlog::warn("skipping bare public suffix '{}'", d.str());
      continue;
    }
    auto results = enumerate_filtered(d, psl, profile, config_.check, config_.enumerate);
    std::move(results.begin(), results.end(), std::back_inserter(all));
  }
  return enumeration_csv(all);
}

std::string Session::report(const json& request) {
  std::string kind, format, log_path;
  std::size_t top = 10;
  try {
    kind = request.at("kind").get<std::string>();
    format = request.value("format", std::string("csv"));
    log_path = request.value("log", output_path("events.jsonl"));
    top = request.value("top", top);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad report request: ") + e.what());
  }
  const auto fmt = parse_report_format(format);

  std::shared_ptr<CategoryCache> categories;
  auto category_cache = [&]() -> std::shared_ptr<CategoryCache> {
    if (categories)
      return categories;
    std::shared_ptr<CategoryProvider> provider;
    if (!config_.providers.category_table.empty())
      provider = std::make_shared<LocalCategoryTable>(LocalCategoryTable::load(config_.providers.category_table));
    else if (!config_.providers.category_url.empty())
      provider = std::make_shared<RemoteCategoryClient>(config_.providers.category_url,
                                                        config_.providers.category_api_key);
    else
      throw ConfigError("no category provider configured");
    return categories = std::make_shared<CategoryCache>(provider);
  };

  Exclusions exclusions;
  for (const auto& path : request.value("exclusions", std::vector<std::string>{}))
    exclusions.add_domain_list(read_file(path), fs::path(path).filename().string());
  if (auto cats = request.value("exclude_categories", std::vector<std::string>{}); !cats.empty())
    exclusions.add_categories({cats.begin(), cats.end()}, category_cache());

  auto load_log = [&] {
    if (!fs::exists(log_path))
      throw IoError("no event log at " + log_path);
    return read_event_log(log_path);
  };
  auto filtered_hosts = [](const std::map<DomainName, FilterVerdict>& verdicts) {
    std::vector<DomainName> out;
    for (const auto& [d, v] : verdicts)
      out.push_back(d);
    return out;
  };

  if (kind == "summary")
    return emit(to_table(summarize(load_log(), exclusions)), fmt);
  if (kind == "compare") {
    const auto baseline_path = request.value("baseline", std::string());
    if (baseline_path.empty())
      throw ConfigError("compare needs a baseline list");
    const auto verdicts = filtered_verdicts(load_log());
    std::set<DomainName> ours;
    for (const auto& [d, v] : verdicts)
      ours.insert(d);
    const auto baseline = parse_seed_list(read_file(baseline_path));
    return emit(to_table(compare(ours, baseline, measuring_profile(), config_.check, exclusions, config_.check_parallelism)),
                fmt);
  }
  if (kind == "categories") {
    auto cache = category_cache();
    std::vector<DomainName> domains;
    for (const auto& d : filtered_hosts(filtered_verdicts(load_log())))
      if (!exclusions.excluded(d))
        domains.push_back(d);
    return emit(to_table(breakdown_by_category(domains, *cache)), fmt);
  }
  if (kind == "locations") {
    if (config_.providers.geo_db.empty())
      throw ConfigError("no geolocation database configured");
    const auto geo = GeoDatabase::load(config_.providers.geo_db);
    std::vector<FilterVerdict> verdicts;
    for (auto& [d, v] : filtered_verdicts(load_log()))
      if (!exclusions.excluded(d))
        verdicts.push_back(std::move(v));
    return emit(to_table(breakdown_by_host_country(verdicts, geo)), fmt);
  }
  if (kind == "backlinks" || kind == "forward") {
    const auto log = load_log();
    summarize(log); // rejects torn logs
    CrawlState state;
    for (const auto& rec : log.records)
      state.apply(rec, rules());
    const auto dir = kind == "backlinks" ? RankBy::backlinks : RankBy::forward;
    auto ranked = top_n(state.graph(), dir, top, [&](const DomainName& d) { return exclusions.excluded(d); });
    return emit(ranking_table(ranked, kind == "backlinks" ? "backlinks" : "forward_links"), fmt);
  }
  if (kind == "tldenum") {
    const auto path = request.value("enumeration", std::string());
    if (path.empty())
      throw ConfigError("tldenum report needs an enumeration CSV");
    return emit(to_table(count_enumeration(read_file(path), request.value("country", config_.profile.country))), fmt);
  }
  throw ConfigError("unknown report kind '" + kind + "'");
}

std::string generate_world_document(const json& params) {
  sim::GeneratorParams p;
  try {
    p = sim::generator_params_from_json(params);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad generator parameters: ") + e.what());
  }
  spdlog::info("generating world with seed {}", p.seed);
  return sim::to_json(sim::generate_world(p)).dump(2) + "\n";
}

} // namespace filtercrawl
