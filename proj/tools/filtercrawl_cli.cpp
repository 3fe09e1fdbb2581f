// Command-line front end. Talks to the library only through its C interface.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "filtercrawl/filtercrawl.h"

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitAborted = 3;

int exit_code(fc_status s) {
  switch (s) {
  case FC_OK:
    return kExitOk;
  case FC_ERR_CONFIG:
  case FC_ERR_INVALID:
    return kExitUsage;
  case FC_ERR_ABORTED:
    return kExitAborted;
  default:
    return kExitFailure;
  }
}

int fail(fc_status s) {
  std::cerr << "error: " << fc_last_error() << "\n";
  return exit_code(s);
}

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string slurp(const std::string& path) {
  if (path == "-")
    return {std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw UsageError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << std::flush;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text))
    throw UsageError("cannot write " + path);
}

// Takes ownership of a library string.
std::string take(char* s) {
  std::string out = s ? s : "";
  fc_string_free(s);
  return out;
}

class SessionHandle {
public:
  explicit SessionHandle(const json& config) {
    const auto text = config.dump();
    status_ = fc_session_open(text.c_str(), &session_);
  }
  ~SessionHandle() { fc_session_close(session_); }
  SessionHandle(const SessionHandle&) = delete;
  SessionHandle& operator=(const SessionHandle&) = delete;

  fc_status status() const { return status_; }
  fc_session* get() const { return session_; }

private:
  fc_session* session_ = nullptr;
  fc_status status_ = FC_OK;
};

struct GlobalOptions {
  std::string config_path;
  std::string output_dir;
  std::string psl_path;
  std::string world_path;
  std::string profile_path;
  std::string country;
  std::optional<double> timeout_s;
  std::optional<double> maxdiff;
  std::optional<int> parallelism;
  bool strict_alg1 = false;
  bool no_private_psl = false;
};

// Config file, then environment, then flags.
json build_config(const GlobalOptions& g) {
  json c = json::object();
  if (!g.config_path.empty()) {
    try {
      c = json::parse(slurp(g.config_path));
    } catch (const json::exception& e) {
      throw UsageError("config " + g.config_path + ": " + e.what());
    }
  }
  if (const char* dir = std::getenv("FILTERCRAWL_OUTPUT_DIR"); dir && *dir)
    c["output_dir"] = dir;
  if (const char* key = std::getenv("FILTERCRAWL_CATEGORY_API_KEY"); key && *key)
    c["providers"]["category_api_key"] = key;
  if (!g.output_dir.empty())
    c["output_dir"] = g.output_dir;
  if (!g.psl_path.empty())
    c["psl_path"] = g.psl_path;
  if (!g.world_path.empty())
    c["world"] = g.world_path;
  if (!g.profile_path.empty()) {
    c["profile_path"] = g.profile_path;
    c.erase("profile");
  }
  if (!g.country.empty())
    c["country"] = g.country;
  if (g.timeout_s)
    c["check"]["timeout_s"] = *g.timeout_s;
  if (g.maxdiff)
    c["check"]["maxdiff"] = *g.maxdiff;
  if (g.parallelism) {
    c["check"]["parallelism"] = *g.parallelism;
    c["crawl"]["parallelism"] = *g.parallelism;
    c["enumerate"]["parallelism"] = *g.parallelism;
  }
  if (g.strict_alg1)
    c["check"]["strict_alg1"] = true;
  if (g.no_private_psl)
    c["include_private_psl"] = false;
  return c;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discover DNS-filtered domains by crawling outward from known filtered sites"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(fc_version()));

  GlobalOptions g;
  app.add_option("--config", g.config_path, "JSON run configuration");
  app.add_option("--output-dir", g.output_dir, "Directory for run artifacts");
  app.add_option("--psl", g.psl_path, "Public suffix list file");
  app.add_option("--world", g.world_path, "Serve this simulated world on loopback and measure it");
  app.add_option("--profile", g.profile_path, "Resolver profile JSON");
  app.add_option("--country", g.country, "Country code override");
  app.add_option("--timeout", g.timeout_s, "DNS and HTTP timeout in seconds");
  app.add_option("--maxdiff", g.maxdiff, "Content-length divergence threshold");
  app.add_option("--parallelism", g.parallelism, "Probes or fetches in flight");
  app.add_flag("--strict-alg1", g.strict_alg1, "Literal decision mode");
  app.add_flag("--no-private-psl", g.no_private_psl, "Ignore the private section of the suffix list");

  std::string out_path;

  auto* check = app.add_subcommand("check", "Check each domain in a file for filtering");
  std::string check_input;
  check->add_option("domains", check_input, "One domain per line ('-' for stdin)")->required();
  check->add_option("-o,--out", out_path, "Output file (default stdout)");

  auto* crawl = app.add_subcommand("crawl", "Crawl from a seed list");
  std::string seeds_path;
  bool resume = false;
  std::optional<int> max_depth, per_host_delay_ms;
  std::optional<double> deadline_s;
  std::optional<std::uint64_t> page_budget;
  crawl->add_option("--seeds", seeds_path, "Seed URL list (default: seed_path from config)");
  crawl->add_flag("--resume", resume, "Continue the run in the output directory");
  crawl->add_option("--max-depth", max_depth, "Recursion depth limit");
  crawl->add_option("--per-host-delay-ms", per_host_delay_ms, "Minimum gap between fetches to one host");
  crawl->add_option("--deadline", deadline_s, "Stop after this many seconds, keeping a snapshot");
  crawl->add_option("--page-budget", page_budget, "Stop after this many fetches");

  auto* enumerate = app.add_subcommand("enumerate", "Probe public-suffix variants of filtered domains");
  std::string enum_input;
  bool probe_synthetic = false;
  std::optional<double> rate;
  enumerate->add_option("domains", enum_input, "One domain per line ('-' for stdin)")->required();
  enumerate->add_flag("--probe-synthetic", probe_synthetic, "Also probe wildcard placeholder names");
  enumerate->add_option("--rate", rate, "Probes per second");
  enumerate->add_option("-o,--out", out_path, "Output file (default stdout)");

  auto* report = app.add_subcommand("report", "Produce a report from a finished run");
  std::string kind, log_path, format = "csv", baseline, enumeration_csv, categories, geo_db, category_url;
  std::vector<std::string> excludes, exclude_categories;
  std::optional<std::size_t> top;
  report->add_option("kind", kind, "summary, compare, categories, locations, backlinks, forward or tldenum")
      ->required();
  report->add_option("--log", log_path, "Event log (default: output dir events.jsonl)");
  report->add_option("--format", format, "csv or json");
  report->add_option("--exclude", excludes, "Exclusion list file, one domain per line");
  report->add_option("--exclude-category", exclude_categories, "Leave out domains with this category");
  report->add_option("--baseline", baseline, "Baseline URL list for compare");
  report->add_option("--top", top, "Rows in ranking reports");
  report->add_option("--enumeration", enumeration_csv, "Enumeration CSV for tldenum");
  report->add_option("--categories", categories, "Local category table");
  report->add_option("--category-url", category_url, "Category service base URL");
  report->add_option("--geo-db", geo_db, "Geolocation range CSV");
  report->add_option("-o,--out", out_path, "Output file (default stdout)");

  auto* gen = app.add_subcommand("gen-world", "Write a random simulated world");
  json params = json::object();
  int domains = 100, clique = 0;
  double filtered_frac = 0.3;
  std::uint64_t seed = 1;
  std::optional<double> out_degree;
  gen->add_option("--domains", domains, "Host count");
  gen->add_option("--filtered-frac", filtered_frac, "Fraction of filtered hosts");
  gen->add_option("--seed", seed, "Generator seed");
  gen->add_option("--clique", clique, "Size of an interlinked group of filtered sites");
  gen->add_option("--out-degree", out_degree, "Mean links per page");
  gen->add_option("-o,--out", out_path, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) {
      params = {{"domains", domains}, {"filtered_frac", filtered_frac}, {"seed", seed}, {"clique", clique}};
      if (out_degree)
        params["out_degree"] = *out_degree;
      char* world = nullptr;
      const auto text = params.dump();
      if (auto s = fc_generate_world(text.c_str(), &world); s != FC_OK)
        return fail(s);
      write_output(out_path, take(world));
      return kExitOk;
    }

    json config = build_config(g);
    if (crawl->parsed()) {
      if (max_depth)
        config["crawl"]["max_depth"] = *max_depth;
      if (per_host_delay_ms)
        config["crawl"]["per_host_delay_ms"] = *per_host_delay_ms;
      if (deadline_s)
        config["crawl"]["deadline_s"] = *deadline_s;
      if (page_budget)
        config["crawl"]["page_budget"] = *page_budget;
    }
    if (enumerate->parsed()) {
      if (probe_synthetic)
        config["enumerate"]["probe_synthetic"] = true;
      if (rate)
        config["enumerate"]["probes_per_second"] = *rate;
    }
    if (report->parsed()) {
      if (!categories.empty())
        config["providers"]["category_table"] = categories;
      if (!category_url.empty())
        config["providers"]["category_url"] = category_url;
      if (!geo_db.empty())
        config["providers"]["geo_db"] = geo_db;
    }

    SessionHandle session(config);
    if (session.status() != FC_OK)
      return fail(session.status());

    if (check->parsed()) {
      const auto input = slurp(check_input);
      char* out = nullptr;
      if (auto s = fc_check(session.get(), input.c_str(), &out); s != FC_OK)
        return fail(s);
      write_output(out_path, take(out));
      return kExitOk;
    }

    if (crawl->parsed()) {
      if (seeds_path.empty())
        seeds_path = config.value("seed_path", std::string());
      if (seeds_path.empty() && !resume)
        throw UsageError("crawl needs --seeds or seed_path in the configuration");
      const auto seeds = seeds_path.empty() ? std::string() : slurp(seeds_path);
      char* out = nullptr;
      if (auto s = fc_crawl(session.get(), seeds.c_str(), resume ? 1 : 0, &out); s != FC_OK)
        return fail(s);
      std::cout << take(out) << std::flush;
      return kExitOk;
    }

    if (enumerate->parsed()) {
      const auto input = slurp(enum_input);
      char* out = nullptr;
      if (auto s = fc_enumerate(session.get(), input.c_str(), &out); s != FC_OK)
        return fail(s);
      write_output(out_path, take(out));
      return kExitOk;
    }

    if (report->parsed()) {
      json request{{"kind", kind}, {"format", format}};
      if (!log_path.empty())
        request["log"] = log_path;
      if (!excludes.empty())
        request["exclusions"] = excludes;
      if (!exclude_categories.empty())
        request["exclude_categories"] = exclude_categories;
      if (!baseline.empty())
        request["baseline"] = baseline;
      if (top)
        request["top"] = *top;
      if (!enumeration_csv.empty())
        request["enumeration"] = enumeration_csv;
      const auto text = request.dump();
      char* out = nullptr;
      if (auto s = fc_report(session.get(), text.c_str(), &out); s != FC_OK)
        return fail(s);
      write_output(out_path, take(out));
      return kExitOk;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
