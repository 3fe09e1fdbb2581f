// End-to-end acceptance checks against simulated worlds. Prints one
// PASS/FAIL line per criterion and exits non-zero if any criterion fails.

#include <chrono>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "filtercrawl/error.hpp"
#include "filtercrawl/filtercheck.hpp"
#include "filtercrawl/linkgraph.hpp"
#include "filtercrawl/report.hpp"
#include "filtercrawl/session.hpp"
#include "psl_vectors.hpp"
#include "test_support.hpp"

using namespace filtercrawl;
using namespace testsupport;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using SteadyClock = std::chrono::steady_clock;

double seconds_since(SteadyClock::time_point t) { return std::chrono::duration<double>(SteadyClock::now() - t).count(); }

std::set<std::string> strs(const std::set<DomainName>& s) {
  std::set<std::string> out;
  for (const auto& d : s)
    out.insert(d.str());
  return out;
}

std::string fixed2(double v) {
  std::ostringstream ss;
  ss.precision(2);
  ss << std::fixed << v;
  return ss.str();
}

Outcome six_checks() {
  Running run(world_file("six_checks.json"));
  const auto expected = json::parse(read_file(data_path("six_checks_expected.json")));
  std::vector<DomainName> domains;
  for (const auto& [name, _] : expected.items())
    domains.push_back(DomainName::parse(name));
  const auto start = SteadyClock::now();
  const auto verdicts = check_batch(domains, run.profile, run.check, 12);
  const auto elapsed = seconds_since(start);
  std::size_t right = 0;
  std::string wrong;
  for (const auto& v : verdicts) {
    const auto& want = expected.at(v.domain.str());
    if (to_string(v.status) == want.at("status") && to_string(v.reason) == want.at("reason"))
      ++right;
    else
      wrong += " " + v.domain.str() + "=" + to_string(v.status) + "/" + to_string(v.reason);
  }
  const bool ok = right == domains.size() && elapsed < 5.0;
  return {ok, std::to_string(right) + "/" + std::to_string(domains.size()) + " verdicts match in " + fixed2(elapsed) +
                  " s" + wrong};
}

Outcome threshold() {
  Running run(world_file("threshold.json"));
  const std::vector<std::pair<std::string, FilterStatus>> cases = {{"t500.test", FilterStatus::not_filtered},
                                                                   {"t499.test", FilterStatus::filtered},
                                                                   {"t501.test", FilterStatus::not_filtered}};
  std::string detail;
  bool ok = true;
  for (const auto& [name, want] : cases) {
    const auto v = check_domain(DomainName::parse(name), run.profile, run.check);
    ok = ok && v.status == want;
    detail += name + "=" + to_string(v.status) + " ";
  }
  return {ok, detail};
}

sim::GeneratorParams closure_params(int i) {
  sim::GeneratorParams p;
  p.domains = 50 + i * 450 / 24;
  p.filtered_frac = 0.1 + 0.1 * (i % 5);
  p.seed = 1000 + static_cast<std::uint64_t>(i);
  p.clique = i % 3 == 0 ? 0 : 3 + i % 7;
  return p;
}

Outcome closure() {
  int matched = 0;
  double slowest = 0;
  std::string wrong;
  for (int i = 0; i < 25; ++i) {
    const auto params = closure_params(i);
    auto world = sim::generate_world(params);
    const auto oracle = sim::oracle_discover(world, psl());
    Running run(std::move(world));
    MemorySink sink;
    const auto start = SteadyClock::now();
    const auto state = run.run(sink);
    const auto t = seconds_since(start);
    slowest = std::max(slowest, t);
    if (state.discovered() == oracle.discovered && t < 10.0)
      ++matched;
    else
      wrong += " world" + std::to_string(i) + "(" + std::to_string(state.discovered().size()) + " vs " +
               std::to_string(oracle.discovered.size()) + ", " + fixed2(t) + " s)";
  }
  return {matched == 25, std::to_string(matched) + "/25 worlds match the oracle, slowest " + fixed2(slowest) + " s" + wrong};
}

Outcome kill_and_resume() {
  std::size_t worlds_ok = 0, kills = 0;
  std::string wrong;
  for (std::uint64_t seed : {31, 32, 33}) {
    const auto world = generated(200, 0.4, seed, 6);
    const auto oracle = sim::oracle_discover(world, psl());
    TempDir dir;
    const auto log = dir.file("events.jsonl");
    const auto snap = dir.file("snapshot.json");
    Running run(world);
    run.crawl.snapshot_path = snap;
    run.crawl.page_budget = 7;
    CrawlState state;
    for (int round = 0; round < 500; ++round) {
      state = load_crawl_state(snap, log, psl());
      JsonlFileSink sink(log);
      state = run.run(sink, std::move(state));
      if (state.stop_reason != "budget")
        break;
      ++kills;
      std::ofstream(log, std::ios::app) << R"({"seq":)"; // torn write at the kill
    }
    std::map<std::string, int> fetches, verdicts;
    for (const auto& r : read_event_log(log).records) {
      if (r.at("kind") == "fetch")
        ++fetches[r.at("url").get<std::string>()];
      else if (r.at("kind") == "verdict")
        ++verdicts[r.at("verdict").at("domain").get<std::string>()];
    }
    bool once = true;
    for (const auto& m : {fetches, verdicts})
      for (const auto& [k, n] : m)
        once = once && n == 1;
    const bool fetched_all = fetches.size() == oracle.fetched.size();
    if (once && fetched_all && state.discovered() == oracle.discovered && state.stop_reason == "exhausted")
      ++worlds_ok;
    else
      wrong += " seed" + std::to_string(seed) + (once ? "" : " repeated-record") +
               (fetched_all ? "" : " fetched " + std::to_string(fetches.size()) + "/" +
                                       std::to_string(oracle.fetched.size()));
  }
  return {worlds_ok == 3 && kills > 0,
          std::to_string(worlds_ok) + "/3 worlds exact after " + std::to_string(kills) + " kills" + wrong};
}

Outcome depth_limit() {
  Running run(chain_world(105));
  MemorySink sink;
  const auto state = run.run(sink);
  const auto n = state.discovered().size();
  return {n == 101 && run.crawl.max_depth == 100, "chain of 106 hosts, discovered " + std::to_string(n)};
}

Outcome psl_vectors() {
  const auto vectors = load_psl_vectors(data_path("test_psl.txt"));
  const auto bad = run_psl_vectors(vectors, psl());
  std::string detail = std::to_string(vectors.size() - bad.size()) + "/" + std::to_string(vectors.size()) + " vectors";
  for (const auto& b : bad)
    detail += " " + b.input + "->" + b.got;
  return {bad.empty() && !vectors.empty(), detail};
}

Outcome graph_recount() {
  std::size_t ok = 0;
  std::string wrong;
  for (std::uint64_t seed : {41, 42, 43, 44}) {
    const auto world = generated(250, 0.35, seed, 10);
    const auto oracle = sim::oracle_discover(world, psl());
    TempDir dir;
    const auto log_path = dir.file("events.jsonl");
    Running run(world);
    CrawlState state;
    {
      JsonlFileSink sink(log_path);
      state = run.run(sink);
    }
    // Independent recount straight from the raw records.
    std::map<std::string, bool> filtered;
    std::vector<std::pair<std::string, std::string>> links;
    for (const auto& r : read_event_log(log_path).records) {
      if (r.at("kind") == "verdict")
        filtered[r.at("verdict").at("domain").get<std::string>()] = r.at("verdict").at("status") == "filtered";
      else if (r.at("kind") == "link")
        links.emplace_back(r.at("from_url").get<std::string>(), r.at("to_url").get<std::string>());
    }
    std::map<std::pair<std::string, std::string>, std::set<std::string>> sources;
    for (const auto& [from, to] : links) {
      const auto fh = normalize_url(from).host, th = normalize_url(to).host;
      if (!filtered[fh.str()] || !filtered[th.str()])
        continue;
      const auto fs = registrable_domain(fh, psl()).value_or(fh).str();
      const auto ts = registrable_domain(th, psl()).value_or(th).str();
      if (fs != ts)
        sources[{fs, ts}].insert(from);
    }
    std::map<std::pair<std::string, std::string>, std::uint64_t> recount;
    for (const auto& [k, s] : sources)
      recount[k] = s.size();
    std::map<std::pair<std::string, std::string>, std::uint64_t> exported;
    for (const auto& e : import_edge_csv(export_edge_csv(state.graph())).edges())
      exported[{e.from_domain.str(), e.to_domain.str()}] = e.weight;
    std::map<std::string, std::uint64_t> in_recount, out_recount, in_graph, out_graph;
    for (const auto& [k, w] : recount) {
      ++out_recount[k.first];
      ++in_recount[k.second];
    }
    for (const auto& [d, n] : state.graph().backlink_counts())
      if (n)
        in_graph[d.str()] = n;
    for (const auto& [d, n] : state.graph().forward_counts())
      if (n)
        out_graph[d.str()] = n;
    const bool counts_match = in_recount == in_graph && out_recount == out_graph;
    if (counts_match && recount == exported && recount == oracle.edges && !recount.empty())
      ++ok;
    else
      wrong += " seed" + std::to_string(seed) + " (" + std::to_string(recount.size()) + " recounted, " +
               std::to_string(exported.size()) + " exported, " + std::to_string(oracle.edges.size()) + " expected)";
  }
  return {ok == 4, std::to_string(ok) + "/4 graphs match the recount and the oracle" + wrong};
}

Outcome report_goldens() {
  TempDir dir;
  const auto world_path = data_path("worlds/generated_500.json");
  const json cfg = {{"world", world_path},
                    {"psl_path", data_path("public_suffix_list.dat")},
                    {"output_dir", dir.file("run")},
                    {"check", {{"timeout_s", 0.3}, {"parallelism", 16}}},
                    {"crawl", {{"per_host_delay_ms", 0}, {"parallelism", 32}}},
                    {"providers",
                     {{"category_table", data_path("categories.csv")}, {"geo_db", data_path("geo.csv")}}}};
  Session session(run_config_from_json(cfg));
  std::string seeds;
  for (const auto& s : sim::load_world(read_file(world_path)).seeds)
    seeds += s + "\n";
  session.crawl(seeds, false);

  const std::vector<std::string> exclusions = {data_path("exclusions.txt")};
  struct Case {
    std::string golden;
    json request;
  };
  const std::vector<Case> cases = {
      {"summary.csv", {{"kind", "summary"}}},
      {"summary.json", {{"kind", "summary"}, {"format", "json"}}},
      {"compare.csv", {{"kind", "compare"}, {"baseline", data_path("baseline.csv")}}},
      {"categories.csv", {{"kind", "categories"}}},
      {"locations.csv", {{"kind", "locations"}}},
  };
  std::size_t ok = 0;
  std::string wrong;
  for (auto c : cases) {
    c.request["exclusions"] = exclusions;
    const auto got = session.report(c.request);
    if (got == read_file(data_path("golden/" + c.golden)))
      ++ok;
    else
      wrong += " " + c.golden;
  }
  return {ok == cases.size(), std::to_string(ok) + "/" + std::to_string(cases.size()) + " reports equal their goldens" +
                                  (wrong.empty() ? "" : ", differing:" + wrong)};
}

Outcome parallelism() {
  const auto world = generated(300, 0.35, 77, 8);
  std::vector<std::set<std::string>> discovered;
  std::vector<std::set<std::string>> verdicts;
  std::vector<std::string> graphs;
  for (int p : {1, 8, 32}) {
    Running run(world);
    run.crawl.parallelism = p;
    MemorySink sink;
    const auto state = run.run(sink);
    discovered.push_back(strs(state.discovered()));
    std::set<std::string> vs;
    for (const auto& [d, v] : state.verdicts())
      vs.insert(d.str() + " " + to_string(v.status) + " " + to_string(v.reason));
    verdicts.push_back(vs);
    graphs.push_back(export_edge_csv(state.graph()));
  }
  bool crawl_ok = true;
  for (int i = 1; i < 3; ++i)
    crawl_ok = crawl_ok && discovered[i] == discovered[0] && verdicts[i] == verdicts[0] && graphs[i] == graphs[0];

  // check_batch over the six-check fixtures plus a slice of the committed world.
  Running six(world_file("six_checks.json"), 0.2);
  Running big(world_file("generated_500.json"), 0.2);
  auto batch = [](const Running& r, std::size_t limit, int p) {
    std::vector<DomainName> ds;
    for (const auto& d : r.net->world().domains)
      if (ds.size() < limit)
        ds.push_back(d.name);
    std::multiset<std::string> out;
    for (const auto& v : check_batch(ds, r.profile, r.check, p))
      out.insert(v.domain.str() + " " + to_string(v.status) + " " + to_string(v.reason));
    return out;
  };
  bool batch_ok = true;
  for (const auto* r : {&six, &big}) {
    const auto one = batch(*r, 40, 1);
    batch_ok = batch_ok && batch(*r, 40, 8) == one && batch(*r, 40, 32) == one;
  }
  const bool ok = crawl_ok && batch_ok;
  return {ok, "crawl discovered " + std::to_string(discovered[0].size()) + "/" + std::to_string(discovered[1].size()) +
                  "/" + std::to_string(discovered[2].size()) + ", crawl verdicts and edges " +
                  (crawl_ok ? "identical" : "differ") + ", check_batch verdicts " + (batch_ok ? "identical" : "differ")};
}

Outcome dead_but_filtered() {
  Running run(world_file("dead_enum.json"), 0.2);
  const auto rules = parse_psl(read_file(data_path("enum_psl.dat")));
  EnumerationOptions opt;
  opt.probes_per_second = 1000;
  opt.parallelism = 16;
  const auto results = enumerate_filtered(DomainName::parse("sample.com"), rules, run.profile, run.check, opt);
  const auto counts = count_enumeration(enumeration_csv(results), run.profile.country);
  // host_exists must be false for exactly the candidates the world leaves unresolvable.
  std::size_t exists_right = 0;
  for (const auto& r : results)
    if (const auto* entry = run.net->world().find(r.candidate.name); entry && entry->exists == r.host_exists)
      ++exists_right;
  return {counts.candidates == 50 && counts.filtered_dead == 47 && exists_right == results.size(),
          std::to_string(counts.filtered_dead) + "/" + std::to_string(counts.candidates) +
              " candidates filtered with no host; " + std::to_string(counts.filtered_host_exists) + " filtered and live"};
}

} // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"six-check coverage", six_checks},
      {"content-length threshold", threshold},
      {"closure on generated worlds", closure},
      {"visit-once and verdict-once across kill/resume", kill_and_resume},
      {"depth bound", depth_limit},
      {"public suffix vectors", psl_vectors},
      {"link graph recount", graph_recount},
      {"report goldens", report_goldens},
      {"parallelism neutrality", parallelism},
      {"dead-but-filtered enumeration", dead_but_filtered},
  };
  int failed = 0;
  int n = 0;
  for (const auto& [name, fn] : criteria) {
    ++n;
    Outcome o;
    const auto start = SteadyClock::now();
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass)
      ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << n << "] " << name << ": " << o.detail << " ("
              << fixed2(seconds_since(start)) << " s)" << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
