#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <string>
#include <unistd.h>

#include "filtercrawl/crawler.hpp"
#include "filtercrawl/events.hpp"
#include "filtercrawl/simnet.hpp"
#include "filtercrawl/tldenum.hpp"
#include "filtercrawl/util.hpp"
#include "filtercrawl/worldgen.hpp"

namespace testsupport {

using namespace filtercrawl;

inline std::string data_path(const std::string& name) { return std::string(FILTERCRAWL_TEST_DATA) + "/" + name; }

inline const SuffixRuleSet& psl() {
  static const SuffixRuleSet rules = parse_psl(read_file(data_path("public_suffix_list.dat")));
  return rules;
}

inline sim::WorldSpec world_file(const std::string& name) {
  return sim::load_world(read_file(data_path("worlds/" + name)));
}

/// Scratch directory removed on destruction.
class TempDir {
public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("fc-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

private:
  std::filesystem::path path_;
};

/// A served world with check and crawl settings sized for tests.
struct Running {
  explicit Running(sim::WorldSpec world, double timeout_s = 0.25)
      : net(std::make_unique<sim::SimNetwork>(std::move(world))), profile(net->profile()),
        check(net->check_config(Seconds(timeout_s))) {
    crawl.per_host_delay = std::chrono::milliseconds(0);
    crawl.parallelism = 32;
  }

  std::vector<Url> seeds() const {
    std::vector<Url> out;
    for (const auto& s : net->world().seeds)
      out.push_back(normalize_url(s));
    return out;
  }

  CrawlState run(EventSink& sink, CrawlState state = {}) const {
    return filtercrawl::crawl(seeds(), profile, check, crawl, psl(), sink, std::move(state));
  }

  std::unique_ptr<sim::SimNetwork> net;
  ResolverProfile profile;
  CheckConfig check;
  CrawlConfig crawl;
};

/// Filtered chain c0 -> c1 -> ... -> c{length}, seeded at c0.
inline sim::WorldSpec chain_world(int length) {
  sim::WorldSpec w;
  for (int i = 0; i <= length; ++i) {
    sim::DomainSpec d;
    d.name = DomainName::parse("c" + std::to_string(i) + ".test");
    d.filtered = true;
    sim::PageSpec p;
    p.path = "/";
    if (i < length)
      p.links.push_back("http://c" + std::to_string(i + 1) + ".test/");
    d.pages.push_back(p);
    w.domains.push_back(std::move(d));
  }
  w.seeds = {"http://c0.test/"};
  return sim::world_from_json(sim::to_json(w));
}

inline sim::WorldSpec generated(int domains, double filtered_frac, std::uint64_t seed, int clique) {
  sim::GeneratorParams p;
  p.domains = domains;
  p.filtered_frac = filtered_frac;
  p.seed = seed;
  p.clique = clique;
  return sim::generate_world(p);
}

} // namespace testsupport
