#include "filtercrawl/crawler.hpp"

#include <algorithm>
#include <filesystem>
#include <future>
#include <mutex>

#include <spdlog/spdlog.h>

#include "filtercrawl/error.hpp"
#include "filtercrawl/html_links.hpp"
#include "filtercrawl/http_client.hpp"
#include "filtercrawl/util.hpp"

namespace filtercrawl {

using nlohmann::json;

std::set<std::string> default_asset_extensions() {
  return {"js", "css", "png", "jpg", "jpeg", "gif", "svg", "ico", "woff", "woff2", "ttf", "mp4", "webm", "pdf", "zip"};
}

void CrawlConfig::validate() const {
  if (max_depth < 1)
    throw ConfigError("max_depth must be >= 1");
  if (parallelism < 1)
    throw ConfigError("parallelism must be >= 1");
  if (per_host_delay.count() < 0)
    throw ConfigError("per_host_delay must be >= 0");
  if (max_redirects < 0)
    throw ConfigError("max_redirects must be >= 0");
  if (deadline && deadline->count() <= 0)
    throw ConfigError("deadline must be positive");
}

json to_json(const CrawlConfig& c) {
  json j{{"max_depth", c.max_depth},
         {"parallelism", c.parallelism},
         {"per_host_delay_ms", c.per_host_delay.count()},
         {"asset_extensions", c.asset_extensions},
         {"max_page_bytes", c.max_page_bytes},
         {"max_redirects", c.max_redirects},
         {"snapshot_path", c.snapshot_path}};
  j["deadline_s"] = c.deadline ? json(c.deadline->count()) : json(nullptr);
  j["page_budget"] = c.page_budget ? json(*c.page_budget) : json(nullptr);
  j["canary"] = c.canary ? json(c.canary->str()) : json(nullptr);
  return j;
}

CrawlConfig crawl_config_from_json(const json& j, CrawlConfig c) {
  try {
    c.max_depth = j.value("max_depth", c.max_depth);
    c.parallelism = j.value("parallelism", c.parallelism);
    if (j.contains("per_host_delay_ms"))
      c.per_host_delay = std::chrono::milliseconds(j.at("per_host_delay_ms").get<long>());
    if (j.contains("asset_extensions")) {
      c.asset_extensions.clear();
      for (const auto& e : j.at("asset_extensions"))
        c.asset_extensions.insert(to_lower_ascii(e.get<std::string>()));
    }
    c.max_page_bytes = j.value("max_page_bytes", c.max_page_bytes);
    c.max_redirects = j.value("max_redirects", c.max_redirects);
    c.snapshot_path = j.value("snapshot_path", c.snapshot_path);
    if (j.contains("deadline_s"))
      c.deadline = j.at("deadline_s").is_null() ? std::nullopt : std::optional<Seconds>(j.at("deadline_s").get<double>());
    if (j.contains("page_budget"))
      c.page_budget = j.at("page_budget").is_null() ? std::nullopt
                                                     : std::optional<std::uint64_t>(j.at("page_budget").get<std::uint64_t>());
    if (j.contains("canary"))
      c.canary = j.at("canary").is_null() ? std::nullopt
                                           : std::optional<DomainName>(DomainName::parse(j.at("canary").get<std::string>()));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad crawl settings: ") + e.what());
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("bad crawl settings: ") + e.what());
  }
  return c;
}

bool is_static_asset(const Url& url, const CrawlConfig& config) {
  const auto last = url.path.substr(url.path.rfind('/') + 1);
  const auto dot = last.rfind('.');
  if (dot == std::string::npos)
    return false;
  return config.asset_extensions.contains(to_lower_ascii(last.substr(dot + 1)));
}

bool is_self_reference(const Url& url, const DomainName& page_domain, const SuffixRuleSet& rules) {
  auto a = registrable_domain(url.host, rules);
  auto b = registrable_domain(page_domain, rules);
  return (a ? *a : url.host) == (b ? *b : page_domain);
}

// --- state -----------------------------------------------------------------

const FilterVerdict* CrawlState::verdict(const DomainName& host) const {
  auto it = verdicts_.find(host);
  return it == verdicts_.end() ? nullptr : &it->second;
}

std::vector<CrawlTask> CrawlState::frontier() const {
  std::vector<CrawlTask> out;
  out.reserve(frontier_.size());
  for (const auto& [order, p] : frontier_)
    out.push_back(p.task);
  return out;
}

std::set<DomainName> CrawlState::discovered() const {
  std::set<DomainName> out;
  for (const auto& [d, v] : verdicts_)
    if (v.filtered())
      out.insert(d);
  return out;
}

CrawlStats CrawlState::stats() const {
  CrawlStats s;
  s.urls_extracted = extracted_.size();
  s.urls_filtered = filtered_.size();
  s.domains_filtered = discovered().size();
  s.pages_fetched = pages_fetched_;
  s.fetch_attempts = fetch_attempts_;
  s.probes = verdicts_.size();
  return s;
}

void CrawlState::apply(const json& event, const SuffixRuleSet& rules) {
  const auto seq = event.at("seq").get<std::uint64_t>();
  next_seq = std::max(next_seq, seq + 1);
  const auto kind = event.at("kind").get<std::string>();
  if (kind == "verdict") {
    auto v = verdict_from_json(event.at("verdict"));
    verdicts_.emplace(v.domain, std::move(v));
  } else if (kind == "enqueue") {
    const auto key = event.at("url").get<std::string>();
    if (!visited_.insert(key).second)
      return;
    CrawlTask t;
    t.url = normalize_url(key);
    t.depth = event.at("depth").get<int>();
    if (event.contains("referrer") && !event.at("referrer").is_null())
      t.referrer_domain = DomainName::parse(event.at("referrer").get<std::string>());
    frontier_index_[key] = next_order_;
    frontier_.emplace(next_order_++, Pending{std::move(t), key});
  } else if (kind == "link") {
    const auto to = event.at("to_url").get<std::string>();
    extracted_.insert(to);
    const auto to_url = normalize_url(to);
    const auto from_url = normalize_url(event.at("from_url").get<std::string>());
    const auto* tv = verdict(to_url.host);
    if (!tv || !verdict(from_url.host))
      return;
    if (tv->filtered())
      filtered_.insert(to);
    graph_.record_link(
        from_url, to_url,
        [this](const DomainName& d) -> std::optional<FilterStatus> {
          auto* v = verdict(d);
          return v ? std::optional(v->status) : std::nullopt;
        },
        rules);
  } else if (kind == "fetch") {
    const auto key = event.at("url").get<std::string>();
    visited_.insert(key);
    if (auto it = frontier_index_.find(key); it != frontier_index_.end()) {
      frontier_.erase(it->second);
      frontier_index_.erase(it);
    }
    ++fetch_attempts_;
    if (event.value("outcome", std::string()) == "content")
      ++pages_fetched_;
  } else {
    throw InvalidInput("unknown event kind '" + kind + "'");
  }
}

json CrawlState::to_json() const {
  std::vector<std::string> visited(visited_.begin(), visited_.end());
  std::sort(visited.begin(), visited.end());
  json verdicts = json::array();
  for (const auto& [d, v] : verdicts_)
    verdicts.push_back(filtercrawl::to_json(v));
  json frontier = json::array();
  for (const auto& [order, p] : frontier_)
    frontier.push_back(json{{"order", order},
                            {"url", p.key},
                            {"depth", p.task.depth},
                            {"referrer", p.task.referrer_domain ? json(p.task.referrer_domain->str()) : json(nullptr)}});
  return json{{"country", country},
              {"next_seq", next_seq},
              {"next_order", next_order_},
              {"stop_reason", stop_reason},
              {"visited", visited},
              {"verdicts", verdicts},
              {"frontier", frontier},
              {"extracted", extracted_},
              {"filtered", filtered_},
              {"graph", graph_.state_json()},
              {"pages_fetched", pages_fetched_},
              {"fetch_attempts", fetch_attempts_}};
}

CrawlState CrawlState::from_json(const json& j) {
  CrawlState s;
  try {
    s.country = j.at("country").get<std::string>();
    s.next_seq = j.at("next_seq").get<std::uint64_t>();
    s.next_order_ = j.at("next_order").get<std::uint64_t>();
    s.stop_reason = j.value("stop_reason", std::string());
    for (const auto& v : j.at("visited"))
      s.visited_.insert(v.get<std::string>());
    for (const auto& vj : j.at("verdicts")) {
      auto v = verdict_from_json(vj);
      s.verdicts_.emplace(v.domain, std::move(v));
    }
    for (const auto& fj : j.at("frontier")) {
      const auto key = fj.at("url").get<std::string>();
      CrawlTask t;
      t.url = normalize_url(key);
      t.depth = fj.at("depth").get<int>();
      if (!fj.at("referrer").is_null())
        t.referrer_domain = DomainName::parse(fj.at("referrer").get<std::string>());
      const auto order = fj.at("order").get<std::uint64_t>();
      s.frontier_index_[key] = order;
      s.frontier_.emplace(order, Pending{std::move(t), key});
    }
    s.extracted_ = j.at("extracted").get<std::set<std::string>>();
    s.filtered_ = j.at("filtered").get<std::set<std::string>>();
    s.graph_ = FilteredGraph::from_state_json(j.at("graph"));
    s.pages_fetched_ = j.at("pages_fetched").get<std::uint64_t>();
    s.fetch_attempts_ = j.at("fetch_attempts").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed crawl snapshot: ") + e.what());
  }
  return s;
}

// --- traversal -------------------------------------------------------------

namespace {

bool is_redirect(int status) {
  return status == 301 || status == 302 || status == 303 || status == 307 || status == 308;
}

struct Hop {
  Url url;
  FetchKind kind = FetchKind::error;
  int status = 0;
  std::uint64_t bytes = 0;
  bool truncated = false;
  std::optional<std::string> redirect_to;
  std::string detail;
};

struct PageResult {
  CrawlTask task;
  std::vector<Hop> hops;
  Url final_url;
  std::vector<Url> links; // after asset and self-link removal
};

class Coordinator {
public:
  Coordinator(const ResolverProfile& profile, const CheckConfig& check_cfg, const CrawlConfig& crawl_cfg,
              const SuffixRuleSet& rules, EventSink& sink, CrawlState state)
      : profile_(profile), check_(check_cfg), cfg_(crawl_cfg), rules_(rules), sink_(sink), state_(std::move(state)),
        throttle_(crawl_cfg.per_host_delay), started_(std::chrono::steady_clock::now()) {}

  CrawlState run(const std::vector<Url>& seeds) {
    state_.country = profile_.country;
    state_.stop_reason.clear();
    health_check();
    seed(seeds);
    snapshot();

    int level = -1;
    while (state_.frontier_size() > 0) {
      if (cfg_.deadline && std::chrono::steady_clock::now() - started_ >= *cfg_.deadline) {
        state_.stop_reason = "deadline";
        snapshot();
        return std::move(state_);
      }
      auto pending = state_.frontier();
      const int depth = pending.front().depth;
      if (depth != level) {
        level = depth;
        spdlog::info("crawl level {}: {} queued, {} filtered hosts so far", depth, pending.size(),
                     state_.stats().domains_filtered);
        health_check();
      }
      std::vector<CrawlTask> chunk;
      for (auto& t : pending) {
        if (t.depth != depth || chunk.size() == static_cast<std::size_t>(cfg_.parallelism))
          break;
        chunk.push_back(std::move(t));
      }
      if (!process_chunk(chunk))
        return std::move(state_); // page budget spent: stop as a kill would, without a snapshot
      snapshot();
    }
    state_.stop_reason = "exhausted";
    snapshot();
    return std::move(state_);
  }

private:
  void emit(json record) {
    record["seq"] = state_.next_seq;
    sink_.append(record);
    state_.apply(record, rules_);
  }

  void snapshot() {
    if (!cfg_.snapshot_path.empty())
      write_file_atomic(cfg_.snapshot_path, state_.to_json().dump() + "\n");
  }

  [[noreturn]] void abort(const std::string& why) {
    state_.stop_reason = "aborted";
    snapshot();
    throw RunAborted(why);
  }

  void health_check() {
    if (!cfg_.canary)
      return;
    auto m = std::async(std::launch::async,
                        [&] { return resolve(*cfg_.canary, profile_.measurement.front(), check_.timeout); });
    const auto c = resolve(*cfg_.canary, profile_.control, check_.timeout);
    const auto mo = m.get();
    if (!c.responded())
      abort("control resolver " + c.server + " unreachable (" + to_string(c.kind) + ": " + c.detail + ")");
    if (!mo.responded())
      abort("measurement resolver " + mo.server + " unreachable (" + to_string(mo.kind) + ": " + mo.detail + ")");
  }

  void probe(const std::vector<DomainName>& hosts) {
    if (hosts.empty())
      return;
    auto verdicts = check_batch(hosts, profile_, check_, cfg_.parallelism);
    // Silence from a resolver is only trustworthy while the resolver is up.
    const bool suspicious = std::any_of(verdicts.begin(), verdicts.end(), [](const FilterVerdict& v) {
      return !v.evidence.control.responded() || !v.evidence.measurement.responded();
    });
    if (suspicious)
      health_check();
    for (const auto& v : verdicts)
      emit(json{{"kind", "verdict"}, {"verdict", to_json(v)}});
  }

  void seed(const std::vector<Url>& seeds) {
    std::vector<DomainName> hosts;
    std::set<DomainName> seen;
    for (const auto& s : seeds)
      if (!state_.verdict(s.host) && seen.insert(s.host).second)
        hosts.push_back(s.host);
    probe(hosts);
    for (const auto& s : seeds) {
      const auto* v = state_.verdict(s.host);
      if (!v || !v->filtered()) {
        spdlog::info("seed {} dropped: {}", s.str(), v ? to_string(v->status) : "unchecked");
        continue;
      }
      if (!state_.visited(s.str()))
        emit(json{{"kind", "enqueue"}, {"url", s.str()}, {"depth", 0}, {"referrer", nullptr}});
    }
  }

  Hop fetch_one(const Url& url, std::string& body) {
    Hop hop;
    hop.url = url;
    const auto* v = state_.verdict(url.host);
    if (!v || !v->evidence.control.answered()) {
      hop.detail = "host has no address at the control resolver";
      return hop;
    }
    HttpRequest req;
    req.address = v->evidence.control.addresses.front();
    req.port = url.port;
    req.host = url.host.str();
    req.path = url.target();
    req.tls = url.tls();
    req.timeout = check_.timeout;
    req.max_body = cfg_.max_page_bytes;
    throttle_.acquire(url.host.str());
    auto resp = http_get(req, check_.connect_map.get());
    hop.kind = resp.kind;
    hop.status = resp.status;
    hop.bytes = resp.body.size();
    hop.truncated = resp.truncated;
    hop.detail = resp.detail;
    if (resp.kind == FetchKind::content && is_redirect(resp.status) && !resp.location.empty())
      hop.redirect_to = resp.location;
    body = std::move(resp.body);
    return hop;
  }

  // Runs on a worker thread; reads state but never mutates it.
  PageResult fetch_task(const CrawlTask& task) {
    PageResult r{task, {}, task.url, {}};
    std::string body;
    std::vector<Url> raw_links;
    for (int hop = 0;; ++hop) {
      r.hops.push_back(fetch_one(r.final_url, body));
      const auto& h = r.hops.back();
      if (h.kind != FetchKind::content)
        break;
      if (!h.redirect_to) {
        raw_links = extract_links(body, r.final_url);
        break;
      }
      auto target = try_normalize_url(*h.redirect_to, &r.final_url);
      if (!target)
        break;
      if (target->host != r.final_url.host || target->scheme != r.final_url.scheme || target->port != r.final_url.port) {
        raw_links.push_back(*target); // leaving the host: treat as a link found on this page
        break;
      }
      if (hop + 1 > cfg_.max_redirects || !claim(target->str()))
        break;
      r.final_url = *target;
    }
    std::set<std::string> seen;
    for (auto& u : raw_links) {
      if (is_static_asset(u, cfg_) || is_self_reference(u, r.final_url.host, rules_))
        continue;
      if (seen.insert(u.str()).second)
        r.links.push_back(std::move(u));
    }
    return r;
  }

  bool claim(const std::string& url) {
    std::lock_guard lock(claim_mu_);
    if (state_.visited(url))
      return false;
    return claimed_.insert(url).second;
  }

  bool taken(const std::string& url) const { return state_.visited(url) || claimed_.contains(url); }

  // Returns false when the page budget ran out part-way through.
  bool process_chunk(const std::vector<CrawlTask>& chunk) {
    claimed_.clear();
    std::vector<std::future<PageResult>> futures;
    for (const auto& t : chunk)
      futures.push_back(std::async(std::launch::async, [this, t] { return fetch_task(t); }));
    std::vector<PageResult> results;
    for (auto& f : futures)
      results.push_back(f.get());

    std::vector<DomainName> fresh;
    std::set<DomainName> pending;
    for (const auto& r : results) {
      if (r.task.depth + 1 > cfg_.max_depth)
        continue;
      for (const auto& u : r.links)
        if (!state_.verdict(u.host) && pending.insert(u.host).second)
          fresh.push_back(u.host);
    }
    probe(fresh);

    for (const auto& r : results) {
      const int next_depth = r.task.depth + 1;
      for (const auto& u : r.links) {
        emit(json{{"kind", "link"}, {"from_url", r.final_url.str()}, {"to_url", u.str()}, {"depth", r.task.depth}});
        const auto* v = state_.verdict(u.host);
        if (v && v->filtered() && next_depth <= cfg_.max_depth && !taken(u.str()))
          emit(json{{"kind", "enqueue"}, {"url", u.str()}, {"depth", next_depth}, {"referrer", r.final_url.host.str()}});
      }
      for (const auto& h : r.hops) {
        json rec{{"kind", "fetch"}, {"url", h.url.str()}, {"depth", r.task.depth}, {"outcome", to_string(h.kind)}};
        if (h.kind == FetchKind::content) {
          rec["status"] = h.status;
          rec["bytes"] = h.bytes;
          if (h.truncated)
            rec["truncated"] = true;
        } else {
          rec["detail"] = h.detail;
        }
        if (h.redirect_to)
          rec["redirect_to"] = *h.redirect_to;
        emit(std::move(rec));
      }
      ++fetched_this_run_;
      if (cfg_.page_budget && fetched_this_run_ >= *cfg_.page_budget) {
        state_.stop_reason = "budget";
        return false;
      }
    }
    return true;
  }

  const ResolverProfile& profile_;
  const CheckConfig& check_;
  const CrawlConfig& cfg_;
  const SuffixRuleSet& rules_;
  EventSink& sink_;
  CrawlState state_;
  HostThrottle throttle_;
  std::chrono::steady_clock::time_point started_;
  std::mutex claim_mu_;
  std::set<std::string> claimed_; // same-host redirect targets taken during the current chunk
  std::uint64_t fetched_this_run_ = 0;
};

} // namespace

CrawlState crawl(const std::vector<Url>& seeds, const ResolverProfile& profile, const CheckConfig& check_cfg,
                 const CrawlConfig& crawl_cfg, const SuffixRuleSet& rules, EventSink& sink, CrawlState state) {
  profile.validate();
  check_cfg.validate();
  crawl_cfg.validate();
  if (!state.country.empty() && state.country != profile.country)
    throw ConfigError("saved crawl belongs to country " + state.country + ", profile is for " + profile.country);
  Coordinator c(profile, check_cfg, crawl_cfg, rules, sink, std::move(state));
  return c.run(seeds);
}

} // namespace filtercrawl

namespace filtercrawl {

CrawlState load_crawl_state(const std::string& snapshot_path, const std::string& log_path, const SuffixRuleSet& rules) {
  CrawlState state;
  if (!snapshot_path.empty() && std::filesystem::exists(snapshot_path)) {
    const auto text = read_file(snapshot_path);
    if (!trim(text).empty()) {
      try {
        state = CrawlState::from_json(json::parse(text));
      } catch (const json::exception& e) {
        throw InvalidInput("snapshot " + snapshot_path + " is not valid JSON: " + e.what());
      }
    }
  }
  if (log_path.empty() || !std::filesystem::exists(log_path))
    return state;
  const auto text = read_file(log_path);
  auto log = parse_event_log(text);
  if (log.gap_after)
    throw InvalidInput("event log " + log_path + " skips sequence numbers after " + std::to_string(*log.gap_after));
  if (log.partial_tail) {
    spdlog::warn("cutting torn final record from {}", log_path);
    std::filesystem::resize_file(log_path, log.complete_bytes);
  }
  for (const auto& rec : log.records)
    if (rec.at("seq").get<std::uint64_t>() >= state.next_seq)
      state.apply(rec, rules);
  return state;
}

std::vector<Url> parse_seed_list(std::string_view text, std::vector<std::string>* rejected) {
  std::vector<Url> out;
  bool first = true;
  for (const auto& raw : split(text, '\n')) {
    auto line = trim(raw);
    if (line.empty() || line.starts_with("#"))
      continue;
    auto cell = trim(line.substr(0, line.find(',')));
    if (cell.size() >= 2 && cell.front() == '"' && cell.back() == '"')
      cell = cell.substr(1, cell.size() - 2);
    const bool header = first && to_lower_ascii(cell) == "url";
    first = false;
    if (header)
      continue;
    if (auto u = try_normalize_url(cell))
      out.push_back(std::move(*u));
    else if (rejected)
      rejected->push_back(line);
  }
  return out;
}

} // namespace filtercrawl
