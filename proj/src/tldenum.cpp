#include "filtercrawl/tldenum.hpp"

#include <set>

#include "filtercrawl/error.hpp"
#include "filtercrawl/util.hpp"

namespace filtercrawl {

namespace {

std::string join(std::span<const std::string> labels) {
  std::string out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i)
      out.push_back('.');
    out += labels[i];
  }
  return out;
}

} // namespace

std::string SuffixRule::text() const {
  return (is_exception ? "!" : is_wildcard ? "*." : "") + join(labels);
}

SuffixRuleSet parse_psl(std::string_view text, const PslOptions& options) {
  SuffixRuleSet set;
  bool in_private = false;
  std::size_t line_no = 0;
  for (const auto& raw_line : split(text, '\n')) {
    ++line_no;
    auto line = trim(raw_line);
    if (line.starts_with("//")) {
      if (line.find("===BEGIN PRIVATE DOMAINS===") != std::string::npos)
        in_private = true;
      else if (line.find("===END PRIVATE DOMAINS===") != std::string::npos)
        in_private = false;
      else if (auto p = line.find("VERSION:"); p != std::string::npos && !set.source_date_)
        set.source_date_ = trim(line.substr(p + 8));
      continue;
    }
    if (line.empty())
      continue;
    line = line.substr(0, line.find_first_of(" \t"));
    if (in_private && !options.include_private)
      continue;

    SuffixRule rule;
    rule.is_private = in_private;
    std::string_view body = line;
    if (body.starts_with("!")) {
      rule.is_exception = true;
      body.remove_prefix(1);
    } else if (body.starts_with("*.")) {
      rule.is_wildcard = true;
      body.remove_prefix(2);
    } else if (body == "*") {
      continue; // the implicit default rule
    }
    try {
      rule.labels = DomainName::parse(body).labels();
    } catch (const InvalidInput& e) {
      throw InvalidInput("line " + std::to_string(line_no) + ": " + e.what());
    }
    const auto key = join(rule.labels);
    auto& flags = set.index_[key];
    flags |= rule.is_exception ? SuffixRuleSet::kException
                               : rule.is_wildcard ? SuffixRuleSet::kWildcard : SuffixRuleSet::kExact;
    set.rules_.push_back(std::move(rule));
  }
  if (set.rules_.empty())
    throw InvalidInput("public suffix list contains no rules");
  for (const auto& r : set.rules_) {
    if (!r.is_exception)
      continue;
    const auto parent = join(std::span<const std::string>(r.labels).subspan(1));
    auto it = set.index_.find(parent);
    if (r.labels.size() < 2 || it == set.index_.end() || !(it->second & SuffixRuleSet::kWildcard))
      throw InvalidInput("exception rule " + r.text() + " has no matching wildcard rule");
  }
  return set;
}

std::size_t SuffixRuleSet::public_suffix_length(const DomainName& domain) const {
  const auto& labels = domain.labels();
  const std::size_t n = labels.size();
  auto flags_at = [&](std::size_t start) -> unsigned {
    auto it = index_.find(join(std::span<const std::string>(labels).subspan(start)));
    return it == index_.end() ? 0u : it->second;
  };
  for (std::size_t i = 0; i < n; ++i)
    if (flags_at(i) & kException)
      return n - i - 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (flags_at(i) & kExact)
      return n - i;
    if (i + 1 < n && (flags_at(i + 1) & kWildcard))
      return n - i;
  }
  return 1;
}

DomainName DomainSplit::rejoin() const {
  std::vector<std::string> all = subdomain;
  all.push_back(head);
  all.insert(all.end(), suffix.begin(), suffix.end());
  return DomainName::from_labels(all);
}

DomainSplit split_domain(const DomainName& domain, const SuffixRuleSet& rules) {
  const auto& labels = domain.labels();
  const auto suffix_len = rules.public_suffix_length(domain);
  if (labels.size() <= suffix_len)
    throw InvalidInput("'" + domain.str() + "' is a public suffix");
  DomainSplit s;
  const auto head_at = labels.size() - suffix_len - 1;
  s.subdomain.assign(labels.begin(), labels.begin() + static_cast<long>(head_at));
  s.head = labels[head_at];
  s.suffix.assign(labels.begin() + static_cast<long>(head_at) + 1, labels.end());
  s.registrable = domain.suffix(suffix_len + 1);
  return s;
}

std::optional<DomainName> registrable_domain(const DomainName& domain, const SuffixRuleSet& rules) noexcept {
  try {
    return split_domain(domain, rules).registrable;
  } catch (...) {
    return std::nullopt;
  }
}

std::vector<Candidate> enumerate_candidates(const DomainName& domain, const SuffixRuleSet& rules) {
  const auto split = split_domain(domain, rules);
  std::vector<Candidate> out;
  std::set<std::string> seen{domain.str()};
  auto emit = [&](std::vector<std::string> labels, bool synthetic) {
    auto name = DomainName::try_parse(join(labels));
    if (name && seen.insert(name->str()).second)
      out.push_back({std::move(*name), synthetic});
  };
  for (const auto& rule : rules.rules()) {
    if (rule.is_exception)
      continue;
    std::vector<std::string> suffix;
    if (rule.is_wildcard)
      suffix.emplace_back(kWildcardPlaceholder);
    suffix.insert(suffix.end(), rule.labels.begin(), rule.labels.end());

    std::vector<std::string> base{split.head};
    base.insert(base.end(), suffix.begin(), suffix.end());
    emit(base, rule.is_wildcard);
    if (!split.subdomain.empty()) {
      std::vector<std::string> full = split.subdomain;
      full.insert(full.end(), base.begin(), base.end());
      emit(full, rule.is_wildcard);
    }
  }
  return out;
}

std::vector<EnumerationResult> enumerate_filtered(const DomainName& domain, const SuffixRuleSet& rules,
                                                  const ResolverProfile& profile, const CheckConfig& config,
                                                  const EnumerationOptions& options) {
  std::vector<Candidate> probe;
  for (auto& c : enumerate_candidates(domain, rules))
    if (!c.synthetic || options.probe_synthetic)
      probe.push_back(std::move(c));
  std::vector<DomainName> names;
  names.reserve(probe.size());
  for (const auto& c : probe)
    names.push_back(c.name);

  RateLimiter limiter(options.probes_per_second);
  auto verdicts = check_batch(names, profile, config, std::max(1, options.parallelism), &limiter);

  std::vector<EnumerationResult> out;
  out.reserve(probe.size());
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const bool exists = verdicts[i].evidence.control.answered();
    out.push_back({std::move(probe[i]), std::move(verdicts[i]), exists});
  }
  return out;
}

std::string enumeration_csv(std::span<const EnumerationResult> results) {
  std::string out = "candidate,status,reason,host_exists\n";
  for (const auto& r : results)
    out += r.candidate.name.str() + "," + to_string(r.verdict.status) + "," + to_string(r.verdict.reason) + "," +
           (r.host_exists ? "true" : "false") + "\n";
  return out;
}

} // namespace filtercrawl
