#pragma once

// Public Suffix List rules, registrable-domain splitting and alternative
// suffix enumeration for filtered domains.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "filtercrawl/domain.hpp"
#include "filtercrawl/filtercheck.hpp"

namespace filtercrawl {

struct SuffixRule {
  std::vector<std::string> labels; // without the "*." / "!" markers
  bool is_wildcard = false;
  bool is_exception = false;
  bool is_private = false;

  std::string text() const; // as written in the list
};

struct PslOptions {
  bool include_private = true;
};

class SuffixRuleSet {
public:
  /// Rules in file order.
  const std::vector<SuffixRule>& rules() const { return rules_; }
  std::size_t size() const { return rules_.size(); }
  const std::optional<std::string>& source_date() const { return source_date_; }

  /// Number of trailing labels of `domain` that form its public suffix
  /// (longest match wins, exceptions beat wildcards, "*" when nothing matches).
  std::size_t public_suffix_length(const DomainName& domain) const;

private:
  friend SuffixRuleSet parse_psl(std::string_view text, const PslOptions& options);

  enum Flags : unsigned { kExact = 1, kWildcard = 2, kException = 4 };
  std::vector<SuffixRule> rules_;
  std::unordered_map<std::string, unsigned> index_; // dotted rule body -> Flags
  std::optional<std::string> source_date_;
};

/// Throws InvalidInput when the text holds no rules or an exception lacks its wildcard.
SuffixRuleSet parse_psl(std::string_view text, const PslOptions& options = {});

struct DomainSplit {
  std::vector<std::string> subdomain; // leading labels, possibly empty
  std::string head;                   // the one label left of the suffix
  std::vector<std::string> suffix;
  DomainName registrable;

  DomainName rejoin() const;
};

/// Throws InvalidInput when the domain is itself a public suffix.
DomainSplit split_domain(const DomainName& domain, const SuffixRuleSet& rules);
std::optional<DomainName> registrable_domain(const DomainName& domain, const SuffixRuleSet& rules) noexcept;

struct Candidate {
  DomainName name;
  bool synthetic = false; // built from a wildcard rule with a placeholder label
};

/// Placeholder label substituted for "*" when enumerating wildcard rules.
inline constexpr std::string_view kWildcardPlaceholder = "wildcard";

/// head+suffix and subdomain+head+suffix for every rule, original excluded,
/// de-duplicated, in rule order.
std::vector<Candidate> enumerate_candidates(const DomainName& domain, const SuffixRuleSet& rules);

struct EnumerationResult {
  Candidate candidate;
  FilterVerdict verdict;
  bool host_exists = false;
};

struct EnumerationOptions {
  bool probe_synthetic = false;
  double probes_per_second = 10.0;
  int parallelism = 4;
};

std::vector<EnumerationResult> enumerate_filtered(const DomainName& domain, const SuffixRuleSet& rules,
                                                  const ResolverProfile& profile, const CheckConfig& config,
                                                  const EnumerationOptions& options = {});

/// CSV with header "candidate,status,reason,host_exists".
std::string enumeration_csv(std::span<const EnumerationResult> results);

} // namespace filtercrawl
