#pragma once

// Per-domain categories and per-address countries, behind pluggable sources.

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "filtercrawl/domain.hpp"
#include "filtercrawl/filtercheck.hpp"
#include "filtercrawl/util.hpp"

namespace filtercrawl {

struct CategoryLabel {
  std::string name;
  std::optional<double> confidence;

  friend bool operator==(const CategoryLabel&, const CategoryLabel&) = default;
};

class CategoryProvider {
public:
  virtual ~CategoryProvider() = default;
  /// May throw on provider failure; categorize() turns that into an empty list.
  virtual std::vector<CategoryLabel> lookup(const DomainName& domain) = 0;
};

/// CSV rows "domain,category;category". Lines starting with '#' are comments.
class LocalCategoryTable : public CategoryProvider {
public:
  static LocalCategoryTable parse(std::string_view text);
  static LocalCategoryTable load(const std::string& path);
  std::vector<CategoryLabel> lookup(const DomainName& domain) override;
  std::size_t size() const { return table_.size(); }

private:
  std::map<DomainName, std::vector<CategoryLabel>> table_;
};

/// GET {base_url}/categories/{domain} -> {"categories":[{"name":..,"confidence":..}]}.
/// The key is sent as a bearer token when set.
class RemoteCategoryClient : public CategoryProvider {
public:
  RemoteCategoryClient(std::string base_url, std::string api_key, Seconds timeout = Seconds(10));
  std::vector<CategoryLabel> lookup(const DomainName& domain) override;

private:
  std::string base_url_;
  std::string api_key_;
  Seconds timeout_;
};

/// Memoizes one provider call per domain for the life of the object; failures
/// are logged and cached as no categories.
class CategoryCache {
public:
  explicit CategoryCache(std::shared_ptr<CategoryProvider> provider) : provider_(std::move(provider)) {}
  std::vector<CategoryLabel> categorize(const DomainName& domain);
  std::size_t provider_calls() const;

private:
  std::shared_ptr<CategoryProvider> provider_;
  mutable std::mutex mu_;
  std::map<DomainName, std::vector<CategoryLabel>> cache_;
  std::size_t calls_ = 0;
};

/// Label with the highest confidence (missing confidence ranks lowest, then
/// list order); nullopt for no labels.
std::optional<CategoryLabel> primary_category(const std::vector<CategoryLabel>& labels);

struct GeoRecord {
  Ipv4Address address;
  std::optional<std::string> country; // nullopt: unknown
};

/// Country ranges from CSV rows "start_ip,end_ip,country". Overlaps resolve to
/// the narrowest covering range.
class GeoDatabase {
public:
  static GeoDatabase parse(std::string_view text);
  /// Throws IoError when the file cannot be read.
  static GeoDatabase load(const std::string& path);
  GeoRecord geolocate(Ipv4Address address) const;
  std::size_t range_count() const { return ranges_.size(); }

private:
  struct Range {
    std::uint32_t start, end;
    std::string country;
  };
  std::vector<Range> ranges_; // disjoint after flattening, sorted by start
};

/// True iff the control resolver answers for the domain.
bool host_exists(const DomainName& domain, const ResolverEndpoint& control, Seconds timeout,
                 DnsOutcome* evidence = nullptr);

} // namespace filtercrawl
