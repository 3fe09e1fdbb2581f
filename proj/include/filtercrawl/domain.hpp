#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace filtercrawl {

/// A DNS name stored as lowercase ASCII labels. Non-ASCII input labels are
/// converted to their punycode ("xn--") form on parse.
class DomainName {
public:
  DomainName() = default;

  /// Throws InvalidInput on empty labels, over-long labels/names or bad characters.
  /// A single trailing dot (fully qualified form) is accepted and dropped.
  static DomainName parse(std::string_view text);
  static std::optional<DomainName> try_parse(std::string_view text) noexcept;
  static DomainName from_labels(std::span<const std::string> labels);

  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t label_count() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }

  /// Dotted presentation form.
  const std::string& str() const { return text_; }

  /// The last `n` labels as a new name. Requires n <= label_count().
  DomainName suffix(std::size_t n) const;

  bool is_subdomain_of(const DomainName& other) const;

  friend bool operator==(const DomainName& a, const DomainName& b) { return a.text_ == b.text_; }
  friend auto operator<=>(const DomainName& a, const DomainName& b) { return a.text_ <=> b.text_; }

private:
  std::vector<std::string> labels_;
  std::string text_;
};

/// IPv4 address in host byte order.
struct Ipv4Address {
  std::uint32_t value = 0;

  static Ipv4Address parse(std::string_view text);
  static std::optional<Ipv4Address> try_parse(std::string_view text) noexcept;
  static constexpr Ipv4Address from_octets(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d) {
    return Ipv4Address{(std::uint32_t{a} << 24) | (std::uint32_t{b} << 16) | (std::uint32_t{c} << 8) | d};
  }

  std::string str() const;

  friend auto operator<=>(const Ipv4Address&, const Ipv4Address&) = default;
};

/// RFC 3492 encoding of one label. ASCII-only labels are returned unchanged.
std::string punycode_label(std::string_view utf8_label);

std::string to_lower_ascii(std::string_view s);

} // namespace filtercrawl

template <>
struct std::hash<filtercrawl::DomainName> {
  std::size_t operator()(const filtercrawl::DomainName& d) const noexcept { return std::hash<std::string>{}(d.str()); }
};

template <>
struct std::hash<filtercrawl::Ipv4Address> {
  std::size_t operator()(const filtercrawl::Ipv4Address& a) const noexcept { return std::hash<std::uint32_t>{}(a.value); }
};
