#include "filtercrawl/domain.hpp"

#include <charconv>

#include "filtercrawl/error.hpp"

namespace filtercrawl {

namespace {

constexpr std::size_t kMaxLabel = 63;
constexpr std::size_t kMaxName = 253;

bool is_label_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '_';
}

// Decodes UTF-8 into code points. Returns false on malformed sequences.
bool decode_utf8(std::string_view s, std::vector<char32_t>& out) {
  for (std::size_t i = 0; i < s.size();) {
    auto b = static_cast<unsigned char>(s[i]);
    int len = 0;
    char32_t cp = 0;
    if (b < 0x80) {
      cp = b;
      len = 1;
    } else if ((b & 0xE0) == 0xC0) {
      cp = b & 0x1F;
      len = 2;
    } else if ((b & 0xF0) == 0xE0) {
      cp = b & 0x0F;
      len = 3;
    } else if ((b & 0xF8) == 0xF0) {
      cp = b & 0x07;
      len = 4;
    } else {
      return false;
    }
    if (i + len > s.size())
      return false;
    for (int k = 1; k < len; ++k) {
      auto c = static_cast<unsigned char>(s[i + k]);
      if ((c & 0xC0) != 0x80)
        return false;
      cp = (cp << 6) | (c & 0x3F);
    }
    out.push_back(cp);
    i += len;
  }
  return true;
}

char encode_digit(std::uint32_t d) { return static_cast<char>(d < 26 ? 'a' + d : '0' + (d - 26)); }

std::uint32_t adapt(std::uint32_t delta, std::uint32_t numpoints, bool first) {
  constexpr std::uint32_t base = 36, tmin = 1, tmax = 26, skew = 38, damp = 700;
  delta = first ? delta / damp : delta / 2;
  delta += delta / numpoints;
  std::uint32_t k = 0;
  while (delta > ((base - tmin) * tmax) / 2) {
    delta /= base - tmin;
    k += base;
  }
  return k + (((base - tmin + 1) * delta) / (delta + skew));
}

} // namespace

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out)
    if (c >= 'A' && c <= 'Z')
      c = static_cast<char>(c - 'A' + 'a');
  return out;
}

std::string punycode_label(std::string_view utf8_label) {
  std::vector<char32_t> cps;
  if (!decode_utf8(utf8_label, cps))
    throw InvalidInput("invalid UTF-8 in label");
  bool ascii = true;
  for (auto cp : cps)
    ascii = ascii && cp < 0x80;
  if (ascii)
    return std::string(utf8_label);

  constexpr std::uint32_t base = 36, tmin = 1, tmax = 26;
  std::string out;
  for (auto cp : cps)
    if (cp < 0x80)
      out.push_back(static_cast<char>(cp));
  const std::uint32_t basic = static_cast<std::uint32_t>(out.size());
  std::uint32_t handled = basic;
  if (basic > 0)
    out.push_back('-');

  std::uint32_t n = 0x80, delta = 0, bias = 72;
  while (handled < cps.size()) {
    std::uint32_t m = UINT32_MAX;
    for (auto cp : cps)
      if (cp >= n && cp < m)
        m = cp;
    delta += (m - n) * (handled + 1);
    n = m;
    for (auto cp : cps) {
      if (cp < n)
        ++delta;
      if (cp == n) {
        std::uint32_t q = delta;
        for (std::uint32_t k = base;; k += base) {
          std::uint32_t t = k <= bias ? tmin : (k >= bias + tmax ? tmax : k - bias);
          if (q < t)
            break;
          out.push_back(encode_digit(t + (q - t) % (base - t)));
          q = (q - t) / (base - t);
        }
        out.push_back(encode_digit(q));
        bias = adapt(delta, handled + 1, handled == basic);
        delta = 0;
        ++handled;
      }
    }
    ++delta;
    ++n;
  }
  return "xn--" + out;
}

DomainName DomainName::parse(std::string_view text) {
  if (!text.empty() && text.back() == '.')
    text.remove_suffix(1);
  if (text.empty())
    throw InvalidInput("empty domain name");

  DomainName name;
  std::size_t start = 0;
  while (true) {
    auto dot = text.find('.', start);
    auto raw = text.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start);
    if (raw.empty())
      throw InvalidInput("empty label in domain name '" + std::string(text) + "'");
    std::string label = punycode_label(to_lower_ascii(raw));
    if (label.size() > kMaxLabel)
      throw InvalidInput("label longer than 63 characters in '" + std::string(text) + "'");
    for (char c : label)
      if (!is_label_char(c))
        throw InvalidInput("invalid character in domain name '" + std::string(text) + "'");
    name.labels_.push_back(std::move(label));
    if (dot == std::string_view::npos)
      break;
    start = dot + 1;
  }
  for (std::size_t i = 0; i < name.labels_.size(); ++i) {
    if (i)
      name.text_.push_back('.');
    name.text_ += name.labels_[i];
  }
  if (name.text_.size() > kMaxName)
    throw InvalidInput("domain name longer than 253 characters");
  return name;
}

std::optional<DomainName> DomainName::try_parse(std::string_view text) noexcept {
  try {
    return parse(text);
  } catch (...) {
    return std::nullopt;
  }
}

DomainName DomainName::from_labels(std::span<const std::string> labels) {
  std::string joined;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i)
      joined.push_back('.');
    joined += labels[i];
  }
  return parse(joined);
}

DomainName DomainName::suffix(std::size_t n) const {
  return from_labels(std::span<const std::string>(labels_).last(n));
}

bool DomainName::is_subdomain_of(const DomainName& other) const {
  if (other.labels_.size() > labels_.size())
    return false;
  return std::equal(other.labels_.rbegin(), other.labels_.rend(), labels_.rbegin());
}

Ipv4Address Ipv4Address::parse(std::string_view text) {
  if (auto a = try_parse(text))
    return *a;
  throw InvalidInput("invalid IPv4 address '" + std::string(text) + "'");
}

std::optional<Ipv4Address> Ipv4Address::try_parse(std::string_view text) noexcept {
  std::uint32_t value = 0;
  const char* p = text.data();
  const char* end = text.data() + text.size();
  for (int i = 0; i < 4; ++i) {
    if (p == end || *p < '0' || *p > '9')
      return std::nullopt;
    unsigned octet = 0;
    auto [next, ec] = std::from_chars(p, end, octet);
    if (ec != std::errc{} || octet > 255 || next - p > 3)
      return std::nullopt;
    // Leading zeros are ambiguous (octal in some parsers).
    if (next - p > 1 && *p == '0')
      return std::nullopt;
    value = (value << 8) | octet;
    p = next;
    if (i < 3) {
      if (p == end || *p != '.')
        return std::nullopt;
      ++p;
    }
  }
  if (p != end)
    return std::nullopt;
  return Ipv4Address{value};
}

std::string Ipv4Address::str() const {
  return std::to_string(value >> 24) + "." + std::to_string((value >> 16) & 0xFF) + "." +
         std::to_string((value >> 8) & 0xFF) + "." + std::to_string(value & 0xFF);
}

} // namespace filtercrawl
