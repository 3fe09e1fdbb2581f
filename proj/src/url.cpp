#include "filtercrawl/url.hpp"

#include <cctype>
#include <charconv>
#include <vector>

#include "filtercrawl/error.hpp"
#include "filtercrawl/util.hpp"

namespace filtercrawl {

namespace {

bool is_unreserved(unsigned char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '.' ||
         c == '_' || c == '~';
}

// Characters left as-is in paths and queries (RFC 3986 pchar + '/' + '?').
bool is_allowed_literal(unsigned char c) {
  if (is_unreserved(c))
    return true;
  switch (c) {
  case '!': case '$': case '&': case '\'': case '(': case ')': case '*': case '+': case ',': case ';': case '=':
  case ':': case '@': case '/': case '?':
    return true;
  default:
    return false;
  }
}

int hex_value(char c) {
  if (c >= '0' && c <= '9')
    return c - '0';
  if (c >= 'a' && c <= 'f')
    return c - 'a' + 10;
  if (c >= 'A' && c <= 'F')
    return c - 'A' + 10;
  return -1;
}

// Decodes escapes of unreserved characters, upper-cases remaining escapes and
// escapes anything not allowed literally.
std::string canonical_escapes(std::string_view s) {
  static constexpr char hex[] = "0123456789ABCDEF";
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto c = static_cast<unsigned char>(s[i]);
    if (c == '%' && i + 2 < s.size() && hex_value(s[i + 1]) >= 0 && hex_value(s[i + 2]) >= 0) {
      auto v = static_cast<unsigned char>(hex_value(s[i + 1]) * 16 + hex_value(s[i + 2]));
      if (is_unreserved(v)) {
        out.push_back(static_cast<char>(v));
      } else {
        out.push_back('%');
        out.push_back(hex[v >> 4]);
        out.push_back(hex[v & 0xF]);
      }
      i += 2;
    } else if (is_allowed_literal(c)) {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(hex[c >> 4]);
      out.push_back(hex[c & 0xF]);
    }
  }
  return out;
}

// RFC 3986 section 5.2.4.
std::string remove_dot_segments(std::string_view path) {
  std::vector<std::string_view> segments;
  std::size_t i = 0;
  const bool absolute = !path.empty() && path.front() == '/';
  if (absolute)
    i = 1;
  bool trailing_slash = false;
  while (i <= path.size()) {
    auto slash = path.find('/', i);
    auto seg = path.substr(i, slash == std::string_view::npos ? std::string_view::npos : slash - i);
    const bool last = slash == std::string_view::npos;
    if (seg == ".") {
      trailing_slash = last;
    } else if (seg == "..") {
      if (!segments.empty())
        segments.pop_back();
      trailing_slash = last;
    } else {
      segments.push_back(seg);
      trailing_slash = false;
    }
    if (last)
      break;
    i = slash + 1;
  }
  std::string out = "/";
  for (std::size_t k = 0; k < segments.size(); ++k) {
    if (k)
      out.push_back('/');
    out += segments[k];
  }
  if (trailing_slash && out.back() != '/')
    out.push_back('/');
  return out;
}

struct RawParts {
  std::optional<std::string> scheme;
  std::optional<std::string> authority;
  std::string path;
  std::optional<std::string> query;
};

RawParts split_reference(std::string_view s) {
  RawParts p;
  if (auto hash = s.find('#'); hash != std::string_view::npos)
    s = s.substr(0, hash);
  // scheme = ALPHA *( ALPHA / DIGIT / "+" / "-" / "." ) ":"
  auto colon = s.find(':');
  if (colon != std::string_view::npos && colon > 0) {
    bool ok = std::isalpha(static_cast<unsigned char>(s[0])) != 0;
    for (std::size_t i = 1; i < colon && ok; ++i) {
      char c = s[i];
      ok = std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.';
    }
    if (ok && s.substr(0, colon).find_first_of("/?") == std::string_view::npos) {
      p.scheme = to_lower_ascii(s.substr(0, colon));
      s = s.substr(colon + 1);
    }
  }
  if (s.substr(0, 2) == "//") {
    s = s.substr(2);
    auto end = s.find_first_of("/?");
    p.authority = std::string(s.substr(0, end));
    s = end == std::string_view::npos ? std::string_view{} : s.substr(end);
  }
  auto q = s.find('?');
  if (q != std::string_view::npos) {
    p.query = std::string(s.substr(q + 1));
    s = s.substr(0, q);
  }
  p.path = std::string(s);
  return p;
}

void parse_authority(const std::string& authority, Url& url) {
  std::string_view a = authority;
  if (auto at = a.rfind('@'); at != std::string_view::npos)
    a = a.substr(at + 1); // userinfo is dropped
  if (!a.empty() && a.front() == '[')
    throw InvalidInput("IPv6 literal hosts are not supported");
  std::string_view host = a;
  url.port = url.default_port();
  if (auto colon = a.rfind(':'); colon != std::string_view::npos) {
    host = a.substr(0, colon);
    auto port_text = a.substr(colon + 1);
    if (!port_text.empty()) {
      unsigned port = 0;
      auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
      if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || port == 0 || port > 65535)
        throw InvalidInput("bad port in '" + authority + "'");
      url.port = static_cast<std::uint16_t>(port);
    }
  }
  if (host.empty())
    throw InvalidInput("empty host");
  if (Ipv4Address::try_parse(host))
    throw InvalidInput("IP-literal hosts are not crawled");
  url.host = DomainName::parse(host);
}

std::string merge_paths(const Url& base, const std::string& ref_path) {
  auto slash = base.path.rfind('/');
  return base.path.substr(0, slash + 1) + ref_path;
}

} // namespace

std::string Url::str() const {
  std::string out = scheme + "://" + host.str();
  if (port != default_port())
    out += ":" + std::to_string(port);
  out += path;
  if (!query.empty())
    out += "?" + query;
  return out;
}

Url normalize_url(std::string_view raw_in, const Url* base) {
  std::string raw = trim(raw_in);
  std::erase_if(raw, [](char c) { return c == '\t' || c == '\n' || c == '\r'; });
  if (raw.empty() && !base)
    throw InvalidInput("empty URL");
  for (char& c : raw)
    if (c == '\\')
      c = '/';

  auto parts = split_reference(raw);
  Url url;
  if (parts.scheme) {
    if (*parts.scheme != "http" && *parts.scheme != "https")
      throw InvalidInput("unsupported scheme '" + *parts.scheme + "'");
    url.scheme = *parts.scheme;
    if (!parts.authority)
      throw InvalidInput("URL without host: '" + raw + "'");
    parse_authority(*parts.authority, url);
    url.path = remove_dot_segments(parts.path);
    url.query = parts.query.value_or("");
  } else {
    if (!base)
      throw InvalidInput("relative URL without base: '" + raw + "'");
    url.scheme = base->scheme;
    if (parts.authority) {
      parse_authority(*parts.authority, url);
      url.path = remove_dot_segments(parts.path);
      url.query = parts.query.value_or("");
    } else {
      url.host = base->host;
      url.port = base->port;
      if (parts.path.empty()) {
        url.path = base->path;
        url.query = parts.query ? *parts.query : base->query;
      } else {
        url.path = remove_dot_segments(parts.path.front() == '/' ? parts.path : merge_paths(*base, parts.path));
        url.query = parts.query.value_or("");
      }
    }
  }
  url.path = canonical_escapes(url.path);
  url.query = canonical_escapes(url.query);
  if (url.path.empty())
    url.path = "/";
  return url;
}

std::optional<Url> try_normalize_url(std::string_view raw, const Url* base) noexcept {
  try {
    return normalize_url(raw, base);
  } catch (...) {
    return std::nullopt;
  }
}

} // namespace filtercrawl
