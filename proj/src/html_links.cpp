#include "filtercrawl/html_links.hpp"

#include <cctype>
#include <optional>
#include <set>
#include <string>

#include "filtercrawl/util.hpp"

namespace filtercrawl {

namespace {

bool looks_binary(std::string_view body) {
  return body.substr(0, 1024).find('\0') != std::string_view::npos;
}

bool iequals_prefix(std::string_view text, std::size_t pos, std::string_view word) {
  if (pos + word.size() > text.size())
    return false;
  for (std::size_t i = 0; i < word.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(text[pos + i])) != word[i])
      return false;
  return true;
}

std::string decode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '&') {
      out.push_back(s[i]);
      continue;
    }
    auto semi = s.find(';', i);
    if (semi == std::string_view::npos || semi - i > 10) {
      out.push_back('&');
      continue;
    }
    auto ent = s.substr(i + 1, semi - i - 1);
    std::optional<char> ch;
    if (ent == "amp")
      ch = '&';
    else if (ent == "lt")
      ch = '<';
    else if (ent == "gt")
      ch = '>';
    else if (ent == "quot")
      ch = '"';
    else if (ent == "apos")
      ch = '\'';
    else if (!ent.empty() && ent[0] == '#') {
      long v = -1;
      try {
        v = (ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X')) ? std::stol(std::string(ent.substr(2)), nullptr, 16)
                                                                  : std::stol(std::string(ent.substr(1)), nullptr, 10);
      } catch (...) {
      }
      if (v > 0 && v < 128)
        ch = static_cast<char>(v);
    }
    if (ch) {
      out.push_back(*ch);
      i = semi;
    } else {
      out.push_back('&');
    }
  }
  return out;
}

struct Tag {
  std::string name; // lowercase
  std::optional<std::string> href;
  std::size_t end = 0; // index just past '>'
};

// Parses the tag starting at body[pos] == '<'. Returns nullopt for non-element markup.
std::optional<Tag> parse_tag(std::string_view body, std::size_t pos) {
  std::size_t i = pos + 1;
  if (i >= body.size() || !std::isalpha(static_cast<unsigned char>(body[i])))
    return std::nullopt;
  Tag tag;
  while (i < body.size() && (std::isalnum(static_cast<unsigned char>(body[i])) || body[i] == '-'))
    tag.name.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(body[i++]))));
  while (i < body.size()) {
    while (i < body.size() && (std::isspace(static_cast<unsigned char>(body[i])) || body[i] == '/'))
      ++i;
    if (i >= body.size())
      break;
    if (body[i] == '>') {
      tag.end = i + 1;
      return tag;
    }
    std::string attr;
    while (i < body.size() && !std::isspace(static_cast<unsigned char>(body[i])) && body[i] != '=' &&
           body[i] != '>' && body[i] != '/')
      attr.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(body[i++]))));
    while (i < body.size() && std::isspace(static_cast<unsigned char>(body[i])))
      ++i;
    std::string value;
    if (i < body.size() && body[i] == '=') {
      ++i;
      while (i < body.size() && std::isspace(static_cast<unsigned char>(body[i])))
        ++i;
      if (i < body.size() && (body[i] == '"' || body[i] == '\'')) {
        const char q = body[i++];
        auto close = body.find(q, i);
        if (close == std::string_view::npos)
          return std::nullopt;
        value = std::string(body.substr(i, close - i));
        i = close + 1;
      } else {
        while (i < body.size() && !std::isspace(static_cast<unsigned char>(body[i])) && body[i] != '>')
          value.push_back(body[i++]);
      }
    }
    if (attr == "href" && !tag.href)
      tag.href = decode_entities(value);
    if (attr.empty())
      ++i;
  }
  return std::nullopt;
}

std::size_t skip_raw_text(std::string_view body, std::size_t from, std::string_view element) {
  const std::string close = "</" + std::string(element);
  for (auto p = body.find("</", from); p != std::string_view::npos; p = body.find("</", p + 2))
    if (iequals_prefix(body, p, close))
      return p;
  return body.size();
}

} // namespace

std::vector<Url> extract_links(std::string_view body, const Url& page_url) {
  std::vector<Url> out;
  if (looks_binary(body))
    return out;
  Url base = page_url;
  std::set<std::string> seen;
  std::size_t i = 0;
  while ((i = body.find('<', i)) != std::string_view::npos) {
    if (body.substr(i, 4) == "<!--") {
      auto end = body.find("-->", i + 4);
      i = end == std::string_view::npos ? body.size() : end + 3;
      continue;
    }
    auto tag = parse_tag(body, i);
    if (!tag) {
      ++i;
      continue;
    }
    i = tag->end;
    if (tag->name == "script" || tag->name == "style") {
      i = skip_raw_text(body, i, tag->name);
      continue;
    }
    if (!tag->href)
      continue;
    if (tag->name == "base") {
      if (auto b = try_normalize_url(*tag->href, &page_url))
        base = *b;
      continue;
    }
    if (tag->name != "a" && tag->name != "area")
      continue;
    if (auto u = try_normalize_url(*tag->href, &base); u && seen.insert(u->str()).second)
      out.push_back(std::move(*u));
  }
  return out;
}

} // namespace filtercrawl
