#pragma once

#include <string_view>
#include <vector>

#include "filtercrawl/url.hpp"

namespace filtercrawl {

/// Targets of <a href> and <area href> in document order, normalized against
/// `base` (or a <base href> in the document), de-duplicated by first occurrence.
/// Links inside comments, <script> and <style> are ignored. Binary bodies
/// yield an empty list.
std::vector<Url> extract_links(std::string_view page_body, const Url& base);

} // namespace filtercrawl
