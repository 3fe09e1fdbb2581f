#pragma once

// Minimal DNS message codec: A-record queries and responses (RFC 1035).

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "filtercrawl/domain.hpp"

namespace filtercrawl::dns {

inline constexpr std::uint16_t kTypeA = 1;
inline constexpr std::uint16_t kClassIn = 1;

enum class Rcode : std::uint8_t { NoError = 0, FormErr = 1, ServFail = 2, NxDomain = 3, NotImp = 4, Refused = 5 };

struct Query {
  std::uint16_t id = 0;
  bool recursion_desired = true;
  std::string qname; // lowercase, no trailing dot
  std::uint16_t qtype = kTypeA;
  std::uint16_t qclass = kClassIn;
};

struct Response {
  std::uint16_t id = 0;
  bool truncated = false;
  bool authoritative = false;
  Rcode rcode = Rcode::NoError;
  std::string qname;
  std::uint16_t qtype = 0;
  std::vector<Ipv4Address> addresses; // A records from the answer section, in order
};

std::vector<std::uint8_t> encode_query(const Query& q);
std::vector<std::uint8_t> encode_response(const Query& q, Rcode rcode, std::span<const Ipv4Address> addresses,
                                          bool truncated = false);

/// Throws InvalidInput on malformed input.
Query decode_query(std::span<const std::uint8_t> wire);
Response decode_response(std::span<const std::uint8_t> wire);

} // namespace filtercrawl::dns
