#include "filtercrawl/dns_wire.hpp"

#include "filtercrawl/error.hpp"

namespace filtercrawl::dns {

namespace {

void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  put16(out, static_cast<std::uint16_t>(v >> 16));
  put16(out, static_cast<std::uint16_t>(v & 0xFFFF));
}

void put_name(std::vector<std::uint8_t>& out, const std::string& name) {
  std::size_t start = 0;
  while (start < name.size()) {
    auto dot = name.find('.', start);
    if (dot == std::string::npos)
      dot = name.size();
    const auto len = dot - start;
    if (len == 0 || len > 63)
      throw InvalidInput("bad label in '" + name + "'");
    out.push_back(static_cast<std::uint8_t>(len));
    out.insert(out.end(), name.begin() + static_cast<long>(start), name.begin() + static_cast<long>(dot));
    start = dot + 1;
  }
  out.push_back(0);
}

class Reader {
public:
  explicit Reader(std::span<const std::uint8_t> wire) : wire_(wire) {}

  std::uint8_t u8() {
    need(1);
    return wire_[pos_++];
  }
  std::uint16_t u16() {
    need(2);
    auto v = static_cast<std::uint16_t>((wire_[pos_] << 8) | wire_[pos_ + 1]);
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t hi = u16();
    return (hi << 16) | u16();
  }
  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }

  // Reads a possibly-compressed name starting at the cursor.
  std::string name() {
    std::string out;
    std::size_t p = pos_;
    bool jumped = false;
    int hops = 0;
    while (true) {
      if (p >= wire_.size())
        throw InvalidInput("truncated DNS name");
      std::uint8_t len = wire_[p];
      if ((len & 0xC0) == 0xC0) {
        if (p + 1 >= wire_.size())
          throw InvalidInput("truncated compression pointer");
        std::size_t target = static_cast<std::size_t>(((len & 0x3F) << 8) | wire_[p + 1]);
        if (!jumped)
          pos_ = p + 2;
        jumped = true;
        if (++hops > 64 || target >= wire_.size())
          throw InvalidInput("bad compression pointer");
        p = target;
        continue;
      }
      if (len & 0xC0)
        throw InvalidInput("unsupported label type");
      if (len == 0) {
        if (!jumped)
          pos_ = p + 1;
        break;
      }
      if (p + 1 + len > wire_.size())
        throw InvalidInput("truncated label");
      if (!out.empty())
        out.push_back('.');
      for (std::size_t i = 0; i < len; ++i) {
        char c = static_cast<char>(wire_[p + 1 + i]);
        out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
      }
      if (out.size() > 255)
        throw InvalidInput("DNS name too long");
      p += 1 + len;
    }
    return out;
  }

private:
  void need(std::size_t n) const {
    if (pos_ + n > wire_.size())
      throw InvalidInput("truncated DNS message");
  }

  std::span<const std::uint8_t> wire_;
  std::size_t pos_ = 0;
};

} // namespace

std::vector<std::uint8_t> encode_query(const Query& q) {
  std::vector<std::uint8_t> out;
  out.reserve(32 + q.qname.size());
  put16(out, q.id);
  put16(out, q.recursion_desired ? 0x0100 : 0x0000);
  put16(out, 1);
  put16(out, 0);
  put16(out, 0);
  put16(out, 0);
  put_name(out, q.qname);
  put16(out, q.qtype);
  put16(out, q.qclass);
  return out;
}

std::vector<std::uint8_t> encode_response(const Query& q, Rcode rcode, std::span<const Ipv4Address> addresses,
                                          bool truncated) {
  std::vector<std::uint8_t> out;
  std::uint16_t flags = 0x8000 | 0x0080; // QR, RA
  if (q.recursion_desired)
    flags |= 0x0100;
  if (truncated)
    flags |= 0x0200;
  flags |= static_cast<std::uint16_t>(rcode);
  const auto answers = truncated ? std::span<const Ipv4Address>{} : addresses;
  put16(out, q.id);
  put16(out, flags);
  put16(out, 1);
  put16(out, static_cast<std::uint16_t>(answers.size()));
  put16(out, 0);
  put16(out, 0);
  put_name(out, q.qname);
  put16(out, q.qtype);
  put16(out, q.qclass);
  for (const auto& a : answers) {
    put16(out, 0xC00C); // pointer to the question name
    put16(out, kTypeA);
    put16(out, kClassIn);
    put32(out, 60);
    put16(out, 4);
    put32(out, a.value);
  }
  return out;
}

Query decode_query(std::span<const std::uint8_t> wire) {
  Reader r(wire);
  Query q;
  q.id = r.u16();
  const auto flags = r.u16();
  if (flags & 0x8000)
    throw InvalidInput("message is a response");
  q.recursion_desired = (flags & 0x0100) != 0;
  if (r.u16() != 1)
    throw InvalidInput("query must carry exactly one question");
  r.skip(6);
  q.qname = r.name();
  q.qtype = r.u16();
  q.qclass = r.u16();
  return q;
}

Response decode_response(std::span<const std::uint8_t> wire) {
  Reader r(wire);
  Response resp;
  resp.id = r.u16();
  const auto flags = r.u16();
  if (!(flags & 0x8000))
    throw InvalidInput("message is not a response");
  resp.authoritative = (flags & 0x0400) != 0;
  resp.truncated = (flags & 0x0200) != 0;
  resp.rcode = static_cast<Rcode>(flags & 0x000F);
  const auto qdcount = r.u16();
  const auto ancount = r.u16();
  r.u16();
  r.u16();
  for (std::uint16_t i = 0; i < qdcount; ++i) {
    auto name = r.name();
    auto type = r.u16();
    r.u16();
    if (i == 0) {
      resp.qname = std::move(name);
      resp.qtype = type;
    }
  }
  if (resp.truncated)
    return resp;
  for (std::uint16_t i = 0; i < ancount; ++i) {
    r.name();
    const auto type = r.u16();
    const auto cls = r.u16();
    r.u32();
    const auto rdlen = r.u16();
    if (type == kTypeA && cls == kClassIn) {
      if (rdlen != 4)
        throw InvalidInput("A record with bad length");
      resp.addresses.push_back(Ipv4Address{r.u32()});
    } else {
      r.skip(rdlen);
    }
  }
  return resp;
}

} // namespace filtercrawl::dns
