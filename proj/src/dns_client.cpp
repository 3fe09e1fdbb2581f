#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <random>

#include "filtercrawl/dns_wire.hpp"
#include "filtercrawl/error.hpp"
#include "filtercrawl/filtercheck.hpp"

namespace filtercrawl {

namespace {

using SteadyClock = std::chrono::steady_clock;

class Fd {
public:
  explicit Fd(int fd) : fd_(fd) {}
  ~Fd() {
    if (fd_ >= 0)
      ::close(fd_);
  }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  int get() const { return fd_; }

private:
  int fd_;
};

sockaddr_in to_sockaddr(const ResolverEndpoint& ep) {
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(ep.port);
  sa.sin_addr.s_addr = htonl(ep.address.value);
  return sa;
}

int remaining_ms(SteadyClock::time_point deadline) {
  auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - SteadyClock::now()).count();
  return left > 0 ? static_cast<int>(left) : 0;
}

std::uint16_t next_query_id() {
  thread_local std::mt19937 rng{std::random_device{}()};
  return static_cast<std::uint16_t>(rng() & 0xFFFF);
}

enum class IoStatus { ok, timeout, error };

IoStatus wait_for(int fd, short events, SteadyClock::time_point deadline) {
  while (true) {
    pollfd p{fd, events, 0};
    int ms = remaining_ms(deadline);
    if (ms == 0)
      return IoStatus::timeout;
    int rc = ::poll(&p, 1, ms);
    if (rc < 0 && errno == EINTR)
      continue;
    if (rc < 0)
      return IoStatus::error;
    if (rc == 0)
      return IoStatus::timeout;
    return IoStatus::ok;
  }
}

IoStatus read_exact(int fd, std::uint8_t* buf, std::size_t n, SteadyClock::time_point deadline) {
  std::size_t got = 0;
  while (got < n) {
    auto st = wait_for(fd, POLLIN, deadline);
    if (st != IoStatus::ok)
      return st;
    auto r = ::recv(fd, buf + got, n - got, 0);
    if (r < 0 && (errno == EAGAIN || errno == EINTR))
      continue;
    if (r <= 0)
      return IoStatus::error;
    got += static_cast<std::size_t>(r);
  }
  return IoStatus::ok;
}

struct Exchange {
  IoStatus status = IoStatus::error;
  std::optional<dns::Response> response;
  std::string detail;
};

bool matches(const dns::Response& resp, const dns::Query& q) {
  return resp.id == q.id && resp.qname == q.qname && resp.qtype == q.qtype;
}

Exchange exchange_tcp(const ResolverEndpoint& ep, const dns::Query& q, SteadyClock::time_point deadline) {
  Exchange ex;
  Fd fd(::socket(AF_INET, SOCK_STREAM | SOCK_NONBLOCK | SOCK_CLOEXEC, 0));
  if (fd.get() < 0) {
    ex.detail = std::strerror(errno);
    return ex;
  }
  auto sa = to_sockaddr(ep);
  if (::connect(fd.get(), reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) < 0 && errno != EINPROGRESS) {
    ex.detail = std::strerror(errno);
    return ex;
  }
  if (auto st = wait_for(fd.get(), POLLOUT, deadline); st != IoStatus::ok) {
    ex.status = st;
    ex.detail = "tcp connect";
    return ex;
  }
  int soerr = 0;
  socklen_t len = sizeof(soerr);
  ::getsockopt(fd.get(), SOL_SOCKET, SO_ERROR, &soerr, &len);
  if (soerr != 0) {
    ex.detail = std::strerror(soerr);
    return ex;
  }
  auto wire = dns::encode_query(q);
  std::vector<std::uint8_t> framed{static_cast<std::uint8_t>(wire.size() >> 8), static_cast<std::uint8_t>(wire.size())};
  framed.insert(framed.end(), wire.begin(), wire.end());
  std::size_t sent = 0;
  while (sent < framed.size()) {
    if (auto st = wait_for(fd.get(), POLLOUT, deadline); st != IoStatus::ok) {
      ex.status = st;
      return ex;
    }
    auto w = ::send(fd.get(), framed.data() + sent, framed.size() - sent, MSG_NOSIGNAL);
    if (w < 0 && (errno == EAGAIN || errno == EINTR))
      continue;
    if (w < 0) {
      ex.detail = std::strerror(errno);
      return ex;
    }
    sent += static_cast<std::size_t>(w);
  }
  std::uint8_t hdr[2];
  if (auto st = read_exact(fd.get(), hdr, 2, deadline); st != IoStatus::ok) {
    ex.status = st;
    return ex;
  }
  std::vector<std::uint8_t> msg(static_cast<std::size_t>((hdr[0] << 8) | hdr[1]));
  if (auto st = read_exact(fd.get(), msg.data(), msg.size(), deadline); st != IoStatus::ok) {
    ex.status = st;
    return ex;
  }
  try {
    auto resp = dns::decode_response(msg);
    if (!matches(resp, q)) {
      ex.detail = "mismatched tcp response";
      return ex;
    }
    ex.status = IoStatus::ok;
    ex.response = std::move(resp);
  } catch (const InvalidInput& e) {
    ex.detail = e.what();
  }
  return ex;
}

Exchange exchange_udp(const ResolverEndpoint& ep, const dns::Query& q, SteadyClock::time_point deadline) {
  Exchange ex;
  Fd fd(::socket(AF_INET, SOCK_DGRAM | SOCK_NONBLOCK | SOCK_CLOEXEC, 0));
  if (fd.get() < 0) {
    ex.detail = std::strerror(errno);
    return ex;
  }
  auto sa = to_sockaddr(ep);
  if (::connect(fd.get(), reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) < 0) {
    ex.detail = std::strerror(errno);
    return ex;
  }
  auto wire = dns::encode_query(q);
  if (::send(fd.get(), wire.data(), wire.size(), 0) < 0) {
    ex.detail = std::strerror(errno);
    return ex;
  }
  std::uint8_t buf[4096];
  while (true) {
    auto st = wait_for(fd.get(), POLLIN, deadline);
    if (st != IoStatus::ok) {
      ex.status = st;
      return ex;
    }
    auto r = ::recv(fd.get(), buf, sizeof(buf), 0);
    if (r < 0) {
      if (errno == EAGAIN || errno == EINTR)
        continue;
      ex.detail = std::strerror(errno);
      return ex;
    }
    try {
      auto resp = dns::decode_response(std::span<const std::uint8_t>(buf, static_cast<std::size_t>(r)));
      if (!matches(resp, q))
        continue; // stray datagram; keep waiting for ours
      if (resp.truncated)
        return exchange_tcp(ep, q, deadline);
      ex.status = IoStatus::ok;
      ex.response = std::move(resp);
      return ex;
    } catch (const InvalidInput&) {
      continue;
    }
  }
}

} // namespace

DnsOutcome resolve(const DomainName& domain, const ResolverEndpoint& endpoint, Seconds timeout) {
  DnsOutcome out;
  out.server = endpoint.str();
  const auto started = SteadyClock::now();
  const auto deadline = started + std::chrono::duration_cast<SteadyClock::duration>(timeout);

  dns::Query q;
  q.id = next_query_id();
  q.qname = domain.str();
  auto ex = exchange_udp(endpoint, q, deadline);
  out.latency = std::chrono::duration_cast<std::chrono::milliseconds>(SteadyClock::now() - started);

  if (ex.status == IoStatus::timeout) {
    out.kind = DnsKind::timeout;
    return out;
  }
  if (ex.status == IoStatus::error || !ex.response) {
    out.kind = DnsKind::error;
    out.detail = ex.detail;
    return out;
  }
  const auto& resp = *ex.response;
  out.rcode = static_cast<int>(resp.rcode);
  if (resp.rcode == dns::Rcode::NxDomain) {
    out.kind = DnsKind::nxdomain;
  } else if (resp.rcode == dns::Rcode::NoError && !resp.addresses.empty()) {
    out.kind = DnsKind::answered;
    out.addresses = resp.addresses;
  } else {
    out.kind = DnsKind::error;
    out.detail = resp.rcode == dns::Rcode::NoError ? "no A records" : "rcode " + std::to_string(*out.rcode);
  }
  return out;
}

} // namespace filtercrawl
