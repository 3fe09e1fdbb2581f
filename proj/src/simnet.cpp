#include "filtercrawl/simnet.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <map>

#include "filtercrawl/error.hpp"
#include "filtercrawl/url.hpp"

namespace filtercrawl::sim {

namespace {

void set_nonblocking(int fd) { ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL, 0) | O_NONBLOCK); }

sockaddr_in loopback(std::uint16_t port) {
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(port);
  sa.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  return sa;
}

int bound_socket(int type, std::uint16_t port) {
  int fd = ::socket(AF_INET, type | SOCK_CLOEXEC, 0);
  if (fd < 0)
    throw IoError(std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  auto sa = loopback(port);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0) {
    const int err = errno;
    ::close(fd);
    throw IoError(std::string("bind: ") + std::strerror(err));
  }
  return fd;
}

std::uint16_t local_port(int fd) {
  sockaddr_in sa{};
  socklen_t len = sizeof sa;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&sa), &len);
  return ntohs(sa.sin_port);
}

void make_pipe(int fds[2]) {
  if (::pipe2(fds, O_CLOEXEC | O_NONBLOCK) != 0)
    throw IoError(std::string("pipe: ") + std::strerror(errno));
}

void close_fd(int& fd) {
  if (fd >= 0)
    ::close(fd);
  fd = -1;
}

std::vector<std::uint8_t> reply_wire(const dns::Query& q, const DnsReply& r) {
  return dns::encode_response(q, r.rcode, r.addresses);
}

std::optional<std::vector<std::uint8_t>> handle_query(const DnsHandler& handler, std::span<const std::uint8_t> wire,
                                                      bool over_udp) {
  dns::Query q;
  try {
    q = dns::decode_query(wire);
  } catch (const InvalidInput&) {
    return std::nullopt;
  }
  auto name = DomainName::try_parse(q.qname);
  if (!name || q.qtype != dns::kTypeA) {
    dns::Query echo = q;
    return dns::encode_response(echo, name ? dns::Rcode::NotImp : dns::Rcode::FormErr, {});
  }
  auto reply = handler(*name);
  if (!reply)
    return std::nullopt;
  auto out = reply_wire(q, *reply);
  if (over_udp && out.size() > 512)
    return dns::encode_response(q, reply->rcode, {}, true);
  return out;
}

} // namespace

// ---------------------------------------------------------------------------

DnsServer::DnsServer(DnsHandler handler) : handler_(std::move(handler)) {
  tcp_fd_ = bound_socket(SOCK_STREAM, 0);
  port_ = local_port(tcp_fd_);
  udp_fd_ = bound_socket(SOCK_DGRAM, port_);
  if (::listen(tcp_fd_, 64) != 0)
    throw IoError(std::string("listen: ") + std::strerror(errno));
  set_nonblocking(tcp_fd_);
  set_nonblocking(udp_fd_);
  make_pipe(wake_);
  thread_ = std::jthread([this] { run(); });
}

DnsServer::~DnsServer() {
  stop();
  close_fd(wake_[0]);
  close_fd(wake_[1]);
}

void DnsServer::stop() {
  if (thread_.joinable()) {
    [[maybe_unused]] auto n = ::write(wake_[1], "x", 1);
    thread_.join();
  }
  close_fd(udp_fd_);
  close_fd(tcp_fd_);
}

void DnsServer::run() {
  struct Conn {
    int fd;
    std::vector<std::uint8_t> buf;
  };
  std::vector<Conn> conns;
  std::vector<pollfd> fds;
  std::uint8_t packet[4096];
  for (;;) {
    fds.clear();
    fds.push_back({wake_[0], POLLIN, 0});
    fds.push_back({udp_fd_, POLLIN, 0});
    fds.push_back({tcp_fd_, POLLIN, 0});
    for (const auto& c : conns)
      fds.push_back({c.fd, POLLIN, 0});
    if (::poll(fds.data(), fds.size(), -1) < 0) {
      if (errno == EINTR)
        continue;
      return;
    }
    if (fds[0].revents)
      break;
    if (fds[1].revents & POLLIN) {
      for (;;) {
        sockaddr_in from{};
        socklen_t len = sizeof from;
        auto n = ::recvfrom(udp_fd_, packet, sizeof packet, 0, reinterpret_cast<sockaddr*>(&from), &len);
        if (n <= 0)
          break;
        if (auto out = handle_query(handler_, {packet, static_cast<std::size_t>(n)}, true))
          ::sendto(udp_fd_, out->data(), out->size(), 0, reinterpret_cast<sockaddr*>(&from), len);
      }
    }
    if (fds[2].revents & POLLIN) {
      for (int fd; (fd = ::accept4(tcp_fd_, nullptr, nullptr, SOCK_CLOEXEC | SOCK_NONBLOCK)) >= 0;)
        conns.push_back({fd, {}});
    }
    std::vector<Conn> alive;
    for (std::size_t i = 0; i < conns.size(); ++i) {
      auto& c = conns[i];
      const auto rev = fds[3 + i].revents;
      bool open = true;
      if (rev & (POLLIN | POLLHUP | POLLERR)) {
        auto n = ::recv(c.fd, packet, sizeof packet, 0);
        if (n <= 0 && !(n < 0 && errno == EAGAIN))
          open = false;
        else if (n > 0)
          c.buf.insert(c.buf.end(), packet, packet + n);
      }
      while (open && c.buf.size() >= 2) {
        const std::size_t len = (std::size_t{c.buf[0]} << 8) | c.buf[1];
        if (c.buf.size() < 2 + len)
          break;
        std::vector<std::uint8_t> msg(c.buf.begin() + 2, c.buf.begin() + 2 + static_cast<long>(len));
        c.buf.erase(c.buf.begin(), c.buf.begin() + 2 + static_cast<long>(len));
        if (auto out = handle_query(handler_, msg, false)) {
          std::vector<std::uint8_t> framed{static_cast<std::uint8_t>(out->size() >> 8),
                                           static_cast<std::uint8_t>(out->size() & 0xFF)};
          framed.insert(framed.end(), out->begin(), out->end());
          set_nonblocking(c.fd);
          ::send(c.fd, framed.data(), framed.size(), MSG_NOSIGNAL);
        }
      }
      if (open)
        alive.push_back(std::move(c));
      else
        ::close(c.fd);
    }
    conns = std::move(alive);
  }
  for (auto& c : conns)
    ::close(c.fd);
}

// ---------------------------------------------------------------------------

struct HttpFarm::Listener {
  int fd = -1;
  std::uint16_t port = 0;
  Site site;
};

HttpFarm::HttpFarm(const WorldSpec& world) : connect_map_(std::make_shared<ConnectMap>(true)) {
  auto open_listener = [&](Ipv4Address address, Site site) {
    auto l = std::make_unique<Listener>();
    l->fd = bound_socket(SOCK_STREAM, 0);
    ::listen(l->fd, 256);
    set_nonblocking(l->fd);
    l->port = local_port(l->fd);
    l->site = std::move(site);
    connect_map_->add(address, {"127.0.0.1", l->port});
    listeners_.push_back(std::move(l));
  };
  for (const auto& d : world.domains) {
    if (!d.exists || d.pages.empty() || !d.address)
      continue; // nothing listens: connections are refused
    Site site;
    for (const auto& p : d.pages) {
      const auto key = normalize_url("http://" + d.name.str() + p.path).target();
      site.pages.emplace(key, p);
    }
    open_listener(*d.address, std::move(site));
  }
  for (const auto& [address, length] : world.blockpages()) {
    Site site;
    site.block_length = length;
    open_listener(address, std::move(site));
  }
  for (const auto& address : world.blackholes) {
    int fd = bound_socket(SOCK_STREAM, 0);
    ::listen(fd, 1024);
    blackhole_fds_.push_back(fd);
    connect_map_->add(address, {"127.0.0.1", local_port(fd)});
  }
  make_pipe(wake_);
  thread_ = std::jthread([this] { run(); });
}

HttpFarm::~HttpFarm() {
  stop();
  close_fd(wake_[0]);
  close_fd(wake_[1]);
}

void HttpFarm::stop() {
  if (thread_.joinable()) {
    [[maybe_unused]] auto n = ::write(wake_[1], "x", 1);
    thread_.join();
  }
  for (auto& l : listeners_)
    close_fd(l->fd);
  for (auto& fd : blackhole_fds_)
    close_fd(fd);
}

namespace {

std::string http_response(int status, std::string_view reason, std::string_view body,
                          const std::string& location = {}) {
  std::string out = "HTTP/1.1 " + std::to_string(status) + " " + std::string(reason) + "\r\n";
  out += "Content-Type: text/html\r\nContent-Length: " + std::to_string(body.size()) + "\r\n";
  if (!location.empty())
    out += "Location: " + location + "\r\n";
  out += "Connection: close\r\n\r\n";
  out += body;
  return out;
}

std::string serve(const HttpFarm::Site& site, std::string_view request) {
  auto line_end = request.find("\r\n");
  auto first = request.substr(0, line_end);
  auto sp1 = first.find(' ');
  auto sp2 = first.find(' ', sp1 + 1);
  if (sp1 == std::string_view::npos || sp2 == std::string_view::npos)
    return http_response(400, "Bad Request", "bad request");
  const std::string target(first.substr(sp1 + 1, sp2 - sp1 - 1));

  if (site.block_length) {
    std::string body;
    while (body.size() < *site.block_length)
      body += "blocked ";
    body.resize(*site.block_length);
    return http_response(200, "OK", body);
  }
  auto it = site.pages.find(target);
  if (it == site.pages.end())
    it = site.pages.find(target.substr(0, target.find('?')));
  if (it == site.pages.end())
    return http_response(404, "Not Found", "not found");
  const auto& page = it->second;
  if (page.redirect)
    return http_response(301, "Moved Permanently", render_page(page), *page.redirect);
  return http_response(200, "OK", render_page(page));
}

} // namespace

void HttpFarm::run() {
  struct Conn {
    int fd;
    const Site* site;
    std::string in;
    std::string out;
    std::size_t sent = 0;
    bool responding = false;
  };
  std::vector<Conn> conns;
  std::vector<pollfd> fds;
  char buf[8192];
  for (;;) {
    fds.clear();
    fds.push_back({wake_[0], POLLIN, 0});
    for (const auto& l : listeners_)
      fds.push_back({l->fd, POLLIN, 0});
    for (const auto& c : conns)
      fds.push_back({c.fd, static_cast<short>(c.responding ? POLLOUT : POLLIN), 0});
    if (::poll(fds.data(), fds.size(), -1) < 0) {
      if (errno == EINTR)
        continue;
      return;
    }
    if (fds[0].revents)
      break;
    for (std::size_t i = 0; i < listeners_.size(); ++i) {
      if (!(fds[1 + i].revents & POLLIN))
        continue;
      for (int fd; (fd = ::accept4(listeners_[i]->fd, nullptr, nullptr, SOCK_CLOEXEC | SOCK_NONBLOCK)) >= 0;)
        conns.push_back({fd, &listeners_[i]->site, {}, {}, 0, false});
    }
    const std::size_t base = 1 + listeners_.size();
    std::vector<Conn> alive;
    for (std::size_t i = 0; i < conns.size() && base + i < fds.size(); ++i) {
      auto& c = conns[i];
      const auto rev = fds[base + i].revents;
      bool open = true;
      if (!c.responding && (rev & (POLLIN | POLLHUP | POLLERR))) {
        auto n = ::recv(c.fd, buf, sizeof buf, 0);
        if (n > 0) {
          c.in.append(buf, static_cast<std::size_t>(n));
          if (c.in.find("\r\n\r\n") != std::string::npos) {
            c.out = serve(*c.site, c.in);
            c.responding = true;
            ++served_;
          } else if (c.in.size() > 65536) {
            open = false;
          }
        } else if (!(n < 0 && errno == EAGAIN)) {
          open = false;
        }
      }
      if (open && c.responding && (rev & (POLLOUT | POLLERR | POLLHUP) || c.sent == 0)) {
        auto n = ::send(c.fd, c.out.data() + c.sent, c.out.size() - c.sent, MSG_NOSIGNAL);
        if (n > 0)
          c.sent += static_cast<std::size_t>(n);
        else if (!(n < 0 && errno == EAGAIN))
          open = false;
        if (c.sent == c.out.size()) {
          ::shutdown(c.fd, SHUT_WR);
          open = false;
        }
      }
      if (open)
        alive.push_back(std::move(c));
      else
        ::close(c.fd);
    }
    for (std::size_t i = fds.size() - base; i < conns.size(); ++i)
      alive.push_back(std::move(conns[i]));
    conns = std::move(alive);
  }
  for (auto& c : conns)
    ::close(c.fd);
}

// ---------------------------------------------------------------------------

SimNetwork::SimNetwork(WorldSpec world) : world_(std::move(world)) {
  for (const auto& d : world_.domains)
    index_.emplace(d.name, &d);
  http_ = std::make_unique<HttpFarm>(world_);
  control_ = std::make_unique<DnsServer>([this](const DomainName& n) { return answer(ResolverRole::control, n); });
  measurement_ =
      std::make_unique<DnsServer>([this](const DomainName& n) { return answer(ResolverRole::measurement, n); });
  fake_ = std::make_unique<DnsServer>([this](const DomainName& n) { return answer(ResolverRole::fake, n); });
}

SimNetwork::~SimNetwork() {
  control_.reset();
  measurement_.reset();
  fake_.reset();
  http_.reset();
}

std::optional<DnsReply> SimNetwork::answer(ResolverRole role, const DomainName& name) {
  ++queries_;
  auto honest = [&]() -> DnsReply {
    auto it = index_.find(name);
    if (it == index_.end() || !it->second->exists || !it->second->address)
      return {dns::Rcode::NxDomain, {}};
    return {dns::Rcode::NoError, {*it->second->address}};
  };
  if (role == ResolverRole::control)
    return honest();
  const auto script = world_.script_for(name);
  if (role == ResolverRole::fake) {
    if (script.fake.kind == FakeKind::intercept)
      return DnsReply{dns::Rcode::NoError, {script.fake.address}};
    return std::nullopt;
  }
  switch (script.measurement.kind) {
  case MeasurementKind::honest: return honest();
  case MeasurementKind::timeout: return std::nullopt;
  case MeasurementKind::nxdomain: return DnsReply{dns::Rcode::NxDomain, {}};
  case MeasurementKind::poison:
  case MeasurementKind::blockpage: return DnsReply{dns::Rcode::NoError, {*script.measurement.address}};
  }
  return std::nullopt;
}

ResolverProfile SimNetwork::profile() const {
  const auto lo = Ipv4Address::from_octets(127, 0, 0, 1);
  ResolverProfile p;
  p.country = world_.country;
  p.control = {lo, control_->port(), ResolverRole::control};
  p.measurement = {{lo, measurement_->port(), ResolverRole::measurement}};
  p.fake = {{lo, fake_->port(), ResolverRole::fake}};
  return p;
}

CheckConfig SimNetwork::check_config(Seconds timeout) const {
  CheckConfig c;
  c.timeout = timeout;
  c.connect_map = http_->connect_map();
  return c;
}

void SimNetwork::stop_resolver(ResolverRole role) {
  switch (role) {
  case ResolverRole::control: control_->stop(); break;
  case ResolverRole::measurement: measurement_->stop(); break;
  case ResolverRole::fake: fake_->stop(); break;
  }
}

} // namespace filtercrawl::sim
