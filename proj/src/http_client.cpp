#include "filtercrawl/http_client.hpp"

#include <httplib.h>

namespace filtercrawl {

std::optional<ConnectTarget> ConnectMap::find(Ipv4Address address) const {
  auto it = routes_.find(address);
  if (it == routes_.end())
    return std::nullopt;
  return it->second;
}

namespace {

template <class Client>
HttpResponse run_get(Client& cli, const HttpRequest& req) {
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(req.timeout);
  cli.set_connection_timeout(timeout);
  cli.set_read_timeout(timeout);
  cli.set_write_timeout(timeout);
  cli.set_follow_location(false);
  cli.set_keep_alive(false);

  std::string host_header = req.host;
  if (req.port != (req.tls ? 443 : 80))
    host_header += ":" + std::to_string(req.port);
  httplib::Headers headers{{"Host", host_header}, {"Accept", "text/html,*/*"}};

  HttpResponse out;
  bool capped = false;
  const auto started = std::chrono::steady_clock::now();
  auto result = cli.Get(
      req.path, headers,
      [&](const httplib::Response& r) {
        out.status = r.status;
        out.location = r.get_header_value("Location");
        return true;
      },
      [&](const char* data, std::size_t len) {
        const auto room = req.max_body - out.body.size();
        if (len > room) {
          out.body.append(data, room);
          capped = true;
          return false;
        }
        out.body.append(data, len);
        return true;
      });

  if (result) {
    out.kind = FetchKind::content;
    out.status = result->status;
    return out;
  }
  const auto err = result.error();
  if (err == httplib::Error::Canceled && capped) {
    out.kind = FetchKind::content;
    out.truncated = true;
    return out;
  }
  const auto elapsed = std::chrono::steady_clock::now() - started;
  const bool slow = elapsed >= std::chrono::duration_cast<std::chrono::steady_clock::duration>(req.timeout * 0.9);
  if (err == httplib::Error::ConnectionTimeout || ((err == httplib::Error::Read || err == httplib::Error::Write) && slow))
    out.kind = FetchKind::timeout;
  else
    out.kind = FetchKind::error;
  out.detail = httplib::to_string(err);
  out.body.clear();
  out.status = 0;
  return out;
}

} // namespace

HttpResponse http_get(const HttpRequest& req, const ConnectMap* connect_map) {
  std::optional<ConnectTarget> target;
  if (connect_map) {
    target = connect_map->find(req.address);
    if (!target && connect_map->strict()) {
      HttpResponse out;
      out.kind = FetchKind::error;
      out.detail = "no route to " + req.address.str();
      return out;
    }
  }

  if (req.tls) {
    httplib::SSLClient cli(req.host, target ? target->port : req.port);
    cli.set_hostname_addr_map({{req.host, target ? target->host : req.address.str()}});
    cli.enable_server_certificate_verification(true);
    return run_get(cli, req);
  }
  httplib::Client cli(target ? target->host : req.address.str(), target ? target->port : req.port);
  return run_get(cli, req);
}

} // namespace filtercrawl
