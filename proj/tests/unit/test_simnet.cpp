#include <gtest/gtest.h>

#include <json.hpp>

#include "filtercrawl/dns_wire.hpp"
#include "filtercrawl/error.hpp"
#include "filtercrawl/http_client.hpp"
#include "test_support.hpp"

using namespace filtercrawl;
using namespace testsupport;
using nlohmann::json;

namespace {

json minimal_world() {
  return json{{"domains", {{{"name", "a.test"}, {"filtered", true}, {"pages", {{{"path", "/"}, {"links", json::array()}}}}}}},
              {"seeds", {"http://a.test/"}}};
}

ResolverEndpoint endpoint(std::uint16_t port) { return {Ipv4Address::parse("127.0.0.1"), port, ResolverRole::control}; }

} // namespace

TEST(DnsWire, QueryRoundTrip) {
  dns::Query q;
  q.id = 0x1234;
  q.qname = "www.example.test";
  const auto back = dns::decode_query(dns::encode_query(q));
  EXPECT_EQ(back.id, 0x1234);
  EXPECT_EQ(back.qname, "www.example.test");
  EXPECT_EQ(back.qtype, dns::kTypeA);
}

TEST(DnsWire, ResponseRoundTrip) {
  dns::Query q;
  q.id = 7;
  q.qname = "a.test";
  const std::vector<Ipv4Address> addrs = {Ipv4Address::parse("192.0.2.1"), Ipv4Address::parse("192.0.2.2")};
  const auto r = dns::decode_response(dns::encode_response(q, dns::Rcode::NoError, addrs));
  EXPECT_EQ(r.id, 7);
  EXPECT_EQ(r.addresses, addrs);
  const auto nx = dns::decode_response(dns::encode_response(q, dns::Rcode::NxDomain, {}));
  EXPECT_EQ(nx.rcode, dns::Rcode::NxDomain);
  EXPECT_TRUE(nx.addresses.empty());
}

TEST(DnsWire, RejectsTruncatedPacket) {
  dns::Query q;
  q.qname = "a.test";
  auto wire = dns::encode_query(q);
  wire.resize(wire.size() - 3);
  EXPECT_THROW(dns::decode_query(wire), InvalidInput);
}

TEST(DnsClient, AnsweredNxdomainAndTimeout) {
  sim::DnsServer server([](const DomainName& n) -> std::optional<sim::DnsReply> {
    if (n.str() == "live.test")
      return sim::DnsReply{dns::Rcode::NoError, {Ipv4Address::parse("192.0.2.5")}};
    if (n.str() == "gone.test")
      return sim::DnsReply{dns::Rcode::NxDomain, {}};
    return std::nullopt;
  });
  const auto ok = resolve(DomainName::parse("live.test"), endpoint(server.port()), Seconds(0.5));
  EXPECT_EQ(ok.kind, DnsKind::answered);
  EXPECT_EQ(ok.addresses.at(0).str(), "192.0.2.5");
  const auto nx = resolve(DomainName::parse("gone.test"), endpoint(server.port()), Seconds(0.5));
  EXPECT_EQ(nx.kind, DnsKind::nxdomain);
  EXPECT_TRUE(nx.responded());
  const auto to = resolve(DomainName::parse("quiet.test"), endpoint(server.port()), Seconds(0.2));
  EXPECT_EQ(to.kind, DnsKind::timeout);
  EXPECT_FALSE(to.responded());
}

TEST(DnsClient, LargeAnswerFallsBackToTcp) {
  std::vector<Ipv4Address> many;
  for (int i = 1; i <= 60; ++i)
    many.push_back(Ipv4Address::from_octets(198, 51, 100, static_cast<std::uint8_t>(i)));
  sim::DnsServer server([&](const DomainName&) { return std::optional(sim::DnsReply{dns::Rcode::NoError, many}); });
  const auto o = resolve(DomainName::parse("big.test"), endpoint(server.port()), Seconds(1));
  EXPECT_EQ(o.kind, DnsKind::answered);
  EXPECT_EQ(o.addresses, many);
}

TEST(World, MinimalIsValid) {
  const auto w = sim::world_from_json(minimal_world());
  ASSERT_EQ(w.domains.size(), 1u);
  EXPECT_TRUE(w.domains[0].address.has_value());
}

TEST(World, DanglingLinkRejected) {
  auto j = minimal_world();
  j["domains"][0]["pages"][0]["links"] = {"http://nowhere.test/"};
  EXPECT_THROW(sim::world_from_json(j), InvalidInput);
  j["external"] = {"nowhere.test"};
  EXPECT_NO_THROW(sim::world_from_json(j));
}

TEST(World, OtherValidation) {
  auto j = minimal_world();
  j["domains"].push_back(j["domains"][0]);
  EXPECT_THROW(sim::world_from_json(j), InvalidInput); // duplicate
  j = minimal_world();
  j["domains"][0]["exists"] = false;
  EXPECT_THROW(sim::world_from_json(j), InvalidInput); // pages on a dead domain
  j = minimal_world();
  j["resolver_behaviors"] = {{"b.test", {{"measurement", "timeout"}}}};
  EXPECT_THROW(sim::world_from_json(j), InvalidInput);
  j = minimal_world();
  j["resolver_behaviors"] = {{"a.test", {{"measurement", "sometimes"}}}};
  EXPECT_THROW(sim::world_from_json(j), InvalidInput);
  EXPECT_THROW(sim::load_world("{not json"), InvalidInput);
}

TEST(World, CommittedGeneratedWorldLoadsAndMatchesGenerator) {
  const auto text = read_file(data_path("worlds/generated_500.json"));
  const auto w = sim::load_world(text);
  EXPECT_EQ(w.domains.size(), 500u);
  const auto regenerated = sim::generate_world(sim::generator_params_from_json(w.generator));
  EXPECT_EQ(sim::to_json(regenerated), sim::to_json(w));
}

TEST(World, JsonRoundTrip) {
  const auto w = world_file("six_checks.json");
  EXPECT_EQ(sim::to_json(sim::world_from_json(sim::to_json(w))), sim::to_json(w));
  EXPECT_EQ(w.script_for(DomainName::parse("length-hit.test")).measurement.kind, sim::MeasurementKind::blockpage);
}

TEST(World, RenderedPageHasDeclaredLengthAndLinks) {
  sim::PageSpec p;
  p.path = "/";
  p.links = {"http://b.test/x", "/rel"};
  p.body_length = 800;
  const auto body = sim::render_page(p);
  EXPECT_EQ(body.size(), 800u);
  EXPECT_NE(body.find("href=\"http://b.test/x\""), std::string::npos);
  EXPECT_NE(body.find("href=\"/rel\""), std::string::npos);
}

TEST(Serve, ScriptedResolvers) {
  sim::SimNetwork net(world_file("six_checks.json"));
  const auto p = net.profile();
  const auto t = Seconds(0.2);
  const auto timeout = resolve(DomainName::parse("timeout-hit.test"), p.measurement[0], t);
  EXPECT_EQ(timeout.kind, DnsKind::timeout);
  const auto fake = resolve(DomainName::parse("fake-hit.test"), p.fake[0], t);
  ASSERT_EQ(fake.kind, DnsKind::answered);
  EXPECT_EQ(fake.addresses[0].str(), "10.10.34.36");
  EXPECT_EQ(resolve(DomainName::parse("fake-miss.test"), p.fake[0], t).kind, DnsKind::timeout);
  const auto poison = resolve(DomainName::parse("private-hit.test"), p.measurement[0], t);
  EXPECT_EQ(poison.addresses.at(0).str(), "10.0.0.7");
  EXPECT_EQ(resolve(DomainName::parse("absent.test"), p.control, t).kind, DnsKind::nxdomain);
}

TEST(Serve, HttpBodiesHaveDeclaredLengths) {
  sim::SimNetwork net(world_file("six_checks.json"));
  const auto map = net.connect_map();
  const auto* d = net.world().find(DomainName::parse("mirror.test"));
  HttpRequest req;
  req.address = *d->address;
  req.host = "mirror.test";
  req.timeout = Seconds(1);
  auto resp = http_get(req, map.get());
  EXPECT_EQ(resp.kind, FetchKind::content);
  EXPECT_EQ(resp.status, 200);
  EXPECT_EQ(resp.body.size(), 1000u);
  req.path = "/missing";
  EXPECT_EQ(http_get(req, map.get()).status, 404);

  const auto block = net.world().script_for(DomainName::parse("length-hit.test")).measurement;
  req.address = *block.address;
  req.path = "/";
  EXPECT_EQ(http_get(req, map.get()).body.size(), 100u);

  req.address = Ipv4Address::parse("198.18.0.9"); // no server behind it
  EXPECT_NE(http_get(req, map.get()).kind, FetchKind::content);
}

TEST(Oracle, ChainExamples) {
  const auto r = sim::oracle_discover(world_file("chain.json"), psl());
  std::set<std::string> got;
  for (const auto& d : r.discovered)
    got.insert(d.str());
  EXPECT_EQ(got, (std::set<std::string>{"f1.test", "f2.test", "f3.test"}));
  // f4 is linked only from an unfiltered page, which is never fetched
  EXPECT_FALSE(r.discovered.contains(DomainName::parse("f4.test")));
  EXPECT_EQ(r.extracted.size(), 5u);
  EXPECT_EQ(r.filtered.size(), 3u);
}

TEST(Oracle, DepthLimit) {
  const auto w = chain_world(10);
  sim::OracleOptions o;
  o.max_depth = 4;
  EXPECT_EQ(sim::oracle_discover(w, psl(), o).discovered.size(), 5u);
  EXPECT_EQ(sim::oracle_discover(w, psl()).discovered.size(), 11u);
}

TEST(Oracle, DiscoveredAreFiltered) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto w = generated(120, 0.3, seed, 5);
    for (const auto& d : sim::oracle_discover(w, psl()).discovered)
      EXPECT_TRUE(w.find(d)->filtered) << d.str();
  }
}

TEST(Generator, SeededAndDeterministic) {
  const auto a = sim::to_json(generated(80, 0.3, 9, 4));
  EXPECT_EQ(a, sim::to_json(generated(80, 0.3, 9, 4)));
  EXPECT_NE(a, sim::to_json(generated(80, 0.3, 10, 4)));
  EXPECT_THROW(generated(80, 1.5, 1, 0), ConfigError);
}
