#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>

#include <json.hpp>

#include "filtercrawl/error.hpp"
#include "filtercrawl/filtercheck.hpp"
#include "test_support.hpp"

using namespace filtercrawl;
using namespace testsupport;
using nlohmann::json;

namespace {

DnsOutcome answered(std::initializer_list<const char*> addrs) {
  DnsOutcome o;
  o.kind = DnsKind::answered;
  o.rcode = 0;
  for (auto a : addrs)
    o.addresses.push_back(Ipv4Address::parse(a));
  return o;
}

DnsOutcome silent() {
  DnsOutcome o;
  o.kind = DnsKind::timeout;
  return o;
}

DnsOutcome nxdomain() {
  DnsOutcome o;
  o.kind = DnsKind::nxdomain;
  o.rcode = 3;
  return o;
}

FetchOutcome page(std::uint64_t length) {
  FetchOutcome f;
  f.kind = FetchKind::content;
  f.status_code = 200;
  f.body_length = length;
  return f;
}

FetchOutcome dead() {
  FetchOutcome f;
  f.kind = FetchKind::error;
  return f;
}

Evidence lengths(std::uint64_t measured, std::uint64_t control) {
  Evidence e;
  e.fake = {silent()};
  e.measurement = answered({"198.51.100.9"});
  e.control = answered({"192.0.2.1"});
  e.measurement_fetch = page(measured);
  e.control_fetch = page(control);
  return e;
}

} // namespace

TEST(Divergence, Arithmetic) {
  EXPECT_DOUBLE_EQ(content_length_divergence(200, 1000), 0.8);
  EXPECT_DOUBLE_EQ(content_length_divergence(1000, 1000), 0.0);
  EXPECT_DOUBLE_EQ(content_length_divergence(1500, 1000), 0.5);
  EXPECT_DOUBLE_EQ(content_length_divergence(7, 0), 7.0);
}

TEST(Decide, ThresholdIsStrictlyGreater) {
  CheckConfig cfg;
  cfg.maxdiff = 0.5;
  const auto at = decide(lengths(500, 1000), cfg);
  EXPECT_EQ(at.status, FilterStatus::not_filtered);
  EXPECT_EQ(*at.divergence, 0.5);
  const auto over = decide(lengths(499, 1000), cfg);
  EXPECT_EQ(over.status, FilterStatus::filtered);
  EXPECT_EQ(over.reason, FilterReason::content_length_mismatch);
  EXPECT_EQ(decide(lengths(501, 1000), cfg).status, FilterStatus::not_filtered);
}

TEST(Decide, FakeAnswerWinsOverEverything) {
  Evidence e = lengths(1000, 1000);
  e.fake = {silent(), answered({"10.10.34.36"})};
  EXPECT_EQ(decide(e, {}).reason, FilterReason::intercepted_fake);
}

TEST(Decide, MeasurementSilentWhileControlAnswers) {
  Evidence e;
  e.fake = {silent()};
  e.measurement = silent();
  e.control = answered({"192.0.2.1"});
  EXPECT_EQ(decide(e, {}).reason, FilterReason::measurement_timeout);
  e.measurement = nxdomain();
  EXPECT_EQ(decide(e, {}).reason, FilterReason::measurement_timeout);
}

TEST(Decide, BothResolversSilent) {
  Evidence e;
  e.fake = {silent()};
  e.measurement = silent();
  e.control = nxdomain();
  EXPECT_EQ(decide(e, {}).status, FilterStatus::indeterminate);
  CheckConfig strict;
  strict.strict_alg1 = true;
  EXPECT_EQ(decide(e, strict).status, FilterStatus::not_filtered);
}

TEST(Decide, SharedAddressClosesTheGate) {
  Evidence e;
  e.fake = {silent()};
  e.measurement = answered({"192.0.2.1", "10.0.0.1"});
  e.control = answered({"192.0.2.1"});
  EXPECT_EQ(decide(e, {}).status, FilterStatus::not_filtered);
}

TEST(Decide, PrivateAnswer) {
  Evidence e;
  e.fake = {silent()};
  e.measurement = answered({"10.0.0.7"});
  e.control = answered({"192.0.2.1"});
  EXPECT_EQ(decide(e, {}).reason, FilterReason::private_ip);
  e.control = answered({"172.16.0.1"});
  e.measurement_fetch = dead();
  e.control_fetch = dead();
  EXPECT_EQ(decide(e, {}).status, FilterStatus::not_filtered);
}

TEST(Decide, FetchFailures) {
  Evidence e = lengths(1000, 1000);
  e.measurement_fetch = dead();
  EXPECT_EQ(decide(e, {}).reason, FilterReason::measurement_http_dead);
  e.measurement_fetch = page(1000);
  e.control_fetch = dead();
  EXPECT_EQ(decide(e, {}).reason, FilterReason::control_http_dead);
  e.measurement_fetch = dead();
  EXPECT_EQ(decide(e, {}).status, FilterStatus::not_filtered);
}

TEST(Decide, StrictModeUsesRatio) {
  CheckConfig strict;
  strict.strict_alg1 = true;
  // ratio 0.4 is below the threshold even though the lengths differ by 60%
  EXPECT_EQ(decide(lengths(400, 1000), strict).status, FilterStatus::not_filtered);
  EXPECT_EQ(decide(lengths(600, 1000), strict).status, FilterStatus::filtered);
}

TEST(PrivateIp, Ranges) {
  for (auto a : {"10.0.0.1", "172.16.0.1", "172.31.255.255", "192.168.1.1", "127.0.0.1", "169.254.1.1", "0.0.0.0"})
    EXPECT_TRUE(is_private_ip(Ipv4Address::parse(a))) << a;
  for (auto a : {"8.8.8.8", "172.32.0.1", "192.0.2.1", "198.18.0.9", "11.0.0.1"})
    EXPECT_FALSE(is_private_ip(Ipv4Address::parse(a))) << a;
}

TEST(CheckDomain, SixChecksFixtures) {
  Running run(world_file("six_checks.json"));
  const auto expected = json::parse(read_file(data_path("six_checks_expected.json")));
  std::vector<DomainName> domains;
  for (const auto& [name, _] : expected.items())
    domains.push_back(DomainName::parse(name));
  ASSERT_EQ(domains.size(), 12u);
  const auto start = std::chrono::steady_clock::now();
  const auto verdicts = check_batch(domains, run.profile, run.check, 12);
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(5));
  for (const auto& v : verdicts) {
    const auto& want = expected.at(v.domain.str());
    EXPECT_EQ(to_string(v.status), want.at("status").get<std::string>()) << v.domain.str();
    EXPECT_EQ(to_string(v.reason), want.at("reason").get<std::string>()) << v.domain.str();
    EXPECT_EQ(v.country, "ZZ");
  }
}

TEST(CheckDomain, BlockPageDivergenceFromServedLengths) {
  Running run(world_file("six_checks.json"));
  const auto v = check_domain(DomainName::parse("length-hit.test"), run.profile, run.check);
  ASSERT_TRUE(v.divergence);
  EXPECT_DOUBLE_EQ(*v.divergence, 0.9); // |100 - 1000| / 1000
  EXPECT_EQ(*v.evidence.measurement_fetch->body_length, 100u);
  EXPECT_EQ(*v.evidence.control_fetch->body_length, 1000u);
}

TEST(CheckDomain, ThresholdWorld) {
  Running run(world_file("threshold.json"));
  const std::vector<DomainName> ds = {DomainName::parse("t500.test"), DomainName::parse("t499.test"),
                                      DomainName::parse("t501.test")};
  const auto v = check_batch(ds, run.profile, run.check, 3);
  EXPECT_EQ(v[0].status, FilterStatus::not_filtered);
  EXPECT_EQ(v[1].status, FilterStatus::filtered);
  EXPECT_EQ(v[1].reason, FilterReason::content_length_mismatch);
  EXPECT_EQ(v[2].status, FilterStatus::not_filtered);
}

TEST(CheckDomain, NoFetchWhenGateClosed) {
  Running run(world_file("six_checks.json"));
  const auto v = check_domain(DomainName::parse("fake-miss.test"), run.profile, run.check);
  EXPECT_FALSE(v.evidence.measurement_fetch);
  EXPECT_FALSE(v.evidence.control_fetch);
}

TEST(CheckBatch, ParallelismNeutral) {
  Running run(world_file("six_checks.json"));
  std::vector<DomainName> ds;
  for (const auto& d : run.net->world().domains)
    ds.push_back(d.name);
  auto summary = [&](int p) {
    std::vector<std::string> out;
    for (const auto& v : check_batch(ds, run.profile, run.check, p))
      out.push_back(v.domain.str() + " " + to_string(v.status) + " " + to_string(v.reason));
    return out;
  };
  const auto one = summary(1);
  EXPECT_EQ(summary(8), one);
  EXPECT_EQ(summary(32), one);
}

TEST(CheckBatch, EmptyInput) {
  Running run(world_file("six_checks.json"));
  EXPECT_TRUE(check_batch({}, run.profile, run.check, 4).empty());
}

TEST(VerdictJson, RoundTrip) {
  Running run(world_file("six_checks.json"));
  const auto v = check_domain(DomainName::parse("length-hit.test"), run.profile, run.check);
  const auto j = to_json(v);
  const auto back = verdict_from_json(j);
  EXPECT_EQ(to_json(back), j);
  EXPECT_EQ(j.at("status"), "filtered");
  EXPECT_EQ(j.at("reason"), "content_length_mismatch");
}

TEST(Profile, JsonAndValidation) {
  const auto p = profile_from_json(json::parse(read_file(std::string(FILTERCRAWL_SOURCE_DIR) + "/profiles/cn.json")));
  EXPECT_EQ(p.country, "CN");
  EXPECT_EQ(p.control.address.str(), "8.8.8.8");
  ASSERT_EQ(p.measurement.size(), 2u);
  EXPECT_EQ(p.measurement[0].address.str(), "202.46.32.29");
  EXPECT_EQ(p.fake[1].address.str(), "223.96.100.100");
  EXPECT_EQ(profile_from_json(to_json(p)).measurement[1].address, p.measurement[1].address);
  EXPECT_THROW(profile_from_json(json{{"country", "CN"}, {"control", {{"address", "8.8.8.8"}}}, {"measurement", json::array()},
                                      {"fake", json::array()}}),
               ConfigError);
}

TEST(CheckConfig, Validation) {
  CheckConfig c;
  c.maxdiff = -0.1;
  EXPECT_THROW(c.validate(), ConfigError);
  c.maxdiff = 0.5;
  c.timeout = Seconds(0);
  EXPECT_THROW(c.validate(), ConfigError);
}
