#include <gtest/gtest.h>

#include <thread>

#include <httplib.h>

#include "filtercrawl/enrichment.hpp"
#include "filtercrawl/error.hpp"
#include "test_support.hpp"

using namespace filtercrawl;
using namespace testsupport;

namespace {

DomainName dn(const char* s) { return DomainName::parse(s); }

/// Category service on loopback for the life of the object.
class FakeCategoryService {
public:
  FakeCategoryService() {
    server_.Get(R"(/api/categories/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
      ++hits_;
      last_auth_ = req.get_header_value("Authorization");
      const auto name = req.matches[1].str();
      if (name == "known.test")
        res.set_content(R"({"categories":[{"name":"news","confidence":0.4},{"name":"politics","confidence":0.9}]})",
                        "application/json");
      else if (name == "broken.test")
        res.status = 500;
      else if (name == "garbled.test")
        res.set_content("{not json", "application/json");
      else if (name == "slow.test") {
        std::this_thread::sleep_for(std::chrono::milliseconds(600));
        res.set_content(R"({"categories":[]})", "application/json");
      } else
        res.status = 404;
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeCategoryService() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/api/"; }
  int hits() const { return hits_; }
  std::string last_auth() const { return last_auth_; }

private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> hits_{0};
  std::string last_auth_;
};

} // namespace

TEST(Categories, LocalTable) {
  auto t = LocalCategoryTable::parse("domain,categories\n# c\nf1.test,adult\nF2.test, news ; blogs\n");
  EXPECT_EQ(t.size(), 2u);
  EXPECT_EQ(t.lookup(dn("f2.test")), (std::vector<CategoryLabel>{{"news", {}}, {"blogs", {}}}));
  EXPECT_TRUE(t.lookup(dn("nope.test")).empty());
  EXPECT_THROW(LocalCategoryTable::parse("a.test,x\nno comma here\n"), InvalidInput);
  EXPECT_EQ(LocalCategoryTable::load(data_path("categories.csv")).lookup(dn("f1.test")).at(0).name, "adult");
}

TEST(Categories, PrimaryLabel) {
  EXPECT_FALSE(primary_category({}));
  EXPECT_EQ(primary_category({{"a", {}}, {"b", {}}})->name, "a");
  EXPECT_EQ(primary_category({{"a", {}}, {"b", 0.2}})->name, "b");
  EXPECT_EQ(primary_category({{"a", 0.7}, {"b", 0.2}})->name, "a");
}

TEST(Categories, CacheCallsProviderOncePerDomain) {
  auto table = std::make_shared<LocalCategoryTable>(LocalCategoryTable::parse("a.test,x\n"));
  CategoryCache cache(table);
  for (int i = 0; i < 5; ++i) {
    cache.categorize(dn("a.test"));
    cache.categorize(dn("b.test"));
  }
  EXPECT_EQ(cache.provider_calls(), 2u);
}

TEST(Categories, RemoteClient) {
  FakeCategoryService svc;
  RemoteCategoryClient client(svc.url(), "k123", Seconds(2));
  const auto labels = client.lookup(dn("known.test"));
  ASSERT_EQ(labels.size(), 2u);
  EXPECT_EQ(primary_category(labels)->name, "politics");
  EXPECT_EQ(svc.last_auth(), "Bearer k123");
  EXPECT_TRUE(client.lookup(dn("unknown.test")).empty());
  EXPECT_THROW(client.lookup(dn("broken.test")), IoError);
  EXPECT_THROW(client.lookup(dn("garbled.test")), IoError);
  RemoteCategoryClient impatient(svc.url(), "", Seconds(0.2));
  EXPECT_THROW(impatient.lookup(dn("slow.test")), IoError);
}

TEST(Categories, FailuresCacheAsUncategorized) {
  FakeCategoryService svc;
  CategoryCache cache(std::make_shared<RemoteCategoryClient>(svc.url(), "", Seconds(2)));
  EXPECT_TRUE(cache.categorize(dn("broken.test")).empty());
  EXPECT_TRUE(cache.categorize(dn("broken.test")).empty());
  EXPECT_EQ(svc.hits(), 1);
}

TEST(Categories, UnreachableServiceIsIoError) {
  RemoteCategoryClient client("http://127.0.0.1:1", "", Seconds(0.5));
  EXPECT_THROW(client.lookup(dn("a.test")), IoError);
}

TEST(Geo, NarrowestRangeWins) {
  const auto db = GeoDatabase::load(data_path("geo.csv"));
  EXPECT_EQ(db.geolocate(Ipv4Address::parse("192.0.2.5")).country, "NL");
  EXPECT_EQ(db.geolocate(Ipv4Address::parse("192.0.2.16")).country, "US");
  EXPECT_EQ(db.geolocate(Ipv4Address::parse("192.0.2.255")).country, "US");
  EXPECT_EQ(db.geolocate(Ipv4Address::parse("198.51.100.7")).country, "IE");
  EXPECT_EQ(db.geolocate(Ipv4Address::parse("203.0.113.128")).country, std::nullopt);
  EXPECT_EQ(db.geolocate(Ipv4Address::parse("8.8.8.8")).country, std::nullopt);
}

TEST(Geo, NestedRanges) {
  const auto db = GeoDatabase::parse("10.0.0.0,10.0.255.255,AA\n10.0.1.0,10.0.1.255,BB\n10.0.1.128,10.0.1.129,CC\n");
  EXPECT_EQ(db.geolocate(Ipv4Address::parse("10.0.0.9")).country, "AA");
  EXPECT_EQ(db.geolocate(Ipv4Address::parse("10.0.1.9")).country, "BB");
  EXPECT_EQ(db.geolocate(Ipv4Address::parse("10.0.1.129")).country, "CC");
  EXPECT_EQ(db.geolocate(Ipv4Address::parse("10.0.1.130")).country, "BB");
  EXPECT_EQ(db.geolocate(Ipv4Address::parse("10.0.2.0")).country, "AA");
  EXPECT_THROW(GeoDatabase::parse("10.0.0.9,10.0.0.1,XX\n"), InvalidInput);
  EXPECT_THROW(GeoDatabase::load("/nonexistent/geo.csv"), IoError);
}

TEST(HostExists, FollowsControlResolver) {
  Running run(world_file("dead_enum.json"), 0.2);
  DnsOutcome ev;
  EXPECT_TRUE(host_exists(dn("sample.com"), run.profile.control, Seconds(0.5), &ev));
  EXPECT_EQ(ev.kind, DnsKind::answered);
  EXPECT_FALSE(host_exists(dn("absent-host.test"), run.profile.control, Seconds(0.5), &ev));
  EXPECT_TRUE(ev.responded());
}
