#include "filtercrawl/util.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "filtercrawl/error.hpp"

namespace filtercrawl {

std::string format_timestamp(Clock::time_point t) {
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count();
  std::time_t secs = static_cast<std::time_t>(ms / 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms % 1000));
  return buf;
}

Clock::time_point parse_timestamp(std::string_view text) {
  std::tm tm{};
  int millis = 0;
  std::string s(text);
  int n = std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d.%3dZ", &tm.tm_year, &tm.tm_mon, &tm.tm_mday, &tm.tm_hour,
                      &tm.tm_min, &tm.tm_sec, &millis);
  if (n < 6)
    throw InvalidInput("bad timestamp '" + s + "'");
  tm.tm_year -= 1900;
  tm.tm_mon -= 1;
  const std::time_t secs = timegm(&tm);
  return Clock::time_point(std::chrono::seconds(secs)) + std::chrono::milliseconds(millis);
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

std::string trim(std::string_view s) {
  const auto ws = " \t\r\n\f\v";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos)
    return {};
  auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto p = s.find(sep, start);
    out.emplace_back(s.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start));
    if (p == std::string_view::npos)
      break;
    start = p + 1;
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad())
    throw IoError("error reading '" + path + "'");
  return ss.str();
}

void write_file_atomic(const std::string& path, std::string_view content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  std::error_code ec;
  if (target.has_parent_path())
    fs::create_directories(target.parent_path(), ec);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw IoError("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out)
      throw IoError("short write to '" + tmp.string() + "'");
  }
  fs::rename(tmp, target, ec);
  if (ec)
    throw IoError("cannot rename onto '" + path + "': " + ec.message());
}

RateLimiter::RateLimiter(double per_second) {
  if (per_second > 0)
    interval_ = std::chrono::duration_cast<std::chrono::steady_clock::duration>(Seconds(1.0 / per_second));
}

void RateLimiter::acquire() {
  if (interval_ == std::chrono::steady_clock::duration::zero())
    return;
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mu_);
    slot = std::max(std::chrono::steady_clock::now(), next_);
    next_ = slot + interval_;
  }
  std::this_thread::sleep_until(slot);
}

void HostThrottle::acquire(const std::string& host) {
  if (delay_.count() <= 0)
    return;
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mu_);
    auto& next = next_[host];
    slot = std::max(std::chrono::steady_clock::now(), next);
    next = slot + delay_;
  }
  std::this_thread::sleep_until(slot);
}

} // namespace filtercrawl
