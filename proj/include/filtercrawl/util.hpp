#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

namespace filtercrawl {

using Seconds = std::chrono::duration<double>;
using Clock = std::chrono::system_clock;

/// "2026-01-02T03:04:05.678Z"
std::string format_timestamp(Clock::time_point t);
/// Inverse of format_timestamp; throws InvalidInput.
Clock::time_point parse_timestamp(std::string_view text);

std::string sha256_hex(std::string_view data);

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

/// Reads a whole file; throws IoError.
std::string read_file(const std::string& path);
/// Writes through a temporary file and renames over `path`; throws IoError.
void write_file_atomic(const std::string& path, std::string_view content);

/// Spaces out acquisitions to at most `per_second`. Non-positive rate disables limiting.
class RateLimiter {
public:
  explicit RateLimiter(double per_second);
  void acquire();

private:
  std::mutex mu_;
  std::chrono::steady_clock::duration interval_{};
  std::chrono::steady_clock::time_point next_{};
};

/// Minimum delay between consecutive requests to the same host.
class HostThrottle {
public:
  explicit HostThrottle(std::chrono::milliseconds delay) : delay_(delay) {}
  void acquire(const std::string& host);

private:
  std::mutex mu_;
  std::chrono::milliseconds delay_;
  std::map<std::string, std::chrono::steady_clock::time_point> next_;
};

} // namespace filtercrawl
