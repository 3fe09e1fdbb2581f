#pragma once

// Append-only JSON-lines event log. Record kinds: fetch, link, verdict and
// enqueue, each carrying a sequence number that increases by one per record.

#include <cstdio>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace filtercrawl {

class EventSink {
public:
  virtual ~EventSink() = default;
  /// Must tolerate concurrent callers.
  virtual void append(const nlohmann::json& record) = 0;
};

/// Appends one line per record, flushed before append() returns.
class JsonlFileSink : public EventSink {
public:
  explicit JsonlFileSink(const std::string& path);
  ~JsonlFileSink() override;
  void append(const nlohmann::json& record) override;

private:
  std::mutex mu_;
  std::FILE* file_ = nullptr;
};

class MemorySink : public EventSink {
public:
  void append(const nlohmann::json& record) override;
  std::vector<nlohmann::json> records() const;
  std::string jsonl() const;

private:
  mutable std::mutex mu_;
  std::vector<nlohmann::json> records_;
};

struct EventLog {
  std::vector<nlohmann::json> records;
  bool partial_tail = false;              // last line cut off mid-record
  std::optional<std::uint64_t> gap_after; // seq after which numbering jumps
  std::size_t complete_bytes = 0;         // length of the well-formed prefix

  bool intact() const { return !partial_tail && !gap_after; }
  std::optional<std::uint64_t> last_seq() const;
};

/// Parses JSONL text. A malformed line other than the last one throws InvalidInput.
EventLog parse_event_log(std::string_view text);
/// Missing file reads as an empty log.
EventLog read_event_log(const std::string& path);

} // namespace filtercrawl
