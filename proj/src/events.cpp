#include "filtercrawl/events.hpp"

#include <cerrno>
#include <cstring>
#include <filesystem>

#include "filtercrawl/error.hpp"
#include "filtercrawl/util.hpp"

namespace filtercrawl {

using nlohmann::json;

JsonlFileSink::JsonlFileSink(const std::string& path) {
  file_ = std::fopen(path.c_str(), "ab");
  if (!file_)
    throw IoError("cannot open event log " + path + ": " + std::strerror(errno));
}

JsonlFileSink::~JsonlFileSink() {
  if (file_)
    std::fclose(file_);
}

void JsonlFileSink::append(const json& record) {
  const auto line = record.dump() + "\n";
  std::lock_guard lock(mu_);
  if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() || std::fflush(file_) != 0)
    throw IoError(std::string("event log write failed: ") + std::strerror(errno));
}

void MemorySink::append(const json& record) {
  std::lock_guard lock(mu_);
  records_.push_back(record);
}

std::vector<json> MemorySink::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

std::string MemorySink::jsonl() const {
  std::lock_guard lock(mu_);
  std::string out;
  for (const auto& r : records_)
    out += r.dump() + "\n";
  return out;
}

std::optional<std::uint64_t> EventLog::last_seq() const {
  if (records.empty())
    return std::nullopt;
  return records.back().at("seq").get<std::uint64_t>();
}

EventLog parse_event_log(std::string_view text) {
  EventLog log;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    ++line_no;
    const auto nl = text.find('\n', pos);
    const bool last = nl == std::string_view::npos;
    const auto line = text.substr(pos, last ? std::string_view::npos : nl - pos);
    json rec;
    bool ok = true;
    try {
      rec = json::parse(line);
      ok = rec.is_object() && rec.contains("seq") && rec.contains("kind");
    } catch (const json::exception&) {
      ok = false;
    }
    if (!ok || last) {
      // Only the final line may be damaged; anything earlier is corruption.
      if (!last && !trim(text.substr(nl + 1)).empty())
        throw InvalidInput("event log line " + std::to_string(line_no) + " is malformed");
      if (!trim(line).empty())
        log.partial_tail = true;
      break;
    }
    const auto seq = rec.at("seq").get<std::uint64_t>();
    if (!log.gap_after && !log.records.empty()) {
      const auto prev = log.records.back().at("seq").get<std::uint64_t>();
      if (seq != prev + 1)
        log.gap_after = prev;
    }
    log.records.push_back(std::move(rec));
    pos = nl + 1;
    log.complete_bytes = pos;
  }
  return log;
}

EventLog read_event_log(const std::string& path) {
  if (!std::filesystem::exists(path))
    return {};
  return parse_event_log(read_file(path));
}

} // namespace filtercrawl
