#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace brachy {

struct ProcedureEvent {
  std::uint64_t seq = 0;
  std::uint64_t tick = 0;  // commands are applied between tick `tick` and `tick + 1`
  double sim_time = 0.0;
  std::string kind;
  nlohmann::json payload = nlohmann::json::object();

  nlohmann::json to_json() const;
  bool operator==(const ProcedureEvent&) const = default;
};

// Append-only; seq starts at 1 and increases by one per event.
class EventLog {
 public:
  const ProcedureEvent& append(std::uint64_t tick, double sim_time, std::string kind, nlohmann::json payload);

  const std::vector<ProcedureEvent>& events() const noexcept { return events_; }
  std::size_t size() const noexcept { return events_.size(); }
  bool empty() const noexcept { return events_.empty(); }
  std::vector<ProcedureEvent> since(std::uint64_t seq) const;

 private:
  std::vector<ProcedureEvent> events_;
};

struct LogEnd {
  std::uint64_t tick = 0;
  std::string digest;
};

// On-disk form: newline-delimited JSON. First line is the header carrying the
// controller config, then one line per event, then {"end": {tick, digest}}.
struct LogFile {
  nlohmann::json config = nlohmann::json::object();
  std::vector<ProcedureEvent> events;
  std::optional<LogEnd> end;
};

inline constexpr std::string_view kLogMagic = "brachy-events";
inline constexpr int kLogVersion = 1;

std::string write_log(const LogFile& log);

// Empty input yields an empty LogFile. Throws ParseError for malformed lines
// and TruncatedLog for seq gaps or a missing end record.
LogFile read_log(std::string_view text);

// 64-bit FNV-1a as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace brachy
