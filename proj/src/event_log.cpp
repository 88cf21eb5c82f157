#include "brachy/event_log.hpp"

#include <cstdio>

#include "brachy/errors.hpp"
#include "json_util.hpp"

namespace brachy {

using detail::json;

json ProcedureEvent::to_json() const {
  return json{{"seq", seq}, {"tick", tick}, {"t", sim_time}, {"kind", kind}, {"payload", payload}};
}

const ProcedureEvent& EventLog::append(std::uint64_t tick, double sim_time, std::string kind, json payload) {
  ProcedureEvent e;
  e.seq = events_.size() + 1;
  e.tick = tick;
  e.sim_time = sim_time;
  e.kind = std::move(kind);
  e.payload = std::move(payload);
  events_.push_back(std::move(e));
  return events_.back();
}

std::vector<ProcedureEvent> EventLog::since(std::uint64_t seq) const {
  if (seq >= events_.size()) return {};
  return {events_.begin() + static_cast<std::ptrdiff_t>(seq), events_.end()};
}

std::string write_log(const LogFile& log) {
  std::string out;
  out += json{{"log", kLogMagic}, {"version", kLogVersion}, {"config", log.config}}.dump() + "\n";
  for (const auto& e : log.events) out += e.to_json().dump() + "\n";
  if (log.end) out += json{{"end", {{"tick", log.end->tick}, {"digest", log.end->digest}}}}.dump() + "\n";
  return out;
}

namespace {

std::uint64_t as_u64(const json& j, const std::string& where) {
  if (!j.is_number_unsigned()) throw ParseError(where, "expected a non-negative integer");
  return j.get<std::uint64_t>();
}

}  // namespace

LogFile read_log(std::string_view text) {
  LogFile out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header = false;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    if (out.end) throw ParseError(where, "content after end record");

    json j;
    try {
      j = json::parse(line.begin(), line.end());
    } catch (const json::exception& e) {
      throw ParseError(where, e.what());
    }
    if (!j.is_object()) throw ParseError(where, "expected an object");

    try {
      if (!header) {
        if (j.value("log", std::string()) != kLogMagic) throw ParseError(where, "missing log header");
        if (j.value("version", 0) != kLogVersion) throw ParseError(where, "unsupported log version");
        out.config = j.value("config", json::object());
        header = true;
        continue;
      }
      if (auto it = j.find("end"); it != j.end()) {
        LogEnd end;
        end.tick = as_u64(it->at("tick"), where + " /end/tick");
        end.digest = detail::as_string(it->at("digest"), where + " /end/digest");
        out.end = end;
        continue;
      }
      ProcedureEvent e;
      e.seq = as_u64(detail::require_field(j, where, "seq"), where + " /seq");
      e.tick = as_u64(detail::require_field(j, where, "tick"), where + " /tick");
      e.sim_time = detail::as_number(detail::require_field(j, where, "t"), where + " /t");
      e.kind = detail::as_string(detail::require_field(j, where, "kind"), where + " /kind");
      e.payload = j.value("payload", json::object());
      const std::uint64_t expected = out.events.size() + 1;
      if (e.seq != expected) {
        throw TruncatedLog("seq gap at " + where + ": expected " + std::to_string(expected) + ", found " +
                           std::to_string(e.seq));
      }
      if (!out.events.empty() && e.tick < out.events.back().tick) {
        throw ParseError(where, "event ticks must not decrease");
      }
      out.events.push_back(std::move(e));
    } catch (const json::exception& e) {
      throw ParseError(where, e.what());
    }
  }
  if (header && !out.end) throw TruncatedLog("log has no end record");
  return out;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace brachy
