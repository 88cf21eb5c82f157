#include <doctest.h>

#include "brachy/errors.hpp"
#include "brachy/event_log.hpp"

using namespace brachy;
using nlohmann::json;

namespace {

LogFile sample() {
  EventLog log;
  log.append(0, 0.0, "command", json{{"cmd", "load_plan"}});
  log.append(5, 0.005, "transition", json{{"from", "IDLE"}, {"to", "PLAN_LOADED"}});
  log.append(5, 0.005, "seed", json{{"offset", 1.25}, {"placed", {0.1, -2.0, 60.0}}});
  LogFile f;
  f.config = json{{"safety", {{"release_threshold", 8.0}}}};
  f.events = log.events();
  f.end = LogEnd{10, "0123456789abcdef"};
  return f;
}

}  // namespace

TEST_CASE("append assigns consecutive sequence numbers") {
  EventLog log;
  CHECK(log.empty());
  CHECK(log.append(1, 0.001, "a", json::object()).seq == 1);
  CHECK(log.append(1, 0.001, "b", json::object()).seq == 2);
  CHECK(log.append(3, 0.003, "c", json::object()).seq == 3);
  CHECK(log.size() == 3);
  const auto tail = log.since(1);
  REQUIRE(tail.size() == 2);
  CHECK(tail[0].kind == "b");
  CHECK(log.since(3).empty());
}

TEST_CASE("write and read round trip") {
  const LogFile f = sample();
  const std::string text = write_log(f);
  const LogFile g = read_log(text);
  CHECK(g.config == f.config);
  CHECK(g.events == f.events);
  REQUIRE(g.end.has_value());
  CHECK(g.end->tick == 10);
  CHECK(g.end->digest == "0123456789abcdef");
  CHECK(write_log(g) == text);
}

TEST_CASE("empty input is an empty log") {
  const LogFile f = read_log("");
  CHECK(f.events.empty());
  CHECK_FALSE(f.end.has_value());
}

TEST_CASE("gaps and truncation") {
  const std::string text = write_log(sample());
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    lines.push_back(text.substr(pos, nl - pos + 1));
    pos = nl + 1;
  }
  REQUIRE(lines.size() == 5);

  std::string gap = lines[0] + lines[1] + lines[3] + lines[4];
  CHECK_THROWS_AS(read_log(gap), TruncatedLog);

  std::string cut = lines[0] + lines[1] + lines[2] + lines[3];
  CHECK_THROWS_AS(read_log(cut), TruncatedLog);

  std::string garbled = lines[0] + "{not json\n" + lines[4];
  CHECK_THROWS_AS(read_log(garbled), ParseError);

  CHECK_THROWS_AS(read_log(lines[1]), ParseError);  // no header
  CHECK_THROWS_AS(read_log(text + lines[1]), ParseError);  // content after end
}

TEST_CASE("fnv1a reference vectors") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}
