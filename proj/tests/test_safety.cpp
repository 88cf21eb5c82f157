#include <doctest.h>

#include <random>

#include "brachy/errors.hpp"
#include "brachy/safety.hpp"

using namespace brachy;

TEST_CASE("update trips strictly above the threshold") {
  const EngagementState s;
  CHECK(s.release_threshold == 8.0);
  const InterlockUpdate at = update(s, 8.0);
  CHECK_FALSE(at.state.tripped());
  CHECK_FALSE(at.trip.has_value());

  const InterlockUpdate over = update(s, 8.01);
  CHECK(over.state.tripped());
  REQUIRE(over.trip.has_value());
  CHECK(over.trip->force == 8.01);
  CHECK(over.trip->threshold == 8.0);
  CHECK(over.state.trip_force == 8.01);
  CHECK(to_string(over.state.status) == "TRIPPED");
}

TEST_CASE("tripped is absorbing") {
  EngagementState s = update(EngagementState{}, 9).state;
  for (double f : {0.0, 3.0, 100.0}) {
    const InterlockUpdate u = update(s, f);
    CHECK(u.state.tripped());
    CHECK_FALSE(u.trip.has_value());
    CHECK(u.state.trip_force == 9.0);
  }
  CHECK(transmitted_advance(s, 1.5) == 0.0);
  CHECK(transmitted_advance(EngagementState{}, 1.5) == 1.5);
}

TEST_CASE("update is monotone in the force trajectory") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 9);
  std::uniform_real_distribution<double> bump(0, 2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> a(50), b(50);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = u(rng);
      b[i] = a[i] + bump(rng);
    }
    auto first_trip = [](const std::vector<double>& f) {
      EngagementState s;
      for (std::size_t i = 0; i < f.size(); ++i) {
        s = update(s, f[i]).state;
        if (s.tripped()) return static_cast<long>(i);
      }
      return -1L;
    };
    const long ta = first_trip(a), tb = first_trip(b);
    if (ta >= 0) {
      REQUIRE(tb >= 0);
      CHECK(tb <= ta);
    }
  }
}

TEST_CASE("manual retract") {
  const EngagementState tripped = update(EngagementState{}, 9).state;
  CHECK(manual_retract(tripped, false, 40, 10) == 30);
  CHECK(manual_retract(tripped, false, 5, 10) == 0);
  CHECK(manual_retract(EngagementState{}, true, 12, 2) == 10);
  CHECK_THROWS_AS(manual_retract(EngagementState{}, false, 40, 10), NotPermitted);
  CHECK_THROWS(manual_retract(tripped, false, 40, -1));
}

TEST_CASE("rehome") {
  const EngagementState tripped = update(EngagementState{}, 9).state;
  const EngagementState home = rehome(tripped, 0);
  CHECK_FALSE(home.tripped());
  CHECK(home.trip_force == 0.0);
  CHECK(home.release_threshold == tripped.release_threshold);
  CHECK_THROWS_AS(rehome(tripped, 3), NotAtHome);
}
