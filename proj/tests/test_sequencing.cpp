#include <doctest.h>

#include "keydyn/error.hpp"
#include "keydyn/sequencing.hpp"

using namespace keydyn;

namespace {

UserSession session_of(std::size_t n, const std::string& user = "u") {
  UserSession s;
  s.user_id = user;
  s.session_id = "s";
  for (std::size_t i = 0; i < n; ++i) {
    const auto t = static_cast<std::int64_t>(i * 100);
    s.keystrokes.push_back({KeyId(static_cast<std::uint8_t>(i % kNumKeys)), t, t + 50});
  }
  return s;
}

}  // namespace

TEST_CASE("window examples") {
  CHECK(window(session_of(250), WindowConfig{100}).size() == 2);
  CHECK(window(session_of(100), WindowConfig{100}).size() == 1);
  CHECK(window(session_of(49), WindowConfig{50}).empty());
}

TEST_CASE("windows are consecutive, non-overlapping and exactly L long") {
  for (std::size_t n : {0u, 1u, 2u, 3u, 77u, 150u, 301u}) {
    for (std::size_t len : {2u, 3u, 50u, 75u, 100u}) {
      const auto s = session_of(n);
      const auto w = window(s, WindowConfig{len});
      REQUIRE(w.size() == n / len);
      std::vector<Keystroke> joined;
      for (const auto& sub : w) {
        CHECK(sub.keystrokes.size() == len);
        CHECK(sub.user_id == "u");
        joined.insert(joined.end(), sub.keystrokes.begin(), sub.keystrokes.end());
      }
      CHECK(std::equal(joined.begin(), joined.end(), s.keystrokes.begin()));
    }
  }
}

TEST_CASE("window_all never spans sessions") {
  const std::vector<UserSession> sessions = {session_of(150, "a"), session_of(150, "a"), session_of(90, "b")};
  const auto w = window_all(sessions, WindowConfig{100});
  REQUIRE(w.size() == 2);
  CHECK(w[0].keystrokes.front().down_ms == 0);
  CHECK(w[1].keystrokes.front().down_ms == 0);
}

TEST_CASE("window length below 2 is rejected") {
  CHECK_THROWS_AS(window(session_of(10), WindowConfig{1}), Error);
  CHECK_THROWS_AS(WindowConfig{0}.validate(), Error);
}
