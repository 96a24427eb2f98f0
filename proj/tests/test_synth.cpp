#include <doctest.h>

#include <limits>
#include <set>
#include <sstream>

#include "keydyn/error.hpp"
#include "keydyn/synth.hpp"

using namespace keydyn;

TEST_CASE("corpus is deterministic in the seed") {
  GenConfig cfg;
  cfg.num_users = 3;
  cfg.sessions_per_user = 2;
  cfg.keystrokes_per_session = 300;
  cfg.seed = 17;
  const auto a = generate_corpus(cfg);
  const auto b = generate_corpus(cfg);
  REQUIRE(a.size() == 6);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].user_id == b[i].user_id);
    CHECK(a[i].keystrokes == b[i].keystrokes);
  }
  cfg.seed = 18;
  CHECK(generate_corpus(cfg)[0].keystrokes != a[0].keystrokes);
}

TEST_CASE("corpus layout and ids") {
  GenConfig cfg;
  cfg.num_users = 3;
  cfg.sessions_per_user = 1;
  cfg.keystrokes_per_session = 100;
  const auto corpus = generate_corpus(cfg);
  REQUIRE(corpus.size() == 3);
  for (std::size_t u = 0; u < 3; ++u) {
    CHECK(corpus[u].user_id == synthetic_user_id(u));
    CHECK(corpus[u].session_id == "session1");
    CHECK(corpus[u].keystrokes.size() == 100);
  }
  CHECK(synthetic_user_id(7) == "user007");
}

TEST_CASE("generated sessions survive a raw log round trip") {
  GenConfig cfg;
  cfg.num_users = 3;
  cfg.sessions_per_user = 1;
  cfg.keystrokes_per_session = 100;
  cfg.seed = 5;
  for (const auto& s : generate_corpus(cfg)) {
    std::stringstream log;
    write_log(log, s.keystrokes);
    IngestStats parse_stats;
    const auto events = parse_log(log, &parse_stats);
    const auto paired = pair_events(events);
    CHECK(paired.keystrokes == s.keystrokes);
    CHECK(paired.stats.orphan_ups_dropped == 0);
    CHECK(paired.stats.orphan_downs_dropped == 0);
    CHECK(paired.stats.unknown_key_events_dropped == 0);
  }
}

TEST_CASE("sessions are physically plausible") {
  GenConfig cfg;
  cfg.num_users = 4;
  cfg.sessions_per_user = 2;
  cfg.keystrokes_per_session = 1000;
  cfg.seed = 99;
  for (const auto& s : generate_corpus(cfg)) {
    std::array<std::int64_t, kNumKeys> last_up;
    last_up.fill(std::numeric_limits<std::int64_t>::min());
    for (std::size_t i = 0; i < s.keystrokes.size(); ++i) {
      const auto& k = s.keystrokes[i];
      CHECK(k.up_ms >= k.down_ms + 1);
      if (i > 0) CHECK(k.down_ms > s.keystrokes[i - 1].down_ms);
      CHECK(k.down_ms > last_up[k.key.index]);
      last_up[k.key.index] = k.up_ms;
    }
  }
}

TEST_CASE("vocabulary restricts emitted keys") {
  GenConfig cfg;
  cfg.num_users = 2;
  cfg.sessions_per_user = 1;
  cfg.keystrokes_per_session = 500;
  cfg.vocabulary = {keys::letter('E'), keys::letter('T'), keys::kSpace};
  std::set<std::uint8_t> seen;
  for (const auto& s : generate_corpus(cfg)) {
    for (const auto& k : s.keystrokes) seen.insert(k.key.index);
  }
  CHECK(seen == std::set<std::uint8_t>{keys::letter('E').index, keys::letter('T').index, keys::kSpace.index});
}

TEST_CASE("zero separation gives every user the same profile") {
  GenConfig cfg;
  cfg.num_users = 4;
  cfg.separation_factor = 0.0;
  const auto p = generate_profiles(cfg);
  REQUIRE(p.size() == 4);
  for (std::size_t u = 1; u < p.size(); ++u) {
    CHECK(p[u].hold_mean_ms == p[0].hold_mean_ms);
    CHECK(p[u].flight_mean_ms == p[0].flight_mean_ms);
  }
  cfg.separation_factor = 5.0;
  const auto q = generate_profiles(cfg);
  CHECK(q[1].hold_mean_ms != q[0].hold_mean_ms);
}

TEST_CASE("profiles are well formed") {
  GenConfig cfg;
  cfg.num_users = 6;
  cfg.separation_factor = 10.0;
  for (const auto& p : generate_profiles(cfg)) {
    REQUIRE(p.flight_mean_ms.size() == kNumKeys * kNumKeys);
    REQUIRE(p.flight_stddev_ms.size() == kNumKeys * kNumKeys);
    for (std::size_t k = 0; k < kNumKeys; ++k) {
      CHECK(p.hold_mean_ms[k] >= 5.0);
      CHECK(p.hold_stddev_ms[k] > 0.0);
    }
    for (double sd : p.flight_stddev_ms) CHECK(sd > 0.0);
  }
}

TEST_CASE("invalid generator configs") {
  GenConfig cfg;
  cfg.num_users = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = GenConfig{};
  cfg.separation_factor = -1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}
