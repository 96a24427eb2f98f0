#include "keydyn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "keydyn/error.hpp"

namespace keydyn {
namespace {

// Spread of per-user mean offsets, in ms per unit of separation_factor.
constexpr double kHoldSpreadMs = 3.0;
constexpr double kFlightSpreadMs = 6.0;
constexpr double kMinHoldMeanMs = 5.0;
constexpr double kRateJitter = 0.03;
constexpr std::int64_t kSessionStartMs = 1000;
constexpr std::uint64_t kBaseStream = 0x9E3779B97F4A7C15ull;

struct SharedModel {
  UserProfile base;
  std::vector<KeyId> keys;
  std::vector<double> weights;
};

SharedModel make_shared_model(const GenConfig& cfg) {
  SharedModel m;
  std::mt19937_64 rng(cfg.seed ^ kBaseStream);

  auto& b = m.base;
  b.flight_mean_ms.assign(kChannelSize, 0.0);
  b.flight_stddev_ms.assign(kChannelSize, 0.0);
  std::uniform_real_distribution<double> hold_mean(70.0, 130.0);
  std::uniform_real_distribution<double> hold_sd(10.0, 18.0);
  std::uniform_real_distribution<double> flight_mean(20.0, 220.0);
  std::uniform_real_distribution<double> flight_sd(20.0, 40.0);
  for (std::size_t k = 0; k < kNumKeys; ++k) {
    b.hold_mean_ms[k] = hold_mean(rng);
    b.hold_stddev_ms[k] = hold_sd(rng);
  }
  for (std::size_t i = 0; i < kChannelSize; ++i) {
    b.flight_mean_ms[i] = flight_mean(rng);
    b.flight_stddev_ms[i] = flight_sd(rng);
  }
  b.rate_jitter = kRateJitter;

  if (cfg.vocabulary.empty()) {
    for (std::size_t k = 0; k < kNumKeys; ++k) m.keys.push_back(KeyId(static_cast<std::uint8_t>(k)));
  } else {
    m.keys = cfg.vocabulary;
  }
  // Zipf-like key frequencies over a seeded permutation of the vocabulary,
  // identical for every user.
  std::vector<std::size_t> rank(m.keys.size());
  std::iota(rank.begin(), rank.end(), 0);
  std::shuffle(rank.begin(), rank.end(), rng);
  m.weights.resize(m.keys.size());
  for (std::size_t i = 0; i < m.keys.size(); ++i) m.weights[i] = 1.0 / std::pow(static_cast<double>(rank[i] + 1), 0.8);
  return m;
}

UserProfile perturb(const UserProfile& base, double separation, std::mt19937_64& rng) {
  UserProfile p = base;
  if (separation <= 0.0) return p;
  std::normal_distribution<double> z(0.0, 1.0);
  for (std::size_t k = 0; k < kNumKeys; ++k) {
    p.hold_mean_ms[k] = std::max(kMinHoldMeanMs, base.hold_mean_ms[k] + separation * kHoldSpreadMs * z(rng));
  }
  for (std::size_t i = 0; i < kChannelSize; ++i) {
    p.flight_mean_ms[i] = base.flight_mean_ms[i] + separation * kFlightSpreadMs * z(rng);
  }
  return p;
}

std::vector<Keystroke> simulate_session(const UserProfile& p, const SharedModel& shared, std::size_t length,
                                        std::mt19937_64& rng) {
  std::discrete_distribution<std::size_t> pick(shared.weights.begin(), shared.weights.end());
  std::normal_distribution<double> z(0.0, 1.0);
  const double tempo = std::max(0.5, 1.0 + p.rate_jitter * z(rng));

  std::vector<Keystroke> out;
  out.reserve(length);
  std::array<std::int64_t, kNumKeys> last_up;
  last_up.fill(-1);

  for (std::size_t t = 0; t < length; ++t) {
    const KeyId key = shared.keys[pick(rng)];
    const double hold_draw = p.hold_mean_ms[key.index] + p.hold_stddev_ms[key.index] * z(rng);
    const std::int64_t hold = std::max<std::int64_t>(1, std::llround(hold_draw));

    std::int64_t down = kSessionStartMs;
    if (!out.empty()) {
      const Keystroke& prev = out.back();
      const std::size_t cell = prev.key.index * kNumKeys + key.index;
      const double ud = (p.flight_mean_ms[cell] + p.flight_stddev_ms[cell] * z(rng)) * tempo;
      down = prev.up_ms + std::llround(ud);
      down = std::max(down, prev.down_ms + 1);
    }
    if (last_up[key.index] >= 0) down = std::max(down, last_up[key.index] + 1);

    out.push_back(Keystroke{key, down, down + hold});
    last_up[key.index] = down + hold;
  }
  return out;
}

}  // namespace

void GenConfig::validate() const {
  if (num_users < 1) throw Error(ErrorCode::InvalidArgument, "num_users must be >= 1");
  if (keystrokes_per_session < 2) throw Error(ErrorCode::InvalidArgument, "keystrokes_per_session must be >= 2");
  if (!(separation_factor >= 0.0)) throw Error(ErrorCode::InvalidArgument, "separation_factor must be >= 0");
  for (KeyId k : vocabulary) {
    if (k.index >= kNumKeys) throw Error(ErrorCode::InvalidArgument, "vocabulary key out of range");
  }
}

std::string synthetic_user_id(std::size_t user_index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "user%03zu", user_index);
  return buf;
}

std::vector<UserProfile> generate_profiles(const GenConfig& cfg) {
  cfg.validate();
  const SharedModel shared = make_shared_model(cfg);
  std::vector<UserProfile> profiles;
  profiles.reserve(cfg.num_users);
  for (std::size_t u = 0; u < cfg.num_users; ++u) {
    std::mt19937_64 rng(cfg.seed + u);
    profiles.push_back(perturb(shared.base, cfg.separation_factor, rng));
  }
  return profiles;
}

std::vector<UserSession> generate_corpus(const GenConfig& cfg) {
  cfg.validate();
  const SharedModel shared = make_shared_model(cfg);
  std::vector<UserSession> sessions;
  sessions.reserve(cfg.num_users * cfg.sessions_per_user);
  for (std::size_t u = 0; u < cfg.num_users; ++u) {
    std::mt19937_64 rng(cfg.seed + u);
    const UserProfile profile = perturb(shared.base, cfg.separation_factor, rng);
    for (std::size_t s = 0; s < cfg.sessions_per_user; ++s) {
      UserSession session;
      session.user_id = synthetic_user_id(u);
      session.session_id = "session" + std::to_string(s + 1);
      session.keystrokes = simulate_session(profile, shared, cfg.keystrokes_per_session, rng);
      session.stats.events_parsed = 2 * session.keystrokes.size();
      session.stats.lines_read = session.stats.events_parsed;
      sessions.push_back(std::move(session));
    }
  }
  return sessions;
}

}  // namespace keydyn
