#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "keydyn/ingest.hpp"
#include "keydyn/kdi.hpp"
#include "keydyn/keys.hpp"

namespace keydyn {

// Gaussian timing model for one synthetic typist.
struct UserProfile {
  std::array<double, kNumKeys> hold_mean_ms{};
  std::array<double, kNumKeys> hold_stddev_ms{};
  std::vector<double> flight_mean_ms;    // kNumKeys x kNumKeys, UD time for pair (i, j)
  std::vector<double> flight_stddev_ms;  // kNumKeys x kNumKeys
  double rate_jitter = 0.0;              // stddev of the per-session tempo multiplier
};

struct GenConfig {
  std::size_t num_users = 10;
  std::size_t sessions_per_user = 3;
  std::size_t keystrokes_per_session = 2000;
  std::vector<KeyId> vocabulary;  // empty -> all 42 keys
  double separation_factor = 5.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Profiles for every user. With separation_factor == 0 all users share the
// base profile; otherwise each user's means are offset from it by Gaussian
// perturbations whose scale grows linearly with separation_factor.
std::vector<UserProfile> generate_profiles(const GenConfig& cfg);

// One session per (user, session) pair, ordered user-major. User u is
// simulated from its own engine seeded with cfg.seed + u, so users can be
// generated independently. Hold times are truncated at 1 ms; flight times
// may be negative (rollover) but a key is never pressed while still held.
std::vector<UserSession> generate_corpus(const GenConfig& cfg);

std::string synthetic_user_id(std::size_t user_index);

}  // namespace keydyn
