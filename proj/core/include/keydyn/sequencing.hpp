#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "keydyn/ingest.hpp"

namespace keydyn {

struct WindowConfig {
  std::size_t length = 100;  // presets used in experiments: 50, 75, 100

  void validate() const;  // throws InvalidArgument if length < 2
};

struct Subsequence {
  std::string user_id;
  std::vector<Keystroke> keystrokes;
};

// Non-overlapping windows of exactly cfg.length keystrokes taken from the
// start of the session; the trailing remainder is discarded.
std::vector<Subsequence> window(const UserSession& session, const WindowConfig& cfg);

// Windows every session independently and concatenates the results in
// session order. Windows never span two sessions.
std::vector<Subsequence> window_all(std::span<const UserSession> sessions, const WindowConfig& cfg);

}  // namespace keydyn
