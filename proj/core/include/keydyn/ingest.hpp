#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "keydyn/keys.hpp"

namespace keydyn {

enum class KeyAction : std::uint8_t { Down, Up };

struct RawEvent {
  std::string key_name;
  KeyAction action = KeyAction::Down;
  std::int64_t timestamp_ms = 0;

  friend bool operator==(const RawEvent&, const RawEvent&) = default;
};

// One paired press/release. up_ms >= down_ms.
struct Keystroke {
  KeyId key;
  std::int64_t down_ms = 0;
  std::int64_t up_ms = 0;

  std::int64_t duration_ms() const { return up_ms - down_ms; }

  friend bool operator==(const Keystroke&, const Keystroke&) = default;
};

struct IngestStats {
  std::uint64_t lines_read = 0;
  std::uint64_t events_parsed = 0;
  std::uint64_t unknown_key_events_dropped = 0;
  std::uint64_t orphan_downs_dropped = 0;
  std::uint64_t orphan_ups_dropped = 0;

  friend bool operator==(const IngestStats&, const IngestStats&) = default;
};

struct UserSession {
  std::string user_id;
  std::string session_id;
  std::vector<Keystroke> keystrokes;  // sorted by down_ms
  IngestStats stats;
};

// Parses "<key> <KeyDown|KeyUp> <timestamp_ms>" lines. Blank lines are
// skipped; CRLF is accepted. Throws Error(MalformedLine) naming the 1-based
// line number. lines_read / events_parsed are added to `stats` if given.
std::vector<RawEvent> parse_log(std::istream& in, IngestStats* stats = nullptr);

struct PairingOptions {
  // An event may precede its predecessor by at most this many ms.
  std::int64_t monotonic_tolerance_ms = 0;
  const KeyVocabulary* vocabulary = nullptr;  // nullptr -> standard table
};

struct PairingResult {
  std::vector<Keystroke> keystrokes;
  IngestStats stats;  // drop counters only
};

// Drops out-of-vocabulary events, then matches each Up with the earliest
// pending Down of the same key. Unmatched Downs/Ups are dropped and counted.
// Output is ordered by down_ms (ties keep the order of the Down events).
PairingResult pair_events(std::span<const RawEvent> events, const PairingOptions& options = {});

// Inverse of pair_events for a clean keystroke list: emits the Down/Up events
// in time order, Downs before Ups at equal timestamps.
std::vector<RawEvent> keystrokes_to_events(std::span<const Keystroke> keystrokes);
void write_log(std::ostream& out, std::span<const Keystroke> keystrokes);

UserSession load_session(const std::filesystem::path& path, std::string user_id,
                         std::string session_id, const PairingOptions& options = {});

// Loads every `<user_id>/<session_id>.txt` under `root`. If `manifest` is
// given it replaces the directory convention: a JSON document of the form
//   {"sessions": [{"path": "rel/or/abs.txt", "user_id": "...", "session_id": "..."}]}
// with relative paths resolved against `root`. Sessions are returned sorted by
// (user_id, session_id).
std::vector<UserSession> load_log_directory(const std::filesystem::path& root,
                                            const std::optional<std::filesystem::path>& manifest = std::nullopt,
                                            const PairingOptions& options = {});

}  // namespace keydyn
