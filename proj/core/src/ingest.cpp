#include "keydyn/ingest.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <deque>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "keydyn/error.hpp"

namespace keydyn {
namespace {

bool iequals(std::string_view a, std::string_view b) {
  return std::equal(a.begin(), a.end(), b.begin(), b.end(), [](char x, char y) {
    return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
  });
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

[[noreturn]] void malformed(std::uint64_t line_number, std::string_view why) {
  throw Error(ErrorCode::MalformedLine,
              "malformed line " + std::to_string(line_number) + ": " + std::string(why));
}

}  // namespace

std::vector<RawEvent> parse_log(std::istream& in, IngestStats* stats) {
  std::vector<RawEvent> events;
  std::string line;
  std::uint64_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (tokens.size() != 3) malformed(line_number, "expected 3 columns, got " + std::to_string(tokens.size()));

    RawEvent ev;
    ev.key_name = std::string(tokens[0]);
    if (iequals(tokens[1], "KeyDown")) {
      ev.action = KeyAction::Down;
    } else if (iequals(tokens[1], "KeyUp")) {
      ev.action = KeyAction::Up;
    } else {
      malformed(line_number, "unknown action '" + std::string(tokens[1]) + "'");
    }
    const auto ts = tokens[2];
    auto [ptr, ec] = std::from_chars(ts.data(), ts.data() + ts.size(), ev.timestamp_ms);
    if (ec != std::errc() || ptr != ts.data() + ts.size() || ev.timestamp_ms < 0) {
      malformed(line_number, "timestamp '" + std::string(ts) + "' is not a non-negative integer");
    }
    events.push_back(std::move(ev));
  }
  if (stats) {
    stats->lines_read += line_number;
    stats->events_parsed += events.size();
  }
  return events;
}

PairingResult pair_events(std::span<const RawEvent> events, const PairingOptions& options) {
  const KeyVocabulary& vocab = options.vocabulary ? *options.vocabulary : KeyVocabulary::standard();

  for (std::size_t i = 1; i < events.size(); ++i) {
    if (events[i].timestamp_ms + options.monotonic_tolerance_ms < events[i - 1].timestamp_ms) {
      throw Error(ErrorCode::NonMonotonicTimestamps,
                  "event " + std::to_string(i + 1) + " at " + std::to_string(events[i].timestamp_ms) +
                      " ms precedes previous event at " + std::to_string(events[i - 1].timestamp_ms) + " ms");
    }
  }

  struct Pending {
    std::int64_t down_ms;
    std::size_t order;  // position among in-vocabulary Down events
  };
  struct Emitted {
    Keystroke ks;
    std::size_t order;
  };

  PairingResult result;
  std::array<std::deque<Pending>, kNumKeys> pending;
  std::vector<Emitted> emitted;
  std::size_t down_order = 0;

  for (const RawEvent& ev : events) {
    const auto key = vocab.lookup(ev.key_name);
    if (!key) {
      ++result.stats.unknown_key_events_dropped;
      continue;
    }
    auto& queue = pending[key->index];
    if (ev.action == KeyAction::Down) {
      queue.push_back({ev.timestamp_ms, down_order++});
    } else if (queue.empty()) {
      ++result.stats.orphan_ups_dropped;
    } else {
      const Pending p = queue.front();
      queue.pop_front();
      emitted.push_back({Keystroke{*key, p.down_ms, std::max(ev.timestamp_ms, p.down_ms)}, p.order});
    }
  }
  for (const auto& queue : pending) result.stats.orphan_downs_dropped += queue.size();

  std::sort(emitted.begin(), emitted.end(), [](const Emitted& a, const Emitted& b) {
    if (a.ks.down_ms != b.ks.down_ms) return a.ks.down_ms < b.ks.down_ms;
    return a.order < b.order;
  });
  result.keystrokes.reserve(emitted.size());
  for (const auto& e : emitted) result.keystrokes.push_back(e.ks);
  return result;
}

std::vector<RawEvent> keystrokes_to_events(std::span<const Keystroke> keystrokes) {
  struct Tagged {
    RawEvent ev;
    std::size_t order;
  };
  std::vector<Tagged> tagged;
  tagged.reserve(keystrokes.size() * 2);
  for (std::size_t i = 0; i < keystrokes.size(); ++i) {
    const auto& ks = keystrokes[i];
    const std::string name(canonical_key_name(ks.key));
    tagged.push_back({RawEvent{name, KeyAction::Down, ks.down_ms}, i});
    tagged.push_back({RawEvent{name, KeyAction::Up, ks.up_ms}, i});
  }
  std::stable_sort(tagged.begin(), tagged.end(), [](const Tagged& a, const Tagged& b) {
    if (a.ev.timestamp_ms != b.ev.timestamp_ms) return a.ev.timestamp_ms < b.ev.timestamp_ms;
    if (a.ev.action != b.ev.action) return a.ev.action == KeyAction::Down;
    return a.order < b.order;
  });
  std::vector<RawEvent> events;
  events.reserve(tagged.size());
  for (auto& t : tagged) events.push_back(std::move(t.ev));
  return events;
}

void write_log(std::ostream& out, std::span<const Keystroke> keystrokes) {
  for (const RawEvent& ev : keystrokes_to_events(keystrokes)) {
    out << ev.key_name << ' ' << (ev.action == KeyAction::Down ? "KeyDown" : "KeyUp") << ' '
        << ev.timestamp_ms << '\n';
  }
}

UserSession load_session(const std::filesystem::path& path, std::string user_id, std::string session_id,
                         const PairingOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  UserSession session;
  session.user_id = std::move(user_id);
  session.session_id = std::move(session_id);
  try {
    const auto events = parse_log(in, &session.stats);
    auto paired = pair_events(events, options);
    session.keystrokes = std::move(paired.keystrokes);
    session.stats.unknown_key_events_dropped = paired.stats.unknown_key_events_dropped;
    session.stats.orphan_downs_dropped = paired.stats.orphan_downs_dropped;
    session.stats.orphan_ups_dropped = paired.stats.orphan_ups_dropped;
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
  return session;
}

std::vector<UserSession> load_log_directory(const std::filesystem::path& root,
                                            const std::optional<std::filesystem::path>& manifest,
                                            const PairingOptions& options) {
  namespace fs = std::filesystem;
  struct Entry {
    fs::path path;
    std::string user_id;
    std::string session_id;
  };
  std::vector<Entry> entries;

  if (manifest) {
    std::ifstream in(*manifest);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + manifest->string());
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
      for (const auto& s : doc.at("sessions")) {
        fs::path p = s.at("path").get<std::string>();
        if (p.is_relative()) p = root / p;
        entries.push_back({p, s.at("user_id").get<std::string>(), s.at("session_id").get<std::string>()});
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ManifestError, manifest->string() + ": " + e.what());
    }
  } else {
    if (!fs::is_directory(root)) throw Error(ErrorCode::Io, root.string() + " is not a directory");
    for (const auto& user_dir : fs::directory_iterator(root)) {
      if (!user_dir.is_directory()) continue;
      for (const auto& file : fs::directory_iterator(user_dir.path())) {
        if (!file.is_regular_file() || file.path().extension() != ".txt") continue;
        entries.push_back({file.path(), user_dir.path().filename().string(), file.path().stem().string()});
      }
    }
  }

  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return std::tie(a.user_id, a.session_id) < std::tie(b.user_id, b.session_id);
  });
  std::vector<UserSession> sessions;
  sessions.reserve(entries.size());
  for (const auto& e : entries) sessions.push_back(load_session(e.path, e.user_id, e.session_id, options));
  return sessions;
}

}  // namespace keydyn
