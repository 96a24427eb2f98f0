#include "keydyn/sequencing.hpp"

#include "keydyn/error.hpp"

namespace keydyn {

void WindowConfig::validate() const {
  if (length < 2) {
    throw Error(ErrorCode::InvalidArgument, "window length must be >= 2, got " + std::to_string(length));
  }
}

std::vector<Subsequence> window(const UserSession& session, const WindowConfig& cfg) {
  cfg.validate();
  const auto& ks = session.keystrokes;
  const std::size_t count = ks.size() / cfg.length;
  std::vector<Subsequence> out;
  out.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    const auto first = ks.begin() + static_cast<std::ptrdiff_t>(w * cfg.length);
    out.push_back({session.user_id, std::vector<Keystroke>(first, first + static_cast<std::ptrdiff_t>(cfg.length))});
  }
  return out;
}

std::vector<Subsequence> window_all(std::span<const UserSession> sessions, const WindowConfig& cfg) {
  std::vector<Subsequence> out;
  for (const auto& s : sessions) {
    auto w = window(s, cfg);
    out.insert(out.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
  }
  return out;
}

}  // namespace keydyn
