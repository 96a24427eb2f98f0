#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace keydyn {

inline constexpr std::size_t kNumKeys = 42;

// Index into the fixed 42-key vocabulary:
//   A-Z -> 0..25, digits 0-9 -> 26..35, space 36, back 37,
//   left-shift 38, right-shift 39, tab 40, capital 41.
struct KeyId {
  std::uint8_t index = 0;

  constexpr KeyId() = default;
  constexpr explicit KeyId(std::uint8_t i) : index(i) {}

  friend constexpr auto operator<=>(const KeyId&, const KeyId&) = default;
};

namespace keys {
inline constexpr KeyId kSpace{36};
inline constexpr KeyId kBack{37};
inline constexpr KeyId kLeftShift{38};
inline constexpr KeyId kRightShift{39};
inline constexpr KeyId kTab{40};
inline constexpr KeyId kCapital{41};

constexpr KeyId letter(char upper) { return KeyId(static_cast<std::uint8_t>(upper - 'A')); }
constexpr KeyId digit(int d) { return KeyId(static_cast<std::uint8_t>(26 + d)); }
}  // namespace keys

// Name written back out when serializing keystrokes ("A", "7", "space", ...).
std::string_view canonical_key_name(KeyId key);

// Case-insensitive name -> KeyId table. The default table accepts the
// canonical names plus the .NET-style names found in free-text keystroke
// logs (BackSpace, LShiftKey, D0..D9, CapsLock, ...). Extra aliases can be
// registered for other log dialects.
class KeyVocabulary {
 public:
  static const KeyVocabulary& standard();

  KeyVocabulary();

  void add_alias(std::string_view name, KeyId key);
  std::optional<KeyId> lookup(std::string_view name) const;

 private:
  std::map<std::string, KeyId, std::less<>> table_;
};

std::optional<KeyId> normalize_key(std::string_view name);
std::optional<KeyId> normalize_key(std::string_view name, const KeyVocabulary& vocab);

}  // namespace keydyn
