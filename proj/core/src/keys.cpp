#include "keydyn/keys.hpp"

#include <array>
#include <cctype>

namespace keydyn {
namespace {

constexpr std::array<std::string_view, kNumKeys> kCanonical = {
    "A", "B", "C", "D", "E", "F", "G", "H", "I", "J", "K", "L", "M", "N",
    "O", "P", "Q", "R", "S", "T", "U", "V", "W", "X", "Y", "Z", "0", "1",
    "2", "3", "4", "5", "6", "7", "8", "9", "space", "back", "left-shift",
    "right-shift", "tab", "capital"};

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::string_view canonical_key_name(KeyId key) { return kCanonical.at(key.index); }

KeyVocabulary::KeyVocabulary() {
  for (std::size_t i = 0; i < kNumKeys; ++i) {
    add_alias(kCanonical[i], KeyId(static_cast<std::uint8_t>(i)));
  }
  for (int d = 0; d < 10; ++d) {
    add_alias("D" + std::to_string(d), keys::digit(d));
  }
  add_alias("BackSpace", keys::kBack);
  add_alias("LShiftKey", keys::kLeftShift);
  add_alias("LShift", keys::kLeftShift);
  add_alias("RShiftKey", keys::kRightShift);
  add_alias("RShift", keys::kRightShift);
  add_alias("CapsLock", keys::kCapital);
  add_alias("Caps", keys::kCapital);
}

const KeyVocabulary& KeyVocabulary::standard() {
  static const KeyVocabulary vocab;
  return vocab;
}

void KeyVocabulary::add_alias(std::string_view name, KeyId key) { table_[lower(name)] = key; }

std::optional<KeyId> KeyVocabulary::lookup(std::string_view name) const {
  auto it = table_.find(lower(name));
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

std::optional<KeyId> normalize_key(std::string_view name) {
  return KeyVocabulary::standard().lookup(name);
}

std::optional<KeyId> normalize_key(std::string_view name, const KeyVocabulary& vocab) {
  return vocab.lookup(name);
}

}  // namespace keydyn
