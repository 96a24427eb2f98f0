#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "keydyn/ingest.hpp"
#include "keydyn/keys.hpp"
#include "keydyn/sequencing.hpp"

namespace keydyn {

// Flight times between two consecutive keystrokes, raw signed milliseconds.
struct DigraphFeatures {
  std::int64_t ud_ms = 0;  // release k1 -> press k2 (negative under rollover)
  std::int64_t dd_ms = 0;  // press k1 -> press k2
  std::int64_t du_ms = 0;  // press k1 -> release k2
  std::int64_t uu_ms = 0;  // release k1 -> release k2

  friend bool operator==(const DigraphFeatures&, const DigraphFeatures&) = default;
};

DigraphFeatures digraph_features(const Keystroke& first, const Keystroke& second);

enum class Channel : std::uint8_t { UD = 0, DD = 1, DU = 2, UU = 3, Duration = 4 };

inline constexpr std::size_t kChannels = 5;
inline constexpr std::size_t kChannelSize = kNumKeys * kNumKeys;  // 1764
inline constexpr std::size_t kFlatLength = kChannels * kChannelSize;  // 8820

constexpr std::size_t flat_index(std::size_t channel, std::size_t row, std::size_t col) {
  return channel * kChannelSize + row * kNumKeys + col;
}

// Keystroke Dynamics Image: a 5x42x42 tensor (channel, row, column) of mean
// timing values. Channels 0-3 hold the four digraph times for each ordered
// key pair; channel 4 holds the mean hold time on its diagonal.
class Kdi {
 public:
  Kdi() : values_(kFlatLength, 0.0f) {}

  float& at(std::size_t channel, std::size_t row, std::size_t col) {
    return values_[flat_index(channel, row, col)];
  }
  float at(std::size_t channel, std::size_t row, std::size_t col) const {
    return values_[flat_index(channel, row, col)];
  }
  float& at(Channel channel, KeyId row, KeyId col) {
    return at(static_cast<std::size_t>(channel), row.index, col.index);
  }
  float at(Channel channel, KeyId row, KeyId col) const {
    return at(static_cast<std::size_t>(channel), row.index, col.index);
  }

  std::span<float> values() { return values_; }
  std::span<const float> values() const { return values_; }

  friend bool operator==(const Kdi&, const Kdi&) = default;

 private:
  std::vector<float> values_;
};

// Channel-major, then row-major flattening of a Kdi (length 8820).
struct FlatVector {
  std::vector<float> values;

  friend bool operator==(const FlatVector&, const FlatVector&) = default;
};

Kdi build_kdi(std::span<const Keystroke> keystrokes);
Kdi build_kdi(const Subsequence& sub);

FlatVector flatten(const Kdi& kdi);
Kdi unflatten(const FlatVector& flat);  // throws DimensionMismatch unless length is 8820

// Number of non-zero cells across all five channels.
std::size_t populated_feature_count(const Kdi& kdi);

struct CutoutConfig {
  std::size_t square_size = 8;
  std::size_t count = 1;
  double probability = 0.5;

  void validate() const;
};

struct CutoutSquare {
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t size = 0;

  bool covers(std::size_t r, std::size_t c) const {
    return r >= row && r < row + size && c >= col && c < col + size;
  }
};

// Squares chosen for one sample; empty when the sample is not augmented.
std::vector<CutoutSquare> plan_cutout(const CutoutConfig& cfg, std::uint64_t seed);
Kdi apply_cutout(const Kdi& kdi, std::span<const CutoutSquare> squares);
Kdi apply_cutout(const Kdi& kdi, const CutoutConfig& cfg, std::uint64_t seed);

inline constexpr double kStddevFloor = 1e-8;

struct ChannelStats {
  std::array<double, kChannels> mean{};
  std::array<double, kChannels> stddev{};
};

// Per-channel z-score statistics over every cell of every training tensor.
ChannelStats fit_standardizer(std::span<const Kdi> train);
Kdi apply_standardizer(const Kdi& kdi, const ChannelStats& stats);

}  // namespace keydyn
