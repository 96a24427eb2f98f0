#include "keydyn/kdi.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "keydyn/error.hpp"

namespace keydyn {

DigraphFeatures digraph_features(const Keystroke& first, const Keystroke& second) {
  return DigraphFeatures{
      .ud_ms = second.down_ms - first.up_ms,
      .dd_ms = second.down_ms - first.down_ms,
      .du_ms = second.up_ms - first.down_ms,
      .uu_ms = second.up_ms - first.up_ms,
  };
}

Kdi build_kdi(std::span<const Keystroke> keystrokes) {
  if (keystrokes.size() < 2) {
    throw Error(ErrorCode::SubsequenceTooShort,
                "subsequence needs at least 2 keystrokes, got " + std::to_string(keystrokes.size()));
  }

  // Integer sums are exact in double well past any realistic window, so the
  // mean does not depend on accumulation order.
  std::vector<double> pair_sum(4 * kChannelSize, 0.0);
  std::vector<std::uint32_t> pair_count(kChannelSize, 0);
  std::array<double, kNumKeys> hold_sum{};
  std::array<std::uint32_t, kNumKeys> hold_count{};

  for (std::size_t t = 0; t + 1 < keystrokes.size(); ++t) {
    const auto& a = keystrokes[t];
    const auto& b = keystrokes[t + 1];
    const auto f = digraph_features(a, b);
    const std::size_t cell = a.key.index * kNumKeys + b.key.index;
    pair_sum[0 * kChannelSize + cell] += static_cast<double>(f.ud_ms);
    pair_sum[1 * kChannelSize + cell] += static_cast<double>(f.dd_ms);
    pair_sum[2 * kChannelSize + cell] += static_cast<double>(f.du_ms);
    pair_sum[3 * kChannelSize + cell] += static_cast<double>(f.uu_ms);
    ++pair_count[cell];
  }
  for (const auto& ks : keystrokes) {
    hold_sum[ks.key.index] += static_cast<double>(ks.duration_ms());
    ++hold_count[ks.key.index];
  }

  Kdi kdi;
  auto out = kdi.values();
  for (std::size_t cell = 0; cell < kChannelSize; ++cell) {
    if (pair_count[cell] == 0) continue;
    for (std::size_t c = 0; c < 4; ++c) {
      out[c * kChannelSize + cell] = static_cast<float>(pair_sum[c * kChannelSize + cell] / pair_count[cell]);
    }
  }
  for (std::size_t k = 0; k < kNumKeys; ++k) {
    if (hold_count[k] == 0) continue;
    kdi.at(4, k, k) = static_cast<float>(hold_sum[k] / hold_count[k]);
  }
  return kdi;
}

Kdi build_kdi(const Subsequence& sub) { return build_kdi(sub.keystrokes); }

FlatVector flatten(const Kdi& kdi) {
  const auto v = kdi.values();
  return FlatVector{std::vector<float>(v.begin(), v.end())};
}

Kdi unflatten(const FlatVector& flat) {
  if (flat.values.size() != kFlatLength) {
    throw Error(ErrorCode::DimensionMismatch,
                "flat vector has length " + std::to_string(flat.values.size()) + ", expected 8820");
  }
  Kdi kdi;
  std::copy(flat.values.begin(), flat.values.end(), kdi.values().begin());
  return kdi;
}

std::size_t populated_feature_count(const Kdi& kdi) {
  const auto v = kdi.values();
  return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](float x) { return x != 0.0f; }));
}

void CutoutConfig::validate() const {
  if (square_size < 1 || square_size > kNumKeys) {
    throw Error(ErrorCode::InvalidArgument, "cutout square size must be in [1, 42]");
  }
  if (!(probability >= 0.0 && probability <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "cutout probability must be in [0, 1]");
  }
}

std::vector<CutoutSquare> plan_cutout(const CutoutConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::vector<CutoutSquare> squares;
  if (cfg.count == 0 || cfg.probability <= 0.0) return squares;

  std::mt19937_64 rng(seed);
  std::bernoulli_distribution apply(cfg.probability);
  if (!apply(rng)) return squares;

  std::uniform_int_distribution<std::size_t> pos(0, kNumKeys - cfg.square_size);
  squares.reserve(cfg.count);
  for (std::size_t i = 0; i < cfg.count; ++i) {
    const std::size_t row = pos(rng);
    const std::size_t col = pos(rng);
    squares.push_back({row, col, cfg.square_size});
  }
  return squares;
}

Kdi apply_cutout(const Kdi& kdi, std::span<const CutoutSquare> squares) {
  Kdi out = kdi;
  for (const auto& sq : squares) {
    for (std::size_t c = 0; c < kChannels; ++c) {
      for (std::size_t r = sq.row; r < std::min(sq.row + sq.size, kNumKeys); ++r) {
        for (std::size_t col = sq.col; col < std::min(sq.col + sq.size, kNumKeys); ++col) {
          out.at(c, r, col) = 0.0f;
        }
      }
    }
  }
  return out;
}

Kdi apply_cutout(const Kdi& kdi, const CutoutConfig& cfg, std::uint64_t seed) {
  return apply_cutout(kdi, plan_cutout(cfg, seed));
}

ChannelStats fit_standardizer(std::span<const Kdi> train) {
  if (train.empty()) throw Error(ErrorCode::EmptyTrainingSet, "cannot fit standardizer on an empty training set");

  ChannelStats stats;
  const double n = static_cast<double>(train.size() * kChannelSize);
  for (std::size_t c = 0; c < kChannels; ++c) {
    double sum = 0.0;
    for (const auto& k : train) {
      const auto v = k.values().subspan(c * kChannelSize, kChannelSize);
      for (float x : v) sum += x;
    }
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& k : train) {
      const auto v = k.values().subspan(c * kChannelSize, kChannelSize);
      for (float x : v) ss += (x - mean) * (x - mean);
    }
    stats.mean[c] = mean;
    stats.stddev[c] = std::max(std::sqrt(ss / n), kStddevFloor);
  }
  return stats;
}

Kdi apply_standardizer(const Kdi& kdi, const ChannelStats& stats) {
  Kdi out;
  auto dst = out.values();
  const auto src = kdi.values();
  for (std::size_t c = 0; c < kChannels; ++c) {
    const double sd = std::max(stats.stddev[c], kStddevFloor);
    for (std::size_t i = c * kChannelSize; i < (c + 1) * kChannelSize; ++i) {
      dst[i] = static_cast<float>((src[i] - stats.mean[c]) / sd);
    }
  }
  return out;
}

}  // namespace keydyn
