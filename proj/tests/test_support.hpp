#pragma once

#include <unistd.h>

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "keydyn/eval.hpp"
#include "keydyn/forest.hpp"
#include "keydyn/ingest.hpp"
#include "keydyn/kdi.hpp"
#include "keydyn/pipeline.hpp"
#include "keydyn/synth.hpp"

namespace keydyn::testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("keydyn_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Random time-ordered keystrokes over the first `num_keys` keys, with
// occasional rollover (next press before the previous release).
inline std::vector<Keystroke> random_keystrokes(std::mt19937_64& rng, std::size_t length, std::size_t num_keys) {
  std::uniform_int_distribution<std::size_t> key(0, num_keys - 1);
  std::uniform_int_distribution<std::int64_t> hold(0, 200);
  std::uniform_int_distribution<std::int64_t> gap(0, 250);
  std::vector<Keystroke> out;
  std::int64_t t = 0;
  for (std::size_t i = 0; i < length; ++i) {
    t += gap(rng);
    const std::int64_t h = hold(rng);
    out.push_back({KeyId(static_cast<std::uint8_t>(key(rng))), t, t + h});
  }
  return out;
}

// Brute-force KDI: enumerate consecutive pairs straight from the timestamps,
// group them by ordered key pair, and average each group.
inline std::vector<float> brute_force_kdi(const std::vector<Keystroke>& ks) {
  std::map<std::pair<int, int>, std::vector<std::array<std::int64_t, 4>>> pairs;
  for (std::size_t t = 0; t + 1 < ks.size(); ++t) {
    const auto& a = ks[t];
    const auto& b = ks[t + 1];
    pairs[{a.key.index, b.key.index}].push_back(
        {b.down_ms - a.up_ms, b.down_ms - a.down_ms, b.up_ms - a.down_ms, b.up_ms - a.up_ms});
  }
  std::map<int, std::vector<std::int64_t>> holds;
  for (const auto& k : ks) holds[k.key.index].push_back(k.up_ms - k.down_ms);

  std::vector<float> out(5 * 42 * 42, 0.0f);
  for (const auto& [cell, obs] : pairs) {
    for (int c = 0; c < 4; ++c) {
      std::int64_t sum = 0;
      for (const auto& o : obs) sum += o[static_cast<std::size_t>(c)];
      out[static_cast<std::size_t>(c * 1764 + cell.first * 42 + cell.second)] =
          static_cast<float>(static_cast<double>(sum) / static_cast<double>(obs.size()));
    }
  }
  for (const auto& [key, hs] : holds) {
    std::int64_t sum = 0;
    for (auto h : hs) sum += h;
    out[static_cast<std::size_t>(4 * 1764 + key * 42 + key)] =
        static_cast<float>(static_cast<double>(sum) / static_cast<double>(hs.size()));
  }
  return out;
}

// Synthetic corpus -> KDIs -> stratified 80/20 split -> model -> test accuracy.
struct SyntheticRun {
  std::size_t num_users = 3;
  std::size_t sessions_per_user = 3;
  std::size_t keystrokes_per_session = 2000;
  std::size_t window_length = 100;
  double separation = 5.0;
  std::uint64_t seed = 1;
  ForestConfig forest;
};

struct PreparedSplit {
  Dataset train;
  Dataset test;
};

inline PreparedSplit prepare_split(const SyntheticRun& run) {
  GenConfig gen;
  gen.num_users = run.num_users;
  gen.sessions_per_user = run.sessions_per_user;
  gen.keystrokes_per_session = run.keystrokes_per_session;
  gen.separation_factor = run.separation;
  gen.seed = run.seed;
  const auto sessions = generate_corpus(gen);
  const auto corpus = featurize(sessions, WindowConfig{run.window_length});
  std::vector<std::uint32_t> labels;
  for (const auto& s : corpus.samples) labels.push_back(s.label);
  const auto split = stratified_split(labels, SplitSpec::classic(run.seed));
  return {to_dataset(corpus.samples, corpus.users.size(), split.train),
          to_dataset(corpus.samples, corpus.users.size(), split.test)};
}

inline double test_accuracy(const RandomForestModel& model, const Dataset& test) {
  const auto predicted = model.predict_all(test);
  return accuracy(confusion_matrix(test.labels(), predicted, test.num_classes()));
}

inline double synthetic_accuracy(const SyntheticRun& run) {
  const auto data = prepare_split(run);
  ForestConfig cfg = run.forest;
  return test_accuracy(fit_forest(data.train, cfg), data.test);
}

}  // namespace keydyn::testing
