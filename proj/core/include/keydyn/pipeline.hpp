#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "keydyn/eval.hpp"
#include "keydyn/forest.hpp"
#include "keydyn/ingest.hpp"
#include "keydyn/kdi.hpp"
#include "keydyn/report.hpp"
#include "keydyn/sequencing.hpp"
#include "keydyn/synth.hpp"
#include "keydyn/tensor_io.hpp"

namespace keydyn {

struct LogSource {
  std::filesystem::path log_dir;
  std::optional<std::filesystem::path> manifest;
};

// Resolved configuration for every stage. Nested seeds that were not given
// explicitly are derived from `seed` with derive_seed(seed, "<component>").
struct PipelineConfig {
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "keydyn_out";
  std::size_t num_threads = 0;

  std::optional<LogSource> logs;  // when absent, `synthetic` is the data source
  GenConfig synthetic;
  WindowConfig window;
  CutoutConfig cutout;
  std::uint64_t cutout_seed = 0;
  std::size_t cutout_copies = 0;  // augmented copies of each training tensor in exports
  SplitSpec split = SplitSpec::classic();
  SplitSpec export_split = SplitSpec::cnn_export();
  ForestConfig forest;
  double partition_hi = kEasyThreshold;
  double partition_lo = kDifficultThreshold;

  struct Explicit {
    bool synth = false;
    bool split = false;
    bool export_split = false;
    bool forest = false;
    bool cutout = false;
  } explicit_seeds;

  // Sets the global seed and re-derives every nested seed not given explicitly.
  void set_global_seed(std::uint64_t global);
  void validate() const;

  std::string to_json() const;
  static PipelineConfig from_json(const std::string& text);
  static PipelineConfig load(const std::filesystem::path& path);
  static PipelineConfig defaults();
};

enum class ModelKind { RandomForest, DecisionTree };

std::string model_kind_name(ModelKind kind);  // "rf" | "dt"

// File names inside PipelineConfig::out_dir.
namespace artifacts {
inline constexpr const char* kSessions = "sessions.json";
inline constexpr const char* kFeatures = "features.kdt";
inline constexpr const char* kFeaturesManifest = "features.json";
inline constexpr const char* kTensors = "tensors.kdt";
inline constexpr const char* kTensorsManifest = "tensors.json";
inline constexpr const char* kPartition = "partition.json";
inline constexpr const char* kDifficultDir = "difficult";
std::string model_file(ModelKind kind);       // model_rf.json
std::string report_file(ModelKind kind);      // report_rf.json
std::string per_user_csv_file(ModelKind kind);  // per_user_rf.csv
}  // namespace artifacts

// Normalized session store.
void write_session_store(std::span<const UserSession> sessions, const std::filesystem::path& path);
std::vector<UserSession> read_session_store(const std::filesystem::path& path);

// Windows every session and builds one KDI per window. Labels are assigned
// by sorted user id. Output order is session order, then window order.
struct FeaturizedCorpus {
  std::vector<std::string> users;  // by label
  std::vector<LabeledKdi> samples;
  std::size_t window_length = 0;
};
FeaturizedCorpus featurize(std::span<const UserSession> sessions, const WindowConfig& cfg,
                           std::size_t num_threads = 0);

Dataset to_dataset(std::span<const LabeledKdi> samples, std::size_t num_classes,
                   std::span<const std::size_t> indices);

// Stages. Each reads and writes artifacts under cfg.out_dir.
std::vector<UserSession> run_ingest(const PipelineConfig& cfg);
std::vector<UserSession> run_synth(const PipelineConfig& cfg,
                                   const std::optional<std::filesystem::path>& emit_logs = std::nullopt);
void run_featurize(const PipelineConfig& cfg, bool export_tensors = false);
SplitIndices run_split(const PipelineConfig& cfg);
RandomForestModel run_train(const PipelineConfig& cfg, ModelKind kind);
EvaluationReport run_evaluate(const PipelineConfig& cfg, ModelKind kind);
PartitionResult run_partition(const PipelineConfig& cfg, const std::filesystem::path& report_path,
                              bool difficult_only);
void run_export_tensors(const PipelineConfig& cfg);

}  // namespace keydyn
