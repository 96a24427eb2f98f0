#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "keydyn/kdi.hpp"

namespace keydyn {

// KDT1 layout, little-endian:
//   "KDT1" | u32 sample_count | u32 channels=5 | u32 rows=42 | u32 cols=42
//   then per sample: u32 label | 8820 x f32 (channel-major, row-major)
inline constexpr std::size_t kTensorHeaderBytes = 20;
inline constexpr std::size_t kTensorRecordBytes = 4 + 4 * kFlatLength;
inline constexpr std::uint32_t kMaxTensorLabel = 65535;

struct LabeledKdi {
  std::uint32_t label = 0;
  Kdi kdi;

  friend bool operator==(const LabeledKdi&, const LabeledKdi&) = default;
};

void write_tensors(std::ostream& out, std::span<const LabeledKdi> samples);
std::vector<LabeledKdi> read_tensors(std::istream& in);

void write_tensor_file(std::span<const LabeledKdi> samples, const std::filesystem::path& path);
std::vector<LabeledKdi> read_tensor_file(const std::filesystem::path& path);

// JSON sidecar describing a KDT1 file:
//   {"labels": {"<user_id>": int}, "split": {"train": [...], "val": [...], "test": [...]},
//    "window_length": int, "standardized": bool}
struct TensorManifest {
  std::map<std::string, std::uint32_t> labels;
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
  std::size_t window_length = 0;
  bool standardized = false;

  // user ids ordered by label
  std::vector<std::string> users_by_label() const;

  friend bool operator==(const TensorManifest&, const TensorManifest&) = default;
};

std::string manifest_to_json(const TensorManifest& manifest);
TensorManifest manifest_from_json(const std::string& text);
void write_manifest(const TensorManifest& manifest, const std::filesystem::path& path);
TensorManifest read_manifest(const std::filesystem::path& path);

}  // namespace keydyn
