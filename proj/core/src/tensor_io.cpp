#include "keydyn/tensor_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "keydyn/error.hpp"

namespace keydyn {
namespace {

constexpr std::array<char, 4> kMagic = {'K', 'D', 'T', '1'};

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void read_exact(std::istream& in, unsigned char* dst, std::size_t n, const char* what) {
  in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw Error(ErrorCode::TruncatedFile, std::string("tensor file truncated while reading ") + what);
  }
}

}  // namespace

void write_tensors(std::ostream& out, std::span<const LabeledKdi> samples) {
  std::string header(kMagic.begin(), kMagic.end());
  put_u32(header, static_cast<std::uint32_t>(samples.size()));
  put_u32(header, kChannels);
  put_u32(header, kNumKeys);
  put_u32(header, kNumKeys);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));

  std::string record;
  record.reserve(kTensorRecordBytes);
  for (const auto& s : samples) {
    if (s.label > kMaxTensorLabel) {
      throw Error(ErrorCode::InvalidLabel, "label " + std::to_string(s.label) + " exceeds 65535");
    }
    record.clear();
    put_u32(record, s.label);
    for (float v : s.kdi.values()) put_u32(record, std::bit_cast<std::uint32_t>(v));
    out.write(record.data(), static_cast<std::streamsize>(record.size()));
  }
  if (!out) throw Error(ErrorCode::Io, "failed writing tensor stream");
}

std::vector<LabeledKdi> read_tensors(std::istream& in) {
  std::array<unsigned char, kTensorHeaderBytes> header{};
  in.read(reinterpret_cast<char*>(header.data()), 4);
  if (in.gcount() < 4) throw Error(ErrorCode::TruncatedFile, "tensor file shorter than its magic");
  if (!std::equal(kMagic.begin(), kMagic.end(), header.begin(),
                  [](char a, unsigned char b) { return static_cast<unsigned char>(a) == b; })) {
    throw Error(ErrorCode::BadMagic, "tensor file does not start with KDT1");
  }
  read_exact(in, header.data() + 4, kTensorHeaderBytes - 4, "header");
  const std::uint32_t count = get_u32(header.data() + 4);
  const std::uint32_t channels = get_u32(header.data() + 8);
  const std::uint32_t rows = get_u32(header.data() + 12);
  const std::uint32_t cols = get_u32(header.data() + 16);
  if (channels != kChannels || rows != kNumKeys || cols != kNumKeys) {
    throw Error(ErrorCode::DimensionMismatch, "tensor dims " + std::to_string(channels) + "x" +
                                                  std::to_string(rows) + "x" + std::to_string(cols) +
                                                  ", expected 5x42x42");
  }

  std::vector<LabeledKdi> samples;
  samples.reserve(std::min<std::uint32_t>(count, 1024));  // count is untrusted until the records arrive
  std::vector<unsigned char> record(kTensorRecordBytes);
  for (std::uint32_t i = 0; i < count; ++i) {
    read_exact(in, record.data(), record.size(), ("sample " + std::to_string(i)).c_str());
    LabeledKdi s;
    s.label = get_u32(record.data());
    if (s.label > kMaxTensorLabel) {
      throw Error(ErrorCode::InvalidLabel, "sample " + std::to_string(i) + " has label " + std::to_string(s.label));
    }
    auto v = s.kdi.values();
    for (std::size_t j = 0; j < kFlatLength; ++j) v[j] = std::bit_cast<float>(get_u32(record.data() + 4 + 4 * j));
    samples.push_back(std::move(s));
  }
  return samples;
}

void write_tensor_file(std::span<const LabeledKdi> samples, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  write_tensors(out, samples);
}

std::vector<LabeledKdi> read_tensor_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  try {
    return read_tensors(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::vector<std::string> TensorManifest::users_by_label() const {
  std::vector<std::string> users(labels.size());
  for (const auto& [user, label] : labels) {
    if (label >= users.size()) {
      throw Error(ErrorCode::ManifestError, "manifest labels are not contiguous from 0");
    }
    users[label] = user;
  }
  return users;
}

std::string manifest_to_json(const TensorManifest& m) {
  nlohmann::ordered_json doc;
  nlohmann::ordered_json labels = nlohmann::ordered_json::object();
  for (const auto& [user, label] : m.labels) labels[user] = label;
  doc["labels"] = labels;
  doc["split"] = {{"train", m.train}, {"val", m.val}, {"test", m.test}};
  doc["window_length"] = m.window_length;
  doc["standardized"] = m.standardized;
  return doc.dump(2) + "\n";
}

TensorManifest manifest_from_json(const std::string& text) {
  TensorManifest m;
  try {
    const auto doc = nlohmann::json::parse(text);
    for (const auto& [user, label] : doc.at("labels").items()) m.labels[user] = label.get<std::uint32_t>();
    const auto& split = doc.at("split");
    if (split.contains("train")) m.train = split["train"].get<std::vector<std::size_t>>();
    if (split.contains("val")) m.val = split["val"].get<std::vector<std::size_t>>();
    if (split.contains("test")) m.test = split["test"].get<std::vector<std::size_t>>();
    m.window_length = doc.at("window_length").get<std::size_t>();
    m.standardized = doc.at("standardized").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ManifestError, std::string("bad tensor manifest: ") + e.what());
  }
  return m;
}

void write_manifest(const TensorManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out << manifest_to_json(manifest);
}

TensorManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return manifest_from_json(ss.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace keydyn
