#include <doctest.h>

#include <random>
#include <sstream>

#include "keydyn/error.hpp"
#include "keydyn/tensor_io.hpp"
#include "test_support.hpp"

using namespace keydyn;

namespace {

ErrorCode read_error(const std::string& bytes) {
  std::istringstream in(bytes);
  try {
    read_tensors(in);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("read_tensors accepted bad input");
  return ErrorCode::InvalidArgument;
}

std::vector<LabeledKdi> random_samples(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> z(0.0f, 50.0f);
  std::vector<LabeledKdi> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].label = static_cast<std::uint32_t>(rng() % 65536);
    for (auto& x : out[i].kdi.values()) x = z(rng);
  }
  return out;
}

std::string encode(const std::vector<LabeledKdi>& samples) {
  std::ostringstream out;
  write_tensors(out, samples);
  return out.str();
}

std::vector<LabeledKdi> golden_samples() {
  std::vector<LabeledKdi> s(2);
  s[0].label = 3;
  s[0].kdi.at(0, 0, 1) = 7.0f;
  s[0].kdi.at(4, 41, 41) = 9.5f;
  s[1].label = 65535;
  s[1].kdi.at(1, 2, 3) = -1.25f;
  s[1].kdi.at(3, 10, 20) = 0.001f;
  s[1].kdi.at(2, 41, 0) = 123456.0f;
  return s;
}

}  // namespace

TEST_CASE("tensor stream round trip") {
  for (std::size_t n : {0u, 1u, 7u}) {
    const auto samples = random_samples(n, n + 1);
    const std::string bytes = encode(samples);
    CHECK(bytes.size() == kTensorHeaderBytes + n * kTensorRecordBytes);
    std::istringstream in(bytes);
    CHECK(read_tensors(in) == samples);
  }
}

TEST_CASE("empty file is header only") {
  const std::string bytes = encode({});
  REQUIRE(bytes.size() == 20);
  CHECK(bytes.substr(0, 4) == "KDT1");
  CHECK(bytes.substr(4, 4) == std::string("\0\0\0\0", 4));
  CHECK(bytes.substr(8, 4) == std::string("\x05\0\0\0", 4));
  CHECK(bytes.substr(12, 4) == std::string("\x2a\0\0\0", 4));
}

TEST_CASE("golden file matches byte for byte") {
  const std::filesystem::path golden = std::filesystem::path(KEYDYN_TEST_DATA_DIR) / "golden_two_samples.kdt";
  const std::string expected = keydyn::testing::slurp(golden);
  REQUIRE(expected.size() == 20 + 2 * kTensorRecordBytes);
  CHECK(encode(golden_samples()) == expected);
  CHECK(read_tensor_file(golden) == golden_samples());
}

TEST_CASE("corrupt input is rejected") {
  std::string bytes = encode(random_samples(2, 9));

  SUBCASE("bad magic") {
    bytes.replace(0, 4, "XXXX");
    CHECK(read_error(bytes) == ErrorCode::BadMagic);
  }
  SUBCASE("truncated record") {
    bytes.resize(bytes.size() - 1);
    CHECK(read_error(bytes) == ErrorCode::TruncatedFile);
  }
  SUBCASE("truncated header") {
    CHECK(read_error(bytes.substr(0, 10)) == ErrorCode::TruncatedFile);
  }
  SUBCASE("wrong dimensions") {
    bytes[12] = 41;
    CHECK(read_error(bytes) == ErrorCode::DimensionMismatch);
  }
  SUBCASE("label out of range") {
    bytes[20 + 2] = 1;  // label becomes >= 65536
    CHECK(read_error(bytes) == ErrorCode::InvalidLabel);
  }
}

TEST_CASE("writer refuses oversized labels") {
  auto s = random_samples(1, 2);
  s[0].label = 70000;
  std::ostringstream out;
  CHECK_THROWS_AS(write_tensors(out, s), Error);
}

TEST_CASE("tensor file and manifest round trip") {
  keydyn::testing::TempDir dir("tensor_io");
  const auto samples = random_samples(3, 4);
  write_tensor_file(samples, dir / "t.kdt");
  CHECK(read_tensor_file(dir / "t.kdt") == samples);
  CHECK_THROWS_AS(read_tensor_file(dir / "missing.kdt"), Error);

  TensorManifest m;
  m.labels = {{"alice", 0}, {"bob", 1}};
  m.train = {0, 2};
  m.val = {};
  m.test = {1};
  m.window_length = 75;
  m.standardized = true;
  write_manifest(m, dir / "t.json");
  CHECK(read_manifest(dir / "t.json") == m);
  CHECK(m.users_by_label() == std::vector<std::string>{"alice", "bob"});

  const auto parsed = manifest_from_json(R"({"labels":{"x":0},"split":{"train":[0],"val":[],"test":[]},"window_length":100,"standardized":false})");
  CHECK(parsed.labels.at("x") == 0);
  CHECK(parsed.window_length == 100);
  CHECK_THROWS_AS(manifest_from_json("{\"labels\": 3}"), Error);
}
