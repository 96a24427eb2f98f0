#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace keydyn {

struct SplitSpec {
  double train = 0.8;
  double validation = 0.0;
  double test = 0.2;
  std::uint64_t seed = 0;

  static SplitSpec classic(std::uint64_t seed = 0) { return {0.8, 0.0, 0.2, seed}; }
  static SplitSpec cnn_export(std::uint64_t seed = 0) { return {0.8, 0.1, 0.1, seed}; }

  void validate() const;  // fractions >= 0 and summing to 1 within 1e-9
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

// Per-class seeded shuffle, then largest-remainder allocation of each class's
// samples to the three partitions. Index lists are returned sorted. Throws
// ClassTooSmall when a class has fewer samples than there are non-zero
// partitions.
SplitIndices stratified_split(std::span<const std::uint32_t> labels, const SplitSpec& spec);

// K x K counts, rows = actual class, columns = predicted class.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_classes = 0)
      : k_(num_classes), counts_(num_classes * num_classes, 0) {}

  std::size_t num_classes() const { return k_; }
  std::uint64_t at(std::size_t actual, std::size_t predicted) const { return counts_[actual * k_ + predicted]; }
  std::uint64_t& at(std::size_t actual, std::size_t predicted) { return counts_[actual * k_ + predicted]; }
  std::uint64_t row_sum(std::size_t actual) const;
  std::uint64_t total() const;

  std::vector<std::vector<std::uint64_t>> rows() const;
  static ConfusionMatrix from_rows(const std::vector<std::vector<std::uint64_t>>& rows);

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t k_;
  std::vector<std::uint64_t> counts_;
};

ConfusionMatrix confusion_matrix(std::span<const std::uint32_t> actual, std::span<const std::uint32_t> predicted,
                                 std::size_t num_classes);

// trace / total. Throws EmptyMatrix when the matrix holds no samples.
double accuracy(const ConfusionMatrix& cm);

// diag[i] / row_sum[i]; nullopt for classes with no samples.
std::vector<std::optional<double>> per_class_accuracy(const ConfusionMatrix& cm);

inline constexpr double kEasyThreshold = 0.90;
inline constexpr double kDifficultThreshold = 0.75;

struct PartitionResult {
  double hi = kEasyThreshold;
  double lo = kDifficultThreshold;
  std::vector<std::string> easy;       // accuracy >= hi
  std::vector<std::string> moderate;   // lo <= accuracy < hi
  std::vector<std::string> difficult;  // accuracy < lo
};

PartitionResult partition_users(const std::map<std::string, double>& per_user_accuracy,
                                double hi = kEasyThreshold, double lo = kDifficultThreshold);

// Half-open bins [e_k, e_{k+1}); the last bin is closed. Values outside
// [e_0, e_last] are not counted. Throws InvalidArgument unless edges are
// strictly increasing with at least two entries.
std::vector<std::size_t> range_histogram(std::span<const double> values, std::span<const double> edges);

std::vector<double> decile_edges();

}  // namespace keydyn
