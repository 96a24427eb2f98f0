#include "keydyn/eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>

#include "keydyn/error.hpp"

namespace keydyn {

void SplitSpec::validate() const {
  if (train < 0.0 || validation < 0.0 || test < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "split fractions must be non-negative");
  }
  if (std::abs(train + validation + test - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidArgument, "split fractions must sum to 1");
  }
}

SplitIndices stratified_split(std::span<const std::uint32_t> labels, const SplitSpec& spec) {
  spec.validate();
  const std::array<double, 3> fractions = {spec.train, spec.validation, spec.test};
  const auto nonzero = static_cast<std::size_t>(std::count_if(fractions.begin(), fractions.end(),
                                                              [](double f) { return f > 0.0; }));

  std::map<std::uint32_t, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

  SplitIndices out;
  std::array<std::vector<std::size_t>*, 3> parts = {&out.train, &out.validation, &out.test};
  for (auto& [label, members] : by_class) {
    if (members.size() < nonzero) {
      throw Error(ErrorCode::ClassTooSmall, "class " + std::to_string(label) + " has " +
                                                std::to_string(members.size()) + " samples, needs at least " +
                                                std::to_string(nonzero));
    }
    std::mt19937_64 rng(spec.seed ^ (0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(label) + 1)));
    std::shuffle(members.begin(), members.end(), rng);

    const double n = static_cast<double>(members.size());
    std::array<std::size_t, 3> take{};
    std::array<double, 3> remainder{};
    std::size_t assigned = 0;
    for (std::size_t p = 0; p < 3; ++p) {
      const double exact = fractions[p] * n;
      take[p] = static_cast<std::size_t>(std::floor(exact + 1e-9));
      remainder[p] = exact - static_cast<double>(take[p]);
      assigned += take[p];
    }
    // Hand leftovers to the largest remainders; earlier partitions win ties.
    std::array<std::size_t, 3> order = {0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t i = 0; assigned < members.size(); ++i, ++assigned) ++take[order[i % 3]];

    std::size_t pos = 0;
    for (std::size_t p = 0; p < 3; ++p) {
      parts[p]->insert(parts[p]->end(), members.begin() + static_cast<std::ptrdiff_t>(pos),
                       members.begin() + static_cast<std::ptrdiff_t>(pos + take[p]));
      pos += take[p];
    }
  }
  for (auto* p : parts) std::sort(p->begin(), p->end());
  return out;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t actual) const {
  return std::accumulate(counts_.begin() + static_cast<std::ptrdiff_t>(actual * k_),
                         counts_.begin() + static_cast<std::ptrdiff_t>((actual + 1) * k_), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::vector<std::vector<std::uint64_t>> ConfusionMatrix::rows() const {
  std::vector<std::vector<std::uint64_t>> out(k_);
  for (std::size_t a = 0; a < k_; ++a) {
    out[a].assign(counts_.begin() + static_cast<std::ptrdiff_t>(a * k_),
                  counts_.begin() + static_cast<std::ptrdiff_t>((a + 1) * k_));
  }
  return out;
}

ConfusionMatrix ConfusionMatrix::from_rows(const std::vector<std::vector<std::uint64_t>>& rows) {
  ConfusionMatrix cm(rows.size());
  for (std::size_t a = 0; a < rows.size(); ++a) {
    if (rows[a].size() != rows.size()) {
      throw Error(ErrorCode::DimensionMismatch, "confusion matrix must be square");
    }
    for (std::size_t p = 0; p < rows.size(); ++p) cm.at(a, p) = rows[a][p];
  }
  return cm;
}

ConfusionMatrix confusion_matrix(std::span<const std::uint32_t> actual, std::span<const std::uint32_t> predicted,
                                 std::size_t num_classes) {
  if (actual.size() != predicted.size()) {
    throw Error(ErrorCode::LengthMismatch, "actual has " + std::to_string(actual.size()) + " labels, predicted has " +
                                               std::to_string(predicted.size()));
  }
  ConfusionMatrix cm(num_classes);
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] >= num_classes || predicted[i] >= num_classes) {
      throw Error(ErrorCode::LabelOutOfRange, "sample " + std::to_string(i) + " has a label outside [0, " +
                                                  std::to_string(num_classes) + ")");
    }
    ++cm.at(actual[i], predicted[i]);
  }
  return cm;
}

double accuracy(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  if (total == 0) throw Error(ErrorCode::EmptyMatrix, "accuracy of an empty confusion matrix");
  std::uint64_t trace = 0;
  for (std::size_t i = 0; i < cm.num_classes(); ++i) trace += cm.at(i, i);
  return static_cast<double>(trace) / static_cast<double>(total);
}

std::vector<std::optional<double>> per_class_accuracy(const ConfusionMatrix& cm) {
  std::vector<std::optional<double>> out(cm.num_classes());
  for (std::size_t i = 0; i < cm.num_classes(); ++i) {
    const auto row = cm.row_sum(i);
    if (row > 0) out[i] = static_cast<double>(cm.at(i, i)) / static_cast<double>(row);
  }
  return out;
}

PartitionResult partition_users(const std::map<std::string, double>& per_user_accuracy, double hi, double lo) {
  if (!(lo <= hi)) throw Error(ErrorCode::InvalidArgument, "partition thresholds need lo <= hi");
  PartitionResult r;
  r.hi = hi;
  r.lo = lo;
  for (const auto& [user, acc] : per_user_accuracy) {
    if (acc >= hi) {
      r.easy.push_back(user);
    } else if (acc < lo) {
      r.difficult.push_back(user);
    } else {
      r.moderate.push_back(user);
    }
  }
  return r;
}

std::vector<std::size_t> range_histogram(std::span<const double> values, std::span<const double> edges) {
  if (edges.size() < 2) throw Error(ErrorCode::InvalidArgument, "histogram needs at least two bin edges");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) throw Error(ErrorCode::InvalidArgument, "bin edges must be strictly increasing");
  }
  std::vector<std::size_t> counts(edges.size() - 1, 0);
  for (double v : values) {
    if (v < edges.front() || v > edges.back()) continue;
    auto it = std::upper_bound(edges.begin(), edges.end(), v);
    auto bin = static_cast<std::size_t>(it - edges.begin()) - 1;
    if (bin >= counts.size()) bin = counts.size() - 1;  // v == last edge
    ++counts[bin];
  }
  return counts;
}

std::vector<double> decile_edges() {
  std::vector<double> edges(11);
  for (int i = 0; i <= 10; ++i) edges[static_cast<std::size_t>(i)] = i / 10.0;
  return edges;
}

}  // namespace keydyn
