#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "keydyn/kdi.hpp"

namespace keydyn {

// Dense row-major sample matrix with one class label per row.
class Dataset {
 public:
  Dataset(std::size_t num_features, std::uint32_t num_classes);

  void add(std::span<const float> features, std::uint32_t label);
  void add(const FlatVector& features, std::uint32_t label) { add(features.values, label); }

  std::size_t size() const { return labels_.size(); }
  std::size_t num_features() const { return num_features_; }
  std::uint32_t num_classes() const { return num_classes_; }

  std::span<const float> row(std::size_t i) const {
    return {values_.data() + i * num_features_, num_features_};
  }
  float value(std::size_t i, std::size_t feature) const { return values_[i * num_features_ + feature]; }
  std::uint32_t label(std::size_t i) const { return labels_[i]; }
  std::span<const std::uint32_t> labels() const { return labels_; }

  Dataset subset(std::span<const std::size_t> indices) const;

 private:
  std::size_t num_features_;
  std::uint32_t num_classes_;
  std::vector<float> values_;
  std::vector<std::uint32_t> labels_;
};

// 1 - sum_c (count_c / total)^2. Throws EmptyNode when the counts sum to 0.
double gini(std::span<const std::uint64_t> class_counts);

struct Split {
  std::size_t feature = 0;
  double threshold = 0.0;  // feature <= threshold goes left
  double impurity_decrease = 0.0;
};

// Best weighted-Gini split over `candidate_features` for the rows listed in
// `rows` (duplicates allowed). Thresholds are midpoints between distinct
// consecutive values; both children must keep at least min_samples_leaf rows.
// Ties go to the lowest feature index, then the lowest threshold. Returns
// nullopt when no split strictly reduces impurity.
std::optional<Split> best_split(const Dataset& data, std::span<const std::size_t> rows,
                                std::span<const std::size_t> candidate_features,
                                std::size_t min_samples_leaf = 1);

struct ClassCount {
  std::uint32_t label = 0;
  std::uint64_t count = 0;

  friend bool operator==(const ClassCount&, const ClassCount&) = default;
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::vector<ClassCount> class_counts;  // leaves only; sparse, ascending label

  bool is_leaf() const { return feature < 0; }
  std::uint32_t majority() const;  // ties -> smallest label

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class DecisionTree {
 public:
  DecisionTree() = default;
  explicit DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  const TreeNode& leaf_for(std::span<const float> features) const;
  std::uint32_t predict(std::span<const float> features) const { return leaf_for(features).majority(); }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t depth() const;

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  std::vector<TreeNode> nodes_;  // nodes_[0] is the root
};

struct TreeConfig {
  std::size_t min_samples_split = 5;
  std::size_t min_samples_leaf = 2;
  std::size_t max_features = 0;  // candidate features per node; 0 -> all
};

// Grows an unbounded-depth CART tree on `rows` of `data`. Each internal node
// draws a fresh uniform subset of max_features candidates from `rng`.
DecisionTree grow_tree(const Dataset& data, std::span<const std::size_t> rows, const TreeConfig& cfg,
                       std::mt19937_64& rng);

enum class MaxFeatures { Auto, Sqrt, All };

std::size_t resolve_max_features(MaxFeatures rule, std::size_t num_features);

struct ForestConfig {
  std::size_t n_estimators = 1000;
  MaxFeatures max_features = MaxFeatures::Auto;
  std::size_t min_samples_split = 5;
  std::size_t min_samples_leaf = 2;
  bool bootstrap = true;
  std::uint64_t seed = 0;
  std::size_t num_threads = 0;  // 0 -> hardware concurrency; never affects results

  void validate() const;

  // Standalone decision tree: one tree over all features, no bootstrap.
  static ForestConfig decision_tree(std::uint64_t seed = 0);

  friend bool operator==(const ForestConfig&, const ForestConfig&) = default;
};

class RandomForestModel {
 public:
  RandomForestModel() = default;
  RandomForestModel(ForestConfig config, std::uint32_t num_classes, std::size_t num_features,
                    std::vector<DecisionTree> trees);

  std::uint32_t predict(std::span<const float> features) const;
  std::uint32_t predict(const FlatVector& features) const { return predict(features.values); }
  std::vector<std::uint32_t> predict_all(const Dataset& data, std::size_t num_threads = 0) const;
  std::vector<std::uint32_t> votes(std::span<const float> features) const;

  const ForestConfig& config() const { return config_; }
  std::uint32_t num_classes() const { return num_classes_; }
  std::size_t num_features() const { return num_features_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }

  friend bool operator==(const RandomForestModel&, const RandomForestModel&) = default;

 private:
  ForestConfig config_;
  std::uint32_t num_classes_ = 0;
  std::size_t num_features_ = 0;
  std::vector<DecisionTree> trees_;
};

// Tree t is grown from an engine seeded with cfg.seed + t on a bootstrap
// resample (or the full set). The result is independent of num_threads.
RandomForestModel fit_forest(const Dataset& data, const ForestConfig& cfg);

inline constexpr int kModelFormatVersion = 1;

std::string model_to_json(const RandomForestModel& model);
RandomForestModel model_from_json(const std::string& text);  // throws ModelVersionMismatch
void save_model(const RandomForestModel& model, const std::filesystem::path& path);
RandomForestModel load_model(const std::filesystem::path& path);

}  // namespace keydyn
