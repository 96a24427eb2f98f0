#include "keydyn/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "keydyn/error.hpp"
#include "parallel.hpp"

namespace keydyn {

__extension__ using u128 = unsigned __int128;

Dataset::Dataset(std::size_t num_features, std::uint32_t num_classes)
    : num_features_(num_features), num_classes_(num_classes) {
  if (num_features == 0) throw Error(ErrorCode::InvalidArgument, "dataset needs at least one feature");
}

void Dataset::add(std::span<const float> features, std::uint32_t label) {
  if (features.size() != num_features_) {
    throw Error(ErrorCode::FeatureLengthMismatch, "sample has " + std::to_string(features.size()) +
                                                      " features, expected " + std::to_string(num_features_));
  }
  if (label >= num_classes_) {
    throw Error(ErrorCode::LabelOutOfRange,
                "label " + std::to_string(label) + " >= num_classes " + std::to_string(num_classes_));
  }
  values_.insert(values_.end(), features.begin(), features.end());
  labels_.push_back(label);
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out(num_features_, num_classes_);
  out.values_.reserve(indices.size() * num_features_);
  out.labels_.reserve(indices.size());
  for (std::size_t i : indices) out.add(row(i), label(i));
  return out;
}

double gini(std::span<const std::uint64_t> class_counts) {
  std::uint64_t total = 0;
  for (auto c : class_counts) total += c;
  if (total == 0) throw Error(ErrorCode::EmptyNode, "gini of an empty node");
  double sum_sq = 0.0;
  for (auto c : class_counts) {
    const double p = static_cast<double>(c) / static_cast<double>(total);
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

namespace {

struct ValueLabel {
  float value;
  std::uint32_t label;
};

// Scratch buffers reused across the nodes of one tree.
struct SplitScratch {
  std::vector<ValueLabel> column;
  std::vector<std::uint64_t> left;
  std::vector<std::uint64_t> right;
};

std::optional<Split> best_split_impl(const Dataset& data, std::span<const std::size_t> rows,
                                     std::span<const std::size_t> candidates, std::size_t min_leaf,
                                     SplitScratch& scratch) {
  const std::size_t n = rows.size();
  if (n < 2) return std::nullopt;
  const std::size_t k = data.num_classes();
  min_leaf = std::max<std::size_t>(min_leaf, 1);
  if (n < 2 * min_leaf) return std::nullopt;

  std::vector<std::uint64_t> parent(k, 0);
  for (std::size_t r : rows) ++parent[data.label(r)];
  std::uint64_t parent_sq = 0;
  for (auto c : parent) parent_sq += c * c;
  if (parent_sq == static_cast<std::uint64_t>(n) * n) return std::nullopt;  // pure

  std::optional<Split> best;
  auto& column = scratch.column;
  column.resize(n);

  for (std::size_t feature : candidates) {
    float lo = data.value(rows[0], feature);
    float hi = lo;
    for (std::size_t i = 0; i < n; ++i) {
      const float v = data.value(rows[i], feature);
      column[i] = {v, data.label(rows[i])};
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (lo == hi) continue;
    std::sort(column.begin(), column.end(),
              [](const ValueLabel& a, const ValueLabel& b) { return a.value < b.value; });

    scratch.left.assign(k, 0);
    scratch.right = parent;
    std::uint64_t left_sq = 0;
    std::uint64_t right_sq = parent_sq;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const std::uint32_t c = column[i].label;
      left_sq += 2 * scratch.left[c] + 1;
      ++scratch.left[c];
      right_sq -= 2 * scratch.right[c] - 1;
      --scratch.right[c];

      const std::size_t nl = i + 1;
      const std::size_t nr = n - nl;
      if (column[i].value == column[i + 1].value) continue;
      if (nl < min_leaf || nr < min_leaf) continue;

      // Exact positivity test of the impurity decrease:
      //   left_sq/nl + right_sq/nr - parent_sq/n > 0
      const u128 lhs = static_cast<u128>(left_sq) * nr * n + static_cast<u128>(right_sq) * nl * n;
      const u128 rhs = static_cast<u128>(parent_sq) * nl * nr;
      if (lhs <= rhs) continue;

      const double dn = static_cast<double>(n);
      const double decrease =
          (static_cast<double>(left_sq) / static_cast<double>(nl) +
           static_cast<double>(right_sq) / static_cast<double>(nr) - static_cast<double>(parent_sq) / dn) /
          dn;
      if (!best || decrease > best->impurity_decrease) {
        const double threshold = (static_cast<double>(column[i].value) + static_cast<double>(column[i + 1].value)) / 2.0;
        best = Split{feature, threshold, decrease};
      }
    }
  }
  return best;
}

std::vector<ClassCount> count_classes(const Dataset& data, std::span<const std::size_t> rows) {
  std::vector<std::uint64_t> dense(data.num_classes(), 0);
  for (std::size_t r : rows) ++dense[data.label(r)];
  std::vector<ClassCount> out;
  for (std::uint32_t c = 0; c < dense.size(); ++c) {
    if (dense[c] > 0) out.push_back({c, dense[c]});
  }
  return out;
}

}  // namespace

std::optional<Split> best_split(const Dataset& data, std::span<const std::size_t> rows,
                                std::span<const std::size_t> candidate_features, std::size_t min_samples_leaf) {
  std::vector<std::size_t> sorted(candidate_features.begin(), candidate_features.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (std::size_t f : sorted) {
    if (f >= data.num_features()) {
      throw Error(ErrorCode::InvalidArgument, "candidate feature " + std::to_string(f) + " out of range");
    }
  }
  SplitScratch scratch;
  return best_split_impl(data, rows, sorted, min_samples_leaf, scratch);
}

std::uint32_t TreeNode::majority() const {
  std::uint32_t best = 0;
  std::uint64_t best_count = 0;
  for (const auto& cc : class_counts) {
    if (cc.count > best_count) {
      best = cc.label;
      best_count = cc.count;
    }
  }
  return best;
}

const TreeNode& DecisionTree::leaf_for(std::span<const float> features) const {
  if (nodes_.empty()) throw Error(ErrorCode::MalformedModel, "empty decision tree");
  const TreeNode* node = &nodes_[0];
  while (!node->is_leaf()) {
    const double v = features[static_cast<std::size_t>(node->feature)];
    node = &nodes_[static_cast<std::size_t>(v <= node->threshold ? node->left : node->right)];
  }
  return *node;
}

std::size_t DecisionTree::depth() const {
  if (nodes_.empty()) return 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  std::size_t deepest = 0;
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (!nodes_[i].is_leaf()) {
      stack.push_back({static_cast<std::size_t>(nodes_[i].left), d + 1});
      stack.push_back({static_cast<std::size_t>(nodes_[i].right), d + 1});
    }
  }
  return deepest;
}

DecisionTree grow_tree(const Dataset& data, std::span<const std::size_t> rows, const TreeConfig& cfg,
                       std::mt19937_64& rng) {
  if (rows.empty()) throw Error(ErrorCode::EmptyNode, "cannot grow a tree on zero samples");
  const std::size_t nf = data.num_features();
  const std::size_t draw = (cfg.max_features == 0 || cfg.max_features >= nf) ? nf : cfg.max_features;

  std::vector<std::size_t> perm(nf);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::size_t> candidates;
  SplitScratch scratch;

  std::vector<TreeNode> nodes(1);
  struct Pending {
    std::size_t node;
    std::vector<std::size_t> rows;
  };
  std::vector<Pending> stack;
  stack.push_back({0, std::vector<std::size_t>(rows.begin(), rows.end())});

  while (!stack.empty()) {
    Pending work = std::move(stack.back());
    stack.pop_back();
    auto& node_rows = work.rows;

    std::optional<Split> split;
    if (node_rows.size() >= cfg.min_samples_split) {
      const auto counts = count_classes(data, node_rows);
      if (counts.size() > 1) {
        if (draw == nf) {
          candidates = perm;
        } else {
          for (std::size_t i = 0; i < draw; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, nf - 1);
            std::swap(perm[i], perm[pick(rng)]);
          }
          candidates.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(draw));
          std::sort(candidates.begin(), candidates.end());
        }
        split = best_split_impl(data, node_rows, candidates, cfg.min_samples_leaf, scratch);
      }
    }

    if (!split) {
      nodes[work.node].class_counts = count_classes(data, node_rows);
      continue;
    }

    std::vector<std::size_t> left_rows;
    std::vector<std::size_t> right_rows;
    for (std::size_t r : node_rows) {
      (static_cast<double>(data.value(r, split->feature)) <= split->threshold ? left_rows : right_rows).push_back(r);
    }
    const auto left = static_cast<std::int32_t>(nodes.size());
    nodes.emplace_back();
    const auto right = static_cast<std::int32_t>(nodes.size());
    nodes.emplace_back();
    TreeNode& parent = nodes[work.node];
    parent.feature = static_cast<std::int32_t>(split->feature);
    parent.threshold = split->threshold;
    parent.left = left;
    parent.right = right;
    // Left subtree is finished before the right one is started.
    stack.push_back({static_cast<std::size_t>(right), std::move(right_rows)});
    stack.push_back({static_cast<std::size_t>(left), std::move(left_rows)});
  }
  return DecisionTree(std::move(nodes));
}

std::size_t resolve_max_features(MaxFeatures rule, std::size_t num_features) {
  switch (rule) {
    case MaxFeatures::Auto:
    case MaxFeatures::Sqrt: {
      auto k = static_cast<std::size_t>(std::sqrt(static_cast<double>(num_features)));
      while ((k + 1) * (k + 1) <= num_features) ++k;
      while (k * k > num_features) --k;
      return std::max<std::size_t>(1, k);
    }
    case MaxFeatures::All:
      return num_features;
  }
  return num_features;
}

void ForestConfig::validate() const {
  if (n_estimators < 1) throw Error(ErrorCode::InvalidArgument, "n_estimators must be >= 1");
  if (min_samples_split < 2) throw Error(ErrorCode::InvalidArgument, "min_samples_split must be >= 2");
  if (min_samples_leaf < 1) throw Error(ErrorCode::InvalidArgument, "min_samples_leaf must be >= 1");
}

ForestConfig ForestConfig::decision_tree(std::uint64_t seed) {
  ForestConfig cfg;
  cfg.n_estimators = 1;
  cfg.max_features = MaxFeatures::All;
  cfg.bootstrap = false;
  cfg.seed = seed;
  return cfg;
}

RandomForestModel::RandomForestModel(ForestConfig config, std::uint32_t num_classes, std::size_t num_features,
                                     std::vector<DecisionTree> trees)
    : config_(config), num_classes_(num_classes), num_features_(num_features), trees_(std::move(trees)) {}

std::vector<std::uint32_t> RandomForestModel::votes(std::span<const float> features) const {
  if (features.size() != num_features_) {
    throw Error(ErrorCode::FeatureLengthMismatch, "feature vector has length " + std::to_string(features.size()) +
                                                      ", model expects " + std::to_string(num_features_));
  }
  std::vector<std::uint32_t> tally(num_classes_, 0);
  for (const auto& tree : trees_) ++tally[tree.predict(features)];
  return tally;
}

std::uint32_t RandomForestModel::predict(std::span<const float> features) const {
  const auto tally = votes(features);
  // max_element returns the first maximum, i.e. the smallest class id on ties.
  return static_cast<std::uint32_t>(std::max_element(tally.begin(), tally.end()) - tally.begin());
}

std::vector<std::uint32_t> RandomForestModel::predict_all(const Dataset& data, std::size_t num_threads) const {
  std::vector<std::uint32_t> out(data.size());
  detail::parallel_for(data.size(), num_threads, [&](std::size_t i) { out[i] = predict(data.row(i)); });
  return out;
}

RandomForestModel fit_forest(const Dataset& data, const ForestConfig& cfg) {
  cfg.validate();
  if (data.size() == 0) throw Error(ErrorCode::EmptyTrainingSet, "cannot fit a forest on zero samples");

  TreeConfig tree_cfg;
  tree_cfg.min_samples_split = cfg.min_samples_split;
  tree_cfg.min_samples_leaf = cfg.min_samples_leaf;
  tree_cfg.max_features = resolve_max_features(cfg.max_features, data.num_features());

  std::vector<DecisionTree> trees(cfg.n_estimators);
  detail::parallel_for(cfg.n_estimators, cfg.num_threads, [&](std::size_t t) {
    std::mt19937_64 rng(cfg.seed + t);
    std::vector<std::size_t> rows(data.size());
    if (cfg.bootstrap) {
      std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
      for (auto& r : rows) r = pick(rng);
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    trees[t] = grow_tree(data, rows, tree_cfg, rng);
  });
  return RandomForestModel(cfg, data.num_classes(), data.num_features(), std::move(trees));
}

namespace {

std::string max_features_name(MaxFeatures m) {
  switch (m) {
    case MaxFeatures::Auto: return "auto";
    case MaxFeatures::Sqrt: return "sqrt";
    case MaxFeatures::All: return "all";
  }
  return "auto";
}

MaxFeatures max_features_from_name(const std::string& s) {
  if (s == "auto") return MaxFeatures::Auto;
  if (s == "sqrt") return MaxFeatures::Sqrt;
  if (s == "all") return MaxFeatures::All;
  throw Error(ErrorCode::MalformedModel, "unknown max_features '" + s + "'");
}

}  // namespace

std::string model_to_json(const RandomForestModel& model) {
  using nlohmann::ordered_json;
  const auto& c = model.config();
  ordered_json doc;
  doc["format"] = "keydyn-forest";
  doc["version"] = kModelFormatVersion;
  doc["num_classes"] = model.num_classes();
  doc["num_features"] = model.num_features();
  doc["config"] = {{"n_estimators", c.n_estimators},
                   {"max_features", max_features_name(c.max_features)},
                   {"min_samples_split", c.min_samples_split},
                   {"min_samples_leaf", c.min_samples_leaf},
                   {"bootstrap", c.bootstrap},
                   {"seed", c.seed}};
  ordered_json trees = ordered_json::array();
  for (const auto& tree : model.trees()) {
    ordered_json feature = ordered_json::array(), threshold = ordered_json::array(), left = ordered_json::array(),
                 right = ordered_json::array(), counts = ordered_json::array();
    for (const auto& n : tree.nodes()) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      ordered_json cc = ordered_json::array();
      for (const auto& x : n.class_counts) cc.push_back({x.label, x.count});
      counts.push_back(std::move(cc));
    }
    trees.push_back({{"feature", std::move(feature)},
                     {"threshold", std::move(threshold)},
                     {"left", std::move(left)},
                     {"right", std::move(right)},
                     {"class_counts", std::move(counts)}});
  }
  doc["trees"] = std::move(trees);
  return doc.dump() + "\n";
}

RandomForestModel model_from_json(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    if (doc.at("format").get<std::string>() != "keydyn-forest") {
      throw Error(ErrorCode::MalformedModel, "not a keydyn forest model");
    }
    const int version = doc.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw Error(ErrorCode::ModelVersionMismatch, "model format version " + std::to_string(version) +
                                                       " is not supported (expected " +
                                                       std::to_string(kModelFormatVersion) + ")");
    }
    const auto& jc = doc.at("config");
    ForestConfig cfg;
    cfg.n_estimators = jc.at("n_estimators").get<std::size_t>();
    cfg.max_features = max_features_from_name(jc.at("max_features").get<std::string>());
    cfg.min_samples_split = jc.at("min_samples_split").get<std::size_t>();
    cfg.min_samples_leaf = jc.at("min_samples_leaf").get<std::size_t>();
    cfg.bootstrap = jc.at("bootstrap").get<bool>();
    cfg.seed = jc.at("seed").get<std::uint64_t>();

    const auto num_classes = doc.at("num_classes").get<std::uint32_t>();
    const auto num_features = doc.at("num_features").get<std::size_t>();
    std::vector<DecisionTree> trees;
    for (const auto& jt : doc.at("trees")) {
      const auto feature = jt.at("feature").get<std::vector<std::int32_t>>();
      const auto threshold = jt.at("threshold").get<std::vector<double>>();
      const auto left = jt.at("left").get<std::vector<std::int32_t>>();
      const auto right = jt.at("right").get<std::vector<std::int32_t>>();
      const auto& counts = jt.at("class_counts");
      const std::size_t n = feature.size();
      if (threshold.size() != n || left.size() != n || right.size() != n || counts.size() != n || n == 0) {
        throw Error(ErrorCode::MalformedModel, "inconsistent node array lengths");
      }
      std::vector<TreeNode> nodes(n);
      for (std::size_t i = 0; i < n; ++i) {
        auto& node = nodes[i];
        node.feature = feature[i];
        node.threshold = threshold[i];
        node.left = left[i];
        node.right = right[i];
        for (const auto& pair : counts[i]) {
          node.class_counts.push_back({pair.at(0).get<std::uint32_t>(), pair.at(1).get<std::uint64_t>()});
        }
        if (!node.is_leaf()) {
          const bool ok = static_cast<std::size_t>(node.feature) < num_features && node.left > static_cast<std::int32_t>(i) &&
                          node.right > static_cast<std::int32_t>(i) && static_cast<std::size_t>(node.left) < n &&
                          static_cast<std::size_t>(node.right) < n;
          if (!ok) throw Error(ErrorCode::MalformedModel, "node " + std::to_string(i) + " has invalid links");
        } else {
          for (const auto& cc : node.class_counts) {
            if (cc.label >= num_classes) throw Error(ErrorCode::MalformedModel, "leaf label out of range");
          }
        }
      }
      trees.emplace_back(std::move(nodes));
    }
    if (trees.size() != cfg.n_estimators) {
      throw Error(ErrorCode::MalformedModel, "tree count does not match n_estimators");
    }
    return RandomForestModel(cfg, num_classes, num_features, std::move(trees));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedModel, std::string("bad model document: ") + e.what());
  }
}

void save_model(const RandomForestModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out << model_to_json(model);
}

RandomForestModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return model_from_json(ss.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace keydyn
