#include <doctest.h>

#include <numeric>
#include <random>

#include "keydyn/error.hpp"
#include "keydyn/forest.hpp"
#include "test_support.hpp"

using namespace keydyn;
using keydyn::testing::SyntheticRun;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

std::vector<std::size_t> iota_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

Dataset column(const std::vector<float>& values, const std::vector<std::uint32_t>& labels, std::uint32_t k) {
  Dataset d(1, k);
  for (std::size_t i = 0; i < values.size(); ++i) d.add(std::span<const float>(&values[i], 1), labels[i]);
  return d;
}

Dataset random_dataset(std::mt19937_64& rng, std::size_t n, std::size_t f, std::uint32_t k) {
  Dataset d(f, k);
  std::uniform_int_distribution<int> v(0, 9);
  std::vector<float> row(f);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& x : row) x = static_cast<float>(v(rng));
    d.add(row, static_cast<std::uint32_t>(rng() % k));
  }
  return d;
}

DecisionTree constant_tree(std::uint32_t label) {
  TreeNode leaf;
  leaf.class_counts = {{label, 1}};
  return DecisionTree({leaf});
}

RandomForestModel voting_model(std::vector<std::uint32_t> tree_labels, std::uint32_t num_classes) {
  std::vector<DecisionTree> trees;
  for (auto l : tree_labels) trees.push_back(constant_tree(l));
  ForestConfig cfg;
  cfg.n_estimators = trees.size();
  return RandomForestModel(cfg, num_classes, 3, std::move(trees));
}

}  // namespace

TEST_CASE("gini examples") {
  const std::vector<std::uint64_t> half = {5, 5}, pure = {7, 0}, third = {1, 2};
  CHECK(gini(half) == doctest::Approx(0.5));
  CHECK(gini(pure) == 0.0);
  CHECK(gini(third) == doctest::Approx(4.0 / 9.0));
  const std::vector<std::uint64_t> none = {0, 0};
  CHECK(code_of([&] { gini(none); }) == ErrorCode::EmptyNode);
}

TEST_CASE("gini stays within [0, 1 - 1/K]") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t k = 1 + rng() % 8;
    std::vector<std::uint64_t> counts(k);
    for (auto& c : counts) c = rng() % 20;
    counts[rng() % k] += 1;
    const double g = gini(counts);
    CHECK(g >= 0.0);
    CHECK(g <= 1.0 - 1.0 / static_cast<double>(k) + 1e-12);
  }
}

TEST_CASE("best_split examples") {
  const auto d = column({1, 2, 3, 4}, {0, 0, 1, 1}, 2);
  const auto rows = iota_rows(4);
  const std::vector<std::size_t> features = {0};
  const auto s = best_split(d, rows, features);
  REQUIRE(s.has_value());
  CHECK(s->feature == 0);
  CHECK(s->threshold == 2.5);
  CHECK(s->impurity_decrease == doctest::Approx(0.5));

  CHECK_FALSE(best_split(column({1, 2, 3, 4}, {1, 1, 1, 1}, 2), rows, features).has_value());
  CHECK_FALSE(best_split(column({3, 3, 3, 3}, {0, 1, 0, 1}, 2), rows, features).has_value());
  // min_samples_leaf = 3 leaves no admissible threshold among 4 rows
  CHECK_FALSE(best_split(d, rows, features, 3).has_value());
}

TEST_CASE("best_split breaks ties toward the lowest feature") {
  Dataset d(3, 2);
  for (int i = 0; i < 4; ++i) {
    const float x = static_cast<float>(i);
    const std::vector<float> row = {5.0f, x, x};  // feature 0 constant, 1 and 2 identical
    d.add(row, i < 2 ? 0u : 1u);
  }
  const std::vector<std::size_t> features = {2, 1, 0};
  const auto s = best_split(d, iota_rows(4), features);
  REQUIRE(s.has_value());
  CHECK(s->feature == 1);
  CHECK(s->threshold == 1.5);
}

TEST_CASE("best_split on duplicated rows") {
  const auto d = column({1, 2}, {0, 1}, 2);
  const std::vector<std::size_t> rows = {0, 0, 0, 1};  // bootstrap-style duplicates
  const std::vector<std::size_t> features = {0};
  const auto s = best_split(d, rows, features);
  REQUIRE(s.has_value());
  CHECK(s->impurity_decrease == doctest::Approx(0.375));
}

TEST_CASE("grow_tree examples") {
  TreeConfig cfg{2, 1, 0};
  std::mt19937_64 rng(0);
  const auto d = column({1, 2, 3, 4}, {0, 0, 1, 1}, 2);
  const auto tree = grow_tree(d, iota_rows(4), cfg, rng);
  REQUIRE(tree.nodes().size() == 3);
  CHECK(tree.depth() == 1);
  CHECK(tree.nodes()[0].threshold == 2.5);
  const float lo = 0.0f, hi = 10.0f;
  CHECK(tree.predict(std::span<const float>(&lo, 1)) == 0);
  CHECK(tree.predict(std::span<const float>(&hi, 1)) == 1);

  // a single class gives a single leaf
  const auto pure = grow_tree(column({1, 2, 3}, {4, 4, 4}, 5), iota_rows(3), cfg, rng);
  CHECK(pure.nodes().size() == 1);
  CHECK(pure.nodes()[0].majority() == 4);
}

TEST_CASE("unconstrained tree memorizes distinct rows") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Dataset d(4, 3);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    for (int i = 0; i < 60; ++i) {
      const std::vector<float> row = {u(rng), u(rng), u(rng), u(rng)};
      d.add(row, static_cast<std::uint32_t>(rng() % 3));
    }
    const auto tree = grow_tree(d, iota_rows(d.size()), TreeConfig{2, 1, 0}, rng);
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(tree.predict(d.row(i)) == d.label(i));
  }
}

TEST_CASE("tree structure is well formed") {
  std::mt19937_64 rng(12);
  const auto d = random_dataset(rng, 200, 6, 4);
  const auto tree = grow_tree(d, iota_rows(d.size()), TreeConfig{5, 2, 3}, rng);
  std::uint64_t leaf_total = 0;
  for (const auto& n : tree.nodes()) {
    if (n.is_leaf()) {
      std::uint64_t c = 0;
      for (const auto& cc : n.class_counts) c += cc.count;
      CHECK(c >= 2);  // min_samples_leaf
      leaf_total += c;
    } else {
      CHECK(n.left > 0);
      CHECK(n.right > 0);
      CHECK(static_cast<std::size_t>(n.right) < tree.nodes().size());
    }
  }
  CHECK(leaf_total == d.size());
  // routing always ends in a leaf
  std::uniform_real_distribution<float> u(-5.0f, 15.0f);
  for (int i = 0; i < 200; ++i) {
    const std::vector<float> x = {u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)};
    CHECK(tree.leaf_for(x).is_leaf());
  }
}

TEST_CASE("max_features resolution") {
  CHECK(resolve_max_features(MaxFeatures::Auto, 8820) == 93);
  CHECK(resolve_max_features(MaxFeatures::Sqrt, 8820) == 93);
  CHECK(resolve_max_features(MaxFeatures::All, 8820) == 8820);
  CHECK(resolve_max_features(MaxFeatures::Auto, 1) == 1);

  const ForestConfig defaults;
  CHECK(defaults.n_estimators == 1000);
  CHECK(defaults.min_samples_split == 5);
  CHECK(defaults.min_samples_leaf == 2);
  CHECK(defaults.bootstrap);
}

TEST_CASE("forest on a single class predicts it everywhere") {
  std::mt19937_64 rng(2);
  Dataset d(5, 3);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (int i = 0; i < 30; ++i) {
    const std::vector<float> row = {u(rng), u(rng), u(rng), u(rng), u(rng)};
    d.add(row, 2);
  }
  ForestConfig cfg;
  cfg.n_estimators = 10;
  const auto model = fit_forest(d, cfg);
  CHECK(model.trees().size() == 10);
  for (int i = 0; i < 50; ++i) {
    const std::vector<float> row = {u(rng), u(rng), u(rng), u(rng), u(rng)};
    CHECK(model.predict(row) == 2);
  }
}

TEST_CASE("majority vote") {
  const std::vector<float> x = {0, 0, 0};
  CHECK(voting_model({2, 2, 7}, 8).predict(x) == 2);
  CHECK(voting_model({1, 2}, 3).predict(x) == 1);  // tie -> smallest id
  CHECK(voting_model({2, 1}, 3).predict(x) == 1);
  CHECK(voting_model({2, 2, 7}, 8).votes(x) == std::vector<std::uint32_t>{0, 0, 2, 0, 0, 0, 0, 1});
  const std::vector<float> wrong = {0, 0};
  CHECK(code_of([&] { voting_model({1}, 2).predict(wrong); }) == ErrorCode::FeatureLengthMismatch);
}

TEST_CASE("leaf majority ties go to the smallest label") {
  TreeNode leaf;
  leaf.class_counts = {{3, 4}, {5, 4}, {9, 1}};
  CHECK(leaf.majority() == 3);
}

TEST_CASE("forest is reproducible and thread-count independent") {
  std::mt19937_64 rng(21);
  const auto d = random_dataset(rng, 150, 12, 3);
  ForestConfig cfg;
  cfg.n_estimators = 16;
  cfg.seed = 99;
  cfg.num_threads = 1;
  const auto a = fit_forest(d, cfg);
  cfg.num_threads = 4;
  const auto b = fit_forest(d, cfg);
  CHECK(a.trees() == b.trees());
  CHECK(a.predict_all(d, 1) == b.predict_all(d, 3));
  cfg.seed = 100;
  CHECK(fit_forest(d, cfg).trees() != a.trees());

  cfg.n_estimators = 1;
  CHECK(fit_forest(d, cfg).trees().size() == 1);
}

TEST_CASE("decision tree config is a single unbagged tree") {
  const auto cfg = ForestConfig::decision_tree(4);
  CHECK(cfg.n_estimators == 1);
  CHECK_FALSE(cfg.bootstrap);
  CHECK(cfg.max_features == MaxFeatures::All);
  CHECK(cfg.seed == 4);
}

TEST_CASE("invalid inputs") {
  Dataset d(3, 2);
  const std::vector<float> short_row = {1, 2};
  CHECK(code_of([&] { d.add(short_row, 0); }) == ErrorCode::FeatureLengthMismatch);
  const std::vector<float> row = {1, 2, 3};
  CHECK(code_of([&] { d.add(row, 2); }) == ErrorCode::LabelOutOfRange);
  CHECK(code_of([&] { fit_forest(d, ForestConfig{}); }) == ErrorCode::EmptyTrainingSet);
  ForestConfig zero;
  zero.n_estimators = 0;
  CHECK_THROWS_AS(zero.validate(), Error);
}

TEST_CASE("model JSON round trip") {
  std::mt19937_64 rng(31);
  const auto d = random_dataset(rng, 80, 5, 4);
  ForestConfig cfg;
  cfg.n_estimators = 5;
  cfg.seed = 8;
  const auto model = fit_forest(d, cfg);
  const auto back = model_from_json(model_to_json(model));
  CHECK(back == model);
  CHECK(model_to_json(back) == model_to_json(model));

  keydyn::testing::TempDir dir("forest");
  save_model(model, dir / "m.json");
  CHECK(load_model(dir / "m.json") == model);

  auto text = model_to_json(model);
  const auto pos = text.find("\"version\":1");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 11, "\"version\":2");
  CHECK(code_of([&] { model_from_json(text); }) == ErrorCode::ModelVersionMismatch);
  CHECK(code_of([&] { model_from_json("{\"format\":\"keydyn-forest\"}"); }) == ErrorCode::MalformedModel);
  CHECK(code_of([&] { model_from_json("not json"); }) == ErrorCode::MalformedModel);
}

TEST_CASE("well separated synthetic users are identified") {
  SyntheticRun run;
  run.num_users = 3;
  run.separation = 5.0;
  run.forest.n_estimators = 50;
  for (std::uint64_t seed : {1u, 2u}) {
    run.seed = seed;
    run.forest.seed = seed;
    CHECK(keydyn::testing::synthetic_accuracy(run) >= 0.95);
  }
}

TEST_CASE("forest is no worse than a single tree") {
  SyntheticRun run;
  run.num_users = 5;
  run.separation = 2.0;
  run.keystrokes_per_session = 1500;
  double forest_sum = 0.0, tree_sum = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    run.seed = seed;
    const auto data = keydyn::testing::prepare_split(run);
    ForestConfig cfg;
    cfg.n_estimators = 60;
    cfg.seed = seed;
    forest_sum += keydyn::testing::test_accuracy(fit_forest(data.train, cfg), data.test);
    tree_sum += keydyn::testing::test_accuracy(fit_forest(data.train, ForestConfig::decision_tree(seed)), data.test);
  }
  CHECK(forest_sum / 3 >= tree_sum / 3 - 0.02);
}

TEST_CASE("accuracy grows with separation") {
  SyntheticRun run;
  run.num_users = 4;
  run.keystrokes_per_session = 1000;
  run.forest.n_estimators = 30;
  std::vector<double> means;
  for (double sep : {0.0, 2.0, 5.0}) {
    double sum = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      run.separation = sep;
      run.seed = seed;
      run.forest.seed = seed;
      sum += keydyn::testing::synthetic_accuracy(run);
    }
    means.push_back(sum / 5);
  }
  MESSAGE("mean accuracy at separation 0/2/5: ", means[0], " ", means[1], " ", means[2]);
  CHECK(means[0] < means[1]);
  CHECK(means[1] < means[2]);
}
