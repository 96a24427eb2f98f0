#include "keydyn/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "keydyn/error.hpp"
#include "keydyn/seeds.hpp"
#include "parallel.hpp"

namespace keydyn {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out << text;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create directory " + dir.string() + ": " + ec.message());
}

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorCode::InvalidArgument, "config: '" + where + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(ErrorCode::InvalidArgument, "config: unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void read_opt(const json& obj, const char* key, T& dst) {
  if (obj.contains(key)) dst = obj.at(key).get<T>();
}

MaxFeatures parse_max_features(const std::string& s) {
  if (s == "auto") return MaxFeatures::Auto;
  if (s == "sqrt") return MaxFeatures::Sqrt;
  if (s == "all") return MaxFeatures::All;
  throw Error(ErrorCode::InvalidArgument, "config: max_features must be auto, sqrt or all");
}

std::string max_features_text(MaxFeatures m) {
  switch (m) {
    case MaxFeatures::Auto: return "auto";
    case MaxFeatures::Sqrt: return "sqrt";
    case MaxFeatures::All: return "all";
  }
  return "auto";
}

void parse_split(const json& j, SplitSpec& spec, bool& explicit_seed, const std::string& where) {
  reject_unknown(j, {"train", "validation", "test", "seed"}, where);
  read_opt(j, "train", spec.train);
  read_opt(j, "validation", spec.validation);
  read_opt(j, "test", spec.test);
  if (j.contains("seed")) {
    spec.seed = j["seed"].get<std::uint64_t>();
    explicit_seed = true;
  }
}

ordered_json split_json(const SplitSpec& s) {
  return {{"train", s.train}, {"validation", s.validation}, {"test", s.test}, {"seed", s.seed}};
}

}  // namespace

void PipelineConfig::set_global_seed(std::uint64_t global) {
  seed = global;
  if (!explicit_seeds.synth) synthetic.seed = derive_seed(global, "synth");
  if (!explicit_seeds.split) split.seed = derive_seed(global, "split");
  if (!explicit_seeds.export_split) export_split.seed = derive_seed(global, "export-split");
  if (!explicit_seeds.forest) forest.seed = derive_seed(global, "forest");
  if (!explicit_seeds.cutout) cutout_seed = derive_seed(global, "cutout");
}

void PipelineConfig::validate() const {
  if (!logs) synthetic.validate();
  window.validate();
  cutout.validate();
  split.validate();
  export_split.validate();
  forest.validate();
  if (!(partition_lo <= partition_hi)) throw Error(ErrorCode::InvalidArgument, "partition lo must be <= hi");
}

PipelineConfig PipelineConfig::defaults() {
  PipelineConfig cfg;
  cfg.set_global_seed(0);
  return cfg;
}

std::string PipelineConfig::to_json() const {
  ordered_json doc;
  doc["seed"] = seed;
  doc["out_dir"] = out_dir.generic_string();
  doc["threads"] = num_threads;
  ordered_json data;
  if (logs) {
    data["log_dir"] = logs->log_dir.generic_string();
    if (logs->manifest) data["manifest"] = logs->manifest->generic_string();
  } else {
    ordered_json vocab = ordered_json::array();
    for (KeyId k : synthetic.vocabulary) vocab.push_back(std::string(canonical_key_name(k)));
    data["synthetic"] = {{"num_users", synthetic.num_users},
                         {"sessions_per_user", synthetic.sessions_per_user},
                         {"keystrokes_per_session", synthetic.keystrokes_per_session},
                         {"separation_factor", synthetic.separation_factor},
                         {"vocabulary", vocab},
                         {"seed", synthetic.seed}};
  }
  doc["data"] = data;
  doc["window"] = {{"length", window.length}};
  doc["cutout"] = {{"square_size", cutout.square_size}, {"count", cutout.count},
                   {"probability", cutout.probability}, {"copies", cutout_copies},
                   {"seed", cutout_seed}};
  doc["split"] = split_json(split);
  doc["export_split"] = split_json(export_split);
  doc["forest"] = {{"n_estimators", forest.n_estimators},
                   {"max_features", max_features_text(forest.max_features)},
                   {"min_samples_split", forest.min_samples_split},
                   {"min_samples_leaf", forest.min_samples_leaf},
                   {"bootstrap", forest.bootstrap},
                   {"seed", forest.seed}};
  doc["partition"] = {{"hi", partition_hi}, {"lo", partition_lo}};
  return doc.dump(2) + "\n";
}

PipelineConfig PipelineConfig::from_json(const std::string& text) {
  PipelineConfig cfg;
  try {
    const json doc = json::parse(text);
    reject_unknown(doc, {"seed", "out_dir", "threads", "data", "window", "cutout", "split", "export_split", "forest",
                         "partition"},
                   "top level");
    read_opt(doc, "seed", cfg.seed);
    if (doc.contains("out_dir")) cfg.out_dir = doc["out_dir"].get<std::string>();
    read_opt(doc, "threads", cfg.num_threads);

    if (doc.contains("data")) {
      const auto& d = doc["data"];
      reject_unknown(d, {"log_dir", "manifest", "synthetic"}, "data");
      if (d.contains("log_dir") && d.contains("synthetic")) {
        throw Error(ErrorCode::InvalidArgument, "config: data needs either log_dir or synthetic, not both");
      }
      if (d.contains("log_dir")) {
        LogSource src;
        src.log_dir = d["log_dir"].get<std::string>();
        if (d.contains("manifest")) src.manifest = std::filesystem::path(d["manifest"].get<std::string>());
        cfg.logs = src;
      }
      if (d.contains("synthetic")) {
        const auto& s = d["synthetic"];
        reject_unknown(s, {"num_users", "sessions_per_user", "keystrokes_per_session", "separation_factor",
                           "vocabulary", "seed"},
                       "data.synthetic");
        read_opt(s, "num_users", cfg.synthetic.num_users);
        read_opt(s, "sessions_per_user", cfg.synthetic.sessions_per_user);
        read_opt(s, "keystrokes_per_session", cfg.synthetic.keystrokes_per_session);
        read_opt(s, "separation_factor", cfg.synthetic.separation_factor);
        if (s.contains("vocabulary")) {
          for (const auto& name : s["vocabulary"]) {
            const auto key = normalize_key(name.get<std::string>());
            if (!key) throw Error(ErrorCode::InvalidArgument, "config: unknown vocabulary key " + name.dump());
            cfg.synthetic.vocabulary.push_back(*key);
          }
        }
        if (s.contains("seed")) {
          cfg.synthetic.seed = s["seed"].get<std::uint64_t>();
          cfg.explicit_seeds.synth = true;
        }
      }
    }
    if (doc.contains("window")) {
      reject_unknown(doc["window"], {"length"}, "window");
      read_opt(doc["window"], "length", cfg.window.length);
    }
    if (doc.contains("cutout")) {
      const auto& c = doc["cutout"];
      reject_unknown(c, {"square_size", "count", "probability", "copies", "seed"}, "cutout");
      read_opt(c, "square_size", cfg.cutout.square_size);
      read_opt(c, "count", cfg.cutout.count);
      read_opt(c, "probability", cfg.cutout.probability);
      read_opt(c, "copies", cfg.cutout_copies);
      if (c.contains("seed")) {
        cfg.cutout_seed = c["seed"].get<std::uint64_t>();
        cfg.explicit_seeds.cutout = true;
      }
    }
    if (doc.contains("split")) parse_split(doc["split"], cfg.split, cfg.explicit_seeds.split, "split");
    if (doc.contains("export_split")) {
      parse_split(doc["export_split"], cfg.export_split, cfg.explicit_seeds.export_split, "export_split");
    }
    if (doc.contains("forest")) {
      const auto& f = doc["forest"];
      reject_unknown(f, {"n_estimators", "max_features", "min_samples_split", "min_samples_leaf", "bootstrap", "seed"},
                     "forest");
      read_opt(f, "n_estimators", cfg.forest.n_estimators);
      if (f.contains("max_features")) cfg.forest.max_features = parse_max_features(f["max_features"].get<std::string>());
      read_opt(f, "min_samples_split", cfg.forest.min_samples_split);
      read_opt(f, "min_samples_leaf", cfg.forest.min_samples_leaf);
      read_opt(f, "bootstrap", cfg.forest.bootstrap);
      if (f.contains("seed")) {
        cfg.forest.seed = f["seed"].get<std::uint64_t>();
        cfg.explicit_seeds.forest = true;
      }
    }
    if (doc.contains("partition")) {
      reject_unknown(doc["partition"], {"hi", "lo"}, "partition");
      read_opt(doc["partition"], "hi", cfg.partition_hi);
      read_opt(doc["partition"], "lo", cfg.partition_lo);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("config: ") + e.what());
  }
  cfg.set_global_seed(cfg.seed);
  cfg.validate();
  return cfg;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  try {
    return from_json(read_text(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::string model_kind_name(ModelKind kind) { return kind == ModelKind::RandomForest ? "rf" : "dt"; }

namespace artifacts {
std::string model_file(ModelKind kind) { return "model_" + model_kind_name(kind) + ".json"; }
std::string report_file(ModelKind kind) { return "report_" + model_kind_name(kind) + ".json"; }
std::string per_user_csv_file(ModelKind kind) { return "per_user_" + model_kind_name(kind) + ".csv"; }
}  // namespace artifacts

void write_session_store(std::span<const UserSession> sessions, const std::filesystem::path& path) {
  ordered_json doc;
  doc["format"] = "keydyn-sessions";
  doc["version"] = 1;
  ordered_json list = ordered_json::array();
  for (const auto& s : sessions) {
    ordered_json ks = ordered_json::array();
    for (const auto& k : s.keystrokes) ks.push_back({std::string(canonical_key_name(k.key)), k.down_ms, k.up_ms});
    list.push_back({{"user_id", s.user_id},
                    {"session_id", s.session_id},
                    {"stats",
                     {{"lines_read", s.stats.lines_read},
                      {"events_parsed", s.stats.events_parsed},
                      {"unknown_key_events_dropped", s.stats.unknown_key_events_dropped},
                      {"orphan_downs_dropped", s.stats.orphan_downs_dropped},
                      {"orphan_ups_dropped", s.stats.orphan_ups_dropped}}},
                    {"keystrokes", std::move(ks)}});
  }
  doc["sessions"] = std::move(list);
  write_text(path, doc.dump() + "\n");
}

std::vector<UserSession> read_session_store(const std::filesystem::path& path) {
  std::vector<UserSession> sessions;
  try {
    const json doc = json::parse(read_text(path));
    if (doc.at("format").get<std::string>() != "keydyn-sessions") {
      throw Error(ErrorCode::ManifestError, path.string() + ": not a session store");
    }
    for (const auto& js : doc.at("sessions")) {
      UserSession s;
      s.user_id = js.at("user_id").get<std::string>();
      s.session_id = js.at("session_id").get<std::string>();
      const auto& st = js.at("stats");
      s.stats.lines_read = st.at("lines_read").get<std::uint64_t>();
      s.stats.events_parsed = st.at("events_parsed").get<std::uint64_t>();
      s.stats.unknown_key_events_dropped = st.at("unknown_key_events_dropped").get<std::uint64_t>();
      s.stats.orphan_downs_dropped = st.at("orphan_downs_dropped").get<std::uint64_t>();
      s.stats.orphan_ups_dropped = st.at("orphan_ups_dropped").get<std::uint64_t>();
      for (const auto& k : js.at("keystrokes")) {
        const auto key = normalize_key(k.at(0).get<std::string>());
        if (!key) throw Error(ErrorCode::ManifestError, path.string() + ": unknown key in session store");
        s.keystrokes.push_back({*key, k.at(1).get<std::int64_t>(), k.at(2).get<std::int64_t>()});
      }
      sessions.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ManifestError, path.string() + ": bad session store: " + e.what());
  }
  return sessions;
}

FeaturizedCorpus featurize(std::span<const UserSession> sessions, const WindowConfig& cfg, std::size_t num_threads) {
  cfg.validate();
  FeaturizedCorpus out;
  out.window_length = cfg.length;
  std::set<std::string> ids;
  for (const auto& s : sessions) ids.insert(s.user_id);
  out.users.assign(ids.begin(), ids.end());

  const auto windows = window_all(sessions, cfg);
  out.samples.resize(windows.size());
  detail::parallel_for(windows.size(), num_threads, [&](std::size_t i) {
    const auto& w = windows[i];
    const auto label = static_cast<std::uint32_t>(std::lower_bound(out.users.begin(), out.users.end(), w.user_id) -
                                                  out.users.begin());
    out.samples[i] = LabeledKdi{label, build_kdi(w)};
  });
  return out;
}

Dataset to_dataset(std::span<const LabeledKdi> samples, std::size_t num_classes, std::span<const std::size_t> indices) {
  Dataset data(kFlatLength, static_cast<std::uint32_t>(num_classes));
  for (std::size_t i : indices) {
    if (i >= samples.size()) throw Error(ErrorCode::ManifestError, "split index " + std::to_string(i) + " out of range");
    data.add(samples[i].kdi.values(), samples[i].label);
  }
  return data;
}

namespace {

std::filesystem::path out_path(const PipelineConfig& cfg, const std::string& name) { return cfg.out_dir / name; }

struct FeatureStore {
  std::vector<LabeledKdi> samples;
  TensorManifest manifest;
};

FeatureStore load_features(const PipelineConfig& cfg) {
  FeatureStore fs;
  fs.manifest = read_manifest(out_path(cfg, artifacts::kFeaturesManifest));
  fs.samples = read_tensor_file(out_path(cfg, artifacts::kFeatures));
  for (const auto& s : fs.samples) {
    if (s.label >= fs.manifest.labels.size()) {
      throw Error(ErrorCode::ManifestError, "feature label " + std::to_string(s.label) + " missing from manifest");
    }
  }
  return fs;
}

std::vector<std::uint32_t> labels_of(std::span<const LabeledKdi> samples) {
  std::vector<std::uint32_t> labels;
  labels.reserve(samples.size());
  for (const auto& s : samples) labels.push_back(s.label);
  return labels;
}

TensorManifest manifest_for(const std::vector<std::string>& users, std::size_t window_length) {
  TensorManifest m;
  for (std::uint32_t i = 0; i < users.size(); ++i) m.labels[users[i]] = i;
  m.window_length = window_length;
  return m;
}

}  // namespace

std::vector<UserSession> run_ingest(const PipelineConfig& cfg) {
  if (!cfg.logs) throw Error(ErrorCode::InvalidArgument, "ingest needs a log directory (data.log_dir or --log-dir)");
  auto sessions = load_log_directory(cfg.logs->log_dir, cfg.logs->manifest);
  ensure_dir(cfg.out_dir);
  write_session_store(sessions, out_path(cfg, artifacts::kSessions));
  return sessions;
}

std::vector<UserSession> run_synth(const PipelineConfig& cfg, const std::optional<std::filesystem::path>& emit_logs) {
  auto sessions = generate_corpus(cfg.synthetic);
  ensure_dir(cfg.out_dir);
  write_session_store(sessions, out_path(cfg, artifacts::kSessions));
  if (emit_logs) {
    for (const auto& s : sessions) {
      const auto dir = *emit_logs / s.user_id;
      ensure_dir(dir);
      std::ofstream out(dir / (s.session_id + ".txt"), std::ios::trunc);
      if (!out) throw Error(ErrorCode::Io, "cannot write log for " + s.user_id + "/" + s.session_id);
      write_log(out, s.keystrokes);
    }
  }
  return sessions;
}

void run_featurize(const PipelineConfig& cfg, bool export_tensors) {
  const auto sessions = read_session_store(out_path(cfg, artifacts::kSessions));
  const auto corpus = featurize(sessions, cfg.window, cfg.num_threads);
  if (corpus.samples.empty()) {
    throw Error(ErrorCode::EmptyTrainingSet, "no session is long enough for window length " +
                                                 std::to_string(cfg.window.length));
  }
  write_tensor_file(corpus.samples, out_path(cfg, artifacts::kFeatures));
  write_manifest(manifest_for(corpus.users, corpus.window_length), out_path(cfg, artifacts::kFeaturesManifest));
  if (export_tensors) run_export_tensors(cfg);
}

SplitIndices run_split(const PipelineConfig& cfg) {
  auto fs = load_features(cfg);
  const auto labels = labels_of(fs.samples);
  auto split = stratified_split(labels, cfg.split);
  fs.manifest.train = split.train;
  fs.manifest.val = split.validation;
  fs.manifest.test = split.test;
  write_manifest(fs.manifest, out_path(cfg, artifacts::kFeaturesManifest));
  return split;
}

RandomForestModel run_train(const PipelineConfig& cfg, ModelKind kind) {
  const auto fs = load_features(cfg);
  if (fs.manifest.train.empty()) {
    throw Error(ErrorCode::EmptyTrainingSet, "features manifest has no training split; run `split` first");
  }
  const auto data = to_dataset(fs.samples, fs.manifest.labels.size(), fs.manifest.train);
  ForestConfig fc = kind == ModelKind::RandomForest ? cfg.forest : ForestConfig::decision_tree(cfg.forest.seed);
  if (kind == ModelKind::DecisionTree) {
    fc.min_samples_split = cfg.forest.min_samples_split;
    fc.min_samples_leaf = cfg.forest.min_samples_leaf;
  }
  fc.num_threads = cfg.num_threads;
  auto model = fit_forest(data, fc);
  save_model(model, out_path(cfg, artifacts::model_file(kind)));
  return model;
}

EvaluationReport run_evaluate(const PipelineConfig& cfg, ModelKind kind) {
  const auto fs = load_features(cfg);
  if (fs.manifest.test.empty()) throw Error(ErrorCode::EmptyMatrix, "features manifest has no test split");
  const auto model = load_model(out_path(cfg, artifacts::model_file(kind)));
  const auto data = to_dataset(fs.samples, fs.manifest.labels.size(), fs.manifest.test);
  if (model.num_classes() != data.num_classes()) {
    throw Error(ErrorCode::DimensionMismatch, "model has " + std::to_string(model.num_classes()) +
                                                  " classes, features have " + std::to_string(data.num_classes()));
  }
  const auto predicted = model.predict_all(data, cfg.num_threads);
  const std::vector<std::uint32_t> actual(data.labels().begin(), data.labels().end());
  auto report = build_report(kind == ModelKind::RandomForest ? "random_forest" : "decision_tree",
                             fs.manifest.users_by_label(), actual, predicted, cfg.to_json(), cfg.partition_hi,
                             cfg.partition_lo);
  write_report(report, out_path(cfg, artifacts::report_file(kind)));
  std::ofstream csv(out_path(cfg, artifacts::per_user_csv_file(kind)), std::ios::trunc);
  if (!csv) throw Error(ErrorCode::Io, "cannot write per-user CSV");
  write_per_user_csv(csv, report);
  return report;
}

PartitionResult run_partition(const PipelineConfig& cfg, const std::filesystem::path& report_path,
                              bool difficult_only) {
  const auto report = read_report(report_path);
  auto result = partition_users(report.scored_accuracies(), cfg.partition_hi, cfg.partition_lo);

  ordered_json doc;
  doc["hi"] = result.hi;
  doc["lo"] = result.lo;
  doc["easy"] = result.easy;
  doc["moderate"] = result.moderate;
  doc["difficult"] = result.difficult;
  doc["unscored"] = report.unscored;
  doc["counts"] = {{"easy", result.easy.size()},
                   {"moderate", result.moderate.size()},
                   {"difficult", result.difficult.size()},
                   {"unscored", report.unscored.size()}};
  ensure_dir(cfg.out_dir);
  write_text(out_path(cfg, artifacts::kPartition), doc.dump(2) + "\n");

  if (difficult_only) {
    const auto fs = load_features(cfg);
    const auto users = fs.manifest.users_by_label();
    const std::set<std::string> keep(result.difficult.begin(), result.difficult.end());
    std::vector<std::string> kept_users;
    for (const auto& u : users) {
      if (keep.count(u)) kept_users.push_back(u);  // users is sorted, so kept_users is too
    }
    std::vector<LabeledKdi> filtered;
    for (const auto& s : fs.samples) {
      const auto& user = users[s.label];
      if (!keep.count(user)) continue;
      const auto label = static_cast<std::uint32_t>(std::lower_bound(kept_users.begin(), kept_users.end(), user) -
                                                    kept_users.begin());
      filtered.push_back({label, s.kdi});
    }
    const auto dir = cfg.out_dir / artifacts::kDifficultDir;
    ensure_dir(dir);
    write_tensor_file(filtered, dir / artifacts::kFeatures);
    write_manifest(manifest_for(kept_users, fs.manifest.window_length), dir / artifacts::kFeaturesManifest);
  }
  return result;
}

void run_export_tensors(const PipelineConfig& cfg) {
  const auto sessions = read_session_store(out_path(cfg, artifacts::kSessions));
  auto corpus = featurize(sessions, cfg.window, cfg.num_threads);
  if (corpus.samples.empty()) throw Error(ErrorCode::EmptyTrainingSet, "no windows to export");

  const auto labels = labels_of(corpus.samples);
  const auto split = stratified_split(labels, cfg.export_split);

  std::vector<Kdi> train;
  train.reserve(split.train.size());
  for (std::size_t i : split.train) train.push_back(corpus.samples[i].kdi);
  const auto stats = fit_standardizer(train);
  for (auto& s : corpus.samples) s.kdi = apply_standardizer(s.kdi, stats);

  TensorManifest manifest = manifest_for(corpus.users, corpus.window_length);
  manifest.train = split.train;
  manifest.val = split.validation;
  manifest.test = split.test;
  manifest.standardized = true;

  // Augmented copies of training samples are appended and listed under train.
  for (std::size_t copy = 0; copy < cfg.cutout_copies; ++copy) {
    for (std::size_t i : split.train) {
      const std::uint64_t seed = derive_seed(cfg.cutout_seed, "copy" + std::to_string(copy) + ":" + std::to_string(i));
      corpus.samples.push_back({corpus.samples[i].label, apply_cutout(corpus.samples[i].kdi, cfg.cutout, seed)});
      manifest.train.push_back(corpus.samples.size() - 1);
    }
  }

  ensure_dir(cfg.out_dir);
  write_tensor_file(corpus.samples, out_path(cfg, artifacts::kTensors));
  write_manifest(manifest, out_path(cfg, artifacts::kTensorsManifest));
}

}  // namespace keydyn
