#include "cli.hpp"

#include <algorithm>
#include <iomanip>
#include <optional>
#include <ostream>

#include <CLI11.hpp>

#include "keydyn/error.hpp"
#include "keydyn/pipeline.hpp"

namespace keydyn::cli {
namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::size_t> window_length;
  std::optional<std::size_t> n_estimators;
  std::optional<std::size_t> threads;
  std::optional<std::string> log_dir;
  std::optional<std::string> log_manifest;
  std::optional<std::size_t> num_users;
  std::optional<double> separation;
  std::optional<std::string> emit_logs;
  std::optional<std::string> report;
  std::string model = "rf";
  bool export_tensors = false;
  bool difficult_only = false;
};

PipelineConfig resolve(const Overrides& o) {
  PipelineConfig cfg = o.config_path.empty() ? PipelineConfig::defaults() : PipelineConfig::load(o.config_path);
  if (o.out_dir) cfg.out_dir = *o.out_dir;
  if (o.window_length) cfg.window.length = *o.window_length;
  if (o.n_estimators) cfg.forest.n_estimators = *o.n_estimators;
  if (o.threads) cfg.num_threads = *o.threads;
  if (o.log_dir) {
    cfg.logs = LogSource{*o.log_dir, std::nullopt};
    if (o.log_manifest) cfg.logs->manifest = std::filesystem::path(*o.log_manifest);
  }
  if (o.num_users) cfg.synthetic.num_users = *o.num_users;
  if (o.separation) cfg.synthetic.separation_factor = *o.separation;
  if (o.seed) cfg.set_global_seed(*o.seed);
  cfg.validate();
  return cfg;
}

ModelKind parse_model(const std::string& s) {
  if (s == "rf") return ModelKind::RandomForest;
  if (s == "dt") return ModelKind::DecisionTree;
  throw Error(ErrorCode::InvalidArgument, "--model must be rf or dt");
}

void print_report(std::ostream& out, const EvaluationReport& r) {
  out << r.model << ": accuracy " << std::fixed << std::setprecision(4) << r.overall_accuracy << " over "
      << r.confusion.total() << " test samples, " << r.users.size() << " users (easy " << r.partition.easy.size()
      << ", moderate " << r.partition.moderate.size() << ", difficult " << r.partition.difficult.size() << ")\n";
  out.unsetf(std::ios::floatfield);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"keydyn: keystroke-dynamics user identification with KDI features and random forests"};
  app.require_subcommand(1);
  app.fallthrough();

  Overrides o;
  app.add_option("-c,--config", o.config_path, "Pipeline config (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "Global seed; nested seeds not set in the config derive from it");
  app.add_option("--out-dir", o.out_dir, "Artifact directory");
  app.add_option("--window-length", o.window_length, "Keystrokes per subsequence (e.g. 50, 75, 100)");
  app.add_option("--n-estimators", o.n_estimators, "Number of trees in the random forest");
  app.add_option("--threads", o.threads, "Worker threads (0 = all cores); results do not depend on it");

  auto* ingest = app.add_subcommand("ingest", "Parse <user>/<session>.txt key logs into the session store");
  ingest->add_option("--log-dir", o.log_dir, "Root of the log tree");
  ingest->add_option("--manifest", o.log_manifest, "JSON manifest assigning files to users/sessions");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus into the session store");
  synth->add_option("--emit-logs", o.emit_logs, "Also write three-column logs under this directory");
  synth->add_option("--num-users", o.num_users, "Number of synthetic users");
  synth->add_option("--separation", o.separation, "User separation factor (0 = indistinguishable)");

  auto* featurize = app.add_subcommand("featurize", "Window sessions and build flattened KDI features");
  featurize->add_flag("--export-tensors", o.export_tensors, "Also write the standardized KDT1 export");

  auto* split = app.add_subcommand("split", "Stratified train/validation/test split of the features");
  auto* train_dt = app.add_subcommand("train-dt", "Train a decision tree on the training split");
  auto* train_rf = app.add_subcommand("train-rf", "Train a random forest on the training split");

  auto* evaluate = app.add_subcommand("evaluate", "Score a trained model on the test split");
  evaluate->add_option("--model", o.model, "rf or dt")->check(CLI::IsMember({"rf", "dt"}));

  auto* partition = app.add_subcommand("partition", "Split users into easy/moderate/difficult sets");
  partition->add_option("--report", o.report, "Report JSON (default <out-dir>/report_rf.json)");
  partition->add_flag("--difficult-only", o.difficult_only,
                      "Write the difficult users' features to <out-dir>/difficult/");

  auto* export_tensors = app.add_subcommand("export-tensors", "Write standardized KDT1 tensors and manifest");

  auto* pipeline = app.add_subcommand("pipeline", "synth|ingest, featurize, split, train-rf, evaluate, partition");
  pipeline->add_option("--log-dir", o.log_dir, "Use key logs instead of the synthetic generator");
  pipeline->add_option("--num-users", o.num_users, "Number of synthetic users");
  pipeline->add_option("--separation", o.separation, "User separation factor");
  pipeline->add_flag("--export-tensors", o.export_tensors, "Also write the KDT1 export");
  pipeline->add_flag("--difficult-only", o.difficult_only, "Also write the difficult-user dataset");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  if (!argv_rev.empty()) argv_rev.pop_back();  // program name
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    const PipelineConfig cfg = resolve(o);
    if (*ingest) {
      const auto sessions = run_ingest(cfg);
      std::size_t ks = 0;
      for (const auto& s : sessions) ks += s.keystrokes.size();
      out << "ingested " << sessions.size() << " sessions, " << ks << " keystrokes\n";
    } else if (*synth) {
      const auto sessions = run_synth(cfg, o.emit_logs ? std::optional<std::filesystem::path>(*o.emit_logs)
                                                       : std::nullopt);
      out << "generated " << sessions.size() << " sessions for " << cfg.synthetic.num_users << " users\n";
    } else if (*featurize) {
      run_featurize(cfg, o.export_tensors);
      out << "wrote " << (cfg.out_dir / artifacts::kFeatures).string() << "\n";
    } else if (*split) {
      const auto s = run_split(cfg);
      out << "split: train " << s.train.size() << ", validation " << s.validation.size() << ", test "
          << s.test.size() << "\n";
    } else if (*train_dt || *train_rf) {
      const ModelKind kind = *train_rf ? ModelKind::RandomForest : ModelKind::DecisionTree;
      const auto model = run_train(cfg, kind);
      out << "trained " << model.trees().size() << " tree(s) -> "
          << (cfg.out_dir / artifacts::model_file(kind)).string() << "\n";
    } else if (*evaluate) {
      print_report(out, run_evaluate(cfg, parse_model(o.model)));
    } else if (*partition) {
      const std::filesystem::path report =
          o.report ? std::filesystem::path(*o.report) : cfg.out_dir / artifacts::report_file(ModelKind::RandomForest);
      const auto p = run_partition(cfg, report, o.difficult_only);
      out << "easy " << p.easy.size() << ", moderate " << p.moderate.size() << ", difficult " << p.difficult.size()
          << "\n";
    } else if (*export_tensors) {
      run_export_tensors(cfg);
      out << "wrote " << (cfg.out_dir / artifacts::kTensors).string() << "\n";
    } else if (*pipeline) {
      if (cfg.logs) {
        run_ingest(cfg);
      } else {
        run_synth(cfg);
      }
      run_featurize(cfg, o.export_tensors);
      run_split(cfg);
      run_train(cfg, ModelKind::RandomForest);
      const auto report = run_evaluate(cfg, ModelKind::RandomForest);
      print_report(out, report);
      run_partition(cfg, cfg.out_dir / artifacts::report_file(ModelKind::RandomForest), o.difficult_only);
    }
  } catch (const Error& e) {
    err << "keydyn: " << to_string(e.code()) << ": " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    err << "keydyn: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace keydyn::cli
