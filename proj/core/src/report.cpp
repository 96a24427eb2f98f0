#include "keydyn/report.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "keydyn/error.hpp"

namespace keydyn {

using nlohmann::ordered_json;

std::map<std::string, double> EvaluationReport::scored_accuracies() const {
  std::map<std::string, double> out;
  for (const auto& u : per_user) {
    if (u.accuracy) out[u.user_id] = *u.accuracy;
  }
  return out;
}

EvaluationReport build_report(std::string model, std::vector<std::string> users,
                              std::span<const std::uint32_t> actual, std::span<const std::uint32_t> predicted,
                              std::string config_json, double hi, double lo) {
  EvaluationReport r;
  r.model = std::move(model);
  r.users = std::move(users);
  r.confusion = confusion_matrix(actual, predicted, r.users.size());
  r.overall_accuracy = accuracy(r.confusion);
  const auto per_class = per_class_accuracy(r.confusion);
  for (std::uint32_t c = 0; c < r.users.size(); ++c) {
    r.per_user.push_back({r.users[c], c, per_class[c], r.confusion.row_sum(c)});
    if (!per_class[c]) r.unscored.push_back(r.users[c]);
  }
  const auto scored = r.scored_accuracies();
  r.partition = partition_users(scored, hi, lo);
  r.histogram_edges = decile_edges();
  std::vector<double> values;
  for (const auto& [user, acc] : scored) values.push_back(acc);
  r.histogram_counts = range_histogram(values, r.histogram_edges);
  r.config_json = std::move(config_json);
  return r;
}

std::string report_to_json(const EvaluationReport& r) {
  ordered_json doc;
  doc["schema"] = "keydyn-report";
  doc["version"] = kReportVersion;
  doc["model"] = r.model;
  doc["num_classes"] = r.users.size();
  doc["num_samples"] = r.confusion.total();
  doc["overall_accuracy"] = r.overall_accuracy;
  doc["users"] = r.users;

  ordered_json per_user = ordered_json::array();
  for (const auto& u : r.per_user) {
    per_user.push_back({{"user", u.user_id},
                        {"label", u.label},
                        {"accuracy", u.accuracy ? ordered_json(*u.accuracy) : ordered_json(nullptr)},
                        {"support", u.support}});
  }
  doc["per_user_accuracy"] = std::move(per_user);

  std::vector<const UserAccuracy*> sorted;
  for (const auto& u : r.per_user) {
    if (u.accuracy) sorted.push_back(&u);
  }
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const UserAccuracy* a, const UserAccuracy* b) { return *a->accuracy > *b->accuracy; });
  ordered_json sorted_json = ordered_json::array();
  for (const auto* u : sorted) sorted_json.push_back({{"user", u->user_id}, {"accuracy", *u->accuracy}});
  doc["per_user_accuracy_sorted"] = std::move(sorted_json);

  doc["confusion_matrix"] = r.confusion.rows();
  doc["partition"] = {{"hi", r.partition.hi},         {"lo", r.partition.lo},
                      {"easy", r.partition.easy},     {"moderate", r.partition.moderate},
                      {"difficult", r.partition.difficult}, {"unscored", r.unscored}};
  doc["range_histogram"] = {{"edges", r.histogram_edges}, {"counts", r.histogram_counts}};
  try {
    doc["config"] = ordered_json::parse(r.config_json);
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::InvalidArgument, "report config echo is not valid JSON");
  }
  return doc.dump(2) + "\n";
}

EvaluationReport report_from_json(const std::string& text) {
  EvaluationReport r;
  try {
    const auto doc = ordered_json::parse(text);
    if (doc.at("schema").get<std::string>() != "keydyn-report") {
      throw Error(ErrorCode::MalformedReport, "not a keydyn report");
    }
    if (doc.at("version").get<int>() != kReportVersion) {
      throw Error(ErrorCode::MalformedReport, "unsupported report version");
    }
    r.model = doc.at("model").get<std::string>();
    r.users = doc.at("users").get<std::vector<std::string>>();
    r.confusion = ConfusionMatrix::from_rows(doc.at("confusion_matrix").get<std::vector<std::vector<std::uint64_t>>>());
    if (r.confusion.num_classes() != r.users.size()) {
      throw Error(ErrorCode::MalformedReport, "confusion matrix size does not match user list");
    }
    r.overall_accuracy = doc.at("overall_accuracy").get<double>();
    for (const auto& u : doc.at("per_user_accuracy")) {
      UserAccuracy ua;
      ua.user_id = u.at("user").get<std::string>();
      ua.label = u.at("label").get<std::uint32_t>();
      if (!u.at("accuracy").is_null()) {
        const double acc = u.at("accuracy").get<double>();
        if (acc < 0.0 || acc > 1.0) throw Error(ErrorCode::MalformedReport, "per-user accuracy outside [0, 1]");
        ua.accuracy = acc;
      }
      ua.support = u.at("support").get<std::uint64_t>();
      r.per_user.push_back(std::move(ua));
    }
    const auto& p = doc.at("partition");
    r.partition.hi = p.at("hi").get<double>();
    r.partition.lo = p.at("lo").get<double>();
    r.partition.easy = p.at("easy").get<std::vector<std::string>>();
    r.partition.moderate = p.at("moderate").get<std::vector<std::string>>();
    r.partition.difficult = p.at("difficult").get<std::vector<std::string>>();
    if (p.contains("unscored")) r.unscored = p["unscored"].get<std::vector<std::string>>();
    const auto& h = doc.at("range_histogram");
    r.histogram_edges = h.at("edges").get<std::vector<double>>();
    r.histogram_counts = h.at("counts").get<std::vector<std::size_t>>();
    r.config_json = doc.contains("config") ? doc["config"].dump() : "{}";
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedReport, std::string("bad report document: ") + e.what());
  }
  return r;
}

void write_report(const EvaluationReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out << report_to_json(report);
}

EvaluationReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return report_from_json(ss.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_per_user_csv(std::ostream& out, const EvaluationReport& report) {
  out << "user_id,label,accuracy,support\n";
  for (const auto& u : report.per_user) {
    out << u.user_id << ',' << u.label << ',';
    if (u.accuracy) {
      std::ostringstream v;
      v.precision(17);
      v << *u.accuracy;
      out << v.str();
    }
    out << ',' << u.support << '\n';
  }
}

}  // namespace keydyn
