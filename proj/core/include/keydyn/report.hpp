#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "keydyn/eval.hpp"

namespace keydyn {

inline constexpr int kReportVersion = 1;

struct UserAccuracy {
  std::string user_id;
  std::uint32_t label = 0;
  std::optional<double> accuracy;  // absent when the user has no test samples
  std::uint64_t support = 0;
};

// Everything an evaluation run produces. Per-user accuracy is computed on
// that user's test samples only.
struct EvaluationReport {
  std::string model;
  std::vector<std::string> users;  // indexed by label
  ConfusionMatrix confusion;
  double overall_accuracy = 0.0;
  std::vector<UserAccuracy> per_user;
  PartitionResult partition;
  std::vector<std::string> unscored;  // users without test samples
  std::vector<double> histogram_edges;
  std::vector<std::size_t> histogram_counts;
  std::string config_json = "{}";  // echo of the run configuration (a JSON object)

  std::map<std::string, double> scored_accuracies() const;
};

EvaluationReport build_report(std::string model, std::vector<std::string> users,
                              std::span<const std::uint32_t> actual, std::span<const std::uint32_t> predicted,
                              std::string config_json = "{}", double hi = kEasyThreshold,
                              double lo = kDifficultThreshold);

std::string report_to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const std::string& text);  // throws MalformedReport
void write_report(const EvaluationReport& report, const std::filesystem::path& path);
EvaluationReport read_report(const std::filesystem::path& path);

// user_id,label,accuracy,support — one row per user in label order; accuracy
// is empty for unscored users.
void write_per_user_csv(std::ostream& out, const EvaluationReport& report);

}  // namespace keydyn
