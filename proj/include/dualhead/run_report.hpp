#pragma once

#include "dualhead/metrics.hpp"
#include "dualhead/trainer.hpp"

#include <fstream>
#include <string>
#include <vector>

namespace dualhead {

// One JSON object per line:
// {"epoch":1,"train_loss":..,"val_loss":..,"accuracy_1":..,"accuracy_2":..,
//  "overall_accuracy":..,"macro_f1_1":..,"macro_f1_2":..,"task_f1":..}
std::string to_json_line(const EpochReport& report);
EpochReport parse_json_line(const std::string& line);

std::string to_json_line(const EvalMetrics& metrics);

// Append-only epoch log. The file is truncated when the writer opens it.
class RunReportWriter {
 public:
  explicit RunReportWriter(const std::string& path);
  void append(const EpochReport& report);

 private:
  std::ofstream out_;
};

std::vector<EpochReport> read_run_report(const std::string& path);

}  // namespace dualhead
