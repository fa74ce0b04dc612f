#include "dualhead/run_report.hpp"

#include "dualhead/error.hpp"

#include <json.hpp>

namespace dualhead {

using nlohmann::ordered_json;

std::string to_json_line(const EpochReport& report) {
  ordered_json j;
  j["epoch"] = report.epoch;
  j["train_loss"] = report.train_loss;
  j["val_loss"] = report.val_loss;
  j["accuracy_1"] = report.accuracy_1;
  j["accuracy_2"] = report.accuracy_2;
  j["overall_accuracy"] = report.overall_accuracy;
  j["macro_f1_1"] = report.macro_f1_1;
  j["macro_f1_2"] = report.macro_f1_2;
  j["task_f1"] = report.task_f1;
  return j.dump();
}

EpochReport parse_json_line(const std::string& line) {
  try {
    const auto j = ordered_json::parse(line);
    EpochReport r;
    r.epoch = j.at("epoch").get<std::size_t>();
    r.train_loss = j.at("train_loss").get<double>();
    r.val_loss = j.at("val_loss").get<double>();
    r.accuracy_1 = j.at("accuracy_1").get<double>();
    r.accuracy_2 = j.at("accuracy_2").get<double>();
    r.overall_accuracy = j.at("overall_accuracy").get<double>();
    r.macro_f1_1 = j.at("macro_f1_1").get<double>();
    r.macro_f1_2 = j.at("macro_f1_2").get<double>();
    r.task_f1 = j.at("task_f1").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("run report: ") + e.what());
  }
}

std::string to_json_line(const EvalMetrics& metrics) {
  ordered_json j;
  j["loss"] = metrics.loss;
  j["loss_1"] = metrics.head_1.loss;
  j["loss_2"] = metrics.head_2.loss;
  j["accuracy_1"] = metrics.head_1.accuracy;
  j["accuracy_2"] = metrics.head_2.accuracy;
  j["overall_accuracy"] = metrics.overall_accuracy;
  j["macro_f1_1"] = metrics.head_1.macro_f1;
  j["macro_f1_2"] = metrics.head_2.macro_f1;
  j["task_f1"] = metrics.task_f1;
  return j.dump();
}

RunReportWriter::RunReportWriter(const std::string& path) : out_(path, std::ios::trunc) {
  if (!out_) throw DataError("cannot write run report " + path);
}

void RunReportWriter::append(const EpochReport& report) {
  out_ << to_json_line(report) << '\n';
  out_.flush();
}

std::vector<EpochReport> read_run_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read run report " + path);
  std::vector<EpochReport> reports;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) reports.push_back(parse_json_line(line));
  }
  return reports;
}

}  // namespace dualhead
