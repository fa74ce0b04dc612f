#include "dualhead/metrics.hpp"

#include "dualhead/error.hpp"

#include <string>

namespace dualhead {

namespace {

void check_pairs(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) {
    throw DimensionError(std::to_string(predictions.size()) + " predictions for " +
                         std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) throw DataError("metrics over an empty set");
}

}  // namespace

std::vector<int> argmax_rows(const Tensor& logits) {
  const auto m = logits.matrix();
  std::vector<int> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < m.cols(); ++c) {
      if (m(r, c) > m(r, best)) best = c;
    }
    out[static_cast<std::size_t>(r)] = static_cast<int>(best);
  }
  return out;
}

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  check_pairs(predictions, labels);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += predictions[i] == labels[i];
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double macro_f1(std::span<const int> predictions, std::span<const int> labels,
                std::size_t num_classes) {
  check_pairs(predictions, labels);
  std::vector<std::size_t> tp(num_classes), fp(num_classes), fn(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int p = predictions[i];
    const int y = labels[i];
    if (p < 0 || y < 0 || static_cast<std::size_t>(p) >= num_classes ||
        static_cast<std::size_t>(y) >= num_classes) {
      throw LabelError("class outside [0, " + std::to_string(num_classes) + ") at index " +
                       std::to_string(i));
    }
    if (p == y) {
      ++tp[static_cast<std::size_t>(y)];
    } else {
      ++fp[static_cast<std::size_t>(p)];
      ++fn[static_cast<std::size_t>(y)];
    }
  }
  double total = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    const double t = static_cast<double>(tp[c]);
    const double precision = tp[c] + fp[c] == 0 ? 0.0 : t / static_cast<double>(tp[c] + fp[c]);
    const double recall = tp[c] + fn[c] == 0 ? 0.0 : t / static_cast<double>(tp[c] + fn[c]);
    total += precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
  }
  return total / static_cast<double>(num_classes);
}

double overall_accuracy(double accuracy_1, double accuracy_2) { return (accuracy_1 + accuracy_2) / 2.0; }

}  // namespace dualhead
