#pragma once

#include "dualhead/tensor.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace dualhead {

// Row-wise argmax; ties go to the lowest class index.
std::vector<int> argmax_rows(const Tensor& logits);

double accuracy(std::span<const int> predictions, std::span<const int> labels);

// Unweighted mean of per-class F1 over all num_classes classes. Precision,
// recall and F1 with a zero denominator count as 0.
double macro_f1(std::span<const int> predictions, std::span<const int> labels,
                std::size_t num_classes);

// Mean of the two head accuracies.
double overall_accuracy(double accuracy_1, double accuracy_2);

struct HeadMetrics {
  double loss = 0.0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

struct EvalMetrics {
  double loss = 0.0;  // combined (balanced) loss
  HeadMetrics head_1;
  HeadMetrics head_2;
  double overall_accuracy = 0.0;
  double task_f1 = 0.0;  // mean of the two head macro F1 scores
};

}  // namespace dualhead
