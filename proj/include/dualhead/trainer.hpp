#pragma once

#include "dualhead/dataset.hpp"
#include "dualhead/heads.hpp"
#include "dualhead/metrics.hpp"
#include "dualhead/optimizer.hpp"
#include "dualhead/tokenizer.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace dualhead {

struct TrainConfig {
  std::size_t epochs = 6;
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;
  double weight_decay = 0.01;
  std::uint64_t seed = 42;
  bool residual = false;
  std::optional<double> grad_clip;
  std::size_t max_len = 128;
  // Restore the epoch with the best validation task F1 after training.
  bool keep_best_epoch = false;

  void validate() const;
};

struct EpochReport {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double accuracy_1 = 0.0;
  double accuracy_2 = 0.0;
  double overall_accuracy = 0.0;
  double macro_f1_1 = 0.0;
  double macro_f1_2 = 0.0;
  double task_f1 = 0.0;
};

// Eval-mode metrics over a labeled dataset, batched in file order.
EvalMetrics evaluate(const DualHeadModel& model, const Vocab& vocab, const Dataset& data,
                     std::size_t max_len, std::size_t batch_size);

// Class probabilities of both heads for every text, eval mode.
std::pair<RowMatrix, RowMatrix> predict_probabilities(const DualHeadModel& model, const Vocab& vocab,
                                                      const std::vector<std::string>& texts,
                                                      std::size_t max_len, std::size_t batch_size);

namespace detail {
struct EncodedSet {
  std::vector<std::vector<int>> rows;
  std::vector<int> labels_1;
  std::vector<int> labels_2;
};
}  // namespace detail

// Epoch-at-a-time training; train() below drives one of these for config.epochs.
class Trainer {
 public:
  Trainer(DualHeadModel& model, const Vocab& vocab, const Dataset& training,
          const Dataset& validation, TrainConfig config);
  EpochReport run_epoch();
  std::size_t epoch() const { return epoch_; }
  // Restores the best epoch when keep_best_epoch is set and clears gradients.
  void finish();

 private:
  DualHeadModel& model_;
  const Vocab& vocab_;
  const Dataset& validation_;
  TrainConfig config_;
  RngState rng_;
  detail::EncodedSet train_set_;
  std::vector<NamedTensor> params_;
  OptimizerState optimizer_;
  std::size_t epoch_ = 0;
  double best_f1_ = -1.0;
  std::vector<Eigen::VectorXd> best_snapshot_;
};

using EpochCallback = std::function<void(const EpochReport&)>;

// Trains for config.epochs epochs, evaluating on `validation` after each.
std::vector<EpochReport> train(DualHeadModel& model, const Vocab& vocab, const Dataset& training,
                               const Dataset& validation, const TrainConfig& config,
                               const EpochCallback& on_epoch = {});

}  // namespace dualhead
