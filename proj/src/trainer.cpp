#include "dualhead/trainer.hpp"

#include "dualhead/error.hpp"
#include "dualhead/ops.hpp"
#include "dualhead/optimizer.hpp"
#include "dualhead/tape.hpp"

#include <algorithm>

namespace dualhead {

namespace {

using detail::EncodedSet;

EncodedSet encode_set(const DualHeadModel& model, const Vocab& vocab, const Dataset& data,
                      std::size_t max_len) {
  if (data.examples.empty()) throw DataError("dataset is empty");
  if (vocab.size() != model.encoder_config.vocab_size) {
    throw DataError("tokenizer vocabulary has " + std::to_string(vocab.size()) +
                    " entries but the model expects " +
                    std::to_string(model.encoder_config.vocab_size));
  }
  if (data.task != model.task) {
    throw DataError("dataset is for task " + std::string(task_name(data.task)) +
                    " but the model is for task " + std::string(task_name(model.task)));
  }
  EncodedSet set;
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    const auto& example = data.examples[i];
    if (example.label_1 < 0 ||
        static_cast<std::size_t>(example.label_1) >= model.head_config_1.num_classes ||
        example.label_2 < 0 ||
        static_cast<std::size_t>(example.label_2) >= model.head_config_2.num_classes) {
      throw DataError("example '" + example.id + "' has a label outside the head's classes");
    }
    set.rows.push_back(encode_example(vocab, example.text, max_len));
    set.labels_1.push_back(example.label_1);
    set.labels_2.push_back(example.label_2);
  }
  return set;
}

struct Gathered {
  TokenizedBatch batch;
  std::vector<int> labels_1;
  std::vector<int> labels_2;
};

Gathered gather(const EncodedSet& set, const std::vector<std::size_t>& indices, int pad_id) {
  Gathered out;
  std::vector<const std::vector<int>*> rows;
  for (auto i : indices) {
    rows.push_back(&set.rows[i]);
    out.labels_1.push_back(set.labels_1[i]);
    out.labels_2.push_back(set.labels_2[i]);
  }
  out.batch = pad_rows(rows, pad_id);
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be non-negative");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be non-negative");
  if (grad_clip && !(*grad_clip > 0.0)) throw ConfigError("grad_clip must be positive");
  if (max_len < 2) throw ConfigError("max_len must be at least 2");
}

EvalMetrics evaluate(const DualHeadModel& model, const Vocab& vocab, const Dataset& data,
                     std::size_t max_len, std::size_t batch_size) {
  const auto set = encode_set(model, vocab, data, max_len);
  RngState unused(0);
  double loss_1 = 0.0;
  double loss_2 = 0.0;
  double combined = 0.0;
  std::vector<int> predictions_1;
  std::vector<int> predictions_2;
  for (const auto& indices : batches(set.rows.size(), batch_size)) {
    const auto g = gather(set, indices, vocab.specials().pad);
    const auto out = dual_forward(model, g.batch, g.labels_1, g.labels_2, false, unused);
    const double n = static_cast<double>(indices.size());
    loss_1 += out.loss_1->item() * n;
    loss_2 += out.loss_2->item() * n;
    combined += out.combined_loss->item() * n;
    for (int p : argmax_rows(out.logits_1)) predictions_1.push_back(p);
    for (int p : argmax_rows(out.logits_2)) predictions_2.push_back(p);
  }
  const double n = static_cast<double>(set.rows.size());
  EvalMetrics metrics;
  metrics.loss = combined / n;
  metrics.head_1 = {loss_1 / n, accuracy(predictions_1, set.labels_1),
                    macro_f1(predictions_1, set.labels_1, model.head_config_1.num_classes)};
  metrics.head_2 = {loss_2 / n, accuracy(predictions_2, set.labels_2),
                    macro_f1(predictions_2, set.labels_2, model.head_config_2.num_classes)};
  metrics.overall_accuracy = overall_accuracy(metrics.head_1.accuracy, metrics.head_2.accuracy);
  metrics.task_f1 = (metrics.head_1.macro_f1 + metrics.head_2.macro_f1) / 2.0;
  return metrics;
}

std::pair<RowMatrix, RowMatrix> predict_probabilities(const DualHeadModel& model, const Vocab& vocab,
                                                      const std::vector<std::string>& texts,
                                                      std::size_t max_len, std::size_t batch_size) {
  std::vector<std::vector<int>> rows;
  for (const auto& text : texts) rows.push_back(encode_example(vocab, text, max_len));
  RowMatrix probs_1(static_cast<Eigen::Index>(texts.size()),
                    static_cast<Eigen::Index>(model.head_config_1.num_classes));
  RowMatrix probs_2(static_cast<Eigen::Index>(texts.size()),
                    static_cast<Eigen::Index>(model.head_config_2.num_classes));
  RngState unused(0);
  for (const auto& indices : batches(rows.size(), batch_size)) {
    std::vector<const std::vector<int>*> chunk;
    for (auto i : indices) chunk.push_back(&rows[i]);
    const auto out = dual_forward(model, pad_rows(chunk, vocab.specials().pad), std::nullopt,
                                  std::nullopt, false, unused);
    const auto p1 = softmax_rows(out.logits_1);
    const auto p2 = softmax_rows(out.logits_2);
    for (std::size_t r = 0; r < indices.size(); ++r) {
      probs_1.row(static_cast<Eigen::Index>(indices[r])) = p1.row(static_cast<Eigen::Index>(r));
      probs_2.row(static_cast<Eigen::Index>(indices[r])) = p2.row(static_cast<Eigen::Index>(r));
    }
  }
  return {std::move(probs_1), std::move(probs_2)};
}

Trainer::Trainer(DualHeadModel& model, const Vocab& vocab, const Dataset& training,
                 const Dataset& validation, TrainConfig config)
    : model_(model), vocab_(vocab), validation_(validation), config_(std::move(config)),
      rng_(splitmix64(config_.seed)) {
  config_.validate();
  train_set_ = encode_set(model, vocab, training, config_.max_len);
  encode_set(model, vocab, validation, config_.max_len);
  params_ = model.parameters();
}

EpochReport Trainer::run_epoch() {
  const auto order = batches(train_set_.rows.size(), config_.batch_size, rng_.next_u64());
  double loss_sum = 0.0;
  for (const auto& indices : order) {
    const auto g = gather(train_set_, indices, vocab_.specials().pad);
    model_.zero_grad();
    Tape tape;
    DualHeadOutput out;
    {
      TapeScope scope(tape);
      out = dual_forward(model_, g.batch, g.labels_1, g.labels_2, true, rng_);
    }
    tape.backward(*out.combined_loss);
    if (config_.grad_clip) clip_grad_norm(params_, *config_.grad_clip);
    optimizer_step(params_, optimizer_, config_.learning_rate, config_.weight_decay);
    loss_sum += out.combined_loss->item() * static_cast<double>(indices.size());
  }

  const auto metrics = evaluate(model_, vocab_, validation_, config_.max_len, config_.batch_size);
  EpochReport report;
  report.epoch = ++epoch_;
  report.train_loss = loss_sum / static_cast<double>(train_set_.rows.size());
  report.val_loss = metrics.loss;
  report.accuracy_1 = metrics.head_1.accuracy;
  report.accuracy_2 = metrics.head_2.accuracy;
  report.overall_accuracy = metrics.overall_accuracy;
  report.macro_f1_1 = metrics.head_1.macro_f1;
  report.macro_f1_2 = metrics.head_2.macro_f1;
  report.task_f1 = metrics.task_f1;

  if (config_.keep_best_epoch && report.task_f1 > best_f1_) {
    best_f1_ = report.task_f1;
    best_snapshot_.clear();
    for (const auto& p : params_) best_snapshot_.push_back(p.tensor.data());
  }
  return report;
}

void Trainer::finish() {
  if (config_.keep_best_epoch && !best_snapshot_.empty()) {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Tensor tensor = params_[i].tensor;
      tensor.data() = best_snapshot_[i];
    }
  }
  model_.zero_grad();
}

std::vector<EpochReport> train(DualHeadModel& model, const Vocab& vocab, const Dataset& training,
                               const Dataset& validation, const TrainConfig& config,
                               const EpochCallback& on_epoch) {
  Trainer trainer(model, vocab, training, validation, config);
  std::vector<EpochReport> reports;
  while (trainer.epoch() < config.epochs) {
    reports.push_back(trainer.run_epoch());
    if (on_epoch) on_epoch(reports.back());
  }
  trainer.finish();
  return reports;
}

}  // namespace dualhead
