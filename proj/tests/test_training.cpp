#include "dualhead/dataset.hpp"
#include "dualhead/error.hpp"
#include "dualhead/metrics.hpp"
#include "dualhead/ops.hpp"
#include "dualhead/optimizer.hpp"
#include "dualhead/trainer.hpp"

#include <gtest/gtest.h>

#include <numeric>

using namespace dualhead;

namespace {

// Confusion-matrix oracle: counts tp/fp/fn from the full matrix, then textbook F1.
double oracle_macro_f1(const std::vector<int>& pred, const std::vector<int>& gold, int classes) {
  std::vector<std::vector<long>> confusion(classes, std::vector<long>(classes, 0));
  for (std::size_t i = 0; i < pred.size(); ++i) ++confusion[gold[i]][pred[i]];
  double total = 0.0;
  for (int c = 0; c < classes; ++c) {
    long tp = confusion[c][c], fp = 0, fn = 0;
    for (int o = 0; o < classes; ++o) {
      if (o == c) continue;
      fp += confusion[o][c];
      fn += confusion[c][o];
    }
    const double p = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    const double r = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    total += p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  }
  return total / classes;
}

double oracle_accuracy(const std::vector<int>& pred, const std::vector<int>& gold) {
  long hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == gold[i];
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

struct Fixture {
  Dataset train;
  Dataset val;
  Vocab vocab;
};

Fixture task_a_fixture() {
  Fixture f;
  f.train = load_csv(DUALHEAD_TEST_DATA "/task_a_train.csv", Task::A);
  f.val = load_csv(DUALHEAD_TEST_DATA "/task_a_val.csv", Task::A, ColumnMapping::defaults(Task::A), &f.train);
  std::vector<std::string> corpus;
  for (const auto& e : f.train.examples) corpus.push_back(e.text);
  f.vocab = train_vocab(corpus, 400, 2);
  return f;
}

DualHeadModel small_model(const Vocab& vocab, Task task, std::uint64_t seed, bool residual = false) {
  RngState rng(seed);
  auto enc = EncoderConfig::gradcheck(vocab.size());
  enc.max_positions = 64;
  return make_task_model(task, enc, residual, rng);
}

std::vector<Eigen::VectorXd> snapshot(const DualHeadModel& model) {
  std::vector<Eigen::VectorXd> out;
  for (const auto& p : model.parameters()) out.push_back(p.tensor.data());
  return out;
}

}  // namespace

TEST(Metrics, HandComputedMacroF1) {
  std::vector<int> labels{0, 0, 1, 2}, preds{0, 1, 1, 2};
  EXPECT_DOUBLE_EQ(macro_f1(preds, labels, 3), 7.0 / 9.0);
  EXPECT_NEAR(macro_f1(preds, labels, 3), 0.7778, 1e-4);
}

TEST(Metrics, PerfectAndTotalMiss) {
  std::vector<int> y{0, 1, 1, 0};
  EXPECT_EQ(macro_f1(y, y, 2), 1.0);
  EXPECT_EQ(accuracy(y, y), 1.0);
  std::vector<int> zeros(4, 0), ones(4, 1);
  EXPECT_EQ(macro_f1(zeros, ones, 2), 0.0);
}

TEST(Metrics, OverallAccuracyIsHeadMean) {
  EXPECT_EQ(overall_accuracy(0.8, 0.6), 0.7);
  EXPECT_EQ(overall_accuracy(1.0, 1.0), 1.0);
}

TEST(Metrics, EmptyInputRejected) {
  std::vector<int> none;
  EXPECT_THROW(macro_f1(none, none, 2), Error);
  EXPECT_THROW(accuracy(none, none), Error);
}

TEST(Metrics, OutOfRangeRejected) {
  std::vector<int> p{0, 3}, l{0, 1};
  EXPECT_THROW(macro_f1(p, l, 3), LabelError);
}

TEST(Metrics, MatchesConfusionOracleOnRandomSets) {
  RngState rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const int classes = 2 + static_cast<int>(rng.uniform_index(5));
    const std::size_t n = 1 + rng.uniform_index(40);
    std::vector<int> p(n), l(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = static_cast<int>(rng.uniform_index(classes));
      l[i] = static_cast<int>(rng.uniform_index(classes));
    }
    EXPECT_EQ(macro_f1(p, l, classes), oracle_macro_f1(p, l, classes));
    EXPECT_EQ(accuracy(p, l), oracle_accuracy(p, l));
  }
}

TEST(Metrics, InvariantUnderJointPermutation) {
  RngState rng(22);
  std::vector<int> p(30), l(30);
  for (int i = 0; i < 30; ++i) {
    p[i] = static_cast<int>(rng.uniform_index(4));
    l[i] = static_cast<int>(rng.uniform_index(4));
  }
  const double before = macro_f1(p, l, 4);
  const auto order = seeded_permutation(30, rng);
  std::vector<int> pp(30), ll(30);
  for (int i = 0; i < 30; ++i) {
    pp[i] = p[order[i]];
    ll[i] = l[order[i]];
  }
  EXPECT_EQ(macro_f1(pp, ll, 4), before);
}

TEST(Metrics, ArgmaxTiesGoToLowestIndex) {
  EXPECT_EQ(argmax_rows(Tensor::from({2, 3}, {1, 5, 5, 2, 2, 2})), (std::vector<int>{1, 0}));
}

TEST(Optimizer, ZeroGradientZeroDecayIsFixedPoint) {
  auto w = Tensor::from({3}, {1.0, -2.0, 0.5}).set_requires_grad();
  const auto before = w.data();
  std::vector<NamedTensor> params{{"w", w}};
  OptimizerState state;
  optimizer_step(params, state, 0.1, 0.0);
  EXPECT_EQ(w.data(), before);
  EXPECT_EQ(state.step, 1u);
}

TEST(Optimizer, FirstStepMovesByLearningRate) {
  auto w = Tensor::from({1}, {1.0}).set_requires_grad();
  w.grad()[0] = 1.0;
  std::vector<NamedTensor> params{{"w", w}};
  OptimizerState state;
  optimizer_step(params, state, 0.1, 0.0);
  // m_hat = 1, v_hat = 1, update = lr * 1 / (1 + 1e-8).
  EXPECT_NEAR(w.data()[0], 1.0 - 0.1 / (1.0 + 1e-8), 1e-15);
}

TEST(Optimizer, DecoupledDecayAlone) {
  auto w = Tensor::from({2}, {2.0, -4.0}).set_requires_grad();
  std::vector<NamedTensor> params{{"w", w}};
  OptimizerState state;
  optimizer_step(params, state, 0.1, 0.1);
  EXPECT_DOUBLE_EQ(w.data()[0], 2.0 * 0.99);
  EXPECT_DOUBLE_EQ(w.data()[1], -4.0 * 0.99);
}

TEST(Optimizer, MissingGradientNamesParameter) {
  auto w = Tensor::from({1}, {1.0});
  std::vector<NamedTensor> params{{"layer.w", w}};
  OptimizerState state;
  try {
    optimizer_step(params, state, 0.1, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("layer.w"), std::string::npos);
  }
}

TEST(Optimizer, QuadraticProbeLossDecreases) {
  auto w = Tensor::from({4}, {1.0, -2.0, 3.0, 0.5}).set_requires_grad();
  std::vector<NamedTensor> params{{"w", w}};
  OptimizerState state;
  auto loss_of = [&] {
    Tape tape;
    Tensor loss;
    {
      TapeScope scope(tape);
      loss = sum(mul(w, w));
    }
    w.zero_grad();
    tape.backward(loss);
    return loss.item();
  };
  const double before = loss_of();
  optimizer_step(params, state, 0.05, 0.0);
  EXPECT_LT(loss_of(), before);
}

TEST(Optimizer, ClipScalesToMaxNorm) {
  auto w = Tensor::from({2}, {0.0, 0.0}).set_requires_grad();
  w.grad() << 3.0, 4.0;
  std::vector<NamedTensor> params{{"w", w}};
  EXPECT_DOUBLE_EQ(global_grad_norm(params), 5.0);
  clip_grad_norm(params, 1.0);
  EXPECT_NEAR(global_grad_norm(params), 1.0, 1e-15);
}

TEST(Batches, SizesAndOrder) {
  auto plain = batches(10, 4);
  ASSERT_EQ(plain.size(), 3u);
  EXPECT_EQ(plain[0].size(), 4u);
  EXPECT_EQ(plain[2].size(), 2u);
  std::vector<std::size_t> flat;
  for (auto& b : plain) flat.insert(flat.end(), b.begin(), b.end());
  std::vector<std::size_t> iota(10);
  std::iota(iota.begin(), iota.end(), 0);
  EXPECT_EQ(flat, iota);

  EXPECT_EQ(batches(10, 4, 5), batches(10, 4, 5));
  auto shuffled = batches(10, 3, 9);
  flat.clear();
  for (auto& b : shuffled) flat.insert(flat.end(), b.begin(), b.end());
  std::sort(flat.begin(), flat.end());
  EXPECT_EQ(flat, iota);
}

TEST(TrainConfig, Validation) {
  TrainConfig config;
  EXPECT_EQ(config.epochs, 6u);
  config.epochs = 0;
  EXPECT_THROW(config.validate(), ConfigError);
  config = TrainConfig{};
  config.learning_rate = -1e-3;
  EXPECT_THROW(config.validate(), ConfigError);
  config.learning_rate = 0.0;
  EXPECT_NO_THROW(config.validate());
}

TEST(Train, SixEpochReportsByDefault) {
  auto f = task_a_fixture();
  auto model = small_model(f.vocab, Task::A, 1);
  TrainConfig config;
  config.max_len = 32;
  std::size_t seen = 0;
  auto reports = train(model, f.vocab, f.train, f.val, config, [&](const EpochReport& r) { EXPECT_EQ(r.epoch, ++seen); });
  ASSERT_EQ(reports.size(), 6u);
  for (const auto& r : reports) {
    EXPECT_EQ(r.overall_accuracy, (r.accuracy_1 + r.accuracy_2) / 2.0);
    EXPECT_GE(r.accuracy_1, 0.0);
    EXPECT_LE(r.accuracy_1, 1.0);
  }
  const auto final_metrics = evaluate(model, f.vocab, f.val, config.max_len, config.batch_size);
  EXPECT_EQ(final_metrics.loss, reports.back().val_loss);
}

TEST(Train, DeterministicGivenSeed) {
  auto f = task_a_fixture();
  TrainConfig config;
  config.epochs = 2;
  config.max_len = 32;
  auto m1 = small_model(f.vocab, Task::A, 3);
  auto m2 = small_model(f.vocab, Task::A, 3);
  auto r1 = train(m1, f.vocab, f.train, f.val, config);
  auto r2 = train(m2, f.vocab, f.train, f.val, config);
  for (std::size_t i = 0; i < r1.size(); ++i) {
    EXPECT_EQ(r1[i].train_loss, r2[i].train_loss);
    EXPECT_EQ(r1[i].val_loss, r2[i].val_loss);
  }
  EXPECT_EQ(snapshot(m1), snapshot(m2));
}

TEST(Train, ZeroLearningRateKeepsLoss) {
  auto f = task_a_fixture();
  auto model = small_model(f.vocab, Task::A, 4);
  model.encoder_config.pooled_dropout_p = 0.0;
  for (auto* h : {&model.head_config_1, &model.head_config_2}) h->dropout1 = h->dropout2 = 0.0;
  TrainConfig config;
  config.epochs = 3;
  config.max_len = 32;
  config.learning_rate = 0.0;
  config.weight_decay = 0.0;
  auto reports = train(model, f.vocab, f.train, f.val, config);
  for (const auto& r : reports) EXPECT_NEAR(r.train_loss, reports.front().train_loss, 1e-12);
}

TEST(Evaluate, DoesNotMutateModel) {
  auto f = task_a_fixture();
  auto model = small_model(f.vocab, Task::A, 5);
  const auto before = snapshot(model);
  evaluate(model, f.vocab, f.val, 32, 4);
  EXPECT_EQ(snapshot(model), before);
}

TEST(Evaluate, MetricsAgreeWithOracle) {
  auto f = task_a_fixture();
  auto model = small_model(f.vocab, Task::A, 6);
  auto metrics = evaluate(model, f.vocab, f.val, 32, 5);
  auto [p1, p2] = predict_probabilities(model, f.vocab, [&] {
    std::vector<std::string> t;
    for (const auto& e : f.val.examples) t.push_back(e.text);
    return t;
  }(), 32, 5);
  std::vector<int> pred_1, pred_2, gold_1, gold_2;
  for (Eigen::Index r = 0; r < p1.rows(); ++r) {
    Eigen::Index a = 0, b = 0;
    p1.row(r).maxCoeff(&a);
    p2.row(r).maxCoeff(&b);
    pred_1.push_back(static_cast<int>(a));
    pred_2.push_back(static_cast<int>(b));
    gold_1.push_back(f.val.examples[r].label_1);
    gold_2.push_back(f.val.examples[r].label_2);
  }
  EXPECT_EQ(metrics.head_1.accuracy, oracle_accuracy(pred_1, gold_1));
  EXPECT_EQ(metrics.head_2.macro_f1, oracle_macro_f1(pred_2, gold_2, 2));
  EXPECT_EQ(metrics.overall_accuracy, (metrics.head_1.accuracy + metrics.head_2.accuracy) / 2.0);
  EXPECT_EQ(metrics.task_f1, (metrics.head_1.macro_f1 + metrics.head_2.macro_f1) / 2.0);
}

TEST(Evaluate, EmptyDatasetRejected) {
  auto f = task_a_fixture();
  auto model = small_model(f.vocab, Task::A, 7);
  Dataset empty;
  EXPECT_THROW(evaluate(model, f.vocab, empty, 32, 4), DataError);
}
