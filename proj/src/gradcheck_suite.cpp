#include "dualhead/gradcheck_suite.hpp"

#include "dualhead/heads.hpp"
#include "dualhead/ops.hpp"

namespace dualhead {

namespace {

Tensor random_tensor(Shape shape, RngState& rng, double scale = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (auto& v : t.data()) v = rng.normal() * scale;
  return t;
}

// Weighted sum with fixed random weights, so that a vector-valued op is
// checked along a generic direction.
Tensor project(const Tensor& y, const Tensor& weights) { return sum(mul(y, weights)); }

GradSuiteCase run_case(const std::string& name, const std::function<Tensor()>& f,
                       std::vector<NamedTensor> inputs) {
  GradCheckOptions options;
  options.tolerance = kPrimitiveTolerance;
  return {name, grad_check(f, std::move(inputs), options)};
}

}  // namespace

std::vector<GradSuiteCase> primitive_gradient_cases(std::uint64_t seed) {
  RngState rng(seed);
  std::vector<GradSuiteCase> cases;

  {
    auto a = random_tensor({3, 4}, rng);
    auto b = random_tensor({4, 2}, rng);
    auto w = random_tensor({3, 2}, rng);
    cases.push_back(run_case("matmul", [=] { return project(matmul(a, b), w); }, {{"a", a}, {"b", b}}));
  }
  {
    auto x = random_tensor({2, 3, 4}, rng);
    auto weight = random_tensor({4, 5}, rng);
    auto bias = random_tensor({5}, rng);
    auto w = random_tensor({2, 3, 5}, rng);
    cases.push_back(run_case("linear", [=] { return project(linear(x, weight, bias), w); },
                             {{"x", x}, {"weight", weight}, {"bias", bias}}));
  }
  {
    auto a = random_tensor({2, 5}, rng);
    auto b = random_tensor({2, 5}, rng);
    auto w = random_tensor({2, 5}, rng);
    cases.push_back(run_case("add_mul_scale",
                             [=] { return project(scale(mul(add(a, b), a), 0.75), w); },
                             {{"a", a}, {"b", b}}));
  }
  {
    auto x = random_tensor({2, 8}, rng, 2.0);
    auto w = random_tensor({2, 8}, rng);
    cases.push_back(run_case("gelu", [=] { return project(gelu(x), w); }, {{"x", x}}));
  }
  {
    auto x = random_tensor({3, 6}, rng, 1.5);
    auto gain = random_tensor({6}, rng);
    auto bias = random_tensor({6}, rng);
    auto w = random_tensor({3, 6}, rng);
    cases.push_back(run_case("layer_norm", [=] { return project(layer_norm(x, gain, bias, 1e-5), w); },
                             {{"x", x}, {"gain", gain}, {"bias", bias}}));
  }
  {
    auto x = random_tensor({2, 8}, rng);
    auto gain = Tensor::full({8}, 1.0);
    auto bias = Tensor::zeros({8});
    cases.push_back(run_case("layer_norm_gelu_sum",
                             [=] { return sum(gelu(layer_norm(x, gain, bias, 1e-5))); }, {{"x", x}}));
  }
  {
    auto x = random_tensor({4, 5}, rng);
    auto w = random_tensor({4, 5}, rng);
    const auto mask_seed = rng.next_u64();
    cases.push_back(run_case("dropout",
                             [=] {
                               RngState replay(mask_seed);
                               return project(dropout(x, 0.3, true, replay), w);
                             },
                             {{"x", x}}));
  }
  {
    auto logits = random_tensor({4, 3}, rng, 2.0);
    const std::vector<int> labels{0, 2, 1, 2};
    cases.push_back(run_case("softmax_cross_entropy",
                             [=] { return softmax_cross_entropy(logits, labels); }, {{"logits", logits}}));
  }
  {
    auto table = random_tensor({6, 4}, rng);
    const std::vector<int> ids{1, 3, 3, 0, 5, 1};
    auto w = random_tensor({2, 3, 4}, rng);
    cases.push_back(run_case("embedding", [=] { return project(embedding(table, ids, {2, 3}), w); },
                             {{"table", table}}));
  }
  {
    auto x = random_tensor({2, 3, 4}, rng);
    auto w = random_tensor({2, 4}, rng);
    cases.push_back(run_case("select_position", [=] { return project(select_position(x, 1), w); },
                             {{"x", x}}));
  }
  {
    auto q = random_tensor({2, 4, 6}, rng);
    auto k = random_tensor({2, 4, 6}, rng);
    auto v = random_tensor({2, 4, 6}, rng);
    auto w = random_tensor({2, 4, 6}, rng);
    const std::vector<std::uint8_t> mask{1, 1, 1, 1, 1, 1, 0, 0};
    cases.push_back(run_case("attention", [=] { return project(attention(q, k, v, mask, 2), w); },
                             {{"q", q}, {"k", k}, {"v", v}}));
  }
  return cases;
}

GradSuiteCase model_gradient_case(bool residual, std::uint64_t seed) {
  RngState rng(seed);
  const auto encoder = EncoderConfig::gradcheck(12);
  const DualHeadModel model = make_task_model(Task::B, encoder, residual, rng);

  // Deliberately larger than the default 0.02 so every path carries signal.
  for (auto& p : model.parameters()) {
    Tensor t = p.tensor;
    if (t.rank() == 2) {
      for (auto& v : t.data()) v = rng.normal() * 0.3;
    } else {
      for (auto& v : t.data()) v += rng.normal() * 0.1;
    }
  }

  const std::vector<std::vector<int>> rows{{0, 5, 7, 9, 4}, {0, 11, 6}, {0, 8, 8, 10, 4}};
  std::vector<const std::vector<int>*> views;
  for (const auto& row : rows) views.push_back(&row);
  const TokenizedBatch batch = pad_rows(views, 1);
  const std::vector<int> labels_1{0, 3, 1};
  const std::vector<int> labels_2{2, 1, 3};
  const auto dropout_seed = rng.next_u64();

  auto f = [=] {
    RngState replay(dropout_seed);
    return *dual_forward(model, batch, labels_1, labels_2, true, replay).combined_loss;
  };
  GradCheckOptions options;
  options.tolerance = kModelTolerance;
  return {residual ? "dual_head_model[residual]" : "dual_head_model[no_residual]",
          grad_check(f, model.parameters(), options)};
}

GradSuiteResult run_gradient_suite(std::uint64_t seed) {
  GradSuiteResult result;
  result.cases = primitive_gradient_cases(seed);
  result.cases.push_back(model_gradient_case(true, seed + 1));
  result.cases.push_back(model_gradient_case(false, seed + 1));
  result.passed = true;
  for (const auto& c : result.cases) result.passed = result.passed && c.report.passed;
  return result;
}

}  // namespace dualhead
