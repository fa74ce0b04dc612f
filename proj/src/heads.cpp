#include "dualhead/heads.hpp"

#include "dualhead/error.hpp"
#include "dualhead/ops.hpp"

namespace dualhead {

namespace {

Tensor weight(std::size_t rows, std::size_t cols, RngState& rng) {
  Tensor w = Tensor::zeros({rows, cols});
  for (auto& value : w.data()) value = rng.truncated_normal(0.02);
  return w.set_requires_grad();
}

Tensor constant(std::size_t n, double value) { return Tensor::full({n}, value).set_requires_grad(); }

constexpr double kLayerNormEps = 1e-5;

Tensor traced_linear(const Tensor& x, const Tensor& w, const Tensor& b, HeadTrace* trace) {
  if (trace != nullptr) trace->linear_dims.emplace_back(w.dim(0), w.dim(1));
  return linear(x, w, b);
}

Tensor traced_dropout(const Tensor& x, double p, bool training, RngState& rng, HeadTrace* trace) {
  if (trace != nullptr) trace->dropout_probabilities.push_back(p);
  return dropout(x, p, training, rng);
}

}  // namespace

std::string_view task_name(Task task) { return task == Task::A ? "A" : "B"; }

Task parse_task(std::string_view text) {
  if (text == "A" || text == "a") return Task::A;
  if (text == "B" || text == "b") return Task::B;
  throw ConfigError("unknown task '" + std::string(text) + "' (expected A or B)");
}

std::size_t class_count(Task task) { return task == Task::A ? 2 : 4; }

void HeadConfig::validate() const {
  if (in_dim == 0 || mid_dim == 0 || reduced_dim == 0) {
    throw ConfigError("head config: every dimension must be positive");
  }
  if (num_classes < 2) throw ConfigError("head config: need at least two classes");
  for (double p : {dropout1, dropout2}) {
    if (!(p >= 0.0 && p < 1.0)) {
      throw InvalidProbability("head dropout " + std::to_string(p) + " outside [0, 1)");
    }
  }
  if (residual && in_dim != mid_dim) {
    throw ConfigError("head config: residual needs in_dim == mid_dim, got " + std::to_string(in_dim) +
                      " and " + std::to_string(mid_dim));
  }
}

HeadConfig HeadConfig::for_width(std::size_t width, std::size_t num_classes, bool residual) {
  HeadConfig config;
  config.in_dim = width;
  config.mid_dim = width;
  config.reduced_dim = std::max<std::size_t>(1, width / 2);
  config.num_classes = num_classes;
  config.residual = residual;
  return config;
}

HeadParams init_head(const HeadConfig& config, RngState& rng) {
  config.validate();
  HeadParams params;
  params.linear1_weight = weight(config.in_dim, config.mid_dim, rng);
  params.linear1_bias = constant(config.mid_dim, 0.0);
  params.norm1_gain = constant(config.mid_dim, 1.0);
  params.norm1_bias = constant(config.mid_dim, 0.0);
  params.linear2_weight = weight(config.mid_dim, config.reduced_dim, rng);
  params.linear2_bias = constant(config.reduced_dim, 0.0);
  params.norm2_gain = constant(config.reduced_dim, 1.0);
  params.norm2_bias = constant(config.reduced_dim, 0.0);
  params.output_weight = weight(config.reduced_dim, config.num_classes, rng);
  params.output_bias = constant(config.num_classes, 0.0);
  return params;
}

std::vector<NamedTensor> named_parameters(const HeadParams& params, const std::string& prefix) {
  return {
      {prefix + "linear1.weight", params.linear1_weight},
      {prefix + "linear1.bias", params.linear1_bias},
      {prefix + "norm1.gain", params.norm1_gain},
      {prefix + "norm1.bias", params.norm1_bias},
      {prefix + "linear2.weight", params.linear2_weight},
      {prefix + "linear2.bias", params.linear2_bias},
      {prefix + "norm2.gain", params.norm2_gain},
      {prefix + "norm2.bias", params.norm2_bias},
      {prefix + "output.weight", params.output_weight},
      {prefix + "output.bias", params.output_bias},
  };
}

Tensor head_forward(const HeadConfig& config, const HeadParams& params, const Tensor& pooled,
                    bool training, RngState& rng, HeadTrace* trace) {
  config.validate();
  if (pooled.rank() != 2 || pooled.dim(1) != config.in_dim) {
    throw DimensionError("head: expected pooled [batch x " + std::to_string(config.in_dim) +
                         "], got " + to_string(pooled.shape()));
  }
  Tensor x = traced_linear(pooled, params.linear1_weight, params.linear1_bias, trace);
  x = gelu(layer_norm(x, params.norm1_gain, params.norm1_bias, kLayerNormEps));
  x = traced_dropout(x, config.dropout1, training, rng, trace);
  if (config.residual) x = add(x, pooled);
  if (trace != nullptr) trace->reduce_input = x;
  x = traced_linear(x, params.linear2_weight, params.linear2_bias, trace);
  x = gelu(layer_norm(x, params.norm2_gain, params.norm2_bias, kLayerNormEps));
  x = traced_dropout(x, config.dropout2, training, rng, trace);
  return traced_linear(x, params.output_weight, params.output_bias, trace);
}

std::vector<NamedTensor> DualHeadModel::parameters() const {
  auto out = named_parameters(encoder, "encoder.");
  for (auto& p : named_parameters(head_1, "head_1.")) out.push_back(std::move(p));
  for (auto& p : named_parameters(head_2, "head_2.")) out.push_back(std::move(p));
  return out;
}

void DualHeadModel::zero_grad() {
  for (auto& p : parameters()) p.tensor.zero_grad();
}

Tensor combine_losses(const Tensor& loss_1, const Tensor& loss_2) {
  return scale(add(loss_1, loss_2), 0.5);
}

DualHeadOutput dual_forward(const DualHeadModel& model, const TokenizedBatch& batch,
                            std::optional<std::span<const int>> labels_1,
                            std::optional<std::span<const int>> labels_2, bool training,
                            RngState& rng, DualHeadTrace* trace) {
  RngState shared_rng = rng.fork();
  RngState head_1_rng = rng.fork();
  RngState head_2_rng = rng.fork();
  const Tensor pooled = encode_pooled(model.encoder, model.encoder_config, batch, training, shared_rng);

  DualHeadOutput out;
  out.logits_1 = head_forward(model.head_config_1, model.head_1, pooled, training, head_1_rng,
                              trace != nullptr ? &trace->head_1 : nullptr);
  out.logits_2 = head_forward(model.head_config_2, model.head_2, pooled, training, head_2_rng,
                              trace != nullptr ? &trace->head_2 : nullptr);
  if (labels_1) out.loss_1 = softmax_cross_entropy(out.logits_1, *labels_1);
  if (labels_2) out.loss_2 = softmax_cross_entropy(out.logits_2, *labels_2);
  if (out.loss_1 && out.loss_2) out.combined_loss = combine_losses(*out.loss_1, *out.loss_2);
  return out;
}

DualHeadModel make_model(Task task, const EncoderConfig& encoder_config, const HeadConfig& head_1,
                         const HeadConfig& head_2, RngState& rng) {
  encoder_config.validate();
  head_1.validate();
  head_2.validate();
  if (head_1.in_dim != encoder_config.hidden || head_2.in_dim != encoder_config.hidden) {
    throw ConfigError("head input width must equal encoder hidden size " +
                      std::to_string(encoder_config.hidden));
  }
  DualHeadModel model;
  model.task = task;
  model.encoder_config = encoder_config;
  model.encoder = init_encoder(encoder_config, rng);
  model.head_config_1 = head_1;
  model.head_config_2 = head_2;
  model.head_1 = init_head(head_1, rng);
  model.head_2 = init_head(head_2, rng);
  return model;
}

DualHeadModel make_task_model(Task task, const EncoderConfig& encoder_config, bool residual,
                              RngState& rng) {
  const auto classes = class_count(task);
  const auto head = HeadConfig::for_width(encoder_config.hidden, classes, residual);
  return make_model(task, encoder_config, head, head, rng);
}

}  // namespace dualhead
