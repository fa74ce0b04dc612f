#pragma once

#include "dualhead/encoder.hpp"
#include "dualhead/rng.hpp"
#include "dualhead/tensor.hpp"
#include "dualhead/tokenizer.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dualhead {

// Task A: fake / hate, both binary. Task B: target / severity, 4-way each.
enum class Task { A, B };

std::string_view task_name(Task task);
Task parse_task(std::string_view text);
std::size_t class_count(Task task);

struct HeadConfig {
  std::size_t in_dim = 768;
  std::size_t mid_dim = 768;
  std::size_t reduced_dim = 384;
  std::size_t num_classes = 2;
  double dropout1 = 0.2;
  double dropout2 = 0.1;
  // Adds the head input back after the first block; needs in_dim == mid_dim.
  bool residual = false;

  void validate() const;

  // Head over an encoder of the given width: width -> width -> width / 2 -> classes.
  static HeadConfig for_width(std::size_t width, std::size_t num_classes, bool residual);
};

struct HeadParams {
  Tensor linear1_weight, linear1_bias;
  Tensor norm1_gain, norm1_bias;
  Tensor linear2_weight, linear2_bias;
  Tensor norm2_gain, norm2_bias;
  Tensor output_weight, output_bias;
};

HeadParams init_head(const HeadConfig& config, RngState& rng);
std::vector<NamedTensor> named_parameters(const HeadParams& params, const std::string& prefix);

// Records what a head forward actually executed.
struct HeadTrace {
  std::vector<std::pair<std::size_t, std::size_t>> linear_dims;
  std::vector<double> dropout_probabilities;
  Tensor reduce_input;  // input of the 768 -> 384 layer
};

// linear1 -> LN -> GELU -> dropout1 -> [+ input] -> linear2 -> LN -> GELU -> dropout2 -> output.
Tensor head_forward(const HeadConfig& config, const HeadParams& params, const Tensor& pooled,
                    bool training, RngState& rng, HeadTrace* trace = nullptr);

struct DualHeadModel {
  Task task = Task::A;
  EncoderConfig encoder_config;
  EncoderParams encoder;
  HeadConfig head_config_1;
  HeadConfig head_config_2;
  HeadParams head_1;
  HeadParams head_2;

  double shared_dropout_p() const { return encoder_config.pooled_dropout_p; }
  bool residual() const { return head_config_1.residual; }
  std::vector<NamedTensor> parameters() const;
  void zero_grad();
};

struct DualHeadOutput {
  Tensor logits_1;
  Tensor logits_2;
  std::optional<Tensor> loss_1;
  std::optional<Tensor> loss_2;
  std::optional<Tensor> combined_loss;
};

struct DualHeadTrace {
  HeadTrace head_1;
  HeadTrace head_2;
};

// Balanced combination: (loss_1 + loss_2) / 2.
Tensor combine_losses(const Tensor& loss_1, const Tensor& loss_2);

// One encoder pass, one shared pooled dropout, both heads on the same pooled
// tensor. Losses are filled in when both label sets are given.
DualHeadOutput dual_forward(const DualHeadModel& model, const TokenizedBatch& batch,
                            std::optional<std::span<const int>> labels_1,
                            std::optional<std::span<const int>> labels_2, bool training,
                            RngState& rng, DualHeadTrace* trace = nullptr);

DualHeadModel make_task_model(Task task, const EncoderConfig& encoder_config, bool residual,
                              RngState& rng);

// Builds the model skeleton for explicit head configs (checkpoint loading).
DualHeadModel make_model(Task task, const EncoderConfig& encoder_config, const HeadConfig& head_1,
                         const HeadConfig& head_2, RngState& rng);

}  // namespace dualhead
