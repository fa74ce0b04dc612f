#pragma once

#include "dualhead/rng.hpp"
#include "dualhead/tensor.hpp"
#include "dualhead/tokenizer.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dualhead {

struct EncoderConfig {
  std::size_t vocab_size = 8000;
  std::size_t hidden = 768;
  std::size_t layers = 12;
  std::size_t attn_heads = 12;
  std::size_t ffn_dim = 3072;
  std::size_t max_positions = 128;
  // Dropout on the pooled [CLS] vector, shared by both heads.
  double pooled_dropout_p = 0.1;
  double layer_norm_eps = 1e-5;

  void validate() const;

  // hidden 64, 2 layers, 4 heads: the profile the test suite trains.
  static EncoderConfig tiny(std::size_t vocab_size);
  // hidden 16, 2 layers, 2 heads: small enough for full finite differences.
  static EncoderConfig gradcheck(std::size_t vocab_size);
};

struct EncoderLayerParams {
  Tensor query_weight, query_bias;
  Tensor key_weight, key_bias;
  Tensor value_weight, value_bias;
  Tensor output_weight, output_bias;
  Tensor attention_norm_gain, attention_norm_bias;
  Tensor ffn_in_weight, ffn_in_bias;
  Tensor ffn_out_weight, ffn_out_bias;
  Tensor ffn_norm_gain, ffn_norm_bias;
};

struct EncoderParams {
  Tensor token_embedding;     // [vocab x hidden]
  Tensor position_embedding;  // [max_positions x hidden]
  Tensor embedding_norm_gain, embedding_norm_bias;
  std::vector<EncoderLayerParams> layers;
};

EncoderParams init_encoder(const EncoderConfig& config, RngState& rng);

// Stable parameter order; names are prefixed with `prefix`.
std::vector<NamedTensor> named_parameters(const EncoderParams& params, const std::string& prefix);

// Token embedding plus learned absolute position embedding: [b x L x hidden].
Tensor embed(const EncoderParams& params, const EncoderConfig& config, const TokenizedBatch& batch);

struct AttentionTrace {
  std::vector<RowMatrix> probabilities;  // index batch * heads + head
  Tensor context;                        // attention output before the output projection
};

// One post-norm transformer layer:
//   h = LN(x + Proj(MHA(x))),  out = LN(h + W2 GELU(W1 h)).
Tensor encoder_layer(const EncoderLayerParams& layer, const EncoderConfig& config, const Tensor& x,
                     std::span<const std::uint8_t> mask, AttentionTrace* trace = nullptr);

// Embedding, embedding LayerNorm and every layer: [b x L x hidden].
Tensor encode_sequence(const EncoderParams& params, const EncoderConfig& config,
                       const TokenizedBatch& batch);

// Position-0 hidden state per sequence, through pooled dropout when training.
Tensor encode_pooled(const EncoderParams& params, const EncoderConfig& config,
                     const TokenizedBatch& batch, bool training, RngState& rng);

}  // namespace dualhead
