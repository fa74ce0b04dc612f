#include "dualhead/encoder.hpp"

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

void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw InvalidProbability(std::string(what) + " " + std::to_string(p) + " outside [0, 1)");
  }
}

}  // namespace

void EncoderConfig::validate() const {
  if (vocab_size == 0 || hidden == 0 || layers == 0 || attn_heads == 0 || ffn_dim == 0 ||
      max_positions == 0) {
    throw ConfigError("encoder config: every extent must be positive");
  }
  if (hidden % attn_heads != 0) {
    throw ConfigError("encoder config: hidden " + std::to_string(hidden) +
                      " not divisible by attn_heads " + std::to_string(attn_heads));
  }
  check_probability(pooled_dropout_p, "pooled dropout");
  if (!(layer_norm_eps > 0.0)) throw ConfigError("encoder config: layer_norm_eps must be positive");
}

EncoderConfig EncoderConfig::tiny(std::size_t vocab_size) {
  EncoderConfig config;
  config.vocab_size = vocab_size;
  config.hidden = 64;
  config.layers = 2;
  config.attn_heads = 4;
  config.ffn_dim = 256;
  return config;
}

EncoderConfig EncoderConfig::gradcheck(std::size_t vocab_size) {
  EncoderConfig config;
  config.vocab_size = vocab_size;
  config.hidden = 16;
  config.layers = 2;
  config.attn_heads = 2;
  config.ffn_dim = 32;
  config.max_positions = 16;
  return config;
}

EncoderParams init_encoder(const EncoderConfig& config, RngState& rng) {
  config.validate();
  const auto h = config.hidden;
  EncoderParams params;
  params.token_embedding = weight(config.vocab_size, h, rng);
  params.position_embedding = weight(config.max_positions, h, rng);
  params.embedding_norm_gain = constant(h, 1.0);
  params.embedding_norm_bias = constant(h, 0.0);
  for (std::size_t l = 0; l < config.layers; ++l) {
    EncoderLayerParams layer;
    layer.query_weight = weight(h, h, rng);
    layer.query_bias = constant(h, 0.0);
    layer.key_weight = weight(h, h, rng);
    layer.key_bias = constant(h, 0.0);
    layer.value_weight = weight(h, h, rng);
    layer.value_bias = constant(h, 0.0);
    layer.output_weight = weight(h, h, rng);
    layer.output_bias = constant(h, 0.0);
    layer.attention_norm_gain = constant(h, 1.0);
    layer.attention_norm_bias = constant(h, 0.0);
    layer.ffn_in_weight = weight(h, config.ffn_dim, rng);
    layer.ffn_in_bias = constant(config.ffn_dim, 0.0);
    layer.ffn_out_weight = weight(config.ffn_dim, h, rng);
    layer.ffn_out_bias = constant(h, 0.0);
    layer.ffn_norm_gain = constant(h, 1.0);
    layer.ffn_norm_bias = constant(h, 0.0);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

std::vector<NamedTensor> named_parameters(const EncoderParams& params, const std::string& prefix) {
  std::vector<NamedTensor> out{
      {prefix + "token_embedding", params.token_embedding},
      {prefix + "position_embedding", params.position_embedding},
      {prefix + "embedding_norm.gain", params.embedding_norm_gain},
      {prefix + "embedding_norm.bias", params.embedding_norm_bias},
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    const auto p = prefix + "layer" + std::to_string(l) + ".";
    out.insert(out.end(), {
                              {p + "attention.query.weight", layer.query_weight},
                              {p + "attention.query.bias", layer.query_bias},
                              {p + "attention.key.weight", layer.key_weight},
                              {p + "attention.key.bias", layer.key_bias},
                              {p + "attention.value.weight", layer.value_weight},
                              {p + "attention.value.bias", layer.value_bias},
                              {p + "attention.output.weight", layer.output_weight},
                              {p + "attention.output.bias", layer.output_bias},
                              {p + "attention_norm.gain", layer.attention_norm_gain},
                              {p + "attention_norm.bias", layer.attention_norm_bias},
                              {p + "ffn.in.weight", layer.ffn_in_weight},
                              {p + "ffn.in.bias", layer.ffn_in_bias},
                              {p + "ffn.out.weight", layer.ffn_out_weight},
                              {p + "ffn.out.bias", layer.ffn_out_bias},
                              {p + "ffn_norm.gain", layer.ffn_norm_gain},
                              {p + "ffn_norm.bias", layer.ffn_norm_bias},
                          });
  }
  return out;
}

Tensor embed(const EncoderParams& params, const EncoderConfig& config, const TokenizedBatch& batch) {
  if (batch.max_len > config.max_positions) {
    throw ConfigError("sequence length " + std::to_string(batch.max_len) + " exceeds max_positions " +
                      std::to_string(config.max_positions));
  }
  if (batch.batch == 0) throw DimensionError("embed: empty batch");
  const Shape leading{batch.batch, batch.max_len};
  std::vector<int> positions(batch.ids.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    positions[i] = static_cast<int>(i % batch.max_len);
  }
  return add(embedding(params.token_embedding, batch.ids, leading),
             embedding(params.position_embedding, positions, leading));
}

Tensor encoder_layer(const EncoderLayerParams& layer, const EncoderConfig& config, const Tensor& x,
                     std::span<const std::uint8_t> mask, AttentionTrace* trace) {
  const Tensor q = linear(x, layer.query_weight, layer.query_bias);
  const Tensor k = linear(x, layer.key_weight, layer.key_bias);
  const Tensor v = linear(x, layer.value_weight, layer.value_bias);
  const Tensor context = attention(q, k, v, mask, config.attn_heads,
                                   trace != nullptr ? &trace->probabilities : nullptr);
  if (trace != nullptr) trace->context = context;
  const Tensor attended = layer_norm(add(x, linear(context, layer.output_weight, layer.output_bias)),
                                     layer.attention_norm_gain, layer.attention_norm_bias,
                                     config.layer_norm_eps);
  const Tensor ffn = linear(gelu(linear(attended, layer.ffn_in_weight, layer.ffn_in_bias)),
                            layer.ffn_out_weight, layer.ffn_out_bias);
  return layer_norm(add(attended, ffn), layer.ffn_norm_gain, layer.ffn_norm_bias,
                    config.layer_norm_eps);
}

Tensor encode_sequence(const EncoderParams& params, const EncoderConfig& config,
                       const TokenizedBatch& batch) {
  Tensor x = layer_norm(embed(params, config, batch), params.embedding_norm_gain,
                        params.embedding_norm_bias, config.layer_norm_eps);
  for (const auto& layer : params.layers) x = encoder_layer(layer, config, x, batch.mask);
  return x;
}

Tensor encode_pooled(const EncoderParams& params, const EncoderConfig& config,
                     const TokenizedBatch& batch, bool training, RngState& rng) {
  const Tensor cls = select_position(encode_sequence(params, config, batch), 0);
  return dropout(cls, config.pooled_dropout_p, training, rng);
}

}  // namespace dualhead
