/*
 * Copyright 2026 The contrast Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef CONTRAST_DECODER_LM_HPP_
#define CONTRAST_DECODER_LM_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "contrast/language_model.hpp"
#include "contrast/layers.hpp"

namespace contrast {

struct DecoderLMConfig {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 32;
  std::size_t num_layers = 2;
  std::size_t num_heads = 4;
  std::size_t context_len = 16;
  std::uint64_t seed = 0;
  // Normalize activations inside the norm layers. Off by default: a
  // normalized residual stream is nearly invariant to rescaling a token's
  // embedding, which leaves gradient x input with little signal.
  bool layer_norm = false;

  // Throws InvalidArgument unless all sizes are positive and embed_dim is a
  // multiple of num_heads.
  void validate() const;
  bool operator==(const DecoderLMConfig&) const = default;
};

// Pre-norm transformer block: x + attn(ln1(x)), then + ffn(ln2(.)). The norm
// layers only normalize when the config asks for it.
struct DecoderBlock {
  LayerNorm ln1;
  Attention attention;
  LayerNorm ln2;
  FeedForward ffn;
};

template <SameModuloConst<DecoderBlock> B, class Fn>
void visit_params(B& b, const std::string& prefix, Fn&& fn) {
  visit_params(b.ln1, prefix + ".ln1", fn);
  visit_params(b.attention, prefix + ".attn", fn);
  visit_params(b.ln2, prefix + ".ln2", fn);
  visit_params(b.ffn, prefix + ".ffn", fn);
}

struct DecoderParams {
  Matrix token_embeddings;       // [vocab x d]
  Matrix positional_embeddings;  // [context x d]
  std::vector<DecoderBlock> blocks;
  LayerNorm final_norm;
  Linear head;  // d -> vocab, untied from the token embeddings
};

template <SameModuloConst<DecoderParams> P, class Fn>
void visit_params(P& p, const std::string& prefix, Fn&& fn) {
  fn(prefix + "token_embeddings", p.token_embeddings);
  fn(prefix + "positional_embeddings", p.positional_embeddings);
  for (std::size_t i = 0; i < p.blocks.size(); ++i) {
    visit_params(p.blocks[i], prefix + "block" + std::to_string(i), fn);
  }
  visit_params(p.final_norm, prefix + "final_norm", fn);
  visit_params(p.head, prefix + "head", fn);
}

struct DecoderBlockCache {
  LayerNormCache ln1;
  AttentionCache attention;
  LayerNormCache ln2;
  FeedForwardCache ffn;
};

struct DecoderCache {
  std::vector<DecoderBlockCache> blocks;
  LayerNormCache final_norm;
  Matrix final_hidden;  // output of the final norm
};

// Tiny decoder-only language model in f64. Immutable after construction
// except through mutable_params(), which training uses.
class DecoderLM : public LanguageModel {
 public:
  // Randomly initialized from config.seed.
  explicit DecoderLM(const DecoderLMConfig& config);
  DecoderLM(const DecoderLMConfig& config, DecoderParams params);

  const DecoderLMConfig& config() const { return config_; }
  const DecoderParams& params() const { return params_; }
  DecoderParams& mutable_params() { return params_; }

  std::size_t vocab_size() const override { return config_.vocab_size; }
  std::size_t embed_dim() const override { return config_.embed_dim; }
  std::size_t context_len() const override { return config_.context_len; }

  Matrix embed(std::span<const TokenId> ids) const override;
  Matrix logits(const Matrix& token_embeddings) const override;
  Matrix final_logits_vjp(const Matrix& token_embeddings,
                          std::span<const double> cotangent) const override;
  // Stacks all inputs into one matrix so every dense layer runs once.
  std::vector<std::vector<double>> final_logits_batch(
      std::span<const Matrix> inputs) const override;

  // Forward pass keeping activations for backward().
  Matrix forward_with_cache(const Matrix& token_embeddings, DecoderCache& cache) const;
  // Backpropagates `dlogits` [seq_len x vocab]; returns the gradient with
  // respect to the token embeddings and, if `grad` is given, accumulates
  // parameter gradients (positional rows included, token table excluded).
  Matrix backward(const DecoderCache& cache, const Matrix& dlogits, DecoderParams* grad) const;

 private:
  // Runs the stack over `rows`, which holds blocks of `seq_len` rows.
  Matrix run(const Matrix& token_embeddings, std::size_t seq_len, DecoderCache* cache) const;

  DecoderLMConfig config_;
  DecoderParams params_;
};

}  // namespace contrast

#endif  // CONTRAST_DECODER_LM_HPP_
