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

#ifndef CONTRAST_SEQ2SEQ_LM_HPP_
#define CONTRAST_SEQ2SEQ_LM_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "contrast/decoder_lm.hpp"

namespace contrast {

// Same hyperparameters as the decoder-only model; num_layers applies to both
// the encoder and the decoder stack.
using Seq2SeqLMConfig = DecoderLMConfig;

struct Seq2SeqDecoderBlock {
  LayerNorm ln1;
  Attention self_attention;
  LayerNorm ln2;
  Attention cross_attention;
  LayerNorm ln3;
  FeedForward ffn;
};

template <SameModuloConst<Seq2SeqDecoderBlock> B, class Fn>
void visit_params(B& b, const std::string& prefix, Fn&& fn) {
  visit_params(b.ln1, prefix + ".ln1", fn);
  visit_params(b.self_attention, prefix + ".self_attn", fn);
  visit_params(b.ln2, prefix + ".ln2", fn);
  visit_params(b.cross_attention, prefix + ".cross_attn", fn);
  visit_params(b.ln3, prefix + ".ln3", fn);
  visit_params(b.ffn, prefix + ".ffn", fn);
}

struct Seq2SeqParams {
  Matrix source_embeddings;   // [vocab x d]
  Matrix source_positions;    // [context x d]
  std::vector<DecoderBlock> encoder;  // bidirectional self-attention
  LayerNorm encoder_norm;
  Matrix target_embeddings;   // [vocab x d]
  Matrix target_positions;    // [context x d]
  std::vector<Seq2SeqDecoderBlock> decoder;
  LayerNorm decoder_norm;
  Linear head;
};

template <SameModuloConst<Seq2SeqParams> P, class Fn>
void visit_params(P& p, const std::string& prefix, Fn&& fn) {
  fn(prefix + "source_embeddings", p.source_embeddings);
  fn(prefix + "source_positions", p.source_positions);
  for (std::size_t i = 0; i < p.encoder.size(); ++i) {
    visit_params(p.encoder[i], prefix + "encoder" + std::to_string(i), fn);
  }
  visit_params(p.encoder_norm, prefix + "encoder_norm", fn);
  fn(prefix + "target_embeddings", p.target_embeddings);
  fn(prefix + "target_positions", p.target_positions);
  for (std::size_t i = 0; i < p.decoder.size(); ++i) {
    visit_params(p.decoder[i], prefix + "decoder" + std::to_string(i), fn);
  }
  visit_params(p.decoder_norm, prefix + "decoder_norm", fn);
  visit_params(p.head, prefix + "head", fn);
}

struct Seq2SeqDecoderBlockCache {
  LayerNormCache ln1;
  AttentionCache self_attention;
  LayerNormCache ln2;
  AttentionCache cross_attention;
  LayerNormCache ln3;
  FeedForwardCache ffn;
};

struct Seq2SeqCache {
  std::vector<DecoderBlockCache> encoder;
  LayerNormCache encoder_norm;
  Matrix memory;  // encoder output after its final norm
  std::vector<Seq2SeqDecoderBlockCache> decoder;
  LayerNormCache decoder_norm;
  Matrix final_hidden;
};

struct Seq2SeqGradient {
  Matrix encoder;  // [source_len x d]
  Matrix decoder;  // [target_len x d]
};

// Tiny encoder-decoder transformer in f64 with cross-attention over the full
// source sequence.
class Seq2SeqLM {
 public:
  explicit Seq2SeqLM(const Seq2SeqLMConfig& config);
  Seq2SeqLM(const Seq2SeqLMConfig& config, Seq2SeqParams params);

  const Seq2SeqLMConfig& config() const { return config_; }
  const Seq2SeqParams& params() const { return params_; }
  Seq2SeqParams& mutable_params() { return params_; }
  std::size_t vocab_size() const { return config_.vocab_size; }
  std::size_t embed_dim() const { return config_.embed_dim; }

  Matrix embed_source(std::span<const TokenId> ids) const;
  Matrix embed_target(std::span<const TokenId> ids) const;

  // Logits at every decoder position, [target_len x vocab].
  Matrix logits(const Matrix& source_embeddings, const Matrix& target_embeddings) const;
  Matrix forward_with_cache(const Matrix& source_embeddings, const Matrix& target_embeddings,
                            Seq2SeqCache& cache) const;
  Seq2SeqGradient backward(const Seq2SeqCache& cache, const Matrix& dlogits,
                           Seq2SeqParams* grad) const;

  // Gradient of sum_v cotangent[v] * logits(last decoder position, v) with
  // respect to both embedding sequences, from a single backward pass.
  Seq2SeqGradient final_logits_vjp(const Matrix& source_embeddings,
                                   const Matrix& target_embeddings,
                                   std::span<const double> cotangent) const;

 private:
  void check_ids(std::span<const TokenId> ids) const;

  Seq2SeqLMConfig config_;
  Seq2SeqParams params_;
};

// Next-token logits given the source ids and the partial target ids.
std::vector<double> seq2seq_forward(const Seq2SeqLM& lm, std::span<const TokenId> source,
                                    std::span<const TokenId> target_prefix);

// Gradients of q(target) (minus q(foil) when given) for the next decoder token
// with respect to the source and target-prefix token embeddings.
struct Seq2SeqEmbeddingGradient {
  EmbeddingGradient encoder;
  EmbeddingGradient decoder;
};
Seq2SeqEmbeddingGradient seq2seq_input_gradient(const Seq2SeqLM& lm,
                                                std::span<const TokenId> source,
                                                std::span<const TokenId> target_prefix,
                                                TokenId target, std::optional<TokenId> foil,
                                                OutputMode mode);

}  // namespace contrast

#endif  // CONTRAST_SEQ2SEQ_LM_HPP_
