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

#include "contrast/decoder_lm.hpp"

#include <string>

#include "contrast/error.hpp"
#include "param_check.hpp"

namespace contrast {

void DecoderLMConfig::validate() const {
  if (vocab_size == 0 || embed_dim == 0 || num_layers == 0 || num_heads == 0 ||
      context_len == 0) {
    throw Error(ErrorCode::InvalidArgument, "model sizes must be positive");
  }
  if (embed_dim % num_heads != 0) {
    throw Error(ErrorCode::InvalidArgument, "embed_dim must be divisible by num_heads");
  }
}

namespace {

DecoderParams init_params(const DecoderLMConfig& c) {
  c.validate();
  Rng rng(c.seed);
  DecoderParams p;
  p.token_embeddings = random_normal(c.vocab_size, c.embed_dim, 1.0, rng);
  p.positional_embeddings = random_normal(c.context_len, c.embed_dim, 0.5, rng);
  for (std::size_t i = 0; i < c.num_layers; ++i) {
    DecoderBlock b;
    b.ln1 = LayerNorm::init(c.embed_dim, c.layer_norm);
    b.attention = Attention::init(c.embed_dim, c.num_heads, rng);
    b.ln2 = LayerNorm::init(c.embed_dim, c.layer_norm);
    b.ffn = FeedForward::init(c.embed_dim, 4 * c.embed_dim, rng);
    p.blocks.push_back(std::move(b));
  }
  p.final_norm = LayerNorm::init(c.embed_dim, c.layer_norm);
  p.head = Linear::init(c.embed_dim, c.vocab_size, rng);
  return p;
}

void set_normalization(DecoderParams& p, bool on) {
  for (auto& b : p.blocks) b.ln1.normalize = b.ln2.normalize = on;
  p.final_norm.normalize = on;
}

}  // namespace

DecoderLM::DecoderLM(const DecoderLMConfig& config)
    : config_(config), params_(init_params(config)) {}

DecoderLM::DecoderLM(const DecoderLMConfig& config, DecoderParams params)
    : config_(config), params_(std::move(params)) {
  config_.validate();
  internal::check_params_match(init_params(config_), params_);
  set_normalization(params_, config_.layer_norm);
}

Matrix DecoderLM::embed(std::span<const TokenId> ids) const {
  Matrix out(ids.size(), config_.embed_dim);
  for (std::size_t t = 0; t < ids.size(); ++t) {
    if (ids[t] >= config_.vocab_size) {
      throw Error(ErrorCode::InvalidToken, "token id " + std::to_string(ids[t]) + " out of range");
    }
    const auto src = params_.token_embeddings.row(ids[t]);
    std::copy(src.begin(), src.end(), out.row(t).begin());
  }
  return out;
}

Matrix DecoderLM::run(const Matrix& token_embeddings, std::size_t seq_len,
                      DecoderCache* cache) const {
  if (seq_len == 0 || seq_len > config_.context_len) {
    throw Error(ErrorCode::SequenceTooLong,
                "sequence length " + std::to_string(seq_len) + " outside context " +
                    std::to_string(config_.context_len));
  }
  if (token_embeddings.cols() != config_.embed_dim) {
    throw Error(ErrorCode::LengthMismatch, "token embedding width");
  }
  Matrix h = token_embeddings;
  for (std::size_t r = 0; r < h.rows(); ++r) {
    const auto pos = params_.positional_embeddings.row(r % seq_len);
    auto row = h.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += pos[j];
  }
  if (cache != nullptr) cache->blocks.resize(params_.blocks.size());
  for (std::size_t l = 0; l < params_.blocks.size(); ++l) {
    const DecoderBlock& b = params_.blocks[l];
    DecoderBlockCache* bc = cache ? &cache->blocks[l] : nullptr;
    const Matrix a = b.ln1.forward(h, bc ? &bc->ln1 : nullptr);
    h += b.attention.forward(a, a, /*causal=*/true, seq_len, seq_len,
                             bc ? &bc->attention : nullptr);
    const Matrix f = b.ln2.forward(h, bc ? &bc->ln2 : nullptr);
    h += b.ffn.forward(f, bc ? &bc->ffn : nullptr);
  }
  return h;
}

Matrix DecoderLM::logits(const Matrix& token_embeddings) const {
  const Matrix h = run(token_embeddings, token_embeddings.rows(), nullptr);
  return params_.head.forward(params_.final_norm.forward(h, nullptr));
}

Matrix DecoderLM::forward_with_cache(const Matrix& token_embeddings, DecoderCache& cache) const {
  const Matrix h = run(token_embeddings, token_embeddings.rows(), &cache);
  cache.final_hidden = params_.final_norm.forward(h, &cache.final_norm);
  return params_.head.forward(cache.final_hidden);
}

Matrix DecoderLM::backward(const DecoderCache& cache, const Matrix& dlogits,
                           DecoderParams* grad) const {
  Matrix dh = params_.head.backward(cache.final_hidden, dlogits, grad ? &grad->head : nullptr);
  dh = params_.final_norm.backward(cache.final_norm, dh, grad ? &grad->final_norm : nullptr);
  for (std::size_t l = params_.blocks.size(); l-- > 0;) {
    const DecoderBlock& b = params_.blocks[l];
    const DecoderBlockCache& bc = cache.blocks[l];
    DecoderBlock* gb = grad ? &grad->blocks[l] : nullptr;
    Matrix df = b.ffn.backward(bc.ffn, dh, gb ? &gb->ffn : nullptr);
    dh += b.ln2.backward(bc.ln2, df, gb ? &gb->ln2 : nullptr);
    auto da = b.attention.backward(bc.attention, dh, /*causal=*/true,
                                   gb ? &gb->attention : nullptr);
    da.queries_in += da.keys_in;
    dh += b.ln1.backward(bc.ln1, da.queries_in, gb ? &gb->ln1 : nullptr);
  }
  if (grad != nullptr) {
    for (std::size_t t = 0; t < dh.rows(); ++t) {
      auto dst = grad->positional_embeddings.row(t);
      const auto src = dh.row(t);
      for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
    }
  }
  return dh;
}

Matrix DecoderLM::final_logits_vjp(const Matrix& token_embeddings,
                                   std::span<const double> cotangent) const {
  if (cotangent.size() != config_.vocab_size) {
    throw Error(ErrorCode::LengthMismatch, "cotangent size");
  }
  DecoderCache cache;
  forward_with_cache(token_embeddings, cache);
  Matrix dlogits(token_embeddings.rows(), config_.vocab_size);
  std::copy(cotangent.begin(), cotangent.end(), dlogits.row(dlogits.rows() - 1).begin());
  return backward(cache, dlogits, nullptr);
}

std::vector<std::vector<double>> DecoderLM::final_logits_batch(
    std::span<const Matrix> inputs) const {
  if (inputs.empty()) return {};
  const std::size_t seq_len = inputs.front().rows();
  Matrix stacked(inputs.size() * seq_len, config_.embed_dim);
  for (std::size_t b = 0; b < inputs.size(); ++b) {
    if (inputs[b].rows() != seq_len) {
      throw Error(ErrorCode::LengthMismatch, "batched inputs must share a length");
    }
    stacked.set_rows(b * seq_len, inputs[b]);
  }
  const Matrix h = run(stacked, seq_len, nullptr);
  Matrix last(inputs.size(), config_.embed_dim);
  for (std::size_t b = 0; b < inputs.size(); ++b) {
    const auto src = h.row(b * seq_len + seq_len - 1);
    std::copy(src.begin(), src.end(), last.row(b).begin());
  }
  const Matrix l = params_.head.forward(params_.final_norm.forward(last, nullptr));
  std::vector<std::vector<double>> out;
  out.reserve(inputs.size());
  for (std::size_t b = 0; b < inputs.size(); ++b) {
    const auto r = l.row(b);
    out.emplace_back(r.begin(), r.end());
  }
  return out;
}

}  // namespace contrast
