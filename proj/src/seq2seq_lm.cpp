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

#include "contrast/seq2seq_lm.hpp"

#include <algorithm>
#include <string>

#include "contrast/error.hpp"
#include "param_check.hpp"

namespace contrast {
namespace {

Seq2SeqParams init_params(const Seq2SeqLMConfig& c) {
  c.validate();
  Rng rng(c.seed);
  const std::size_t d = c.embed_dim;
  Seq2SeqParams p;
  p.source_embeddings = random_normal(c.vocab_size, d, 1.0, rng);
  p.source_positions = random_normal(c.context_len, d, 0.5, rng);
  for (std::size_t i = 0; i < c.num_layers; ++i) {
    p.encoder.push_back({LayerNorm::init(d, c.layer_norm), Attention::init(d, c.num_heads, rng),
                         LayerNorm::init(d, c.layer_norm), FeedForward::init(d, 4 * d, rng)});
  }
  p.encoder_norm = LayerNorm::init(d, c.layer_norm);
  p.target_embeddings = random_normal(c.vocab_size, d, 1.0, rng);
  p.target_positions = random_normal(c.context_len, d, 0.5, rng);
  for (std::size_t i = 0; i < c.num_layers; ++i) {
    Seq2SeqDecoderBlock b;
    b.ln1 = LayerNorm::init(d, c.layer_norm);
    b.self_attention = Attention::init(d, c.num_heads, rng);
    b.ln2 = LayerNorm::init(d, c.layer_norm);
    b.cross_attention = Attention::init(d, c.num_heads, rng);
    b.ln3 = LayerNorm::init(d, c.layer_norm);
    b.ffn = FeedForward::init(d, 4 * d, rng);
    p.decoder.push_back(std::move(b));
  }
  p.decoder_norm = LayerNorm::init(d, c.layer_norm);
  p.head = Linear::init(d, c.vocab_size, rng);
  return p;
}

void set_normalization(Seq2SeqParams& p, bool on) {
  for (auto& b : p.encoder) b.ln1.normalize = b.ln2.normalize = on;
  for (auto& b : p.decoder) b.ln1.normalize = b.ln2.normalize = b.ln3.normalize = on;
  p.encoder_norm.normalize = p.decoder_norm.normalize = on;
}

Matrix gather_rows(const Matrix& table, std::span<const TokenId> ids) {
  Matrix out(ids.size(), table.cols());
  for (std::size_t t = 0; t < ids.size(); ++t) {
    const auto src = table.row(ids[t]);
    std::copy(src.begin(), src.end(), out.row(t).begin());
  }
  return out;
}

Matrix add_positions(const Matrix& x, const Matrix& positions, std::size_t context) {
  if (x.rows() == 0 || x.rows() > context) {
    throw Error(ErrorCode::SequenceTooLong, "sequence length " + std::to_string(x.rows()) +
                                                " outside context " + std::to_string(context));
  }
  if (x.cols() != positions.cols()) {
    throw Error(ErrorCode::LengthMismatch, "token embedding width");
  }
  Matrix h = x;
  for (std::size_t t = 0; t < h.rows(); ++t) {
    auto row = h.row(t);
    const auto pos = positions.row(t);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += pos[j];
  }
  return h;
}

void add_rows_into(Matrix& dst, const Matrix& src) {
  for (std::size_t t = 0; t < src.rows(); ++t) {
    auto d = dst.row(t);
    const auto s = src.row(t);
    for (std::size_t j = 0; j < s.size(); ++j) d[j] += s[j];
  }
}

}  // namespace

Seq2SeqLM::Seq2SeqLM(const Seq2SeqLMConfig& config)
    : config_(config), params_(init_params(config)) {}

Seq2SeqLM::Seq2SeqLM(const Seq2SeqLMConfig& config, Seq2SeqParams params)
    : config_(config), params_(std::move(params)) {
  config_.validate();
  internal::check_params_match(init_params(config_), params_);
  set_normalization(params_, config_.layer_norm);
}

void Seq2SeqLM::check_ids(std::span<const TokenId> ids) const {
  if (ids.empty()) throw Error(ErrorCode::EmptyInput, "empty input sequence");
  if (ids.size() > config_.context_len) {
    throw Error(ErrorCode::SequenceTooLong, "sequence of length " + std::to_string(ids.size()) +
                                                " exceeds context " +
                                                std::to_string(config_.context_len));
  }
  for (TokenId id : ids) {
    if (id >= config_.vocab_size) {
      throw Error(ErrorCode::InvalidToken, "token id " + std::to_string(id) + " out of range");
    }
  }
}

Matrix Seq2SeqLM::embed_source(std::span<const TokenId> ids) const {
  check_ids(ids);
  return gather_rows(params_.source_embeddings, ids);
}

Matrix Seq2SeqLM::embed_target(std::span<const TokenId> ids) const {
  check_ids(ids);
  return gather_rows(params_.target_embeddings, ids);
}

Matrix Seq2SeqLM::forward_with_cache(const Matrix& source_embeddings,
                                     const Matrix& target_embeddings,
                                     Seq2SeqCache& cache) const {
  Matrix h = add_positions(source_embeddings, params_.source_positions, config_.context_len);
  cache.encoder.resize(params_.encoder.size());
  for (std::size_t l = 0; l < params_.encoder.size(); ++l) {
    const DecoderBlock& b = params_.encoder[l];
    DecoderBlockCache& bc = cache.encoder[l];
    const Matrix a = b.ln1.forward(h, &bc.ln1);
    h += b.attention.forward(a, /*causal=*/false, &bc.attention);
    const Matrix f = b.ln2.forward(h, &bc.ln2);
    h += b.ffn.forward(f, &bc.ffn);
  }
  cache.memory = params_.encoder_norm.forward(h, &cache.encoder_norm);

  Matrix g = add_positions(target_embeddings, params_.target_positions, config_.context_len);
  cache.decoder.resize(params_.decoder.size());
  for (std::size_t l = 0; l < params_.decoder.size(); ++l) {
    const Seq2SeqDecoderBlock& b = params_.decoder[l];
    Seq2SeqDecoderBlockCache& bc = cache.decoder[l];
    const Matrix a = b.ln1.forward(g, &bc.ln1);
    g += b.self_attention.forward(a, /*causal=*/true, &bc.self_attention);
    const Matrix c = b.ln2.forward(g, &bc.ln2);
    g += b.cross_attention.forward(c, cache.memory, /*causal=*/false, c.rows(),
                                   cache.memory.rows(), &bc.cross_attention);
    const Matrix f = b.ln3.forward(g, &bc.ln3);
    g += b.ffn.forward(f, &bc.ffn);
  }
  cache.final_hidden = params_.decoder_norm.forward(g, &cache.decoder_norm);
  return params_.head.forward(cache.final_hidden);
}

Matrix Seq2SeqLM::logits(const Matrix& source_embeddings, const Matrix& target_embeddings) const {
  Seq2SeqCache cache;
  return forward_with_cache(source_embeddings, target_embeddings, cache);
}

Seq2SeqGradient Seq2SeqLM::backward(const Seq2SeqCache& cache, const Matrix& dlogits,
                                    Seq2SeqParams* grad) const {
  Matrix dg = params_.head.backward(cache.final_hidden, dlogits, grad ? &grad->head : nullptr);
  dg = params_.decoder_norm.backward(cache.decoder_norm, dg,
                                     grad ? &grad->decoder_norm : nullptr);
  Matrix dmemory(cache.memory.rows(), cache.memory.cols());
  for (std::size_t l = params_.decoder.size(); l-- > 0;) {
    const Seq2SeqDecoderBlock& b = params_.decoder[l];
    const Seq2SeqDecoderBlockCache& bc = cache.decoder[l];
    Seq2SeqDecoderBlock* gb = grad ? &grad->decoder[l] : nullptr;
    const Matrix df = b.ffn.backward(bc.ffn, dg, gb ? &gb->ffn : nullptr);
    dg += b.ln3.backward(bc.ln3, df, gb ? &gb->ln3 : nullptr);
    auto dc = b.cross_attention.backward(bc.cross_attention, dg, /*causal=*/false,
                                         gb ? &gb->cross_attention : nullptr);
    dmemory += dc.keys_in;
    dg += b.ln2.backward(bc.ln2, dc.queries_in, gb ? &gb->ln2 : nullptr);
    auto da = b.self_attention.backward(bc.self_attention, dg, /*causal=*/true,
                                        gb ? &gb->self_attention : nullptr);
    da.queries_in += da.keys_in;
    dg += b.ln1.backward(bc.ln1, da.queries_in, gb ? &gb->ln1 : nullptr);
  }

  Matrix dh = params_.encoder_norm.backward(cache.encoder_norm, dmemory,
                                            grad ? &grad->encoder_norm : nullptr);
  for (std::size_t l = params_.encoder.size(); l-- > 0;) {
    const DecoderBlock& b = params_.encoder[l];
    const DecoderBlockCache& bc = cache.encoder[l];
    DecoderBlock* gb = grad ? &grad->encoder[l] : nullptr;
    const Matrix df = b.ffn.backward(bc.ffn, dh, gb ? &gb->ffn : nullptr);
    dh += b.ln2.backward(bc.ln2, df, gb ? &gb->ln2 : nullptr);
    auto da = b.attention.backward(bc.attention, dh, /*causal=*/false,
                                   gb ? &gb->attention : nullptr);
    da.queries_in += da.keys_in;
    dh += b.ln1.backward(bc.ln1, da.queries_in, gb ? &gb->ln1 : nullptr);
  }
  if (grad != nullptr) {
    add_rows_into(grad->source_positions, dh);
    add_rows_into(grad->target_positions, dg);
  }
  return {std::move(dh), std::move(dg)};
}

Seq2SeqGradient Seq2SeqLM::final_logits_vjp(const Matrix& source_embeddings,
                                            const Matrix& target_embeddings,
                                            std::span<const double> cotangent) const {
  if (cotangent.size() != config_.vocab_size) {
    throw Error(ErrorCode::LengthMismatch, "cotangent size");
  }
  Seq2SeqCache cache;
  forward_with_cache(source_embeddings, target_embeddings, cache);
  Matrix dlogits(target_embeddings.rows(), config_.vocab_size);
  std::copy(cotangent.begin(), cotangent.end(), dlogits.row(dlogits.rows() - 1).begin());
  return backward(cache, dlogits, nullptr);
}

std::vector<double> seq2seq_forward(const Seq2SeqLM& lm, std::span<const TokenId> source,
                                    std::span<const TokenId> target_prefix) {
  const Matrix l = lm.logits(lm.embed_source(source), lm.embed_target(target_prefix));
  const auto last = l.row(l.rows() - 1);
  return {last.begin(), last.end()};
}

Seq2SeqEmbeddingGradient seq2seq_input_gradient(const Seq2SeqLM& lm,
                                                std::span<const TokenId> source,
                                                std::span<const TokenId> target_prefix,
                                                TokenId target, std::optional<TokenId> foil,
                                                OutputMode mode) {
  for (TokenId y : {target, foil.value_or(target)}) {
    if (y >= lm.vocab_size()) {
      throw Error(ErrorCode::InvalidToken, "token id " + std::to_string(y) + " out of range");
    }
  }
  const Matrix src = lm.embed_source(source);
  const Matrix tgt = lm.embed_target(target_prefix);
  const Matrix l = lm.logits(src, tgt);
  const auto last = l.row(l.rows() - 1);
  std::vector<double> cot = score_cotangent(last, target, mode);
  if (foil) {
    const auto foil_cot = score_cotangent(last, *foil, mode);
    for (std::size_t v = 0; v < cot.size(); ++v) cot[v] -= foil_cot[v];
  }
  auto g = lm.final_logits_vjp(src, tgt, cot);
  return {{std::move(g.encoder), mode}, {std::move(g.decoder), mode}};
}

}  // namespace contrast
