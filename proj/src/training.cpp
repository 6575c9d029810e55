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

#include "contrast/training.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "contrast/error.hpp"
#include "contrast/rng.hpp"

namespace contrast {
namespace {

template <class P>
std::vector<Matrix*> tensor_list(P& params) {
  std::vector<Matrix*> out;
  visit_params(params, "", [&](const std::string&, Matrix& m) { out.push_back(&m); });
  return out;
}

template <class P>
class Adam {
 public:
  explicit Adam(const P& params) : m_(zeros_like(params)), v_(zeros_like(params)) {}

  void step(P& params, P& grads, double lr, double clip) {
    auto p = tensor_list(params);
    auto g = tensor_list(grads);
    auto m = tensor_list(m_);
    auto v = tensor_list(v_);
    if (clip > 0.0) {
      double norm2 = 0.0;
      for (const Matrix* gi : g) {
        for (double x : gi->values()) norm2 += x * x;
      }
      const double norm = std::sqrt(norm2);
      if (norm > clip) {
        for (Matrix* gi : g) *gi *= clip / norm;
      }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < p.size(); ++i) {
      auto pv = p[i]->values();
      const auto gv = g[i]->values();
      auto mv = m[i]->values();
      auto vv = v[i]->values();
      for (std::size_t j = 0; j < pv.size(); ++j) {
        mv[j] = kBeta1 * mv[j] + (1.0 - kBeta1) * gv[j];
        vv[j] = kBeta2 * vv[j] + (1.0 - kBeta2) * gv[j] * gv[j];
        pv[j] -= lr * (mv[j] / c1) / (std::sqrt(vv[j] / c2) + kEps);
      }
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  P m_;
  P v_;
  std::uint64_t t_ = 0;
};

// Warmup over the first 5% of steps, then cosine decay to 10% of the peak.
double scheduled_rate(const TrainOptions& o, std::size_t step) {
  const std::size_t warmup = std::max<std::size_t>(1, o.steps / 20);
  if (step < warmup) {
    return o.learning_rate * static_cast<double>(step + 1) / static_cast<double>(warmup);
  }
  const double progress =
      static_cast<double>(step - warmup) / static_cast<double>(std::max<std::size_t>(1, o.steps - warmup));
  return o.learning_rate * (0.1 + 0.9 * 0.5 * (1.0 + std::cos(std::numbers::pi * progress)));
}

// Softmax cross-entropy rows; writes (p - onehot) * scale into dlogits and
// returns the summed loss.
double cross_entropy(const Matrix& logits, std::span<const TokenId> targets,
                     std::size_t first_row, double scale, Matrix& dlogits) {
  double loss = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto row = logits.row(first_row + i);
    const auto p = softmax(row);
    loss -= std::log(std::max(p[targets[i]], 1e-300));
    auto d = dlogits.row(first_row + i);
    for (std::size_t v = 0; v < p.size(); ++v) d[v] = p[v] * scale;
    d[targets[i]] -= scale;
  }
  return loss;
}

void check_finite_loss(double loss, std::size_t step) {
  if (!std::isfinite(loss)) {
    throw Error(ErrorCode::DivergedLoss, "non-finite loss at step " + std::to_string(step));
  }
}

}  // namespace

TrainedDecoder train_lm(const DecoderLMConfig& config,
                        const std::vector<TokenizedSequence>& corpus,
                        const TrainOptions& options) {
  std::vector<const TokenizedSequence*> usable;
  for (const auto& s : corpus) {
    if (s.size() > config.context_len) {
      throw Error(ErrorCode::SequenceTooLong,
                  "training sentence of length " + std::to_string(s.size()) +
                      " exceeds context " + std::to_string(config.context_len));
    }
    for (TokenId id : s.ids) {
      if (id >= config.vocab_size) {
        throw Error(ErrorCode::InvalidToken, "token id " + std::to_string(id) + " out of range");
      }
    }
    if (s.size() >= 2) usable.push_back(&s);
  }
  if (usable.empty()) throw Error(ErrorCode::EmptyCorpus, "no training sentence has two tokens");

  DecoderLM lm(config);
  Adam<DecoderParams> adam(lm.params());
  Rng rng(mix_seed(options.seed, 1));
  std::vector<double> recent;
  for (std::size_t step = 0; step < options.steps; ++step) {
    DecoderParams grads = zeros_like(lm.params());
    std::vector<const TokenizedSequence*> batch;
    std::size_t predicted = 0;
    for (std::size_t b = 0; b < options.batch_size; ++b) {
      batch.push_back(usable[rng.below(usable.size())]);
      predicted += batch.back()->size() - 1;
    }
    const double scale = 1.0 / static_cast<double>(predicted);
    double loss = 0.0;
    for (const TokenizedSequence* s : batch) {
      const std::span<const TokenId> ids(s->ids);
      DecoderCache cache;
      const Matrix emb = lm.embed(ids.first(ids.size() - 1));
      const Matrix logits = lm.forward_with_cache(emb, cache);
      Matrix dlogits(logits.rows(), logits.cols());
      loss += cross_entropy(logits, ids.subspan(1), 0, scale, dlogits);
      const Matrix demb = lm.backward(cache, dlogits, &grads);
      for (std::size_t t = 0; t + 1 < ids.size(); ++t) {
        auto dst = grads.token_embeddings.row(ids[t]);
        const auto src = demb.row(t);
        for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
      }
    }
    loss *= scale;
    check_finite_loss(loss, step);
    recent.push_back(loss);
    if (recent.size() > 50) recent.erase(recent.begin());
    adam.step(lm.mutable_params(), grads, scheduled_rate(options, step), options.grad_clip);
  }
  double final_loss = 0.0;
  for (double l : recent) final_loss += l;
  final_loss = recent.empty() ? corpus_loss(lm, corpus) : final_loss / recent.size();
  return {std::move(lm), final_loss};
}

double corpus_loss(const DecoderLM& lm, const std::vector<TokenizedSequence>& corpus) {
  double loss = 0.0;
  std::size_t count = 0;
  for (const auto& s : corpus) {
    if (s.size() < 2) continue;
    const std::span<const TokenId> ids(s.ids);
    const Matrix logits = lm.logits(lm.embed(ids.first(ids.size() - 1)));
    Matrix scratch(logits.rows(), logits.cols());
    loss += cross_entropy(logits, ids.subspan(1), 0, 1.0, scratch);
    count += ids.size() - 1;
  }
  if (count == 0) throw Error(ErrorCode::EmptyCorpus, "no predicted positions");
  return loss / static_cast<double>(count);
}

TrainedSeq2Seq train_seq2seq(const Seq2SeqLMConfig& config,
                             const std::vector<Seq2SeqExample>& examples,
                             const TrainOptions& options) {
  if (examples.empty()) throw Error(ErrorCode::EmptyCorpus, "no training examples");
  for (const auto& e : examples) {
    if (e.decoder_input.size() != e.decoder_output.size() || e.decoder_input.empty()) {
      throw Error(ErrorCode::ValidationError, "decoder input/output lengths differ");
    }
  }
  Seq2SeqLM lm(config);
  Adam<Seq2SeqParams> adam(lm.params());
  Rng rng(mix_seed(options.seed, 2));
  std::vector<double> recent;
  for (std::size_t step = 0; step < options.steps; ++step) {
    Seq2SeqParams grads = zeros_like(lm.params());
    std::vector<const Seq2SeqExample*> batch;
    std::size_t predicted = 0;
    for (std::size_t b = 0; b < options.batch_size; ++b) {
      batch.push_back(&examples[rng.below(examples.size())]);
      predicted += batch.back()->decoder_output.size();
    }
    const double scale = 1.0 / static_cast<double>(predicted);
    double loss = 0.0;
    for (const Seq2SeqExample* e : batch) {
      Seq2SeqCache cache;
      const Matrix logits =
          lm.forward_with_cache(lm.embed_source(e->source), lm.embed_target(e->decoder_input), cache);
      Matrix dlogits(logits.rows(), logits.cols());
      loss += cross_entropy(logits, e->decoder_output, 0, scale, dlogits);
      const Seq2SeqGradient d = lm.backward(cache, dlogits, &grads);
      for (std::size_t t = 0; t < e->source.size(); ++t) {
        auto dst = grads.source_embeddings.row(e->source[t]);
        const auto src = d.encoder.row(t);
        for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
      }
      for (std::size_t t = 0; t < e->decoder_input.size(); ++t) {
        auto dst = grads.target_embeddings.row(e->decoder_input[t]);
        const auto src = d.decoder.row(t);
        for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
      }
    }
    loss *= scale;
    check_finite_loss(loss, step);
    recent.push_back(loss);
    if (recent.size() > 50) recent.erase(recent.begin());
    adam.step(lm.mutable_params(), grads, scheduled_rate(options, step), options.grad_clip);
  }
  double final_loss = 0.0;
  for (double l : recent) final_loss += l;
  if (!recent.empty()) final_loss /= static_cast<double>(recent.size());
  return {std::move(lm), final_loss};
}

std::vector<Seq2SeqExample> copy_task_examples(std::size_t n, std::size_t symbols,
                                               std::uint64_t seed) {
  if (symbols == 0) throw Error(ErrorCode::InvalidArgument, "copy task needs symbols");
  Rng rng(seed);
  std::vector<Seq2SeqExample> out(n);
  for (auto& ex : out) {
    const std::size_t len = 3 + rng.below(4);
    for (std::size_t i = 0; i < len; ++i) {
      ex.source.push_back(static_cast<TokenId>(1 + rng.below(symbols)));
    }
    ex.decoder_input.push_back(0);
    ex.decoder_input.insert(ex.decoder_input.end(), ex.source.begin(), ex.source.end() - 1);
    ex.decoder_output = ex.source;
  }
  return out;
}

double seq2seq_token_accuracy(const Seq2SeqLM& lm, const std::vector<Seq2SeqExample>& examples) {
  std::size_t correct = 0, total = 0;
  for (const auto& ex : examples) {
    const Matrix l = lm.logits(lm.embed_source(ex.source), lm.embed_target(ex.decoder_input));
    for (std::size_t t = 0; t < l.rows(); ++t) {
      const auto row = l.row(t);
      const auto best = static_cast<TokenId>(std::max_element(row.begin(), row.end()) - row.begin());
      correct += best == ex.decoder_output[t];
      ++total;
    }
  }
  if (total == 0) throw Error(ErrorCode::EmptySet, "no decoder positions to score");
  return static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace contrast
