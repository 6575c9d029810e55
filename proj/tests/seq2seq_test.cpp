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

#include <gtest/gtest.h>

#include <cmath>

#include "contrast/error.hpp"
#include "contrast/rng.hpp"
#include "contrast/saliency.hpp"
#include "contrast/seq2seq_lm.hpp"
#include "contrast/training.hpp"
#include "test_util.hpp"

namespace contrast {
namespace {

using testing::finite_difference;
using testing::max_relative_error;
using testing::random_sequence;

Seq2SeqLMConfig small_config(std::uint64_t seed, bool layer_norm) {
  Seq2SeqLMConfig c;
  c.vocab_size = 11;
  c.embed_dim = 8;
  c.num_layers = 2;
  c.num_heads = 2;
  c.context_len = 8;
  c.seed = seed;
  c.layer_norm = layer_norm;
  return c;
}

double next_score(const Seq2SeqLM& lm, const Matrix& src, const Matrix& tgt, TokenId t,
                  std::optional<TokenId> f, OutputMode mode) {
  const Matrix l = lm.logits(src, tgt);
  const auto last = l.row(l.rows() - 1);
  double s = score_from_logits(last, t, mode);
  if (f) s -= score_from_logits(last, *f, mode);
  return s;
}

TEST(Seq2Seq, LogitsShapeAndDecoderCausality) {
  const Seq2SeqLM lm(small_config(1, false));
  Rng rng(1);
  const auto src = random_sequence(rng, 5, 11);
  auto tgt = random_sequence(rng, 4, 11);
  const Matrix a = lm.logits(lm.embed_source(src.ids), lm.embed_target(tgt.ids));
  EXPECT_EQ(a.rows(), 4u);
  EXPECT_EQ(a.cols(), 11u);
  tgt.ids[3] = (tgt.ids[3] + 1) % 11;
  const Matrix b = lm.logits(lm.embed_source(src.ids), lm.embed_target(tgt.ids));
  for (std::size_t t = 0; t < 3; ++t) {
    for (std::size_t v = 0; v < 11; ++v) EXPECT_EQ(a(t, v), b(t, v));
  }
}

TEST(Seq2Seq, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Seq2SeqLM lm(small_config(seed, seed == 2));
    Rng rng(seed + 50);
    const auto src = random_sequence(rng, 2 + rng.below(5), 11);
    const auto tgt = random_sequence(rng, 1 + rng.below(5), 11);
    const Matrix se = lm.embed_source(src.ids);
    const Matrix te = lm.embed_target(tgt.ids);
    for (OutputMode mode :
         {OutputMode::Logit, OutputMode::Probability, OutputMode::LogProbability}) {
      const auto g = seq2seq_input_gradient(lm, src.ids, tgt.ids, 3, TokenId{8}, mode);
      const Matrix fd_src = finite_difference(
          [&](const Matrix& e) { return next_score(lm, e, te, 3, TokenId{8}, mode); }, se);
      const Matrix fd_tgt = finite_difference(
          [&](const Matrix& e) { return next_score(lm, se, e, 3, TokenId{8}, mode); }, te);
      EXPECT_LE(max_relative_error(g.encoder.rows, fd_src), 1e-5) << "seed " << seed;
      EXPECT_LE(max_relative_error(g.decoder.rows, fd_tgt), 1e-5) << "seed " << seed;
    }
  }
}

TEST(Seq2SeqSaliency, IdentityFoilIsZero) {
  const Seq2SeqLM lm(small_config(4, false));
  Rng rng(4);
  const auto src = random_sequence(rng, 5, 11);
  const auto tgt = random_sequence(rng, 3, 11);
  for (Method m : {Method::ContrastiveGradientNorm, Method::ContrastiveGradientInput,
                   Method::ContrastiveErasure}) {
    const auto s = seq2seq_saliency(lm, src, tgt, ContrastPair::unchecked(6, 6), m);
    ASSERT_EQ(s.encoder.scores.size(), 5u);
    ASSERT_EQ(s.decoder.scores.size(), 3u);
    for (double v : s.encoder.scores) EXPECT_LE(std::abs(v), 1e-12);
    for (double v : s.decoder.scores) EXPECT_LE(std::abs(v), 1e-12);
  }
}

TEST(Seq2SeqSaliency, ContrastIsTargetMinusFoil) {
  const Seq2SeqLM lm(small_config(5, true));
  Rng rng(5);
  const auto src = random_sequence(rng, 6, 11);
  const auto tgt = random_sequence(rng, 4, 11);
  const auto mode = OutputMode::Probability;
  const auto g = seq2seq_saliency(lm, src, tgt, ContrastPair::make(2, TokenId{9}, mode),
                                  Method::ContrastiveGradientInput);
  const auto gt = seq2seq_input_gradient(lm, src.ids, tgt.ids, 2, std::nullopt, mode);
  const auto gf = seq2seq_input_gradient(lm, src.ids, tgt.ids, 9, std::nullopt, mode);
  const Matrix se = lm.embed_source(src.ids);
  for (std::size_t i = 0; i < src.size(); ++i) {
    double expected = 0.0;
    for (std::size_t d = 0; d < se.cols(); ++d) {
      expected += (gt.encoder.rows(i, d) - gf.encoder.rows(i, d)) * se(i, d);
    }
    EXPECT_NEAR(g.encoder.scores[i], expected, 1e-9);
  }
  const auto e = seq2seq_saliency(lm, src, tgt, ContrastPair::make(2, TokenId{9}, mode),
                                  Method::ContrastiveErasure);
  const auto e_swapped = seq2seq_saliency(lm, src, tgt, ContrastPair::make(9, TokenId{2}, mode),
                                          Method::ContrastiveErasure);
  for (std::size_t i = 0; i < src.size(); ++i) {
    EXPECT_EQ(e.encoder.scores[i], -e_swapped.encoder.scores[i]);
  }
}

TEST(Seq2SeqSaliency, RequiresContrastiveMethodAndFoil) {
  const Seq2SeqLM lm(small_config(6, false));
  const TokenizedSequence src{{1, 2}, {"a", "b"}};
  const TokenizedSequence tgt{{0}, {"<s>"}};
  EXPECT_THROW(seq2seq_saliency(lm, src, tgt, ContrastPair::make(1, std::nullopt),
                                Method::ContrastiveGradientInput),
               Error);
  EXPECT_THROW(
      seq2seq_saliency(lm, src, tgt, ContrastPair::make(1, TokenId{2}), Method::GradientInput),
      Error);
}

TEST(Seq2SeqTraining, LearnsToCopy) {
  Seq2SeqLMConfig config;
  config.vocab_size = 10;
  config.embed_dim = 32;
  config.num_layers = 2;
  config.num_heads = 4;
  config.context_len = 8;
  config.seed = 3;
  TrainOptions opts;
  opts.steps = 1500;
  opts.seed = 3;
  const auto trained = train_seq2seq(config, copy_task_examples(2000, 9, 1), opts);
  EXPECT_GE(seq2seq_token_accuracy(trained.model, copy_task_examples(200, 9, 2)), 0.95);
}

}  // namespace
}  // namespace contrast
