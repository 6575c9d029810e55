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

#include "contrast/decoder_lm.hpp"
#include "contrast/error.hpp"
#include "contrast/rng.hpp"
#include "contrast/saliency.hpp"
#include "test_util.hpp"

namespace contrast {
namespace {

using testing::finite_difference;
using testing::random_sequence;

DecoderLM random_lm(std::uint64_t seed, bool layer_norm = false) {
  DecoderLMConfig c;
  c.vocab_size = 13;
  c.embed_dim = 8;
  c.num_layers = 2;
  c.num_heads = 2;
  c.context_len = 8;
  c.seed = seed;
  c.layer_norm = layer_norm;
  return DecoderLM(c);
}

// Last-position logits are [2.0, 1.0] for the intact input and [1.5, 1.2]
// whenever any token embedding has been zeroed.
class ErasureTableModel : public LanguageModel {
 public:
  std::size_t vocab_size() const override { return 2; }
  std::size_t embed_dim() const override { return 1; }
  std::size_t context_len() const override { return 8; }
  Matrix embed(std::span<const TokenId> ids) const override { return Matrix(ids.size(), 1, 1.0); }
  Matrix logits(const Matrix& emb) const override {
    Matrix out(emb.rows(), 2);
    bool erased = false;
    for (std::size_t t = 0; t < emb.rows(); ++t) erased = erased || emb(t, 0) == 0.0;
    out(emb.rows() - 1, 0) = erased ? 1.5 : 2.0;
    out(emb.rows() - 1, 1) = erased ? 1.2 : 1.0;
    return out;
  }
  Matrix final_logits_vjp(const Matrix& emb, std::span<const double>) const override {
    return Matrix(emb.rows(), 1);
  }
};

TEST(Method, NamesRoundTrip) {
  for (Method m : {Method::GradientNorm, Method::ContrastiveGradientNorm, Method::GradientInput,
                   Method::ContrastiveGradientInput, Method::Erasure, Method::ContrastiveErasure,
                   Method::Random}) {
    EXPECT_EQ(parse_method(method_name(m)), m);
  }
  EXPECT_EQ(parse_method("gi*"), Method::ContrastiveGradientInput);
  EXPECT_EQ(parse_method("e"), Method::Erasure);
  EXPECT_THROW(parse_method("ig"), Error);
}

TEST(ContrastPair, SameTokenIsRejected) {
  try {
    ContrastPair::make(3, TokenId{3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SamePair);
  }
}

TEST(GradientNorm, ConstantModelGivesZeros) {
  testing::LookupModel lm(4);
  const TokenizedSequence x{{0, 1, 2}, {"a", "b", "c"}};
  const auto s = gradient_norm(lm, x, ContrastPair::make(1, std::nullopt));
  EXPECT_EQ(s.scores, (std::vector<double>{0.0, 0.0, 0.0}));
}

TEST(GradientNorm, MatchesFiniteDifferenceRowNorms) {
  for (std::uint64_t seed : {1u, 2u}) {
    const auto lm = random_lm(seed, seed == 2);
    Rng rng(seed);
    const auto x = random_sequence(rng, 6, 13);
    const auto s = gradient_norm(lm, x, ContrastPair::make(4, std::nullopt));
    const Matrix fd = finite_difference(
        [&](const Matrix& e) {
          return testing::contrast_score(lm, e, 4, std::nullopt, OutputMode::Logit);
        },
        lm.embed(x.ids));
    for (std::size_t i = 0; i < x.size(); ++i) {
      double l1 = 0.0;
      for (double v : fd.row(i)) l1 += std::abs(v);
      EXPECT_NEAR(s.scores[i], l1, 1e-4);
      EXPECT_GE(s.scores[i], 0.0);
    }
  }
}

TEST(GradientNorm, DoublingTheOutputDoublesScores) {
  auto lm = random_lm(3);
  Rng rng(3);
  const auto x = random_sequence(rng, 5, 13);
  const auto pair = ContrastPair::make(2, std::nullopt);
  const auto before = gradient_norm(lm, x, pair);
  lm.mutable_params().head.weight *= 2.0;
  lm.mutable_params().head.bias *= 2.0;
  const auto after = gradient_norm(lm, x, pair);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(after.scores[i], 2.0 * before.scores[i]);
}

TEST(ContrastiveGradientNorm, SwapInvariantAndTriangleInequality) {
  const auto lm = random_lm(4);
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = random_sequence(rng, 1 + rng.below(8), 13);
    const auto pair = ContrastPair::make(1, TokenId{9});
    const auto s = contrastive_gradient_norm(lm, x, pair);
    const auto swapped = contrastive_gradient_norm(lm, x, pair.swapped());
    const auto gt = gradient_norm(lm, x, ContrastPair::make(1, std::nullopt));
    const auto gf = gradient_norm(lm, x, ContrastPair::make(9, std::nullopt));
    for (std::size_t i = 0; i < x.size(); ++i) {
      EXPECT_EQ(s.scores[i], swapped.scores[i]);
      EXPECT_LE(s.scores[i], gt.scores[i] + gf.scores[i] + 1e-12);
    }
  }
}

TEST(ContrastiveMethods, IdentityFoilGivesZeroMaps) {
  const auto lm = random_lm(5);
  Rng rng(5);
  const auto x = random_sequence(rng, 6, 13);
  for (OutputMode mode : {OutputMode::Logit, OutputMode::Probability, OutputMode::LogProbability}) {
    const auto pair = ContrastPair::unchecked(3, 3, mode);
    for (Method m : {Method::ContrastiveGradientNorm, Method::ContrastiveGradientInput,
                     Method::ContrastiveErasure}) {
      for (double v : explain(lm, x, pair, m).scores) EXPECT_LE(std::abs(v), 1e-12);
    }
  }
}

TEST(GradientInput, HandLinearModel) {
  // Two-token vocabulary; embeddings e(0)=0.5, e(1)=-2; inputs [1, 0, 1].
  const testing::LinearModel lm({0.5, -2.0}, {{1.0, 2.0, 3.0}, {-1.0, 0.25, 4.0}});
  const TokenizedSequence x{{1, 0, 1}, {"b", "a", "b"}};
  const auto plain = gradient_x_input(lm, x, ContrastPair::make(0, std::nullopt));
  const std::vector<double> expected{1.0 * -2.0, 2.0 * 0.5, 3.0 * -2.0};
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(plain.scores[i], expected[i], 1e-12);
  const auto contrastive = gradient_x_input(lm, x, ContrastPair::make(0, TokenId{1}));
  const std::vector<double> expected_c{2.0 * -2.0, 1.75 * 0.5, -1.0 * -2.0};
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(contrastive.scores[i], expected_c[i], 1e-12);
}

TEST(GradientInput, ContrastIsDifferenceAndSwapNegates) {
  for (OutputMode mode : {OutputMode::Logit, OutputMode::Probability, OutputMode::LogProbability}) {
    const auto lm = random_lm(6);
    Rng rng(6);
    const auto x = random_sequence(rng, 7, 13);
    const auto pair = ContrastPair::make(2, TokenId{11}, mode);
    const auto both = gradient_x_input(lm, x, pair);
    const auto swapped = gradient_x_input(lm, x, pair.swapped());
    const auto t = gradient_x_input(lm, x, ContrastPair::make(2, std::nullopt, mode));
    const auto f = gradient_x_input(lm, x, ContrastPair::make(11, std::nullopt, mode));
    for (std::size_t i = 0; i < x.size(); ++i) {
      EXPECT_EQ(swapped.scores[i], -both.scores[i]);
      EXPECT_NEAR(both.scores[i], t.scores[i] - f.scores[i],
                  1e-9 * std::max(1.0, std::abs(both.scores[i])));
    }
  }
}

TEST(Erasure, StubTableArithmetic) {
  const ErasureTableModel lm;
  const TokenizedSequence x{{0, 1, 0}, {"a", "b", "a"}};
  const auto s = erasure(lm, x, ContrastPair::make(0, TokenId{1}));
  for (double v : s.scores) EXPECT_NEAR(v, 0.7, 1e-12);
  const auto plain = erasure(lm, x, ContrastPair::make(0, std::nullopt));
  for (double v : plain.scores) EXPECT_NEAR(v, 0.5, 1e-12);
}

TEST(Erasure, BatchedEqualsNaiveLoop) {
  const auto lm = random_lm(7, true);
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = random_sequence(rng, 2 + rng.below(7), 13);
    const auto pair = ContrastPair::make(5, TokenId{6}, OutputMode::Probability);
    const auto batched = erasure(lm, x, pair);
    const Matrix emb = lm.embed(x.ids);
    for (std::size_t i = 0; i < x.size(); ++i) {
      Matrix erased = emb;
      for (double& v : erased.row(i)) v = 0.0;
      const double effect_t = testing::contrast_score(lm, emb, 5, std::nullopt, pair.mode()) -
                              testing::contrast_score(lm, erased, 5, std::nullopt, pair.mode());
      const double effect_f = testing::contrast_score(lm, emb, 6, std::nullopt, pair.mode()) -
                              testing::contrast_score(lm, erased, 6, std::nullopt, pair.mode());
      EXPECT_EQ(batched.scores[i], effect_t - effect_f);
    }
  }
}

TEST(Erasure, ContrastIsDifferenceAndSwapNegates) {
  const auto lm = random_lm(8);
  Rng rng(8);
  const auto x = random_sequence(rng, 6, 13);
  const auto pair = ContrastPair::make(0, TokenId{12}, OutputMode::LogProbability);
  const auto both = erasure(lm, x, pair);
  const auto swapped = erasure(lm, x, pair.swapped());
  const auto t = erasure(lm, x, ContrastPair::make(0, std::nullopt, pair.mode()));
  const auto f = erasure(lm, x, ContrastPair::make(12, std::nullopt, pair.mode()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_EQ(swapped.scores[i], -both.scores[i]);
    EXPECT_NEAR(both.scores[i], t.scores[i] - f.scores[i], 1e-12);
  }
}

TEST(Erasure, SingleTokenIsDegenerate) {
  const auto lm = random_lm(9);
  const TokenizedSequence x{{3}, {"t3"}};
  try {
    erasure(lm, x, ContrastPair::make(1, std::nullopt));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateInput);
  }
}

TEST(Methods, PairShapeIsChecked) {
  const auto lm = random_lm(10);
  const TokenizedSequence x{{1, 2}, {"a", "b"}};
  EXPECT_THROW(gradient_norm(lm, x, ContrastPair::make(1, TokenId{2})), Error);
  EXPECT_THROW(contrastive_gradient_norm(lm, x, ContrastPair::make(1, std::nullopt)), Error);
}

TEST(RandomBaseline, UniformAndSeeded) {
  const auto a = random_baseline(1000000, 42);
  double sum = 0.0;
  for (double v : a.scores) {
    ASSERT_GE(v, 0.0);
    ASSERT_LT(v, 1.0);
    sum += v;
  }
  EXPECT_NEAR(sum / 1e6, 0.5, 0.002);
  EXPECT_EQ(random_baseline(50, 7).scores, random_baseline(50, 7).scores);
  EXPECT_NE(random_baseline(50, 7).scores, random_baseline(50, 8).scores);
  EXPECT_EQ(a.method, Method::Random);
}

TEST(SaliencyJson, RoundTrip) {
  Vocab vocab;
  for (int i = 0; i < 13; ++i) vocab.add("w" + std::to_string(i));
  const auto lm = random_lm(11);
  Rng rng(11);
  auto x = random_sequence(rng, 5, 13);
  for (std::size_t i = 0; i < x.size(); ++i) x.surface[i] = vocab.token(x.ids[i]);
  for (Method m : {Method::ContrastiveGradientInput, Method::Erasure}) {
    const auto s = explain(lm, x, ContrastPair::make(3, TokenId{4}, OutputMode::Probability), m);
    const std::string json = saliency_to_json(s, vocab);
    const auto back = saliency_from_json(json, vocab);
    EXPECT_EQ(back.scores, s.scores);
    EXPECT_EQ(back.method, s.method);
    EXPECT_EQ(back.input.ids, s.input.ids);
    EXPECT_EQ(saliency_to_json(back, vocab), json);
  }
  EXPECT_THROW(saliency_from_json("{", vocab), Error);
}

}  // namespace
}  // namespace contrast
