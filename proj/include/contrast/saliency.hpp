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

#ifndef CONTRAST_SALIENCY_HPP_
#define CONTRAST_SALIENCY_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "contrast/language_model.hpp"
#include "contrast/seq2seq_lm.hpp"
#include "contrast/vocab.hpp"

namespace contrast {

enum class Method {
  GradientNorm,             // GN
  ContrastiveGradientNorm,  // GN*
  GradientInput,            // GI
  ContrastiveGradientInput, // GI*
  Erasure,                  // E
  ContrastiveErasure,       // E*
  Random,
};

std::string_view method_name(Method m);  // "GN", "GN*", ..., "RANDOM"
// Accepts the display names and the lower-case CLI spellings ("gi*").
Method parse_method(std::string_view name);
bool is_contrastive(Method m);
// GN* -> GN and so on; non-contrastive methods map to themselves.
Method base_method(Method m);
Method contrastive_counterpart(Method m);

// Target token and, for contrastive explanations, the foil.
class ContrastPair {
 public:
  // Throws SamePair when foil == target.
  static ContrastPair make(TokenId target, std::optional<TokenId> foil,
                           OutputMode mode = OutputMode::Logit);
  // Skips the target != foil check; used to probe degenerate behaviour.
  static ContrastPair unchecked(TokenId target, std::optional<TokenId> foil,
                                OutputMode mode = OutputMode::Logit);

  TokenId target() const { return target_; }
  std::optional<TokenId> foil() const { return foil_; }
  OutputMode mode() const { return mode_; }
  ContrastPair swapped() const;  // requires a foil
  ContrastPair without_foil() const { return unchecked(target_, std::nullopt, mode_); }

 private:
  ContrastPair(TokenId target, std::optional<TokenId> foil, OutputMode mode)
      : target_(target), foil_(foil), mode_(mode) {}

  TokenId target_;
  std::optional<TokenId> foil_;
  OutputMode mode_;
};

enum class Side { Lm, Encoder, Decoder };

struct SaliencyMap {
  std::vector<double> scores;
  Method method = Method::GradientInput;
  ContrastPair pair = ContrastPair::unchecked(0, std::nullopt);
  TokenizedSequence input;
  Side side = Side::Lm;
};

// Non-contrastive methods require a pair without foil, contrastive ones a
// pair with a foil (InvalidArgument otherwise). Token ids must be in range.
SaliencyMap gradient_norm(const LanguageModel& lm, const TokenizedSequence& x,
                          const ContrastPair& pair);
SaliencyMap contrastive_gradient_norm(const LanguageModel& lm, const TokenizedSequence& x,
                                      const ContrastPair& pair);
// Contrastive when the pair has a foil.
SaliencyMap gradient_x_input(const LanguageModel& lm, const TokenizedSequence& x,
                             const ContrastPair& pair);
// Contrastive when the pair has a foil. The erased input zeroes one token
// embedding and keeps its positional embedding; all erased variants are
// scored in one batched call. Throws DegenerateInput for one-token inputs.
SaliencyMap erasure(const LanguageModel& lm, const TokenizedSequence& x, const ContrastPair& pair);

// Uniform [0, 1) scores, deterministic per seed.
SaliencyMap random_baseline(std::size_t length, std::uint64_t seed);

// Dispatches on `method`. For non-contrastive methods the pair's foil is
// ignored; for Random, `seed` drives the draw.
SaliencyMap explain(const LanguageModel& lm, const TokenizedSequence& x, const ContrastPair& pair,
                    Method method, std::uint64_t seed = 0);

struct Seq2SeqSaliency {
  SaliencyMap encoder;
  SaliencyMap decoder;
};

// Contrastive saliency over the source and the partial translation. `method`
// must be GN*, GI*, or E*.
Seq2SeqSaliency seq2seq_saliency(const Seq2SeqLM& lm, const TokenizedSequence& source,
                                 const TokenizedSequence& target_prefix,
                                 const ContrastPair& pair, Method method);

// {"method","mode","target","foil","tokens","scores"} with scores printed to
// 17 significant digits.
std::string saliency_to_json(const SaliencyMap& map, const Vocab& vocab);
SaliencyMap saliency_from_json(std::string_view text, const Vocab& vocab);

}  // namespace contrast

#endif  // CONTRAST_SALIENCY_HPP_
