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

#ifndef CONTRAST_LANGUAGE_MODEL_HPP_
#define CONTRAST_LANGUAGE_MODEL_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "contrast/matrix.hpp"
#include "contrast/vocab.hpp"

namespace contrast {

// Which quantity of the next-token distribution is explained.
enum class OutputMode { Logit, Probability, LogProbability };

std::string_view output_mode_name(OutputMode mode);  // "logit", "prob", "logprob"
OutputMode parse_output_mode(std::string_view name);

// Backend contract for an autoregressive model that can be explained.
//
// Inputs are given as token-embedding matrices [seq_len x embed_dim] so that
// erasure (zeroing a row) and gradients with respect to the token embeddings
// are expressible without knowing the architecture. Positional information,
// if any, is added by the backend. Implementations must be safe to call
// concurrently through the const interface.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;

  virtual std::size_t vocab_size() const = 0;
  virtual std::size_t embed_dim() const = 0;
  virtual std::size_t context_len() const = 0;

  // Token-embedding rows for `ids`.
  virtual Matrix embed(std::span<const TokenId> ids) const = 0;

  // Logits at every position, [seq_len x vocab_size]; row t sees inputs <= t.
  virtual Matrix logits(const Matrix& token_embeddings) const = 0;

  // Gradient with respect to `token_embeddings` of
  // sum_v cotangent[v] * logits(last, v).
  virtual Matrix final_logits_vjp(const Matrix& token_embeddings,
                                  std::span<const double> cotangent) const = 0;

  // Final-position logits for several inputs of equal length. The default
  // evaluates them one by one; backends may run them as a single batch but
  // must return bit-identical values.
  virtual std::vector<std::vector<double>> final_logits_batch(
      std::span<const Matrix> inputs) const;
};

// Gradient of the explained output with respect to each input token embedding.
struct EmbeddingGradient {
  Matrix rows;  // [seq_len x embed_dim]
  OutputMode mode = OutputMode::Logit;
};

// Validates `x` against the backend: non-empty, fits the context, ids in range.
void check_sequence(const LanguageModel& lm, std::span<const TokenId> ids);

// Logits for all positions of `x`.
Matrix forward(const LanguageModel& lm, const TokenizedSequence& x);

double log_sum_exp(std::span<const double> logits);
std::vector<double> softmax(std::span<const double> logits);

// q(y | logits) under `mode`.
double score_from_logits(std::span<const double> logits, TokenId y, OutputMode mode);
// d q(y | logits) / d logits.
std::vector<double> score_cotangent(std::span<const double> logits, TokenId y, OutputMode mode);

// q(y | x) for the next token after `x`.
double output_score(const LanguageModel& lm, const TokenizedSequence& x, TokenId y,
                    OutputMode mode);

// Gradient of q(target | x), or of q(target | x) - q(foil | x) when a foil is
// given, with respect to the token embedding at each position.
EmbeddingGradient input_gradient(const LanguageModel& lm, const TokenizedSequence& x,
                                 TokenId target, std::optional<TokenId> foil,
                                 OutputMode mode);

// Same as above on explicit token embeddings; no id validation.
Matrix input_gradient_from_embeddings(const LanguageModel& lm, const Matrix& token_embeddings,
                                      TokenId target, std::optional<TokenId> foil,
                                      OutputMode mode);

}  // namespace contrast

#endif  // CONTRAST_LANGUAGE_MODEL_HPP_
