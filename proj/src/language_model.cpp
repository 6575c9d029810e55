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

#include "contrast/language_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "contrast/error.hpp"

namespace contrast {

std::string_view output_mode_name(OutputMode mode) {
  switch (mode) {
    case OutputMode::Logit: return "logit";
    case OutputMode::Probability: return "prob";
    case OutputMode::LogProbability: return "logprob";
  }
  return "logit";
}

OutputMode parse_output_mode(std::string_view name) {
  if (name == "logit") return OutputMode::Logit;
  if (name == "prob" || name == "probability") return OutputMode::Probability;
  if (name == "logprob" || name == "log_probability") return OutputMode::LogProbability;
  throw Error(ErrorCode::InvalidArgument, "unknown output mode '" + std::string(name) + "'");
}

std::vector<std::vector<double>> LanguageModel::final_logits_batch(
    std::span<const Matrix> inputs) const {
  std::vector<std::vector<double>> out;
  out.reserve(inputs.size());
  for (const auto& x : inputs) {
    const Matrix l = logits(x);
    const auto last = l.row(l.rows() - 1);
    out.emplace_back(last.begin(), last.end());
  }
  return out;
}

void check_sequence(const LanguageModel& lm, std::span<const TokenId> ids) {
  if (ids.empty()) throw Error(ErrorCode::EmptyInput, "empty input sequence");
  if (ids.size() > lm.context_len()) {
    throw Error(ErrorCode::SequenceTooLong, "sequence of length " + std::to_string(ids.size()) +
                                                " exceeds context " +
                                                std::to_string(lm.context_len()));
  }
  for (TokenId id : ids) {
    if (id >= lm.vocab_size()) {
      throw Error(ErrorCode::InvalidToken, "token id " + std::to_string(id) + " out of range");
    }
  }
}

namespace {

void check_token(const LanguageModel& lm, TokenId y) {
  if (y >= lm.vocab_size()) {
    throw Error(ErrorCode::InvalidToken, "token id " + std::to_string(y) + " out of range");
  }
}

}  // namespace

Matrix forward(const LanguageModel& lm, const TokenizedSequence& x) {
  check_sequence(lm, x.ids);
  return lm.logits(lm.embed(x.ids));
}

double log_sum_exp(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (double l : logits) s += std::exp(l - m);
  return m + std::log(s);
}

std::vector<double> softmax(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double s = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    s += p[i];
  }
  for (double& v : p) v /= s;
  return p;
}

double score_from_logits(std::span<const double> logits, TokenId y, OutputMode mode) {
  switch (mode) {
    case OutputMode::Logit: return logits[y];
    case OutputMode::Probability: return softmax(logits)[y];
    case OutputMode::LogProbability: return logits[y] - log_sum_exp(logits);
  }
  return logits[y];
}

std::vector<double> score_cotangent(std::span<const double> logits, TokenId y, OutputMode mode) {
  std::vector<double> d(logits.size(), 0.0);
  switch (mode) {
    case OutputMode::Logit:
      d[y] = 1.0;
      break;
    case OutputMode::LogProbability: {
      const auto p = softmax(logits);
      for (std::size_t v = 0; v < d.size(); ++v) d[v] = -p[v];
      d[y] += 1.0;
      break;
    }
    case OutputMode::Probability: {
      const auto p = softmax(logits);
      for (std::size_t v = 0; v < d.size(); ++v) d[v] = -p[y] * p[v];
      d[y] += p[y];
      break;
    }
  }
  return d;
}

double output_score(const LanguageModel& lm, const TokenizedSequence& x, TokenId y,
                    OutputMode mode) {
  check_token(lm, y);
  const Matrix l = forward(lm, x);
  return score_from_logits(l.row(l.rows() - 1), y, mode);
}

Matrix input_gradient_from_embeddings(const LanguageModel& lm, const Matrix& token_embeddings,
                                      TokenId target, std::optional<TokenId> foil,
                                      OutputMode mode) {
  const Matrix l = lm.logits(token_embeddings);
  const auto last = l.row(l.rows() - 1);
  std::vector<double> cot = score_cotangent(last, target, mode);
  if (foil) {
    const auto foil_cot = score_cotangent(last, *foil, mode);
    for (std::size_t v = 0; v < cot.size(); ++v) cot[v] -= foil_cot[v];
  }
  return lm.final_logits_vjp(token_embeddings, cot);
}

EmbeddingGradient input_gradient(const LanguageModel& lm, const TokenizedSequence& x,
                                 TokenId target, std::optional<TokenId> foil,
                                 OutputMode mode) {
  check_sequence(lm, x.ids);
  check_token(lm, target);
  if (foil) check_token(lm, *foil);
  return {input_gradient_from_embeddings(lm, lm.embed(x.ids), target, foil, mode), mode};
}

}  // namespace contrast
