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

#ifndef CONTRAST_TRAINING_HPP_
#define CONTRAST_TRAINING_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "contrast/decoder_lm.hpp"
#include "contrast/seq2seq_lm.hpp"
#include "contrast/vocab.hpp"

namespace contrast {

struct TrainOptions {
  double learning_rate = 3e-3;
  std::size_t steps = 1000;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
  double grad_clip = 1.0;  // global L2 norm; <= 0 disables
};

struct TrainedDecoder {
  DecoderLM model;
  double final_loss = 0.0;  // mean loss over the last (up to) 50 steps
};

// Next-token cross-entropy training with Adam. Single-threaded and
// deterministic for fixed options. Throws EmptyCorpus, SequenceTooLong, and
// DivergedLoss.
TrainedDecoder train_lm(const DecoderLMConfig& config,
                        const std::vector<TokenizedSequence>& corpus,
                        const TrainOptions& options);

struct Seq2SeqExample {
  std::vector<TokenId> source;
  std::vector<TokenId> decoder_input;  // BOS-shifted target
  std::vector<TokenId> decoder_output;
};

struct TrainedSeq2Seq {
  Seq2SeqLM model;
  double final_loss = 0.0;
};

TrainedSeq2Seq train_seq2seq(const Seq2SeqLMConfig& config,
                             const std::vector<Seq2SeqExample>& examples,
                             const TrainOptions& options);

// Copy task over symbol ids 1..symbols, with id 0 as the decoder start token.
// Sources hold 3 to 6 symbols; the decoder must reproduce them.
std::vector<Seq2SeqExample> copy_task_examples(std::size_t n, std::size_t symbols,
                                               std::uint64_t seed);

// Fraction of decoder positions where the argmax token equals the reference.
double seq2seq_token_accuracy(const Seq2SeqLM& lm, const std::vector<Seq2SeqExample>& examples);

// Mean cross-entropy of the model over every predicted position.
double corpus_loss(const DecoderLM& lm, const std::vector<TokenizedSequence>& corpus);

}  // namespace contrast

#endif  // CONTRAST_TRAINING_HPP_
