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

#ifndef CONTRAST_CONFUSION_HPP_
#define CONTRAST_CONFUSION_HPP_

// Mining of word pairs that a model tends to confuse on a corpus.
//
// The directional confusion from a to b is the probability mass the model
// puts on b at every position whose true token is a, summed over the corpus
// and divided by the number of sentences N. First positions have no prefix
// and are skipped. The confusion score of a pair is the smaller of the two
// directions.

#include <string>
#include <vector>

#include "contrast/language_model.hpp"
#include "contrast/vocab.hpp"

namespace contrast {

// Directional confusions among a candidate set, computed in one pass.
struct ConfusionMatrix {
  std::vector<TokenId> candidates;
  Matrix directional;              // [i][j] = confusion from candidates[i] to candidates[j]
  std::size_t corpus_size = 0;     // N
  std::size_t skipped_positions = 0;  // first positions, which have no prefix
};

// Throws EmptyCorpus, InvalidToken, and SequenceTooLong.
ConfusionMatrix confusion_matrix(const LanguageModel& lm,
                                 const std::vector<TokenizedSequence>& corpus,
                                 const std::vector<TokenId>& candidates, std::size_t workers = 1);

double directional_confusion(const LanguageModel& lm,
                             const std::vector<TokenizedSequence>& corpus, TokenId a, TokenId b);

// Throws SamePair when a == b.
double confusion_score(const LanguageModel& lm, const std::vector<TokenizedSequence>& corpus,
                       TokenId a, TokenId b);

struct ConfusionEntry {
  std::string a;  // a < b lexicographically
  std::string b;
  double a_to_b = 0.0;
  double b_to_a = 0.0;
  double score = 0.0;
};

struct ConfusionTable {
  std::vector<ConfusionEntry> pairs;  // descending score, ties by (a, b)
  std::size_t corpus_size = 0;
  std::size_t skipped_positions = 0;
};

// The k highest-scoring pairs among `candidates` (duplicates ignored).
// Throws InvalidArgument for fewer than two distinct candidates or k == 0,
// UnknownToken for words outside `vocab`.
ConfusionTable top_confusable_pairs(const LanguageModel& lm, const Vocab& vocab,
                                    const std::vector<TokenizedSequence>& corpus,
                                    const std::vector<std::string>& candidates, std::size_t k,
                                    std::size_t workers = 1);

// Header a,b,dir_ab,dir_ba,score,N.
std::string confusion_table_to_csv(const ConfusionTable& table);

}  // namespace contrast

#endif  // CONTRAST_CONFUSION_HPP_
