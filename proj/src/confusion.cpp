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

#include "contrast/confusion.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "contrast/error.hpp"
#include "contrast/parallel.hpp"

namespace contrast {

ConfusionMatrix confusion_matrix(const LanguageModel& lm,
                                 const std::vector<TokenizedSequence>& corpus,
                                 const std::vector<TokenId>& candidates, std::size_t workers) {
  if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "corpus has no sentences");
  for (TokenId c : candidates) {
    if (c >= lm.vocab_size()) {
      throw Error(ErrorCode::InvalidToken, "token id " + std::to_string(c) + " out of range");
    }
  }
  const std::size_t n = candidates.size();
  std::vector<std::ptrdiff_t> slot(lm.vocab_size(), -1);
  for (std::size_t i = 0; i < n; ++i) slot[candidates[i]] = static_cast<std::ptrdiff_t>(i);

  std::vector<Matrix> partial(corpus.size());
  parallel_for(corpus.size(), workers, [&](std::size_t s) {
    const TokenizedSequence& x = corpus[s];
    Matrix& sums = partial[s];
    sums = Matrix(n, n);
    if (x.size() < 2) return;
    const Matrix logits = forward(lm, x);
    for (std::size_t t = 1; t < x.size(); ++t) {
      const std::ptrdiff_t row = slot[x.ids[t]];
      if (row < 0) continue;
      const auto p = softmax(logits.row(t - 1));
      for (std::size_t j = 0; j < n; ++j) {
        sums(static_cast<std::size_t>(row), j) += p[candidates[j]];
      }
    }
  });

  ConfusionMatrix out;
  out.candidates = candidates;
  out.directional = Matrix(n, n);
  out.corpus_size = corpus.size();
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    out.directional += partial[s];
    if (!corpus[s].ids.empty()) ++out.skipped_positions;
  }
  out.directional *= 1.0 / static_cast<double>(corpus.size());
  return out;
}

double directional_confusion(const LanguageModel& lm,
                             const std::vector<TokenizedSequence>& corpus, TokenId a, TokenId b) {
  if (a == b) return confusion_matrix(lm, corpus, {a}).directional(0, 0);
  return confusion_matrix(lm, corpus, {a, b}).directional(0, 1);
}

double confusion_score(const LanguageModel& lm, const std::vector<TokenizedSequence>& corpus,
                       TokenId a, TokenId b) {
  if (a == b) {
    throw Error(ErrorCode::SamePair, "confusion score needs two different tokens");
  }
  const auto m = confusion_matrix(lm, corpus, {std::min(a, b), std::max(a, b)});
  return std::min(m.directional(0, 1), m.directional(1, 0));
}

ConfusionTable top_confusable_pairs(const LanguageModel& lm, const Vocab& vocab,
                                    const std::vector<TokenizedSequence>& corpus,
                                    const std::vector<std::string>& candidates, std::size_t k,
                                    std::size_t workers) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  const std::set<std::string> unique(candidates.begin(), candidates.end());
  if (unique.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "need at least two distinct candidate tokens");
  }
  const std::vector<std::string> words(unique.begin(), unique.end());
  std::vector<TokenId> ids;
  for (const auto& w : words) ids.push_back(vocab.id(w));
  const ConfusionMatrix m = confusion_matrix(lm, corpus, ids, workers);

  ConfusionTable table;
  table.corpus_size = m.corpus_size;
  table.skipped_positions = m.skipped_positions;
  for (std::size_t i = 0; i < words.size(); ++i) {
    for (std::size_t j = i + 1; j < words.size(); ++j) {
      const double ab = m.directional(i, j);
      const double ba = m.directional(j, i);
      table.pairs.push_back({words[i], words[j], ab, ba, std::min(ab, ba)});
    }
  }
  std::stable_sort(table.pairs.begin(), table.pairs.end(),
                   [](const ConfusionEntry& x, const ConfusionEntry& y) {
                     return x.score > y.score;
                   });
  if (table.pairs.size() > k) table.pairs.resize(k);
  return table;
}

std::string confusion_table_to_csv(const ConfusionTable& table) {
  std::string out = "a,b,dir_ab,dir_ba,score,N\n";
  char buf[160];
  for (const auto& e : table.pairs) {
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g,%zu\n", e.a_to_b, e.b_to_a, e.score,
                  table.corpus_size);
    out += e.a + "," + e.b + buf;
  }
  return out;
}

}  // namespace contrast
