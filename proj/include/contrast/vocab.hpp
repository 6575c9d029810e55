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

#ifndef CONTRAST_VOCAB_HPP_
#define CONTRAST_VOCAB_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace contrast {

using TokenId = std::uint32_t;

// Word-level vocabulary. Ids are contiguous from zero in insertion order.
class Vocab {
 public:
  Vocab() = default;

  // Builds a vocabulary from whitespace-tokenized sentences. Tokens are
  // ordered by descending corpus count, ties by string, so the result does not
  // depend on sentence order.
  static Vocab from_corpus(const std::vector<std::vector<std::string>>& sentences,
                           const std::vector<std::string>& reserved = {});

  // Appends `token` if absent and returns its id.
  TokenId add(std::string_view token, std::uint64_t count = 0);

  std::size_t size() const { return tokens_.size(); }
  bool contains(std::string_view token) const;
  // Throws UnknownToken when absent.
  TokenId id(std::string_view token) const;
  // Throws InvalidToken when out of range.
  const std::string& token(TokenId id) const;
  std::uint64_t frequency(TokenId id) const { return frequency_.at(id); }
  void set_frequency(TokenId id, std::uint64_t count) { frequency_.at(id) = count; }

  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::vector<std::uint64_t>& frequencies() const { return frequency_; }

  // Stable 64-bit FNV-1a digest over the ordered token list.
  std::uint64_t hash() const;

  bool operator==(const Vocab& other) const {
    return tokens_ == other.tokens_ && frequency_ == other.frequency_;
  }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> frequency_;
  std::unordered_map<std::string, TokenId> index_;
};

struct TokenizedSequence {
  std::vector<TokenId> ids;
  std::vector<std::string> surface;

  std::size_t size() const { return ids.size(); }
  // First `n` tokens.
  TokenizedSequence prefix(std::size_t n) const;
};

std::vector<std::string> split_whitespace(std::string_view text);

// Whitespace tokenizer. Throws EmptyInput for blank text and UnknownToken for
// out-of-vocabulary words.
TokenizedSequence tokenize(std::string_view text, const Vocab& vocab);
TokenizedSequence tokenize(const std::vector<std::string>& words, const Vocab& vocab);

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace contrast

#endif  // CONTRAST_VOCAB_HPP_
