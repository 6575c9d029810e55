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

#include "contrast/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "contrast/error.hpp"

namespace contrast {

Vocab Vocab::from_corpus(const std::vector<std::vector<std::string>>& sentences,
                         const std::vector<std::string>& reserved) {
  std::map<std::string, std::uint64_t> counts;
  for (const auto& s : sentences) {
    for (const auto& w : s) ++counts[w];
  }
  Vocab vocab;
  for (const auto& r : reserved) {
    auto it = counts.find(r);
    vocab.add(r, it == counts.end() ? 0 : it->second);
  }
  std::vector<std::pair<std::string, std::uint64_t>> ordered(counts.begin(), counts.end());
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (const auto& [token, count] : ordered) {
    if (!vocab.contains(token)) vocab.add(token, count);
  }
  return vocab;
}

TokenId Vocab::add(std::string_view token, std::uint64_t count) {
  if (auto it = index_.find(std::string(token)); it != index_.end()) return it->second;
  const auto id = static_cast<TokenId>(tokens_.size());
  tokens_.emplace_back(token);
  frequency_.push_back(count);
  index_.emplace(tokens_.back(), id);
  return id;
}

bool Vocab::contains(std::string_view token) const {
  return index_.find(std::string(token)) != index_.end();
}

TokenId Vocab::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) throw Error(ErrorCode::UnknownToken, std::string(token));
  return it->second;
}

const std::string& Vocab::token(TokenId id) const {
  if (id >= tokens_.size()) {
    throw Error(ErrorCode::InvalidToken, "token id " + std::to_string(id) + " out of range");
  }
  return tokens_[id];
}

std::uint64_t Vocab::hash() const {
  std::uint64_t h = fnv1a("");
  for (const auto& t : tokens_) {
    h = fnv1a(t, h);
    h = fnv1a(std::string_view("\n", 1), h);
  }
  return h;
}

TokenizedSequence TokenizedSequence::prefix(std::size_t n) const {
  TokenizedSequence out;
  out.ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n));
  out.surface.assign(surface.begin(), surface.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) words.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return words;
}

TokenizedSequence tokenize(std::string_view text, const Vocab& vocab) {
  return tokenize(split_whitespace(text), vocab);
}

TokenizedSequence tokenize(const std::vector<std::string>& words, const Vocab& vocab) {
  if (words.empty()) throw Error(ErrorCode::EmptyInput, "nothing to tokenize");
  TokenizedSequence seq;
  seq.surface = words;
  seq.ids.reserve(words.size());
  for (const auto& w : words) seq.ids.push_back(vocab.id(w));
  return seq;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace contrast
