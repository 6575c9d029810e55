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

#ifndef CONTRAST_DATAGEN_HPP_
#define CONTRAST_DATAGEN_HPP_

// Synthetic agreement grammar with minimal pairs whose evidence positions are
// known by construction, plus I/O for minimal-pair JSONL files.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "contrast/language_model.hpp"
#include "contrast/vocab.hpp"

namespace contrast {

enum class Paradigm { DetNoun, SubjVerb, AnaphorGender, AnaphorNumber, Npi };

inline constexpr Paradigm kAllParadigms[] = {Paradigm::DetNoun, Paradigm::SubjVerb,
                                             Paradigm::AnaphorGender, Paradigm::AnaphorNumber,
                                             Paradigm::Npi};

std::string_view paradigm_name(Paradigm p);  // "det_noun", "subj_verb", ...
Paradigm parse_paradigm(std::string_view name);

struct MinimalPairRecord {
  std::string uid;
  Paradigm paradigm = Paradigm::DetNoun;
  std::vector<std::string> tokens;  // the acceptable sentence
  std::size_t contrast_index = 0;
  std::string target;
  std::string foil;
  std::vector<std::size_t> evidence;

  // The acceptable sentence with the foil at the contrast position.
  std::vector<std::string> unacceptable() const;
  // Throws ValidationError naming the uid.
  void validate() const;
  bool operator==(const MinimalPairRecord&) const = default;
};

// Word with agreement features such as {"number": "sg"} or {"gender": "f"}.
struct LexEntry {
  std::string form;
  std::string category;
  std::string lemma;  // words sharing a lemma are each other's feature flips
  std::map<std::string, std::string> features;
};

// One position of a sentence template. Written in template text as
//   'word          literal word
//   category       noun, or alternatives noun|human
//   .N             agreement group N
//   [sg]           fixed feature values, comma separated
//   ?              optional (included with probability 1/2)
//   ! / >          evidence / contrast marker prefix
struct TemplateSlot {
  std::string literal;
  std::vector<std::string> categories;
  int group = -1;
  std::vector<std::string> fixed;
  bool optional = false;
  bool evidence = false;
  bool contrast = false;
};

struct SentenceTemplate {
  Paradigm paradigm = Paradigm::DetNoun;
  std::string contrast_feature;  // "number", "gender", or "polarity"
  std::vector<TemplateSlot> slots;

  static SentenceTemplate parse(Paradigm paradigm, std::string contrast_feature,
                                std::string_view text);
};

struct GrammarSpec {
  std::vector<LexEntry> lexicon;
  std::vector<SentenceTemplate> templates;
  std::uint64_t seed = 0;

  // The bundled English-like agreement grammar.
  static GrammarSpec reference(std::uint64_t seed = 0);

  // Throws SpecError when categories overlap, a template lacks exactly one
  // evidence and one contrast slot, evidence does not precede the contrast,
  // the two are not linked by an agreement group, or a contrast word has no
  // feature flip.
  void validate() const;

  const LexEntry* find(std::string_view form) const;
  // The entry obtained by flipping `feature` on `form`; same category and
  // lemma (any lemma when the word has none). Other features that the
  // candidate carries must match `context`.
  const LexEntry* flip(std::string_view form, std::string_view feature,
                       const std::map<std::string, std::string>& context = {}) const;
};

// Whether `controller` and `dependent` carry the same value for `feature`.
bool agrees(const GrammarSpec& spec, std::string_view controller, std::string_view dependent,
            std::string_view feature);
std::string_view contrast_feature(Paradigm p);

struct DatasetManifest {
  std::map<std::string, std::size_t> counts;  // paradigm name -> records
  std::uint64_t vocab_hash = 0;
  std::uint64_t seed = 0;
  std::size_t corpus_sentences = 0;
};

struct GenerateOptions {
  std::size_t records_per_paradigm = 300;
  std::size_t corpus_per_paradigm = 2000;
};

struct Dataset {
  std::vector<std::vector<std::string>> corpus;  // acceptable sentences only
  std::vector<MinimalPairRecord> records;        // held out from the corpus
  Vocab vocab;
  DatasetManifest manifest;
};

Dataset generate_dataset(const GrammarSpec& spec, const GenerateOptions& options);

// Vocabulary from corpus counts, closed under the lexicon.
Vocab build_vocab(const GrammarSpec& spec, const std::vector<std::vector<std::string>>& corpus);

std::string record_to_json(const MinimalPairRecord& r);
MinimalPairRecord record_from_json(std::string_view line);
void save_minimal_pairs(const std::filesystem::path& path,
                        const std::vector<MinimalPairRecord>& records);
// Throws ParseError with the 1-based line number, or ValidationError.
std::vector<MinimalPairRecord> load_minimal_pairs(const std::filesystem::path& path);

// Converts a BLiMP-style line {"sentence_good","sentence_bad","UID","pairID",
// "evidence":[...]} into a record. Sentences must differ at exactly one token.
MinimalPairRecord convert_blimp_record(std::string_view line);

void save_corpus(const std::filesystem::path& path,
                 const std::vector<std::vector<std::string>>& corpus);
std::vector<std::vector<std::string>> load_corpus(const std::filesystem::path& path);

std::string manifest_to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(std::string_view text);

// Fraction of records where P(target | prefix) > P(foil | prefix).
double pair_preference_accuracy(const LanguageModel& lm, const Vocab& vocab,
                                const std::vector<MinimalPairRecord>& records);

}  // namespace contrast

#endif  // CONTRAST_DATAGEN_HPP_
