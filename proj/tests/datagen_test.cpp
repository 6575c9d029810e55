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

#include <filesystem>
#include <fstream>
#include <set>

#include "contrast/datagen.hpp"
#include "contrast/decoder_lm.hpp"
#include "contrast/error.hpp"
#include "test_util.hpp"

namespace contrast {
namespace {

namespace fs = std::filesystem;

fs::path temp_path(const std::string& name) {
  return fs::temp_directory_path() / ("contrast_datagen_" + name);
}

Dataset small_dataset(std::uint64_t seed = 3) {
  GenerateOptions opts;
  opts.records_per_paradigm = 60;
  opts.corpus_per_paradigm = 80;
  return generate_dataset(GrammarSpec::reference(seed), opts);
}

TEST(Template, ParsesMarkers) {
  const auto t = SentenceTemplate::parse(Paradigm::DetNoun, "number",
                                         "'the noun|human.1 !dem.2 adj? >noun.2[pl]");
  ASSERT_EQ(t.slots.size(), 5u);
  EXPECT_EQ(t.slots[0].literal, "the");
  EXPECT_EQ(t.slots[1].categories, (std::vector<std::string>{"noun", "human"}));
  EXPECT_EQ(t.slots[1].group, 1);
  EXPECT_TRUE(t.slots[2].evidence);
  EXPECT_TRUE(t.slots[3].optional);
  EXPECT_TRUE(t.slots[4].contrast);
  EXPECT_EQ(t.slots[4].fixed, (std::vector<std::string>{"pl"}));
}

TEST(GrammarSpec, ReferenceIsValid) { EXPECT_NO_THROW(GrammarSpec::reference(0).validate()); }

TEST(GrammarSpec, OverlappingRolesAreRejected) {
  auto g = GrammarSpec::reference(0);
  g.lexicon.push_back({"dog", "adj", "dog", {}});
  EXPECT_THROW(
      {
        try {
          g.validate();
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), ErrorCode::SpecError);
          throw;
        }
      },
      Error);
}

TEST(GrammarSpec, EvidenceAfterContrastIsRejected) {
  auto g = GrammarSpec::reference(0);
  g.templates.push_back(
      SentenceTemplate::parse(Paradigm::SubjVerb, "number", "det >noun.1 !iverb.1"));
  EXPECT_THROW(g.validate(), Error);
}

TEST(GrammarSpec, FlipChangesOnlyTheFeature) {
  const auto g = GrammarSpec::reference(0);
  EXPECT_EQ(g.flip("this", "number")->form, "these");
  EXPECT_EQ(g.flip("those", "number")->form, "that");
  EXPECT_EQ(g.flip("actress", "number")->form, "actresses");
  EXPECT_EQ(g.flip("himself", "gender")->form, "herself");
  EXPECT_EQ(g.flip("no", "polarity")->form, "even");
  EXPECT_EQ(g.flip("themselves", "number", {{"gender", "f"}})->form, "herself");
  EXPECT_EQ(g.flip("quickly", "number"), nullptr);
}

TEST(Generate, DetNounEvidenceIsTheDemonstrative) {
  const auto d = small_dataset();
  const auto g = GrammarSpec::reference(3);
  std::size_t seen = 0;
  for (const auto& r : d.records) {
    if (r.paradigm != Paradigm::DetNoun) continue;
    ++seen;
    ASSERT_EQ(r.evidence.size(), 1u);
    EXPECT_EQ(g.find(r.tokens[r.evidence[0]])->category, "dem");
    EXPECT_EQ(r.evidence[0] + 1 == r.contrast_index || r.evidence[0] + 2 == r.contrast_index, true);
    EXPECT_TRUE(agrees(g, r.tokens[r.evidence[0]], r.target, "number"));
    EXPECT_FALSE(agrees(g, r.tokens[r.evidence[0]], r.foil, "number"));
  }
  EXPECT_EQ(seen, 60u);
}

TEST(Generate, SubjectVerbEvidenceIsTheHeadNotTheDistractor) {
  const auto d = small_dataset();
  const auto g = GrammarSpec::reference(3);
  std::size_t with_distractor = 0;
  for (const auto& r : d.records) {
    if (r.paradigm != Paradigm::SubjVerb) continue;
    ASSERT_EQ(r.evidence.size(), 1u);
    const std::size_t subject = r.evidence[0];
    EXPECT_TRUE(agrees(g, r.tokens[subject], r.target, "number"));
    // The subject is the first noun in the sentence.
    for (std::size_t i = 0; i < subject; ++i) {
      const auto cat = g.find(r.tokens[i])->category;
      EXPECT_TRUE(cat != "noun" && cat != "human") << r.uid;
    }
    for (std::size_t i = subject + 1; i < r.contrast_index; ++i) {
      const auto cat = g.find(r.tokens[i])->category;
      if (cat == "noun" || cat == "human") ++with_distractor;
    }
  }
  EXPECT_GT(with_distractor, 0u);
}

TEST(Generate, AgreementFlipProperty) {
  const auto d = small_dataset(11);
  const auto g = GrammarSpec::reference(11);
  for (const auto& r : d.records) {
    const std::string feature(contrast_feature(r.paradigm));
    const LexEntry* t = g.find(r.target);
    const LexEntry* f = g.find(r.foil);
    ASSERT_NE(t, nullptr);
    ASSERT_NE(f, nullptr);
    EXPECT_EQ(t->category, f->category);
    EXPECT_NE(t->features.at(feature), f->features.at(feature)) << r.uid;
    for (std::size_t e : r.evidence) {
      EXPECT_TRUE(agrees(g, r.tokens[e], r.target, feature)) << r.uid;
      EXPECT_FALSE(agrees(g, r.tokens[e], r.foil, feature)) << r.uid;
    }
    const auto bad = r.unacceptable();
    for (std::size_t i = 0; i < bad.size(); ++i) {
      EXPECT_EQ(bad[i] == r.tokens[i], i != r.contrast_index);
    }
  }
}

TEST(Generate, RecordsAreHeldOutOfTheCorpus) {
  const auto d = small_dataset();
  std::set<std::vector<std::string>> corpus(d.corpus.begin(), d.corpus.end());
  for (const auto& r : d.records) EXPECT_EQ(corpus.count(r.tokens), 0u) << r.uid;
  for (const auto& r : d.records) {
    for (const auto& w : r.tokens) EXPECT_TRUE(d.vocab.contains(w));
    EXPECT_TRUE(d.vocab.contains(r.foil));
  }
}

TEST(Generate, IsDeterministic) {
  const auto a = small_dataset(5);
  const auto b = small_dataset(5);
  EXPECT_EQ(a.corpus, b.corpus);
  EXPECT_EQ(a.records, b.records);
  EXPECT_EQ(manifest_to_json(a.manifest), manifest_to_json(b.manifest));
  const auto c = small_dataset(6);
  EXPECT_NE(a.records, c.records);
}

TEST(Generate, ManifestCountsEveryParadigm) {
  const auto d = small_dataset();
  for (Paradigm p : kAllParadigms) EXPECT_EQ(d.manifest.counts.at(std::string(paradigm_name(p))), 60u);
  EXPECT_EQ(d.manifest.vocab_hash, d.vocab.hash());
  const auto m = manifest_from_json(manifest_to_json(d.manifest));
  EXPECT_EQ(m.counts, d.manifest.counts);
  EXPECT_EQ(m.vocab_hash, d.manifest.vocab_hash);
}

TEST(MinimalPairs, RoundTripIsLossless) {
  const auto d = small_dataset();
  const auto path = temp_path("roundtrip.jsonl");
  save_minimal_pairs(path, d.records);
  EXPECT_EQ(load_minimal_pairs(path), d.records);
  const auto again = temp_path("roundtrip2.jsonl");
  save_minimal_pairs(again, load_minimal_pairs(path));
  std::ifstream x(path), y(again);
  EXPECT_EQ(std::string(std::istreambuf_iterator<char>(x), {}),
            std::string(std::istreambuf_iterator<char>(y), {}));
}

TEST(MinimalPairs, EvidenceAtOrAfterContrastIsAValidationError) {
  const auto path = temp_path("bad_evidence.jsonl");
  std::ofstream(path) << R"({"uid":"x","paradigm":"subj_verb","tokens":["the","dog","runs"],)"
                         R"("contrast_index":2,"target":"runs","foil":"run","evidence":[2]})"
                      << "\n";
  try {
    load_minimal_pairs(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ValidationError);
  }
}

TEST(MinimalPairs, MalformedLineIsAParseErrorWithLineNumber) {
  const auto path = temp_path("malformed.jsonl");
  const auto d = small_dataset();
  {
    std::ofstream out(path);
    out << record_to_json(d.records[0]) << "\n{not json\n";
  }
  try {
    load_minimal_pairs(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(MinimalPairs, MissingFileIsAnIoError) {
  try {
    load_minimal_pairs(temp_path("does_not_exist.jsonl"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
  }
}

TEST(Blimp, ConvertsAnnotatedRecord) {
  const auto r = convert_blimp_record(
      R"({"sentence_good":"The dog near the cats runs.","sentence_bad":"The dog near the cats run.",)"
      R"("UID":"distractor_agreement_relational_noun","pairID":"7","evidence":[1]})");
  EXPECT_EQ(r.paradigm, Paradigm::SubjVerb);
  EXPECT_EQ(r.uid, "distractor_agreement_relational_noun_7");
  EXPECT_EQ(r.tokens, (std::vector<std::string>{"The", "dog", "near", "the", "cats", "runs", "."}));
  EXPECT_EQ(r.contrast_index, 5u);
  EXPECT_EQ(r.target, "runs");
  EXPECT_EQ(r.foil, "run");
  EXPECT_EQ(r.evidence, (std::vector<std::size_t>{1}));
}

TEST(Blimp, RejectsPairsDifferingInSeveralTokens) {
  EXPECT_THROW(convert_blimp_record(
                   R"({"sentence_good":"this dog runs","sentence_bad":"these dogs runs",)"
                   R"("UID":"determiner_noun_agreement_1","pairID":"0","evidence":[0]})"),
               Error);
  EXPECT_THROW(convert_blimp_record("{"), Error);
}

TEST(Corpus, RoundTrip) {
  const auto d = small_dataset();
  const auto path = temp_path("corpus.txt");
  save_corpus(path, d.corpus);
  EXPECT_EQ(load_corpus(path), d.corpus);
}

TEST(PairPreference, OracleStubScoresOne) {
  const auto d = small_dataset();
  testing::LookupModel stub(d.vocab.size());
  for (const auto& r : d.records) {
    std::vector<TokenId> prefix;
    for (std::size_t i = 0; i < r.contrast_index; ++i) prefix.push_back(d.vocab.id(r.tokens[i]));
    stub.set(prefix, d.vocab.id(r.target));
  }
  EXPECT_EQ(pair_preference_accuracy(stub, d.vocab, d.records), 1.0);
}

TEST(PairPreference, UntrainedModelIsNearChance) {
  GenerateOptions opts;
  opts.records_per_paradigm = 300;
  opts.corpus_per_paradigm = 50;
  const auto d = generate_dataset(GrammarSpec::reference(1), opts);
  ASSERT_GE(d.records.size(), 1000u);
  double total = 0.0;
  const int models = 3;
  for (int s = 0; s < models; ++s) {
    DecoderLMConfig c;
    c.vocab_size = d.vocab.size();
    c.embed_dim = 16;
    c.num_layers = 1;
    c.num_heads = 2;
    c.context_len = 16;
    c.seed = 100 + s;
    total += pair_preference_accuracy(DecoderLM(c), d.vocab, d.records);
  }
  EXPECT_NEAR(total / models, 0.5, 0.05);
}

TEST(PairPreference, EmptySetIsRejected) {
  const auto d = small_dataset();
  testing::LookupModel stub(d.vocab.size());
  EXPECT_THROW(pair_preference_accuracy(stub, d.vocab, {}), Error);
}

}  // namespace
}  // namespace contrast
