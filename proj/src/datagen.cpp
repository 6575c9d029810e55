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

#include "contrast/datagen.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "contrast/error.hpp"
#include "contrast/rng.hpp"
#include "json.hpp"

namespace contrast {
namespace {

using nlohmann::json;

std::string flip_value(std::string_view feature, std::string_view value) {
  if (feature == "number") return value == "sg" ? "pl" : "sg";
  if (feature == "gender") return value == "m" ? "f" : "m";
  if (feature == "polarity") return value == "neg" ? "pos" : "neg";
  throw Error(ErrorCode::SpecError, "unknown feature " + std::string(feature));
}

// Feature names that a fixed value such as "sg" constrains.
std::pair<std::string, std::string> fixed_feature(const std::string& value) {
  if (value == "sg" || value == "pl") return {"number", value};
  if (value == "m" || value == "f") return {"gender", value};
  if (value == "neg" || value == "pos") return {"polarity", value};
  throw Error(ErrorCode::SpecError, "unknown fixed feature value '" + value + "'");
}

bool consistent(const LexEntry& e, const std::map<std::string, std::string>& bundle) {
  for (const auto& [f, v] : e.features) {
    auto it = bundle.find(f);
    if (it != bundle.end() && it->second != v) return false;
  }
  return true;
}

bool in_categories(const LexEntry& e, const std::vector<std::string>& cats) {
  return std::find(cats.begin(), cats.end(), e.category) != cats.end();
}

void add_pairs(std::vector<LexEntry>& lex, const std::string& category, const std::string& feature,
               const std::vector<std::array<std::string, 2>>& pairs,
               const std::string& first_value, const std::string& second_value,
               const std::map<std::string, std::string>& extra = {}) {
  for (const auto& [a, b] : pairs) {
    auto fa = extra;
    fa[feature] = first_value;
    auto fb = extra;
    fb[feature] = second_value;
    lex.push_back({a, category, a, fa});
    lex.push_back({b, category, a, fb});
  }
}

struct Generated {
  std::vector<std::string> tokens;
  std::size_t contrast_index = 0;
  std::string target;
  std::string foil;
  std::vector<std::size_t> evidence;
};

Generated realize(const GrammarSpec& spec, const SentenceTemplate& tpl, Rng& rng) {
  Generated g;
  std::map<int, std::map<std::string, std::string>> bundles;
  for (const TemplateSlot& slot : tpl.slots) {
    if (slot.optional && rng.uniform() < 0.5) continue;
    if (!slot.literal.empty()) {
      g.tokens.push_back(slot.literal);
      continue;
    }
    std::map<std::string, std::string> constraint;
    if (slot.group >= 0) constraint = bundles[slot.group];
    for (const auto& v : slot.fixed) {
      const auto [f, val] = fixed_feature(v);
      constraint[f] = val;
    }
    std::vector<const LexEntry*> candidates;
    for (const LexEntry& e : spec.lexicon) {
      if (in_categories(e, slot.categories) && consistent(e, constraint)) candidates.push_back(&e);
    }
    if (candidates.empty()) {
      throw Error(ErrorCode::SpecError, "no word fits a slot of a " +
                                            std::string(paradigm_name(tpl.paradigm)) +
                                            " template");
    }
    const LexEntry* pick = candidates[rng.below(candidates.size())];
    if (slot.group >= 0) {
      for (const auto& [f, v] : pick->features) bundles[slot.group].emplace(f, v);
    }
    if (slot.evidence) g.evidence.push_back(g.tokens.size());
    if (slot.contrast) {
      const LexEntry* foil = spec.flip(pick->form, tpl.contrast_feature,
                                       slot.group >= 0 ? bundles[slot.group]
                                                       : std::map<std::string, std::string>{});
      if (foil == nullptr) {
        throw Error(ErrorCode::SpecError, "no " + tpl.contrast_feature + " flip for '" +
                                              pick->form + "'");
      }
      g.contrast_index = g.tokens.size();
      g.target = pick->form;
      g.foil = foil->form;
    }
    g.tokens.push_back(pick->form);
  }
  return g;
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) out += ' ';
    out += words[i];
  }
  return out;
}

std::string uid_for(Paradigm p, std::size_t index) {
  std::string n = std::to_string(index);
  return std::string(paradigm_name(p)) + "_" + std::string(n.size() < 5 ? 5 - n.size() : 0, '0') +
         n;
}

}  // namespace

std::string_view paradigm_name(Paradigm p) {
  switch (p) {
    case Paradigm::DetNoun: return "det_noun";
    case Paradigm::SubjVerb: return "subj_verb";
    case Paradigm::AnaphorGender: return "anaphor_gender";
    case Paradigm::AnaphorNumber: return "anaphor_number";
    case Paradigm::Npi: return "npi";
  }
  return "?";
}

Paradigm parse_paradigm(std::string_view name) {
  for (Paradigm p : kAllParadigms) {
    if (paradigm_name(p) == name) return p;
  }
  throw Error(ErrorCode::ValidationError, "unknown paradigm '" + std::string(name) + "'");
}

std::string_view contrast_feature(Paradigm p) {
  switch (p) {
    case Paradigm::AnaphorGender: return "gender";
    case Paradigm::Npi: return "polarity";
    default: return "number";
  }
}

std::vector<std::string> MinimalPairRecord::unacceptable() const {
  auto out = tokens;
  out.at(contrast_index) = foil;
  return out;
}

void MinimalPairRecord::validate() const {
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::ValidationError, "record " + uid + ": " + why);
  };
  if (tokens.empty()) fail("no tokens");
  if (contrast_index >= tokens.size()) fail("contrast index out of range");
  if (contrast_index == 0) fail("contrast at position 0 leaves an empty prefix");
  if (target == foil) fail("target equals foil");
  if (tokens[contrast_index] != target) fail("token at contrast index is not the target");
  if (evidence.empty()) fail("no evidence");
  for (std::size_t e : evidence) {
    if (e >= contrast_index) fail("evidence index " + std::to_string(e) + " not before contrast");
  }
}

SentenceTemplate SentenceTemplate::parse(Paradigm paradigm, std::string contrast_feature,
                                         std::string_view text) {
  SentenceTemplate t;
  t.paradigm = paradigm;
  t.contrast_feature = std::move(contrast_feature);
  for (std::string word : split_whitespace(text)) {
    TemplateSlot s;
    if (!word.empty() && (word[0] == '!' || word[0] == '>')) {
      (word[0] == '!' ? s.evidence : s.contrast) = true;
      word.erase(0, 1);
    }
    if (!word.empty() && word.back() == '?') {
      s.optional = true;
      word.pop_back();
    }
    if (auto open = word.find('['); open != std::string::npos) {
      const auto close = word.find(']', open);
      if (close == std::string::npos) throw Error(ErrorCode::SpecError, "unclosed [ in " + word);
      std::stringstream ss(word.substr(open + 1, close - open - 1));
      for (std::string v; std::getline(ss, v, ',');) s.fixed.push_back(v);
      word.erase(open, close - open + 1);
    }
    if (auto dot = word.find('.'); dot != std::string::npos) {
      s.group = std::stoi(word.substr(dot + 1));
      word.erase(dot);
    }
    if (word.starts_with('\'')) {
      s.literal = word.substr(1);
    } else {
      std::stringstream ss(word);
      for (std::string c; std::getline(ss, c, '|');) s.categories.push_back(c);
    }
    t.slots.push_back(std::move(s));
  }
  return t;
}

GrammarSpec GrammarSpec::reference(std::uint64_t seed) {
  GrammarSpec g;
  g.seed = seed;
  auto& lex = g.lexicon;
  lex.push_back({"this", "dem", "this", {{"number", "sg"}}});
  lex.push_back({"these", "dem", "this", {{"number", "pl"}}});
  lex.push_back({"that", "dem", "that", {{"number", "sg"}}});
  lex.push_back({"those", "dem", "that", {{"number", "pl"}}});
  add_pairs(lex, "noun", "number",
            {{"dog", "dogs"}, {"cat", "cats"}, {"bird", "birds"}, {"horse", "horses"},
             {"house", "houses"}, {"car", "cars"}, {"tree", "trees"}, {"book", "books"},
             {"box", "boxes"}, {"truck", "trucks"}, {"cup", "cups"}, {"road", "roads"}},
            "sg", "pl");
  add_pairs(lex, "human", "number",
            {{"man", "men"}, {"boy", "boys"}, {"king", "kings"}, {"actor", "actors"},
             {"father", "fathers"}},
            "sg", "pl", {{"gender", "m"}});
  add_pairs(lex, "human", "number",
            {{"woman", "women"}, {"girl", "girls"}, {"queen", "queens"},
             {"actress", "actresses"}, {"mother", "mothers"}},
            "sg", "pl", {{"gender", "f"}});
  for (const char* n : {"john", "david", "peter", "james"}) {
    lex.push_back({n, "name", "", {{"number", "sg"}, {"gender", "m"}}});
  }
  for (const char* n : {"mary", "susan", "anna", "linda"}) {
    lex.push_back({n, "name", "", {{"number", "sg"}, {"gender", "f"}}});
  }
  add_pairs(lex, "tverb", "number",
            {{"sees", "see"}, {"likes", "like"}, {"finds", "find"}, {"wants", "want"},
             {"needs", "need"}},
            "sg", "pl");
  add_pairs(lex, "iverb", "number",
            {{"sleeps", "sleep"}, {"runs", "run"}, {"waits", "wait"}, {"falls", "fall"},
             {"moves", "move"}, {"works", "work"}},
            "sg", "pl");
  for (const char* w : {"helped", "hurt", "praised", "blamed", "saw"}) {
    lex.push_back({w, "pverb", w, {}});
  }
  for (const char* w : {"slept", "waited", "moved", "fallen", "worked"}) {
    lex.push_back({w, "part", w, {}});
  }
  for (const char* w : {"near", "behind", "with", "under", "beside"}) {
    lex.push_back({w, "prep", w, {}});
  }
  for (const char* w : {"red", "big", "old", "small", "happy", "new"}) {
    lex.push_back({w, "adj", w, {}});
  }
  for (const char* w : {"quickly", "slowly", "again", "today"}) {
    lex.push_back({w, "adv", w, {}});
  }
  lex.push_back({"himself", "refl", "self", {{"number", "sg"}, {"gender", "m"}}});
  lex.push_back({"herself", "refl", "self", {{"number", "sg"}, {"gender", "f"}}});
  lex.push_back({"themselves", "refl", "self", {{"number", "pl"}}});
  lex.push_back({"no", "trig", "trig", {{"polarity", "neg"}}});
  lex.push_back({"even", "trig", "trig", {{"polarity", "pos"}}});
  lex.push_back({"ever", "npi", "npi", {{"polarity", "neg"}}});
  lex.push_back({"often", "npi", "npi", {{"polarity", "pos"}}});
  lex.push_back({"the", "det", "the", {}});
  lex.push_back({"have", "aux", "have", {}});

  auto add = [&](Paradigm p, std::string_view text) {
    g.templates.push_back(SentenceTemplate::parse(p, std::string(contrast_feature(p)), text));
  };
  add(Paradigm::DetNoun, "det noun|human.1 tverb.1 !dem.2 >noun|human.2");
  add(Paradigm::DetNoun, "det noun|human.1 tverb.1 !dem.2 adj >noun|human.2");
  add(Paradigm::DetNoun, "name.1 tverb.1 !dem.2 adj? >noun|human.2 adv?");
  add(Paradigm::DetNoun, "det noun.1 prep det noun tverb.1 !dem.2 >noun|human.2");

  add(Paradigm::SubjVerb, "det !noun|human.1 >iverb.1 adv?");
  add(Paradigm::SubjVerb, "det !noun|human.1 prep det noun|human >iverb.1 adv?");
  add(Paradigm::SubjVerb, "det adj !noun|human.1 prep det adj? noun|human >iverb.1");
  add(Paradigm::SubjVerb, "det !noun|human.1 prep det noun|human prep det noun >iverb.1");

  add(Paradigm::AnaphorGender, "!name.1 pverb >refl.1");
  add(Paradigm::AnaphorGender, "!name.1 adv pverb >refl.1");
  add(Paradigm::AnaphorGender, "det !human.1[sg] pverb >refl.1");
  add(Paradigm::AnaphorGender, "det !human.1[sg] prep det noun|human pverb >refl.1");

  add(Paradigm::AnaphorNumber, "det !human.1 pverb >refl.1");
  add(Paradigm::AnaphorNumber, "det !human.1 prep det noun|human pverb >refl.1");
  add(Paradigm::AnaphorNumber, "det adj !human.1 adv pverb >refl.1");

  add(Paradigm::Npi, "!trig.1 noun|human[pl] aux >npi.1 part");
  add(Paradigm::Npi, "!trig.1 noun|human[pl] prep det noun aux >npi.1 part");
  add(Paradigm::Npi, "!trig.1 adj noun|human[pl] aux >npi.1 part");
  g.validate();
  return g;
}

const LexEntry* GrammarSpec::find(std::string_view form) const {
  for (const LexEntry& e : lexicon) {
    if (e.form == form) return &e;
  }
  return nullptr;
}

const LexEntry* GrammarSpec::flip(std::string_view form, std::string_view feature,
                                  const std::map<std::string, std::string>& context) const {
  const LexEntry* src = find(form);
  if (src == nullptr) return nullptr;
  auto it = src->features.find(std::string(feature));
  if (it == src->features.end()) return nullptr;
  const std::string wanted = flip_value(feature, it->second);
  for (const LexEntry& e : lexicon) {
    if (e.category != src->category || &e == src) continue;
    if (!src->lemma.empty() && e.lemma != src->lemma) continue;
    auto f = e.features.find(std::string(feature));
    if (f == e.features.end() || f->second != wanted) continue;
    bool ok = true;
    for (const auto& [name, value] : e.features) {
      if (name == feature) continue;
      if (auto s = src->features.find(name); s != src->features.end() && s->second != value) {
        ok = false;
      }
      if (auto c = context.find(name); c != context.end() && c->second != value) ok = false;
    }
    if (ok) return &e;
  }
  return nullptr;
}

void GrammarSpec::validate() const {
  std::map<std::string, std::string> category_of;
  std::set<std::string> categories;
  for (const LexEntry& e : lexicon) {
    auto [it, inserted] = category_of.emplace(e.form, e.category);
    if (!inserted) {
      throw Error(ErrorCode::SpecError, "word '" + e.form + "' appears in roles '" + it->second +
                                            "' and '" + e.category + "'");
    }
    categories.insert(e.category);
  }
  for (const SentenceTemplate& t : templates) {
    const std::string name(paradigm_name(t.paradigm));
    const TemplateSlot* evidence = nullptr;
    const TemplateSlot* contrast = nullptr;
    std::size_t evidence_pos = 0, contrast_pos = 0;
    for (std::size_t i = 0; i < t.slots.size(); ++i) {
      const TemplateSlot& s = t.slots[i];
      for (const auto& c : s.categories) {
        if (categories.count(c) == 0) {
          throw Error(ErrorCode::SpecError, name + " template uses unknown role '" + c + "'");
        }
      }
      for (const auto& v : s.fixed) fixed_feature(v);
      if (s.evidence) {
        if (evidence != nullptr) throw Error(ErrorCode::SpecError, name + ": two evidence slots");
        evidence = &s;
        evidence_pos = i;
      }
      if (s.contrast) {
        if (contrast != nullptr) throw Error(ErrorCode::SpecError, name + ": two contrast slots");
        contrast = &s;
        contrast_pos = i;
      }
    }
    if (evidence == nullptr || contrast == nullptr) {
      throw Error(ErrorCode::SpecError, name + " template needs one evidence and one contrast slot");
    }
    if (evidence_pos >= contrast_pos) {
      throw Error(ErrorCode::SpecError, name + ": evidence must precede the contrast slot");
    }
    if (evidence->optional || contrast->optional) {
      throw Error(ErrorCode::SpecError, name + ": evidence and contrast slots cannot be optional");
    }
    if (evidence->group < 0 || evidence->group != contrast->group) {
      throw Error(ErrorCode::SpecError, name + ": evidence and contrast must share a group");
    }
    for (const LexEntry& e : lexicon) {
      if (!in_categories(e, contrast->categories) || !e.features.contains(t.contrast_feature)) {
        continue;
      }
      if (flip(e.form, t.contrast_feature) == nullptr) {
        throw Error(ErrorCode::SpecError, name + ": '" + e.form + "' has no " +
                                              t.contrast_feature + " flip");
      }
    }
  }
}

bool agrees(const GrammarSpec& spec, std::string_view controller, std::string_view dependent,
            std::string_view feature) {
  const LexEntry* c = spec.find(controller);
  const LexEntry* d = spec.find(dependent);
  if (c == nullptr || d == nullptr) return false;
  auto cf = c->features.find(std::string(feature));
  auto df = d->features.find(std::string(feature));
  return cf != c->features.end() && df != d->features.end() && cf->second == df->second;
}

Vocab build_vocab(const GrammarSpec& spec, const std::vector<std::vector<std::string>>& corpus) {
  Vocab v = Vocab::from_corpus(corpus);
  std::vector<std::string> missing;
  for (const LexEntry& e : spec.lexicon) {
    if (!v.contains(e.form)) missing.push_back(e.form);
  }
  std::sort(missing.begin(), missing.end());
  for (const auto& m : missing) v.add(m, 0);
  return v;
}

Dataset generate_dataset(const GrammarSpec& spec, const GenerateOptions& options) {
  spec.validate();
  if (options.records_per_paradigm == 0) {
    throw Error(ErrorCode::SpecError, "records_per_paradigm must be at least 1");
  }
  Dataset d;
  std::set<std::string> held_out;
  std::size_t stream = 0;
  for (Paradigm p : kAllParadigms) {
    std::vector<const SentenceTemplate*> templates;
    for (const auto& t : spec.templates) {
      if (t.paradigm == p) templates.push_back(&t);
    }
    ++stream;
    if (templates.empty()) continue;
    Rng rng(mix_seed(spec.seed, stream));
    for (std::size_t i = 0; i < options.records_per_paradigm; ++i) {
      const Generated g = realize(spec, *templates[rng.below(templates.size())], rng);
      MinimalPairRecord r{uid_for(p, i), p, g.tokens, g.contrast_index, g.target, g.foil,
                          g.evidence};
      r.validate();
      held_out.insert(join(r.tokens));
      d.records.push_back(std::move(r));
    }
    d.manifest.counts[std::string(paradigm_name(p))] = options.records_per_paradigm;
  }
  for (Paradigm p : kAllParadigms) {
    std::vector<const SentenceTemplate*> templates;
    for (const auto& t : spec.templates) {
      if (t.paradigm == p) templates.push_back(&t);
    }
    if (templates.empty()) continue;
    Rng rng(mix_seed(spec.seed, 100 + static_cast<std::uint64_t>(p)));
    std::size_t made = 0;
    for (std::size_t attempt = 0;
         made < options.corpus_per_paradigm && attempt < 20 * options.corpus_per_paradigm;
         ++attempt) {
      Generated g = realize(spec, *templates[rng.below(templates.size())], rng);
      if (held_out.count(join(g.tokens)) != 0) continue;
      d.corpus.push_back(std::move(g.tokens));
      ++made;
    }
  }
  d.vocab = build_vocab(spec, d.corpus);
  d.manifest.vocab_hash = d.vocab.hash();
  d.manifest.seed = spec.seed;
  d.manifest.corpus_sentences = d.corpus.size();
  return d;
}

std::string record_to_json(const MinimalPairRecord& r) {
  json j;
  j["uid"] = r.uid;
  j["paradigm"] = std::string(paradigm_name(r.paradigm));
  j["tokens"] = r.tokens;
  j["contrast_index"] = r.contrast_index;
  j["target"] = r.target;
  j["foil"] = r.foil;
  j["evidence"] = r.evidence;
  return j.dump();
}

MinimalPairRecord record_from_json(std::string_view line) {
  const json j = json::parse(line);
  MinimalPairRecord r;
  r.uid = j.at("uid").get<std::string>();
  r.paradigm = parse_paradigm(j.at("paradigm").get<std::string>());
  r.tokens = j.at("tokens").get<std::vector<std::string>>();
  r.contrast_index = j.at("contrast_index").get<std::size_t>();
  r.target = j.at("target").get<std::string>();
  r.foil = j.at("foil").get<std::string>();
  r.evidence = j.at("evidence").get<std::vector<std::size_t>>();
  return r;
}

void save_minimal_pairs(const std::filesystem::path& path,
                        const std::vector<MinimalPairRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  for (const auto& r : records) out << record_to_json(r) << '\n';
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

std::vector<MinimalPairRecord> load_minimal_pairs(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<MinimalPairRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (split_whitespace(line).empty()) continue;
    MinimalPairRecord r;
    try {
      r = record_from_json(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError,
                  path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::ParseError,
                  path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
    r.validate();
    records.push_back(std::move(r));
  }
  return records;
}

MinimalPairRecord convert_blimp_record(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("BLiMP line: ") + e.what());
  }
  auto words = [](const std::string& sentence) {
    std::vector<std::string> out;
    for (std::string w : split_whitespace(sentence)) {
      std::string trailing;
      while (!w.empty() && std::string_view(".,!?").find(w.back()) != std::string_view::npos) {
        trailing.insert(trailing.begin(), w.back());
        w.pop_back();
      }
      if (!w.empty()) out.push_back(w);
      for (char c : trailing) out.emplace_back(1, c);
    }
    return out;
  };
  try {
    const auto good = words(j.at("sentence_good").get<std::string>());
    const auto bad = words(j.at("sentence_bad").get<std::string>());
    const std::string uid_name = j.at("UID").get<std::string>();
    MinimalPairRecord r;
    r.uid = uid_name + "_" + j.value("pairID", json("0")).dump();
    r.uid.erase(std::remove(r.uid.begin(), r.uid.end(), '"'), r.uid.end());
    if (good.size() != bad.size()) {
      throw Error(ErrorCode::ValidationError, "record " + r.uid + ": sentences differ in length");
    }
    std::vector<std::size_t> diffs;
    for (std::size_t i = 0; i < good.size(); ++i) {
      if (good[i] != bad[i]) diffs.push_back(i);
    }
    if (diffs.size() != 1) {
      throw Error(ErrorCode::ValidationError,
                  "record " + r.uid + ": sentences must differ at exactly one token");
    }
    if (uid_name.starts_with("anaphor_gender")) {
      r.paradigm = Paradigm::AnaphorGender;
    } else if (uid_name.starts_with("anaphor_number")) {
      r.paradigm = Paradigm::AnaphorNumber;
    } else if (uid_name.starts_with("determiner_noun")) {
      r.paradigm = Paradigm::DetNoun;
    } else if (uid_name.find("subject_verb") != std::string::npos ||
               uid_name.starts_with("distractor_agreement")) {
      r.paradigm = Paradigm::SubjVerb;
    } else if (uid_name.starts_with("npi")) {
      r.paradigm = Paradigm::Npi;
    } else {
      throw Error(ErrorCode::ValidationError, "record " + r.uid + ": unsupported UID " + uid_name);
    }
    r.tokens = good;
    r.contrast_index = diffs.front();
    r.target = good[r.contrast_index];
    r.foil = bad[r.contrast_index];
    r.evidence = j.at("evidence").get<std::vector<std::size_t>>();
    r.validate();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("BLiMP line: ") + e.what());
  }
}

void save_corpus(const std::filesystem::path& path,
                 const std::vector<std::vector<std::string>>& corpus) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  for (const auto& s : corpus) out << join(s) << '\n';
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

std::vector<std::vector<std::string>> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<std::vector<std::string>> corpus;
  for (std::string line; std::getline(in, line);) {
    auto words = split_whitespace(line);
    if (!words.empty()) corpus.push_back(std::move(words));
  }
  return corpus;
}

std::string manifest_to_json(const DatasetManifest& m) {
  json j;
  j["counts"] = m.counts;
  j["vocab_hash"] = m.vocab_hash;
  j["seed"] = m.seed;
  j["corpus_sentences"] = m.corpus_sentences;
  return j.dump(2);
}

DatasetManifest manifest_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    DatasetManifest m;
    m.counts = j.at("counts").get<std::map<std::string, std::size_t>>();
    m.vocab_hash = j.at("vocab_hash").get<std::uint64_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.corpus_sentences = j.value("corpus_sentences", std::size_t{0});
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("manifest: ") + e.what());
  }
}

double pair_preference_accuracy(const LanguageModel& lm, const Vocab& vocab,
                                const std::vector<MinimalPairRecord>& records) {
  if (records.empty()) throw Error(ErrorCode::EmptySet, "no records to score");
  std::size_t correct = 0;
  for (const auto& r : records) {
    std::vector<std::string> prefix(r.tokens.begin(),
                                    r.tokens.begin() + static_cast<std::ptrdiff_t>(r.contrast_index));
    const TokenizedSequence x = tokenize(prefix, vocab);
    const Matrix l = forward(lm, x);
    const auto last = l.row(l.rows() - 1);
    // Softmax is monotone, so comparing logits is the same as comparing
    // probabilities and avoids ties from underflow.
    if (last[vocab.id(r.target)] > last[vocab.id(r.foil)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(records.size());
}

}  // namespace contrast
