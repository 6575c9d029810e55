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

// Command-line front end: train, explain, eval-align, confuse, cluster.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "contrast/align_metrics.hpp"
#include "contrast/checkpoint.hpp"
#include "contrast/confusion.hpp"
#include "contrast/datagen.hpp"
#include "contrast/error.hpp"
#include "contrast/foil_cluster.hpp"
#include "contrast/html_report.hpp"
#include "contrast/parallel.hpp"
#include "contrast/rng.hpp"
#include "contrast/saliency.hpp"
#include "contrast/training.hpp"
#include "contrast/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace contrast {
namespace {

struct Key {
  std::string name;
  json fallback;
  std::string help;
};

const std::vector<Key> kCommonKeys = {
    {"seed", 0u, "seed recorded in every artifact"},
    {"workers", 0u, "parallel record/foil jobs (0 = all cores)"},
};

const std::map<std::string, std::vector<Key>> kCommandKeys = {
    {"train",
     {{"out", "run", "output directory"},
      {"kind", "decoder", "decoder (grammar LM) or seq2seq (copy task)"},
      {"embed_dim", 32u, "model width"},
      {"num_layers", 2u, "transformer blocks"},
      {"num_heads", 4u, "attention heads"},
      {"context_len", 16u, "maximum sequence length"},
      {"layer_norm", false, "normalize inside the norm layers"},
      {"steps", 1500u, "optimizer steps"},
      {"batch_size", 16u, "sentences per step"},
      {"learning_rate", 3e-3, "Adam step size"},
      {"grad_clip", 1.0, "global gradient norm cap (<= 0 disables)"},
      {"records", 300u, "minimal pairs per paradigm"},
      {"corpus_size", 2000u, "training sentences per paradigm (examples for seq2seq)"}}},
    {"explain",
     {{"model", "", "checkpoint path"},
      {"sentence", "", "input prefix (source sentence for seq2seq)"},
      {"prefix", "<s>", "decoder prefix for seq2seq models"},
      {"target", "", "predicted token to explain"},
      {"foil", "", "alternative token (contrastive methods)"},
      {"method", "gi*", "gn, gi, e, gn*, gi*, e*, or random"},
      {"mode", "logit", "logit, prob, or logprob"},
      {"out", "", "JSON output file (stdout when empty)"},
      {"html", "", "HTML heatmap output file"}}},
    {"eval-align",
     {{"model", "", "checkpoint path"},
      {"dataset", "", "minimal-pair JSONL file"},
      {"method", "gn,gn*,gi,gi*,e,e*", "comma-separated methods; random is always added"},
      {"mode", "logit", "logit, prob, or logprob"},
      {"out", "align", "output directory"}}},
    {"confuse",
     {{"model", "", "checkpoint path"},
      {"dataset", "", "corpus file, one sentence per line"},
      {"candidates", "", "word list, or CSV with word_1,word_2 columns"},
      {"k", 10u, "pairs to keep from a word list"},
      {"out", "confusion.csv", "CSV output file"}}},
    {"cluster",
     {{"model", "", "checkpoint path"},
      {"dataset", "", "corpus file, one sentence per line"},
      {"target", "", "token whose foils are clustered"},
      {"foils", "", "foil word list (all other vocabulary tokens when empty)"},
      {"k", 10u, "clusters"},
      {"method", "gn*", "gn* or gi*"},
      {"mode", "logit", "logit, prob, or logprob"},
      {"normalize", true, "L2-normalize each sentence block"},
      {"sentences", 50u, "maximum corpus prefixes ending before the target"},
      {"neighbors", 10u, "embedding neighbors listed per cluster head"},
      {"out", "cluster", "output directory"}}},
};

// Keys that locate outputs or tune throughput; they do not change results.
const std::set<std::string> kUnhashedKeys = {"out", "html", "workers"};

std::vector<Key> keys_for(const std::string& command) {
  std::vector<Key> keys = kCommonKeys;
  const auto& extra = kCommandKeys.at(command);
  keys.insert(keys.end(), extra.begin(), extra.end());
  return keys;
}

bool known_anywhere(const std::string& name) {
  if (kCommandKeys.contains(name)) return true;
  for (const auto& k : kCommonKeys) {
    if (k.name == name) return true;
  }
  for (const auto& entry : kCommandKeys) {
    for (const auto& k : entry.second) {
      if (k.name == name) return true;
    }
  }
  return false;
}

json coerce(const Key& key, const json& value) {
  const auto bad = [&] {
    return Error(ErrorCode::ValidationError,
                 "setting " + key.name + " has the wrong type: " + value.dump());
  };
  if (key.fallback.is_boolean()) {
    if (!value.is_boolean()) throw bad();
    return value;
  }
  if (key.fallback.is_number_unsigned()) {
    if (value.is_number_unsigned()) return value;
    if (value.is_number_integer() && value.get<long long>() >= 0) {
      return value.get<std::uint64_t>();
    }
    throw bad();
  }
  if (key.fallback.is_number()) {
    if (!value.is_number()) throw bad();
    return value.get<double>();
  }
  if (value.is_string()) return value;
  if (key.name == "method" && value.is_array()) {
    std::string joined;
    for (const auto& v : value) {
      if (!v.is_string()) throw bad();
      joined += (joined.empty() ? "" : ",") + v.get<std::string>();
    }
    return joined;
  }
  throw bad();
}

json parse_flag(const Key& key, const std::string& text) {
  const auto bad = [&] {
    return Error(ErrorCode::ValidationError, "--" + key.name + " cannot be '" + text + "'");
  };
  if (key.fallback.is_boolean()) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw bad();
  }
  if (key.fallback.is_number()) {
    std::size_t used = 0;
    try {
      if (key.fallback.is_number_unsigned()) {
        if (text.empty() || text[0] == '-') throw bad();
        const auto v = std::stoull(text, &used);
        if (used != text.size()) throw bad();
        return v;
      }
      const double v = std::stod(text, &used);
      if (used != text.size()) throw bad();
      return v;
    } catch (const std::logic_error&) {
      throw bad();
    }
  }
  return text;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(ErrorCode::Io, "cannot create directory " + dir.string() + ": " + ec.message());
  }
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Effective settings: defaults, then the config file, then explicit flags.
class Settings {
 public:
  Settings(std::string command, const std::map<std::string, std::string>& flags,
           const std::string& config_path)
      : command_(std::move(command)), keys_(keys_for(command_)) {
    for (const auto& k : keys_) values_[k.name] = k.fallback;
    if (!config_path.empty()) apply_config(read_file(config_path));
    for (const auto& [name, text] : flags) values_[name] = parse_flag(key(name), text);
  }

  const std::string& command() const { return command_; }
  std::string str(const std::string& name) const { return values_.at(name).get<std::string>(); }
  std::uint64_t u64(const std::string& name) const {
    return values_.at(name).get<std::uint64_t>();
  }
  double num(const std::string& name) const { return values_.at(name).get<double>(); }
  bool flag(const std::string& name) const { return values_.at(name).get<bool>(); }
  std::uint64_t seed() const { return u64("seed"); }
  std::size_t workers() const { return resolve_workers(u64("workers")); }

  std::string required(const std::string& name) const {
    const std::string v = str(name);
    if (v.empty()) throw Error(ErrorCode::ValidationError, "--" + name + " is required");
    return v;
  }

  json provenance() const {
    json hashed = json::object();
    for (const auto& [name, v] : values_.items()) {
      if (!kUnhashedKeys.contains(name)) hashed[name] = v;
    }
    json p;
    p["command"] = command_;
    p["config"] = hashed;
    p["config_hash"] = hex64(fnv1a(command_ + "\n" + hashed.dump()));
    p["seed"] = seed();
    p["version"] = kVersion;
    return p;
  }

 private:
  const Key& key(const std::string& name) const {
    for (const auto& k : keys_) {
      if (k.name == name) return k;
    }
    throw Error(ErrorCode::ValidationError, "unknown setting " + name);
  }

  void apply_config(const std::string& text) {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::ValidationError, "config must be a JSON object");
    for (const auto& [name, v] : j.items()) {
      if (!known_anywhere(name)) throw Error(ErrorCode::ValidationError, "unknown config key " + name);
    }
    apply_section(j);
    if (j.contains(command_)) {
      if (!j.at(command_).is_object()) {
        throw Error(ErrorCode::ValidationError, "config section " + command_ + " must be an object");
      }
      for (const auto& [name, v] : j.at(command_).items()) key(name);
      apply_section(j.at(command_));
    }
  }

  void apply_section(const json& section) {
    for (const auto& k : keys_) {
      if (section.contains(k.name)) values_[k.name] = coerce(k, section.at(k.name));
    }
  }

  std::string command_;
  std::vector<Key> keys_;
  json values_ = json::object();
};

// Inserts `"provenance": {...}` as the last member of a JSON object text.
std::string with_provenance(std::string text, const json& provenance) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.pop_back();
  if (text.empty() || text.back() != '}') {
    throw Error(ErrorCode::InvalidArgument, "artifact is not a JSON object");
  }
  text.insert(text.size() - 1, ", \"provenance\": " + provenance.dump());
  return text + "\n";
}

std::string provenance_comment(const json& provenance) {
  return "# provenance " + provenance.dump() + "\n";
}

std::vector<TokenizedSequence> tokenize_corpus(const std::vector<std::vector<std::string>>& corpus,
                                               const Vocab& vocab) {
  std::vector<TokenizedSequence> out;
  out.reserve(corpus.size());
  for (const auto& s : corpus) out.push_back(tokenize(s, vocab));
  return out;
}

DecoderLMConfig model_config(const Settings& s, std::size_t vocab_size, std::uint64_t seed) {
  DecoderLMConfig c;
  c.vocab_size = vocab_size;
  c.embed_dim = s.u64("embed_dim");
  c.num_layers = s.u64("num_layers");
  c.num_heads = s.u64("num_heads");
  c.context_len = s.u64("context_len");
  c.layer_norm = s.flag("layer_norm");
  c.seed = seed;
  c.validate();
  return c;
}

TrainOptions train_options(const Settings& s, std::uint64_t seed) {
  TrainOptions o;
  o.learning_rate = s.num("learning_rate");
  o.steps = s.u64("steps");
  o.batch_size = s.u64("batch_size");
  o.grad_clip = s.num("grad_clip");
  o.seed = seed;
  return o;
}

int cmd_train(const Settings& s) {
  const fs::path out = s.str("out");
  const json prov = s.provenance();
  const std::string kind = s.str("kind");
  const std::uint64_t seed = s.seed();
  json summary = json::object();
  if (kind != "decoder" && kind != "seq2seq") {
    throw Error(ErrorCode::ValidationError, "--kind must be decoder or seq2seq, not " + kind);
  }
  make_dirs(out);
  if (kind == "decoder") {
    GenerateOptions gen;
    gen.records_per_paradigm = s.u64("records");
    gen.corpus_per_paradigm = s.u64("corpus_size");
    const Dataset ds = generate_dataset(GrammarSpec::reference(seed), gen);
    const auto config = model_config(s, ds.vocab.size(), mix_seed(seed, 11));
    const auto trained = train_lm(config, tokenize_corpus(ds.corpus, ds.vocab),
                                  train_options(s, mix_seed(seed, 12)));
    const double accuracy = pair_preference_accuracy(trained.model, ds.vocab, ds.records);
    save_checkpoint(trained.model, ds.vocab, out / "model.ckpt", prov.dump());
    save_minimal_pairs(out / "pairs.jsonl", ds.records);
    save_corpus(out / "corpus.txt", ds.corpus);
    write_file(out / "manifest.json", with_provenance(manifest_to_json(ds.manifest), prov));
    summary["final_loss"] = trained.final_loss;
    summary["pair_preference_accuracy"] = accuracy;
    std::cout << "final loss " << trained.final_loss << "\npair-preference accuracy " << accuracy
              << "\n";
  } else {
    constexpr std::size_t kSymbols = 9;
    Vocab vocab;
    vocab.add("<s>");
    for (std::size_t i = 0; i < kSymbols; ++i) vocab.add(std::string(1, static_cast<char>('a' + i)));
    const auto config = model_config(s, vocab.size(), mix_seed(seed, 11));
    const auto examples = copy_task_examples(s.u64("corpus_size"), kSymbols, mix_seed(seed, 13));
    const auto held_out = copy_task_examples(200, kSymbols, mix_seed(seed, 14));
    const auto trained = train_seq2seq(config, examples, train_options(s, mix_seed(seed, 12)));
    const double accuracy = seq2seq_token_accuracy(trained.model, held_out);
    save_checkpoint(trained.model, vocab, out / "model.ckpt", prov.dump());
    summary["final_loss"] = trained.final_loss;
    summary["copy_accuracy"] = accuracy;
    std::cout << "final loss " << trained.final_loss << "\ncopy accuracy " << accuracy << "\n";
  }
  summary["checkpoint_fnv1a"] = hex64(fnv1a(read_file(out / "model.ckpt")));
  summary["provenance"] = prov;
  write_file(out / "train.json", summary.dump(2) + "\n");
  return 0;
}

void emit(const Settings& s, const std::string& text) {
  const std::string out = s.str("out");
  if (out.empty()) {
    std::cout << text;
  } else {
    write_file(out, text);
  }
}

int cmd_explain(const Settings& s) {
  const Checkpoint ckpt = load_checkpoint(s.required("model"));
  const Vocab& vocab = ckpt.vocab;
  const json prov = s.provenance();
  const Method method = parse_method(s.str("method"));
  const OutputMode mode = parse_output_mode(s.str("mode"));
  const TokenId target = vocab.id(s.required("target"));
  std::optional<TokenId> foil;
  if (!s.str("foil").empty()) foil = vocab.id(s.str("foil"));
  const bool contrastive = method == Method::ContrastiveGradientNorm ||
                           method == Method::ContrastiveGradientInput ||
                           method == Method::ContrastiveErasure;
  if (contrastive && !foil) {
    throw Error(ErrorCode::InvalidArgument, "contrastive methods need --foil");
  }
  const auto pair = foil && contrastive ? ContrastPair::make(target, foil, mode)
                                        : ContrastPair::make(target, std::nullopt, mode);
  const auto source = tokenize(s.required("sentence"), vocab);
  std::string html;
  if (const auto* lm = std::get_if<DecoderLM>(&ckpt.model)) {
    const auto map = explain(*lm, source, pair, method, s.seed());
    emit(s, with_provenance(saliency_to_json(map, vocab), prov));
    html = saliency_html(map, vocab, prov.dump());
  } else {
    const auto& model = std::get<Seq2SeqLM>(ckpt.model);
    const auto prefix = tokenize(s.required("prefix"), vocab);
    const auto map = seq2seq_saliency(model, source, prefix, pair, method);
    const std::string body = "{\"encoder\": " + saliency_to_json(map.encoder, vocab) +
                             ", \"decoder\": " + saliency_to_json(map.decoder, vocab) + "}";
    emit(s, with_provenance(body, prov));
    html = seq2seq_html(map, vocab, prov.dump());
  }
  if (!s.str("html").empty()) write_file(s.str("html"), html);
  return 0;
}

std::vector<Method> parse_method_list(const std::string& text) {
  std::vector<Method> methods;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    if (item.empty()) continue;
    const Method m = parse_method(item);
    if (m != Method::Random && std::find(methods.begin(), methods.end(), m) == methods.end()) {
      methods.push_back(m);
    }
  }
  return methods;
}

int cmd_eval_align(const Settings& s) {
  const Checkpoint ckpt = load_decoder_checkpoint(s.required("model"));
  const auto& lm = std::get<DecoderLM>(ckpt.model);
  const auto records = load_minimal_pairs(s.required("dataset"));
  if (records.empty()) throw Error(ErrorCode::EmptySet, "dataset has no records");
  EvaluateOptions opts;
  opts.methods = parse_method_list(s.str("method"));
  opts.mode = parse_output_mode(s.str("mode"));
  opts.seed = s.seed();
  opts.workers = s.workers();
  const fs::path out = s.str("out");
  make_dirs(out);

  std::vector<ParadigmReport> reports;
  for (Paradigm p : kAllParadigms) {
    std::vector<MinimalPairRecord> group;
    for (const auto& r : records) {
      if (r.paradigm == p) group.push_back(r);
    }
    if (!group.empty()) reports.push_back(evaluate_paradigm(lm, ckpt.vocab, group, opts));
  }

  const json prov = s.provenance();
  json summary;
  summary["paradigms"] = json::array();
  for (const auto& r : reports) {
    const std::string name(paradigm_name(r.paradigm));
    write_file(out / ("align_" + name + ".json"), with_provenance(report_to_json(r), prov));
    write_file(out / ("align_" + name + ".csv"), provenance_comment(prov) + report_to_csv(r));
    json row;
    row["paradigm"] = name;
    row["dist"] = r.mean_distance;
    row["sentences"] = r.sentences;
    row["skipped"] = r.skipped.size();
    for (const auto& m : r.methods) row["MRR"][std::string(method_name(m.method))] = m.mrr;
    summary["paradigms"].push_back(row);
  }
  json correlations = json::object();
  for (Method base : {Method::GradientNorm, Method::GradientInput, Method::Erasure}) {
    const Method star = base == Method::GradientNorm    ? Method::ContrastiveGradientNorm
                        : base == Method::GradientInput ? Method::ContrastiveGradientInput
                                                        : Method::ContrastiveErasure;
    const auto has = [&](Method m) {
      return std::find(opts.methods.begin(), opts.methods.end(), m) != opts.methods.end();
    };
    if (!has(base) || !has(star)) continue;
    const std::string name(method_name(star));
    try {
      correlations[name] = {{"pearson_r", distance_gain_correlation(reports, star)}};
    } catch (const Error& e) {
      correlations[name] = {{"pearson_r", nullptr}, {"reason", e.what()}};
    }
  }
  summary["distance_gain"] = correlations;
  summary["provenance"] = prov;
  write_file(out / "summary.json", summary.dump(2) + "\n");
  for (const auto& r : reports) {
    std::cout << paradigm_name(r.paradigm) << ": " << r.sentences << " scored, " << r.skipped.size()
              << " skipped\n";
  }
  return 0;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream in(line);
  for (std::string cell; std::getline(in, cell, ',');) cells.push_back(cell);
  return cells;
}

std::string trim(std::string text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.pop_back();
  std::size_t start = 0;
  while (start < text.size() && std::isspace(static_cast<unsigned char>(text[start]))) ++start;
  return text.substr(start);
}

// Reads either a word list (one per line) or a CSV whose header names
// word_1 and word_2; the CSV form yields explicit pairs.
struct CandidateFile {
  std::vector<std::string> words;
  std::vector<std::pair<std::string, std::string>> pairs;
};

CandidateFile read_candidates(const fs::path& path) {
  std::stringstream in(read_file(path));
  CandidateFile out;
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) {
    line = trim(line);
    if (!line.empty() && line[0] != '#') lines.push_back(line);
  }
  if (lines.empty()) throw Error(ErrorCode::EmptySet, "no candidates in " + path.string());
  const auto header = split_csv_line(lines[0]);
  const auto col1 = std::find(header.begin(), header.end(), "word_1");
  const auto col2 = std::find(header.begin(), header.end(), "word_2");
  if (col1 != header.end() && col2 != header.end()) {
    const std::size_t i1 = col1 - header.begin(), i2 = col2 - header.begin();
    for (std::size_t n = 1; n < lines.size(); ++n) {
      const auto cells = split_csv_line(lines[n]);
      if (cells.size() <= std::max(i1, i2)) {
        throw Error(ErrorCode::ParseError, path.string() + " line " + std::to_string(n + 1) +
                                               ": missing columns");
      }
      out.pairs.emplace_back(trim(cells[i1]), trim(cells[i2]));
    }
    return out;
  }
  out.words = lines;
  return out;
}

int cmd_confuse(const Settings& s) {
  const Checkpoint ckpt = load_decoder_checkpoint(s.required("model"));
  const auto& lm = std::get<DecoderLM>(ckpt.model);
  const Vocab& vocab = ckpt.vocab;
  const auto corpus = tokenize_corpus(load_corpus(s.required("dataset")), vocab);
  const CandidateFile cands = read_candidates(s.required("candidates"));
  ConfusionTable table;
  if (cands.pairs.empty()) {
    table = top_confusable_pairs(lm, vocab, corpus, cands.words, s.u64("k"), s.workers());
  } else {
    std::vector<TokenId> ids;
    std::vector<std::pair<std::string, std::string>> kept;
    std::size_t dropped = 0;
    for (const auto& [a, b] : cands.pairs) {
      if (!vocab.contains(a) || !vocab.contains(b) || a == b) {
        ++dropped;
        continue;
      }
      kept.emplace_back(a, b);
      for (TokenId id : {vocab.id(a), vocab.id(b)}) {
        if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
      }
    }
    if (kept.empty()) throw Error(ErrorCode::EmptySet, "no candidate pair is in the vocabulary");
    if (dropped > 0) std::cerr << dropped << " pair(s) outside the vocabulary skipped\n";
    const auto cm = confusion_matrix(lm, corpus, ids, s.workers());
    const auto index = [&](const std::string& w) {
      return static_cast<std::size_t>(std::find(ids.begin(), ids.end(), vocab.id(w)) - ids.begin());
    };
    table.corpus_size = cm.corpus_size;
    table.skipped_positions = cm.skipped_positions;
    for (auto [a, b] : kept) {
      if (b < a) std::swap(a, b);
      ConfusionEntry e;
      e.a = a;
      e.b = b;
      e.a_to_b = cm.directional(index(a), index(b));
      e.b_to_a = cm.directional(index(b), index(a));
      e.score = std::min(e.a_to_b, e.b_to_a);
      table.pairs.push_back(e);
    }
  }
  write_file(s.str("out"), provenance_comment(s.provenance()) + confusion_table_to_csv(table));
  std::cout << table.pairs.size() << " pair(s) over N=" << table.corpus_size << " sentences\n";
  return 0;
}

std::vector<TokenId> read_foils(const Settings& s, const Vocab& vocab, TokenId target) {
  std::vector<TokenId> foils;
  if (s.str("foils").empty()) {
    for (TokenId id = 0; id < vocab.size(); ++id) {
      if (id != target) foils.push_back(id);
    }
    return foils;
  }
  std::stringstream in(read_file(s.str("foils")));
  for (std::string line; std::getline(in, line);) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const TokenId id = vocab.id(line);
    if (id != target && std::find(foils.begin(), foils.end(), id) == foils.end()) {
      foils.push_back(id);
    }
  }
  return foils;
}

int cmd_cluster(const Settings& s) {
  const fs::path model_path = s.required("model");
  const Checkpoint ckpt = load_decoder_checkpoint(model_path);
  const auto& lm = std::get<DecoderLM>(ckpt.model);
  const Vocab& vocab = ckpt.vocab;
  const TokenId target = vocab.id(s.required("target"));
  const auto foils = read_foils(s, vocab, target);
  const Method method = parse_method(s.str("method"));
  const OutputMode mode = parse_output_mode(s.str("mode"));
  const bool normalize = s.flag("normalize");

  // Corpus prefixes that stop right before an occurrence of the target.
  std::vector<TokenizedSequence> sentences;
  const std::size_t limit = s.u64("sentences");
  for (const auto& seq : tokenize_corpus(load_corpus(s.required("dataset")), vocab)) {
    for (std::size_t i = 1; i < seq.size() && sentences.size() < limit; ++i) {
      if (seq.ids[i] == target) sentences.push_back(seq.prefix(i));
    }
  }
  if (sentences.empty()) {
    throw Error(ErrorCode::EmptySet, "no corpus sentence contains " + vocab.token(target));
  }

  std::string key = hex64(fnv1a(read_file(model_path))) + "|" + std::to_string(target) + "|" +
                    std::string(method_name(method)) + "|" +
                    std::string(output_mode_name(mode)) + "|" + (normalize ? "1" : "0") + "|";
  for (TokenId f : foils) key += std::to_string(f) + ",";
  for (const auto& x : sentences) {
    key += "|";
    for (TokenId id : x.ids) key += std::to_string(id) + ",";
  }
  const std::uint64_t inputs_hash = fnv1a(key);

  const fs::path out = s.str("out");
  make_dirs(out);
  const fs::path matrix_path = out / "matrix.cxmt";
  FoilExplanationMatrix matrix;
  if (saved_inputs_hash(matrix_path) == inputs_hash) {
    matrix = load_explanation_matrix(matrix_path, vocab);
    std::cerr << "reusing cached explanation matrix " << matrix_path.string() << "\n";
  } else {
    matrix = aggregate_explanations(lm, target, foils, sentences, method, normalize, mode,
                                    s.workers());
    save_explanation_matrix(matrix_path, matrix, vocab, inputs_hash);
  }

  KMeansOptions km;
  km.k = s.u64("k");
  km.seed = s.seed();
  auto report = cluster_foils(matrix, vocab, km);
  attach_head_neighbors(report, lm, s.u64("neighbors"));
  const json prov = s.provenance();
  write_file(out / "clusters.json", with_provenance(cluster_report_to_json(report, vocab), prov));
  const std::string text = cluster_report_to_text(report, vocab);
  write_file(out / "clusters.txt", provenance_comment(prov) + text);
  std::cout << text;
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"Contrastive saliency explanations for tiny language models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  struct Sub {
    CLI::App* app;
    std::map<std::string, std::string> raw;
    std::string config;
  };
  std::map<std::string, Sub> subs;
  const std::map<std::string, std::string> descriptions = {
      {"train", "generate the synthetic grammar data and train a model"},
      {"explain", "saliency map for one prediction"},
      {"eval-align", "alignment of explanations with known evidence, per paradigm"},
      {"confuse", "mine confusable token pairs from a corpus"},
      {"cluster", "cluster foils by their contrastive explanations"},
  };
  for (const auto& [name, desc] : descriptions) {
    Sub& sub = subs[name];
    sub.app = app.add_subcommand(name, desc);
    sub.app->add_option("--config", sub.config, "JSON config; flags override its values");
    for (const auto& k : keys_for(name)) {
      sub.app->add_option("--" + k.name, sub.raw[k.name], k.help + " [" + k.fallback.dump() + "]");
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 3;
  }

  for (auto& [name, sub] : subs) {
    if (!sub.app->parsed()) continue;
    std::map<std::string, std::string> given;
    for (const auto& [k, v] : sub.raw) {
      if (sub.app->count("--" + k) > 0) given[k] = v;
    }
    const Settings settings(name, given, sub.config);
    if (name == "train") return cmd_train(settings);
    if (name == "explain") return cmd_explain(settings);
    if (name == "eval-align") return cmd_eval_align(settings);
    if (name == "confuse") return cmd_confuse(settings);
    return cmd_cluster(settings);
  }
  return 1;
}

}  // namespace
}  // namespace contrast

int main(int argc, char** argv) {
  try {
    return contrast::run(argc, argv);
  } catch (const contrast::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return contrast::exit_status(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
