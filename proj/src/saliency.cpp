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

#include "contrast/saliency.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <string>

#include "contrast/error.hpp"
#include "contrast/rng.hpp"
#include "json.hpp"

namespace contrast {
namespace {

void check_pair(const LanguageModel& lm, const ContrastPair& pair, bool contrastive) {
  if (contrastive && !pair.foil()) {
    throw Error(ErrorCode::InvalidArgument, "contrastive method needs a foil");
  }
  if (!contrastive && pair.foil()) {
    throw Error(ErrorCode::InvalidArgument, "non-contrastive method takes no foil");
  }
  for (TokenId y : {pair.target(), pair.foil().value_or(pair.target())}) {
    if (y >= lm.vocab_size()) {
      throw Error(ErrorCode::InvalidToken, "token id " + std::to_string(y) + " out of range");
    }
  }
}

std::vector<double> row_l1_norms(const Matrix& g) {
  std::vector<double> out(g.rows());
  for (std::size_t i = 0; i < g.rows(); ++i) {
    double s = 0.0;
    for (double v : g.row(i)) s += std::abs(v);
    out[i] = s;
  }
  return out;
}

std::vector<double> row_dots(const Matrix& g, const Matrix& emb) {
  std::vector<double> out(g.rows());
  for (std::size_t i = 0; i < g.rows(); ++i) out[i] = dot(g.row(i), emb.row(i));
  return out;
}

SaliencyMap make_map(std::vector<double> scores, Method method, const ContrastPair& pair,
                     const TokenizedSequence& x, Side side = Side::Lm) {
  return {std::move(scores), method, pair, x, side};
}

// Per-position erasure effect q(y|x) - q(y|x without i) for y in {target, foil}.
std::vector<double> erasure_effects(const std::vector<double>& full_logits,
                                    const std::vector<std::vector<double>>& erased_logits,
                                    const ContrastPair& pair) {
  const double base_t = score_from_logits(full_logits, pair.target(), pair.mode());
  const double base_f =
      pair.foil() ? score_from_logits(full_logits, *pair.foil(), pair.mode()) : 0.0;
  std::vector<double> scores(erased_logits.size());
  for (std::size_t i = 0; i < erased_logits.size(); ++i) {
    const double effect_t =
        base_t - score_from_logits(erased_logits[i], pair.target(), pair.mode());
    if (pair.foil()) {
      const double effect_f =
          base_f - score_from_logits(erased_logits[i], *pair.foil(), pair.mode());
      scores[i] = effect_t - effect_f;
    } else {
      scores[i] = effect_t;
    }
  }
  return scores;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string_view method_name(Method m) {
  switch (m) {
    case Method::GradientNorm: return "GN";
    case Method::ContrastiveGradientNorm: return "GN*";
    case Method::GradientInput: return "GI";
    case Method::ContrastiveGradientInput: return "GI*";
    case Method::Erasure: return "E";
    case Method::ContrastiveErasure: return "E*";
    case Method::Random: return "RANDOM";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  std::string lower(name);
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "gn") return Method::GradientNorm;
  if (lower == "gn*") return Method::ContrastiveGradientNorm;
  if (lower == "gi") return Method::GradientInput;
  if (lower == "gi*") return Method::ContrastiveGradientInput;
  if (lower == "e") return Method::Erasure;
  if (lower == "e*") return Method::ContrastiveErasure;
  if (lower == "random") return Method::Random;
  throw Error(ErrorCode::InvalidArgument, "unknown method '" + std::string(name) + "'");
}

bool is_contrastive(Method m) {
  return m == Method::ContrastiveGradientNorm || m == Method::ContrastiveGradientInput ||
         m == Method::ContrastiveErasure;
}

Method base_method(Method m) {
  switch (m) {
    case Method::ContrastiveGradientNorm: return Method::GradientNorm;
    case Method::ContrastiveGradientInput: return Method::GradientInput;
    case Method::ContrastiveErasure: return Method::Erasure;
    default: return m;
  }
}

Method contrastive_counterpart(Method m) {
  switch (m) {
    case Method::GradientNorm: return Method::ContrastiveGradientNorm;
    case Method::GradientInput: return Method::ContrastiveGradientInput;
    case Method::Erasure: return Method::ContrastiveErasure;
    default: return m;
  }
}

ContrastPair ContrastPair::make(TokenId target, std::optional<TokenId> foil, OutputMode mode) {
  if (foil && *foil == target) {
    throw Error(ErrorCode::SamePair, "foil equals target (id " + std::to_string(target) + ")");
  }
  return {target, foil, mode};
}

ContrastPair ContrastPair::unchecked(TokenId target, std::optional<TokenId> foil,
                                     OutputMode mode) {
  return {target, foil, mode};
}

ContrastPair ContrastPair::swapped() const {
  if (!foil_) throw Error(ErrorCode::InvalidArgument, "cannot swap a pair without foil");
  return {*foil_, target_, mode_};
}

SaliencyMap gradient_norm(const LanguageModel& lm, const TokenizedSequence& x,
                          const ContrastPair& pair) {
  check_pair(lm, pair, false);
  const auto g = input_gradient(lm, x, pair.target(), std::nullopt, pair.mode());
  return make_map(row_l1_norms(g.rows), Method::GradientNorm, pair, x);
}

SaliencyMap contrastive_gradient_norm(const LanguageModel& lm, const TokenizedSequence& x,
                                      const ContrastPair& pair) {
  check_pair(lm, pair, true);
  const auto g = input_gradient(lm, x, pair.target(), pair.foil(), pair.mode());
  return make_map(row_l1_norms(g.rows), Method::ContrastiveGradientNorm, pair, x);
}

SaliencyMap gradient_x_input(const LanguageModel& lm, const TokenizedSequence& x,
                             const ContrastPair& pair) {
  const bool contrastive = pair.foil().has_value();
  check_pair(lm, pair, contrastive);
  check_sequence(lm, x.ids);
  const Matrix emb = lm.embed(x.ids);
  const Matrix g = input_gradient_from_embeddings(lm, emb, pair.target(), pair.foil(), pair.mode());
  return make_map(row_dots(g, emb),
                  contrastive ? Method::ContrastiveGradientInput : Method::GradientInput, pair, x);
}

SaliencyMap erasure(const LanguageModel& lm, const TokenizedSequence& x, const ContrastPair& pair) {
  const bool contrastive = pair.foil().has_value();
  check_pair(lm, pair, contrastive);
  check_sequence(lm, x.ids);
  if (x.size() < 2) {
    throw Error(ErrorCode::DegenerateInput, "erasure needs at least two input tokens");
  }
  const Matrix emb = lm.embed(x.ids);
  std::vector<Matrix> variants(x.size(), emb);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (double& v : variants[i].row(i)) v = 0.0;
  }
  const Matrix full = lm.logits(emb);
  const auto last = full.row(full.rows() - 1);
  const auto erased = lm.final_logits_batch(variants);
  return make_map(erasure_effects({last.begin(), last.end()}, erased, pair),
                  contrastive ? Method::ContrastiveErasure : Method::Erasure, pair, x);
}

SaliencyMap random_baseline(std::size_t length, std::uint64_t seed) {
  if (length == 0) throw Error(ErrorCode::EmptyInput, "random baseline of length 0");
  Rng rng(seed);
  std::vector<double> scores(length);
  for (double& s : scores) s = rng.uniform();
  return make_map(std::move(scores), Method::Random, ContrastPair::unchecked(0, std::nullopt),
                  TokenizedSequence{});
}

SaliencyMap explain(const LanguageModel& lm, const TokenizedSequence& x, const ContrastPair& pair,
                    Method method, std::uint64_t seed) {
  switch (method) {
    case Method::GradientNorm: return gradient_norm(lm, x, pair.without_foil());
    case Method::ContrastiveGradientNorm: return contrastive_gradient_norm(lm, x, pair);
    case Method::GradientInput: return gradient_x_input(lm, x, pair.without_foil());
    case Method::ContrastiveGradientInput:
      if (!pair.foil()) throw Error(ErrorCode::InvalidArgument, "GI* needs a foil");
      return gradient_x_input(lm, x, pair);
    case Method::Erasure: return erasure(lm, x, pair.without_foil());
    case Method::ContrastiveErasure:
      if (!pair.foil()) throw Error(ErrorCode::InvalidArgument, "E* needs a foil");
      return erasure(lm, x, pair);
    case Method::Random: {
      SaliencyMap m = random_baseline(x.size(), seed);
      m.input = x;
      m.pair = pair;
      return m;
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown method");
}

Seq2SeqSaliency seq2seq_saliency(const Seq2SeqLM& lm, const TokenizedSequence& source,
                                 const TokenizedSequence& target_prefix,
                                 const ContrastPair& pair, Method method) {
  if (!pair.foil()) throw Error(ErrorCode::InvalidArgument, "seq2seq saliency needs a foil");
  const Matrix src = lm.embed_source(source.ids);
  const Matrix tgt = lm.embed_target(target_prefix.ids);
  for (TokenId y : {pair.target(), *pair.foil()}) {
    if (y >= lm.vocab_size()) {
      throw Error(ErrorCode::InvalidToken, "token id " + std::to_string(y) + " out of range");
    }
  }
  std::vector<double> enc_scores, dec_scores;
  switch (method) {
    case Method::ContrastiveGradientNorm:
    case Method::ContrastiveGradientInput: {
      const auto g = seq2seq_input_gradient(lm, source.ids, target_prefix.ids, pair.target(),
                                            pair.foil(), pair.mode());
      if (method == Method::ContrastiveGradientNorm) {
        enc_scores = row_l1_norms(g.encoder.rows);
        dec_scores = row_l1_norms(g.decoder.rows);
      } else {
        enc_scores = row_dots(g.encoder.rows, src);
        dec_scores = row_dots(g.decoder.rows, tgt);
      }
      break;
    }
    case Method::ContrastiveErasure: {
      const Matrix full = lm.logits(src, tgt);
      const auto last_row = full.row(full.rows() - 1);
      const std::vector<double> last(last_row.begin(), last_row.end());
      auto final_logits = [&](const Matrix& s, const Matrix& t) {
        const Matrix l = lm.logits(s, t);
        const auto r = l.row(l.rows() - 1);
        return std::vector<double>(r.begin(), r.end());
      };
      std::vector<std::vector<double>> erased;
      for (std::size_t i = 0; i < src.rows(); ++i) {
        Matrix s = src;
        for (double& v : s.row(i)) v = 0.0;
        erased.push_back(final_logits(s, tgt));
      }
      enc_scores = erasure_effects(last, erased, pair);
      erased.clear();
      for (std::size_t i = 0; i < tgt.rows(); ++i) {
        Matrix t = tgt;
        for (double& v : t.row(i)) v = 0.0;
        erased.push_back(final_logits(src, t));
      }
      dec_scores = erasure_effects(last, erased, pair);
      break;
    }
    default:
      throw Error(ErrorCode::InvalidArgument,
                  "seq2seq saliency supports GN*, GI*, E*, not " + std::string(method_name(method)));
  }
  return {make_map(std::move(enc_scores), method, pair, source, Side::Encoder),
          make_map(std::move(dec_scores), method, pair, target_prefix, Side::Decoder)};
}

std::string saliency_to_json(const SaliencyMap& map, const Vocab& vocab) {
  using nlohmann::json;
  std::string out = "{\"method\": " + json(std::string(method_name(map.method))).dump();
  out += ", \"mode\": " + json(std::string(output_mode_name(map.pair.mode()))).dump();
  if (map.method == Method::Random) {
    out += ", \"target\": null, \"foil\": null";
  } else {
    out += ", \"target\": " + json(vocab.token(map.pair.target())).dump();
    out += ", \"foil\": " + (map.pair.foil() ? json(vocab.token(*map.pair.foil())).dump()
                                             : std::string("null"));
  }
  out += ", \"tokens\": " + json(map.input.surface).dump();
  out += ", \"scores\": [";
  for (std::size_t i = 0; i < map.scores.size(); ++i) {
    if (i > 0) out += ", ";
    out += format_double(map.scores[i]);
  }
  out += "]}";
  return out;
}

SaliencyMap saliency_from_json(std::string_view text, const Vocab& vocab) {
  using nlohmann::json;
  try {
    const json j = json::parse(text);
    SaliencyMap m;
    m.method = parse_method(j.at("method").get<std::string>());
    const OutputMode mode = parse_output_mode(j.at("mode").get<std::string>());
    const auto tokens = j.at("tokens").get<std::vector<std::string>>();
    if (!tokens.empty()) m.input = tokenize(tokens, vocab);
    TokenId target = 0;
    std::optional<TokenId> foil;
    if (!j.at("target").is_null()) target = vocab.id(j.at("target").get<std::string>());
    if (!j.at("foil").is_null()) foil = vocab.id(j.at("foil").get<std::string>());
    m.pair = ContrastPair::unchecked(target, foil, mode);
    m.scores = j.at("scores").get<std::vector<double>>();
    if (!tokens.empty() && m.scores.size() != tokens.size()) {
      throw Error(ErrorCode::LengthMismatch, "scores and tokens differ in length");
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("saliency JSON: ") + e.what());
  }
}

}  // namespace contrast
