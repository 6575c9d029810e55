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

// Acceptance gate: prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "contrast/align_metrics.hpp"
#include "contrast/confusion.hpp"
#include "contrast/datagen.hpp"
#include "contrast/decoder_lm.hpp"
#include "contrast/error.hpp"
#include "contrast/foil_cluster.hpp"
#include "contrast/rng.hpp"
#include "contrast/saliency.hpp"
#include "contrast/seq2seq_lm.hpp"
#include "contrast/training.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;

namespace contrast {
namespace {

using testing::contrast_score;
using testing::finite_difference;
using testing::max_relative_error;
using testing::random_sequence;

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects the first few violations so a FAIL line says what went wrong.
class Checker {
 public:
  void check(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (failures_ <= 3) notes_ += (notes_.empty() ? "" : "; ") + what;
  }
  Outcome outcome(const std::string& summary) const {
    if (failures_ == 0) return {true, summary};
    return {false, std::to_string(failures_) + " violation(s): " + notes_ + " | " + summary};
  }

 private:
  std::size_t failures_ = 0;
  std::string notes_;
};

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

double cpu_seconds(std::clock_t since) {
  return static_cast<double>(std::clock() - since) / CLOCKS_PER_SEC;
}

constexpr OutputMode kModes[] = {OutputMode::Logit, OutputMode::Probability,
                                 OutputMode::LogProbability};

DecoderLMConfig decoder_config(std::size_t vocab, std::size_t d, std::size_t layers,
                               std::size_t heads, std::uint64_t seed, bool layer_norm) {
  DecoderLMConfig c;
  c.vocab_size = vocab;
  c.embed_dim = d;
  c.num_layers = layers;
  c.num_heads = heads;
  c.context_len = 8;
  c.seed = seed;
  c.layer_norm = layer_norm;
  return c;
}

Outcome gradient_oracle() {
  const std::clock_t start = std::clock();
  const DecoderLMConfig configs[] = {decoder_config(20, 16, 1, 2, 1, false),
                                     decoder_config(20, 32, 2, 4, 2, true),
                                     decoder_config(20, 64, 3, 4, 3, false)};
  Checker c;
  double worst = 0.0;
  std::size_t inputs = 0;
  for (const auto& config : configs) {
    const DecoderLM lm(config);
    Rng rng(config.seed + 1000);
    for (int n = 0; n < 20; ++n, ++inputs) {
      const auto x = random_sequence(rng, 1 + rng.below(config.context_len), config.vocab_size);
      const TokenId t = static_cast<TokenId>(rng.below(config.vocab_size));
      std::optional<TokenId> f;
      if (n % 2 == 0) f = static_cast<TokenId>((t + 1 + rng.below(config.vocab_size - 1)) % config.vocab_size);
      const OutputMode mode = kModes[n % 3];
      const Matrix emb = lm.embed(x.ids);
      const auto g = input_gradient(lm, x, t, f, mode);
      const Matrix fd = finite_difference(
          [&](const Matrix& e) { return contrast_score(lm, e, t, f, mode); }, emb, 1e-4);
      const double err = max_relative_error(g.rows, fd);
      worst = std::max(worst, err);
      c.check(err <= 1e-5, "d=" + std::to_string(config.embed_dim) + " input " +
                               std::to_string(n) + " error " + fmt("%.3g", err));
    }
  }
  const double secs = cpu_seconds(start);
  c.check(secs <= 120.0, "runtime " + fmt("%.1f", secs) + "s");
  return c.outcome(std::to_string(inputs) + " inputs over 3 configs, max rel error " +
                   fmt("%.2e", worst) + ", " + fmt("%.1f", secs) + "s CPU");
}

Outcome contrastive_identities() {
  const DecoderLM lm(decoder_config(17, 16, 2, 2, 21, false));
  const DecoderLM lm_norm(decoder_config(17, 16, 2, 2, 22, true));
  Rng rng(2024);
  Checker c;
  double worst_zero = 0.0, worst_decomp = 0.0;
  for (int n = 0; n < 100; ++n) {
    const DecoderLM& model = n % 2 == 0 ? lm : lm_norm;
    const auto x = random_sequence(rng, 2 + rng.below(7), 17);
    const TokenId t = static_cast<TokenId>(rng.below(17));
    const TokenId f = static_cast<TokenId>((t + 1 + rng.below(16)) % 17);
    const OutputMode mode = kModes[n % 3];
    const std::string tag = "triple " + std::to_string(n);

    for (Method m : {Method::ContrastiveGradientNorm, Method::ContrastiveGradientInput,
                     Method::ContrastiveErasure}) {
      for (double v : explain(model, x, ContrastPair::unchecked(t, t, mode), m).scores) {
        worst_zero = std::max(worst_zero, std::abs(v));
        c.check(std::abs(v) <= 1e-12, tag + " identity foil " + std::string(method_name(m)));
      }
    }
    const auto pair = ContrastPair::make(t, f, mode);
    const auto t_only = ContrastPair::make(t, std::nullopt, mode);
    const auto f_only = ContrastPair::make(f, std::nullopt, mode);
    for (Method plain : {Method::GradientInput, Method::Erasure}) {
      const Method star =
          plain == Method::GradientInput ? Method::ContrastiveGradientInput : Method::ContrastiveErasure;
      const auto both = explain(model, x, pair, star);
      const auto swapped = explain(model, x, pair.swapped(), star);
      const auto st = explain(model, x, t_only, plain);
      const auto sf = explain(model, x, f_only, plain);
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double gap = std::abs(both.scores[i] - (st.scores[i] - sf.scores[i]));
        worst_decomp = std::max(worst_decomp, gap);
        c.check(gap <= 1e-9, tag + " " + std::string(method_name(star)) + " decomposition");
        c.check(swapped.scores[i] == -both.scores[i],
                tag + " " + std::string(method_name(star)) + " antisymmetry");
      }
    }
    const auto gn = explain(model, x, pair, Method::ContrastiveGradientNorm);
    const auto gn_swapped = explain(model, x, pair.swapped(), Method::ContrastiveGradientNorm);
    c.check(gn.scores == gn_swapped.scores, tag + " GN* swap invariance");
  }
  return c.outcome("100 triples, max identity-foil |s| " + fmt("%.1e", worst_zero) +
                   ", max decomposition gap " + fmt("%.1e", worst_decomp));
}

Outcome erasure_equivalence() {
  const DecoderLM lm(decoder_config(19, 16, 2, 4, 31, true));
  Rng rng(31);
  Checker c;
  std::size_t positions = 0;
  for (int n = 0; n < 50; ++n) {
    const auto x = random_sequence(rng, 2 + rng.below(7), 19);
    const TokenId t = static_cast<TokenId>(rng.below(19));
    std::optional<TokenId> f;
    if (n % 2 == 0) f = static_cast<TokenId>((t + 1 + rng.below(18)) % 19);
    const OutputMode mode = kModes[n % 3];
    const auto batched = erasure(lm, x, ContrastPair::make(t, f, mode));
    const Matrix emb = lm.embed(x.ids);
    for (std::size_t i = 0; i < x.size(); ++i, ++positions) {
      Matrix cut = emb;
      for (double& v : cut.row(i)) v = 0.0;
      double naive = contrast_score(lm, emb, t, std::nullopt, mode) -
                     contrast_score(lm, cut, t, std::nullopt, mode);
      if (f) {
        naive -= contrast_score(lm, emb, *f, std::nullopt, mode) -
                 contrast_score(lm, cut, *f, std::nullopt, mode);
      }
      c.check(batched.scores[i] == naive, "input " + std::to_string(n) + " position " +
                                              std::to_string(i));
    }
  }
  return c.outcome("50 inputs, " + std::to_string(positions) + " positions bit-identical");
}

MinimalPairRecord record_at(std::size_t contrast_index, std::vector<std::size_t> evidence) {
  MinimalPairRecord r;
  r.uid = "hand";
  r.tokens = std::vector<std::string>(contrast_index + 1, "w");
  r.contrast_index = contrast_index;
  r.target = "w";
  r.foil = "v";
  r.evidence = std::move(evidence);
  return r;
}

Outcome metric_hand_suite() {
  Checker c;
  const auto near = [&](double got, double want, const std::string& what) {
    c.check(std::abs(got - want) <= 1e-12, what + " = " + fmt("%.15g", got));
  };
  near(dot_product(std::vector<double>{0.2, -0.5, 0.3}, {0, 1, 1}), -0.2, "dot example");
  near(dot_product(std::vector<double>{0.2, -0.5, 0.3}, {0, 0, 0}), 0.0, "dot zero evidence");
  near(dot_product(std::vector<double>{0.2, -0.5, 0.3}, {1, 1, 1}), 0.2 - 0.5 + 0.3, "dot all");
  c.check(probes_needed(std::vector<double>{0.9, 0.1, 0.5}, {0, 0, 1}) == 1, "probes example");
  c.check(probes_needed(std::vector<double>{0.9, 0.1, 0.5}, {1, 0, 0}) == 0, "probes top");
  c.check(probes_needed(std::vector<double>{0.5, 0.5}, {0, 1}) == 1, "probes tie");
  near(mrr(std::vector<std::size_t>{0, 0, 0}), 1.0, "mrr all zero");
  near(mrr(std::vector<std::size_t>{0, 1}), 0.75, "mrr [0,1]");
  near(mrr(std::vector<std::size_t>{3}), 0.25, "mrr [3]");
  near(evidence_distance(record_at(5, {2})), 3.0, "distance {2}");
  near(evidence_distance(record_at(5, {1, 3})), 3.0, "distance {1,3}");
  near(evidence_distance(record_at(5, {4})), 1.0, "distance adjacent");
  near(pearson(std::vector<double>{1, 2, 3}, std::vector<double>{2, 4, 6}), 1.0, "pearson +1");
  near(pearson(std::vector<double>{1, 2, 3}, std::vector<double>{6, 4, 2}), -1.0, "pearson -1");
  near(pearson(std::vector<double>{0, 1, 2, 3}, std::vector<double>{0, 1, 0, 1}),
       1.0 / std::sqrt(5.0), "pearson 0.447");
  return c.outcome("15 hand cases");
}

std::vector<TokenizedSequence> tokenized(const Dataset& d) {
  std::vector<TokenizedSequence> out;
  for (const auto& s : d.corpus) out.push_back(tokenize(s, d.vocab));
  return out;
}

Outcome trend_reproduction() {
  const std::clock_t start = std::clock();
  GenerateOptions gen;
  gen.records_per_paradigm = 300;
  gen.corpus_per_paradigm = 2000;
  const Dataset data = generate_dataset(GrammarSpec::reference(0), gen);
  DecoderLMConfig config;
  config.vocab_size = data.vocab.size();
  config.embed_dim = 32;
  config.num_layers = 2;
  config.num_heads = 4;
  config.context_len = 16;
  config.seed = 0;
  TrainOptions train;
  train.steps = 1500;
  train.batch_size = 16;
  train.learning_rate = 3e-3;
  train.seed = 0;
  const auto trained = train_lm(config, tokenized(data), train);
  const double accuracy = pair_preference_accuracy(trained.model, data.vocab, data.records);

  Checker c;
  c.check(accuracy >= 0.90, "held-out accuracy " + fmt("%.3f", accuracy));
  std::string summary = "accuracy " + fmt("%.3f", accuracy);
  for (Paradigm p : {Paradigm::DetNoun, Paradigm::SubjVerb}) {
    std::vector<MinimalPairRecord> group;
    for (const auto& r : data.records) {
      if (r.paradigm == p) group.push_back(r);
    }
    EvaluateOptions opts;
    opts.seed = 0;
    const auto report = evaluate_paradigm(trained.model, data.vocab, group, opts);
    const std::string name(paradigm_name(p));
    const auto m = [&](Method x) { return report.summary(x).mrr; };
    c.check(report.sentences >= 200, name + " scored " + std::to_string(report.sentences));
    c.check(m(Method::ContrastiveGradientInput) >= m(Method::GradientInput), name + " GI* < GI");
    c.check(m(Method::ContrastiveErasure) >= m(Method::Erasure), name + " E* < E");
    for (Method star : {Method::ContrastiveGradientNorm, Method::ContrastiveGradientInput,
                        Method::ContrastiveErasure}) {
      c.check(m(star) > m(Method::Random),
              name + " " + std::string(method_name(star)) + " not above RANDOM");
    }
    summary += "; " + name + " n=" + std::to_string(report.sentences) + " GI " +
               fmt("%.3f", m(Method::GradientInput)) + " GI* " +
               fmt("%.3f", m(Method::ContrastiveGradientInput)) + " E " +
               fmt("%.3f", m(Method::Erasure)) + " E* " + fmt("%.3f", m(Method::ContrastiveErasure)) +
               " GN* " + fmt("%.3f", m(Method::ContrastiveGradientNorm)) + " RANDOM " +
               fmt("%.3f", m(Method::Random));
  }
  const double secs = cpu_seconds(start);
  c.check(secs <= 600.0, "runtime " + fmt("%.1f", secs) + "s");
  return c.outcome(summary + "; " + fmt("%.1f", secs) + "s CPU");
}

TokenizedSequence seq(std::vector<TokenId> ids) {
  TokenizedSequence s;
  for (TokenId id : ids) {
    s.ids.push_back(id);
    s.surface.push_back(std::string(1, static_cast<char>('a' + id)));
  }
  return s;
}

Outcome confusion_correctness() {
  Checker c;
  const auto near = [&](double got, double want, const std::string& what) {
    c.check(std::abs(got - want) <= 1e-12, what + " = " + fmt("%.15g", got));
  };
  const testing::BigramModel uniform(
      std::vector<std::vector<double>>(4, std::vector<double>(4, 0.25)));
  near(directional_confusion(uniform, {seq({2, 0, 3}), seq({3, 0, 2})}, 0, 1), 0.25,
       "uniform stub");
  near(directional_confusion(uniform, {seq({2, 3, 3}), seq({3, 2})}, 0, 1), 0.0, "absent token");
  const testing::BigramModel self({{0.1, 0.2, 0.3, 0.4},
                                   {0.25, 0.25, 0.25, 0.25},
                                   {0.7, 0.1, 0.1, 0.1},
                                   {0.25, 0.25, 0.25, 0.25}});
  near(directional_confusion(self, {seq({2, 0})}, 0, 0), 0.7, "self mass");
  const testing::BigramModel skew({{0.25, 0.25, 0.25, 0.25},
                                   {0.25, 0.25, 0.25, 0.25},
                                   {0.6, 0.2, 0.1, 0.1},
                                   {0.25, 0.25, 0.25, 0.25}});
  const std::vector<TokenizedSequence> corpus{seq({2, 0}), seq({2, 1})};
  near(directional_confusion(skew, corpus, 0, 1), 0.1, "direction a->b");
  near(directional_confusion(skew, corpus, 1, 0), 0.3, "direction b->a");
  near(confusion_score(skew, corpus, 0, 1), 0.1, "min of directions");

  const DecoderLM lm(decoder_config(50, 8, 1, 2, 4, false));
  Rng rng(12);
  std::vector<TokenizedSequence> sweep;
  for (int i = 0; i < 12; ++i) sweep.push_back(random_sequence(rng, 8, 50));
  std::vector<TokenId> all(50);
  for (TokenId i = 0; i < 50; ++i) all[i] = i;
  const auto cm = confusion_matrix(lm, sweep, all, 1);
  std::size_t pairs = 0;
  for (TokenId a = 0; a < 50; ++a) {
    for (TokenId b = a + 1; b < 50; ++b, ++pairs) {
      const double ab = confusion_score(lm, sweep, a, b);
      c.check(ab == confusion_score(lm, sweep, b, a),
              "asymmetric " + std::to_string(a) + "," + std::to_string(b));
      c.check(ab == std::min(cm.directional(a, b), cm.directional(b, a)),
              "matrix disagrees " + std::to_string(a) + "," + std::to_string(b));
    }
  }
  return c.outcome("6 stub cases, symmetry over " + std::to_string(pairs) + " pairs");
}

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

double centroid_gap(const Matrix& data, const KMeansResult& r) {
  double worst = 0.0;
  for (std::size_t k = 0; k < r.centroids.rows(); ++k) {
    std::vector<double> sum(data.cols(), 0.0);
    std::size_t n = 0;
    for (std::size_t i = 0; i < data.rows(); ++i) {
      if (r.assignments[i] != k) continue;
      ++n;
      for (std::size_t j = 0; j < data.cols(); ++j) sum[j] += data(i, j);
    }
    if (n == 0) continue;
    for (std::size_t j = 0; j < data.cols(); ++j) {
      worst = std::max(worst, std::abs(r.centroids(k, j) - sum[j] / static_cast<double>(n)));
    }
  }
  return worst;
}

Outcome clustering() {
  Checker c;
  Rng rng(99);
  double worst_gap = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t rows = 5 + rng.below(40);
    const Matrix data = random_matrix(rng, rows, 1 + rng.below(8));
    KMeansOptions opts;
    opts.k = 1 + rng.below(std::min<std::size_t>(rows, 8));
    opts.seed = static_cast<std::uint64_t>(trial);
    const auto r = kmeans(data, opts);
    for (std::size_t i = 1; i < r.inertia_history.size(); ++i) {
      c.check(r.inertia_history[i] <= r.inertia_history[i - 1],
              "inertia rose in trial " + std::to_string(trial));
    }
    const double gap = centroid_gap(data, r);
    worst_gap = std::max(worst_gap, gap);
    c.check(gap <= 1e-9, "centroid gap " + fmt("%.2e", gap));
    const auto again = kmeans(data, opts);
    c.check(again.assignments == r.assignments && again.centroids == r.centroids &&
                again.inertia_history == r.inertia_history,
            "trial " + std::to_string(trial) + " not deterministic");
  }
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng g(seed);
    Matrix data(20, 5);
    for (std::size_t i = 0; i < 20; ++i) {
      for (std::size_t j = 0; j < 5; ++j) data(i, j) = (i % 2 == 0 ? 100.0 : -100.0) + 0.01 * g.normal();
    }
    KMeansOptions opts;
    opts.k = 2;
    opts.seed = seed;
    const auto r = kmeans(data, opts);
    for (std::size_t i = 0; i < 20; ++i) {
      c.check((r.assignments[i] == r.assignments[0]) == (i % 2 == 0),
              "two groups not recovered for seed " + std::to_string(seed));
    }
  }
  return c.outcome("100 random matrices, max centroid gap " + fmt("%.1e", worst_gap) +
                   ", two-group recovery over 10 seeds");
}

Outcome seq2seq_checks() {
  Checker c;
  double worst = 0.0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    DecoderLMConfig config = decoder_config(11, 8 * seed, seed, 2, seed, seed == 2);
    const Seq2SeqLM lm(config);
    Rng rng(seed + 70);
    for (int n = 0; n < 6; ++n) {
      const auto src = random_sequence(rng, 2 + rng.below(6), 11);
      const auto tgt = random_sequence(rng, 1 + rng.below(6), 11);
      const TokenId t = static_cast<TokenId>(rng.below(11));
      const TokenId f = static_cast<TokenId>((t + 1 + rng.below(10)) % 11);
      const OutputMode mode = kModes[n % 3];
      for (Method m : {Method::ContrastiveGradientNorm, Method::ContrastiveGradientInput,
                       Method::ContrastiveErasure}) {
        const auto z = seq2seq_saliency(lm, src, tgt, ContrastPair::unchecked(t, t, mode), m);
        for (double v : z.encoder.scores) c.check(std::abs(v) <= 1e-12, "identity foil (source)");
        for (double v : z.decoder.scores) c.check(std::abs(v) <= 1e-12, "identity foil (target)");
      }
      const Matrix se = lm.embed_source(src.ids);
      const Matrix te = lm.embed_target(tgt.ids);
      const auto score = [&](const Matrix& s, const Matrix& e) {
        const Matrix l = lm.logits(s, e);
        const auto last = l.row(l.rows() - 1);
        return score_from_logits(last, t, mode) - score_from_logits(last, f, mode);
      };
      const auto g = seq2seq_input_gradient(lm, src.ids, tgt.ids, t, f, mode);
      const double e1 = max_relative_error(
          g.encoder.rows, finite_difference([&](const Matrix& e) { return score(e, te); }, se));
      const double e2 = max_relative_error(
          g.decoder.rows, finite_difference([&](const Matrix& e) { return score(se, e); }, te));
      worst = std::max({worst, e1, e2});
      c.check(e1 <= 1e-5 && e2 <= 1e-5, "finite-difference error " + fmt("%.2e", std::max(e1, e2)));
    }
  }
  DecoderLMConfig config = decoder_config(10, 32, 2, 4, 3, false);
  TrainOptions opts;
  opts.steps = 1500;
  opts.seed = 3;
  const auto trained = train_seq2seq(config, copy_task_examples(2000, 9, 1), opts);
  const double accuracy = seq2seq_token_accuracy(trained.model, copy_task_examples(200, 9, 2));
  c.check(accuracy >= 0.95, "copy accuracy " + fmt("%.3f", accuracy));
  return c.outcome("18 inputs, max FD error " + fmt("%.2e", worst) + ", copy accuracy " +
                   fmt("%.3f", accuracy));
}

// ---- CLI reproducibility -------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) files[fs::relative(entry.path(), root).string()] = slurp(entry.path());
  }
  return files;
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char ch : s) out += ch == '\'' ? std::string("'\\''") : std::string(1, ch);
  return out + "'";
}

// Runs every command inside `dir`, capturing stdout as an artifact.
bool run_session(const fs::path& dir, std::size_t workers, Checker& c) {
  fs::create_directories(dir);
  const std::string cli = shell_quote(CONTRAST_CLI_PATH);
  const std::string w = " --workers " + std::to_string(workers);
  int step = 0;
  const auto run = [&](const std::string& args) {
    const std::string id = std::to_string(++step);
    const std::string cmd = "cd " + shell_quote(dir.string()) + " && " + cli + " " + args +
                            " > stdout_" + id + ".txt 2> stderr_" + id + ".log";
    const int rc = std::system(cmd.c_str());
    c.check(rc == 0, "'" + args + "' failed in " + dir.filename().string());
    return rc == 0;
  };
  if (!run("train --out run --seed 3 --steps 150 --records 40 --corpus_size 200" + w)) return false;
  if (!run("train --kind seq2seq --out s2s --seed 3 --steps 40 --corpus_size 100 --context_len 8" + w)) {
    return false;
  }
  const auto records = load_minimal_pairs(dir / "run" / "pairs.jsonl");
  const auto& r = records.front();
  std::string prefix;
  for (std::size_t i = 0; i < r.contrast_index; ++i) prefix += (i ? " " : "") + r.tokens[i];
  const std::string pair = " --target " + r.target + " --foil " + r.foil;
  const std::string base = "explain --model run/model.ckpt --sentence " + shell_quote(prefix) + pair;
  run(base + " --method 'gi*' --out gi_star.json --html gi_star.html" + w);
  run(base + " --method e --mode prob --out e.json" + w);
  run(base + " --method random --seed 9 --out random.json" + w);
  run(base + " --method 'gn*' --mode logprob" + w);
  run("explain --model s2s/model.ckpt --sentence 'a b c' --prefix '<s> a' --target b --foil c "
      "--method 'e*' --out s2s.json --html s2s.html" + w);
  {
    std::ofstream cfg(dir / "config.json");
    cfg << R"({"seed": 4, "explain": {"method": "gi*", "mode": "prob"}})";
  }
  run("explain --config config.json --model run/model.ckpt --sentence " + shell_quote(prefix) +
      pair + " --mode logit --out from_config.json" + w);
  run("eval-align --model run/model.ckpt --dataset run/pairs.jsonl --seed 5 --out align" + w);
  {
    std::ofstream cands(dir / "cands.txt");
    for (std::size_t i = 0; i < 4 && i < records.size(); ++i) {
      cands << records[i].target << "\n" << records[i].foil << "\n";
    }
  }
  run("confuse --model run/model.ckpt --dataset run/corpus.txt --candidates cands.txt --k 6 "
      "--out confusion.csv" + w);
  const std::string cluster = "cluster --model run/model.ckpt --dataset run/corpus.txt --target " +
                              r.target + " --k 3 --sentences 12 --neighbors 4 --seed 6";
  run(cluster + " --out clusters" + w);
  const auto first = snapshot(dir / "clusters");
  run(cluster + " --out clusters" + w);
  c.check(snapshot(dir / "clusters") == first, "cached cluster rerun changed artifacts");
  c.check(slurp(dir / ("stderr_" + std::to_string(step) + ".log")).find("reusing") != std::string::npos,
          "cluster rerun did not reuse the cached matrix");
  return true;
}

Outcome cli_reproducibility() {
  Checker c;
  const fs::path root = fs::current_path() / "acceptance_cli";
  fs::remove_all(root);
  const bool ok_a = run_session(root / "a", 3, c);
  const bool ok_b = run_session(root / "b", 1, c);
  if (!ok_a || !ok_b) return c.outcome("session aborted");
  auto a = snapshot(root / "a");
  auto b = snapshot(root / "b");
  std::size_t compared = 0;
  for (auto it = a.begin(); it != a.end(); ++it) {
    if (it->first.ends_with(".log")) continue;
    ++compared;
    const auto other = b.find(it->first);
    c.check(other != b.end() && other->second == it->second, it->first + " differs");
  }
  for (const auto& [name, bytes] : b) c.check(a.contains(name), name + " only in second run");
  for (const auto& [name, bytes] : a) {
    if (name.ends_with(".json") && name != "config.json" &&
        name.find("matrix.cxmt") == std::string::npos) {
      c.check(bytes.find("\"provenance\"") != std::string::npos, name + " lacks provenance");
    }
  }
  return c.outcome(std::to_string(compared) +
                   " artifacts byte-identical across reruns (3 vs 1 workers)");
}

}  // namespace
}  // namespace contrast

int main() {
  using contrast::Outcome;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient oracle", contrast::gradient_oracle},
      {"contrastive identities", contrast::contrastive_identities},
      {"erasure equivalence", contrast::erasure_equivalence},
      {"metric hand-suite", contrast::metric_hand_suite},
      {"trend reproduction", contrast::trend_reproduction},
      {"confusion correctness", contrast::confusion_correctness},
      {"clustering", contrast::clustering},
      {"seq2seq", contrast::seq2seq_checks},
      {"CLI reproducibility", contrast::cli_reproducibility},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s [%zu] %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
