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

#include "contrast/align_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "contrast/error.hpp"
#include "contrast/parallel.hpp"
#include "contrast/rng.hpp"
#include "json.hpp"

namespace contrast {
namespace {

void check_lengths(std::size_t scores, std::size_t evidence) {
  if (scores != evidence) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(scores) + " scores but " +
                                               std::to_string(evidence) + " evidence entries");
  }
}

struct RecordResult {
  std::optional<std::string> skip_reason;
  std::vector<AlignmentRecord> per_method;
  double distance = 0.0;
};

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

EvidenceVector evidence_mask(const MinimalPairRecord& record) {
  record.validate();
  EvidenceVector mask(record.contrast_index, 0);
  for (std::size_t e : record.evidence) mask[e] = 1;
  return mask;
}

double dot_product(std::span<const double> scores, const EvidenceVector& evidence) {
  check_lengths(scores.size(), evidence.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (evidence[i] != 0) sum += scores[i];
  }
  return sum;
}

std::size_t probes_needed(std::span<const double> scores, const EvidenceVector& evidence) {
  check_lengths(scores.size(), evidence.size());
  if (std::none_of(evidence.begin(), evidence.end(), [](std::uint8_t e) { return e != 0; })) {
    throw Error(ErrorCode::NoEvidence, "evidence mask has no marked token");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::size_t probes = 0;
  for (std::size_t i : order) {
    if (evidence[i] != 0) break;
    ++probes;
  }
  return probes;
}

double mrr(std::span<const std::size_t> probes) {
  if (probes.empty()) throw Error(ErrorCode::EmptySet, "no records for MRR");
  double sum = 0.0;
  for (std::size_t p : probes) sum += reciprocal_rank(p);
  return sum / static_cast<double>(probes.size());
}

double evidence_distance(const MinimalPairRecord& record) {
  if (record.evidence.empty()) {
    throw Error(ErrorCode::NoEvidence, "record " + record.uid + " has no evidence");
  }
  double sum = 0.0;
  for (std::size_t e : record.evidence) {
    if (e >= record.contrast_index) {
      throw Error(ErrorCode::ValidationError,
                  "record " + record.uid + ": evidence not before the contrast position");
    }
    sum += static_cast<double>(record.contrast_index - e);
  }
  return sum / static_cast<double>(record.evidence.size());
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  check_lengths(xs.size(), ys.size());
  if (xs.size() < 2) throw Error(ErrorCode::DegenerateVariance, "need at least two points");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw Error(ErrorCode::DegenerateVariance, "a variable has zero variance");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

AlignmentRecord align(std::span<const double> scores, const EvidenceVector& evidence) {
  AlignmentRecord r;
  r.dot = dot_product(scores, evidence);
  r.probes = probes_needed(scores, evidence);
  r.reciprocal_rank = reciprocal_rank(r.probes);
  return r;
}

const MethodSummary& ParadigmReport::summary(Method m) const {
  for (const auto& s : methods) {
    if (s.method == m) return s;
  }
  throw Error(ErrorCode::InvalidArgument,
              std::string(method_name(m)) + " was not evaluated for " +
                  std::string(paradigm_name(paradigm)));
}

ParadigmReport evaluate_paradigm(const LanguageModel& lm, const Vocab& vocab,
                                 const std::vector<MinimalPairRecord>& records,
                                 const EvaluateOptions& options) {
  if (records.empty()) throw Error(ErrorCode::EmptySet, "no records to evaluate");
  for (const auto& r : records) {
    if (r.paradigm != records.front().paradigm) {
      throw Error(ErrorCode::ValidationError, "records mix paradigms " +
                                                  std::string(paradigm_name(r.paradigm)) +
                                                  " and " +
                                                  std::string(paradigm_name(records.front().paradigm)));
    }
    r.validate();
  }
  std::vector<Method> methods;
  for (Method m : options.methods) {
    if (m != Method::Random && std::find(methods.begin(), methods.end(), m) == methods.end()) {
      methods.push_back(m);
    }
  }
  methods.push_back(Method::Random);
  const bool needs_two = std::any_of(methods.begin(), methods.end(), [](Method m) {
    return base_method(m) == Method::Erasure;
  });

  std::vector<RecordResult> results(records.size());
  parallel_for(records.size(), options.workers, [&](std::size_t i) {
    const MinimalPairRecord& r = records[i];
    RecordResult& out = results[i];
    std::vector<std::string> prefix(r.tokens.begin(),
                                    r.tokens.begin() + static_cast<std::ptrdiff_t>(r.contrast_index));
    TokenizedSequence x;
    ContrastPair pair = ContrastPair::unchecked(0, std::nullopt);
    try {
      x = tokenize(prefix, vocab);
      pair = ContrastPair::make(vocab.id(r.target), vocab.id(r.foil), options.mode);
      check_sequence(lm, x.ids);
    } catch (const Error& e) {
      out.skip_reason = e.what();
      return;
    }
    if (needs_two && x.size() < 2) {
      out.skip_reason = "prefix of one token cannot be erased";
      return;
    }
    const EvidenceVector mask = evidence_mask(r);
    out.distance = evidence_distance(r);
    for (Method m : methods) {
      const SaliencyMap s = explain(lm, x, pair, m, mix_seed(options.seed, i));
      out.per_method.push_back(align(s.scores, mask));
    }
  });

  ParadigmReport report;
  report.paradigm = records.front().paradigm;
  std::vector<std::vector<std::size_t>> probes(methods.size());
  std::vector<double> dot_sum(methods.size(), 0.0);
  double distance_sum = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const RecordResult& res = results[i];
    if (res.skip_reason) {
      report.skipped.push_back({records[i].uid, *res.skip_reason});
      continue;
    }
    ++report.sentences;
    distance_sum += res.distance;
    for (std::size_t m = 0; m < methods.size(); ++m) {
      dot_sum[m] += res.per_method[m].dot;
      probes[m].push_back(res.per_method[m].probes);
    }
  }
  if (report.sentences == 0) {
    throw Error(ErrorCode::EmptySet, "all " + std::to_string(records.size()) +
                                         " records were skipped; first reason: " +
                                         report.skipped.front().reason);
  }
  const double n = static_cast<double>(report.sentences);
  report.mean_distance = distance_sum / n;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    MethodSummary s;
    s.method = methods[m];
    s.mean_dot = dot_sum[m] / n;
    s.mean_probes =
        static_cast<double>(std::accumulate(probes[m].begin(), probes[m].end(), std::size_t{0})) / n;
    s.mrr = mrr(probes[m]);
    report.methods.push_back(s);
  }
  return report;
}

double distance_gain_correlation(const std::vector<ParadigmReport>& reports, Method method) {
  if (reports.size() < 2) {
    throw Error(ErrorCode::DegenerateVariance, "need at least two paradigms");
  }
  const Method plain = base_method(method);
  const Method contrastive = contrastive_counterpart(plain);
  std::vector<double> distances, gains;
  for (const auto& r : reports) {
    distances.push_back(r.mean_distance);
    gains.push_back(r.summary(contrastive).mrr - r.summary(plain).mrr);
  }
  return pearson(distances, gains);
}

std::string report_to_json(const ParadigmReport& report) {
  nlohmann::ordered_json j;
  j["paradigm"] = std::string(paradigm_name(report.paradigm));
  j["dist"] = report.mean_distance;
  j["sentences"] = report.sentences;
  nlohmann::ordered_json methods = nlohmann::ordered_json::object();
  for (const auto& s : report.methods) {
    nlohmann::ordered_json m;
    m["Dot Product"] = s.mean_dot;
    m["Probes Needed"] = s.mean_probes;
    m["MRR"] = s.mrr;
    methods[std::string(method_name(s.method))] = m;
  }
  j["methods"] = methods;
  nlohmann::ordered_json skipped = nlohmann::ordered_json::array();
  for (const auto& s : report.skipped) skipped.push_back({{"uid", s.uid}, {"reason", s.reason}});
  j["skipped"] = skipped;
  return j.dump(2);
}

std::string report_to_csv(const ParadigmReport& report) {
  std::string out = "paradigm,method,Dot Product,Probes Needed,MRR,dist,sentences\n";
  for (const auto& s : report.methods) {
    out += std::string(paradigm_name(report.paradigm)) + "," + std::string(method_name(s.method)) +
           "," + format_number(s.mean_dot) + "," + format_number(s.mean_probes) + "," +
           format_number(s.mrr) + "," + format_number(report.mean_distance) + "," +
           std::to_string(report.sentences) + "\n";
  }
  return out;
}

}  // namespace contrast
