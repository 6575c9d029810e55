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

#ifndef CONTRAST_ALIGN_METRICS_HPP_
#define CONTRAST_ALIGN_METRICS_HPP_

// Agreement between saliency maps and annotated evidence tokens.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "contrast/datagen.hpp"
#include "contrast/language_model.hpp"
#include "contrast/saliency.hpp"
#include "contrast/vocab.hpp"

namespace contrast {

// Binary mask over input positions; 1 marks an evidence token.
using EvidenceVector = std::vector<std::uint8_t>;

// Mask over the prefix that precedes the record's contrast position.
EvidenceVector evidence_mask(const MinimalPairRecord& record);

double dot_product(std::span<const double> scores, const EvidenceVector& evidence);

// Non-evidence tokens ranked above the first evidence token, sorting by
// descending score and then ascending position.
std::size_t probes_needed(std::span<const double> scores, const EvidenceVector& evidence);

inline double reciprocal_rank(std::size_t probes) { return 1.0 / static_cast<double>(probes + 1); }

double mrr(std::span<const std::size_t> probes);

// Mean distance in tokens from the evidence to the contrast position.
double evidence_distance(const MinimalPairRecord& record);

// Sample Pearson correlation.
double pearson(std::span<const double> xs, std::span<const double> ys);

struct AlignmentRecord {
  double dot = 0.0;
  std::size_t probes = 0;
  double reciprocal_rank = 1.0;
};

AlignmentRecord align(std::span<const double> scores, const EvidenceVector& evidence);

struct MethodSummary {
  Method method = Method::GradientInput;
  double mean_dot = 0.0;
  double mean_probes = 0.0;
  double mrr = 0.0;
};

struct SkippedRecord {
  std::string uid;
  std::string reason;
};

struct ParadigmReport {
  Paradigm paradigm = Paradigm::DetNoun;
  std::vector<MethodSummary> methods;  // requested order, RANDOM last
  double mean_distance = 0.0;
  std::size_t sentences = 0;
  std::vector<SkippedRecord> skipped;

  // Throws InvalidArgument when `m` was not evaluated.
  const MethodSummary& summary(Method m) const;
};

struct EvaluateOptions {
  std::vector<Method> methods{Method::GradientNorm, Method::ContrastiveGradientNorm,
                              Method::GradientInput, Method::ContrastiveGradientInput,
                              Method::Erasure, Method::ContrastiveErasure};
  OutputMode mode = OutputMode::Logit;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

// Explains every record at its contrast position with each method plus the
// RANDOM baseline and averages the metrics. Records with out-of-vocabulary
// tokens, too-long prefixes, or a one-token prefix under erasure are listed
// in `skipped`. Throws EmptySet when nothing is left to score and
// ValidationError when records mix paradigms.
ParadigmReport evaluate_paradigm(const LanguageModel& lm, const Vocab& vocab,
                                 const std::vector<MinimalPairRecord>& records,
                                 const EvaluateOptions& options);

// Pearson r between each paradigm's mean evidence distance and the MRR gain
// of the contrastive variant of `method` over the plain one.
double distance_gain_correlation(const std::vector<ParadigmReport>& reports, Method method);

std::string report_to_json(const ParadigmReport& report);
std::string report_to_csv(const ParadigmReport& report);

}  // namespace contrast

#endif  // CONTRAST_ALIGN_METRICS_HPP_
