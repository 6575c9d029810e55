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

#ifndef CONTRAST_HTML_REPORT_HPP_
#define CONTRAST_HTML_REPORT_HPP_

#include <span>
#include <string>
#include <string_view>

#include "contrast/saliency.hpp"
#include "contrast/vocab.hpp"

namespace contrast {

// CSS background for one token: red for positive scores, blue for negative,
// with opacity |score| / max_abs. A zero max_abs yields a transparent (white)
// cell. Opacity is printed with three decimals.
std::string heat_color(double score, double max_abs);

// Inline-styled spans, one per token, sharing the normalization of `scores`.
std::string heat_spans(std::span<const std::string> tokens, std::span<const double> scores);

// Self-contained HTML page for one saliency map. `provenance` is embedded
// verbatim inside an HTML comment when non-empty.
std::string saliency_html(const SaliencyMap& map, const Vocab& vocab,
                          std::string_view provenance = {});

// Encoder and decoder rows are normalized separately.
std::string seq2seq_html(const Seq2SeqSaliency& map, const Vocab& vocab,
                         std::string_view provenance = {});

std::string html_escape(std::string_view text);

}  // namespace contrast

#endif  // CONTRAST_HTML_REPORT_HPP_
