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

#include "contrast/html_report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace contrast {

namespace {

std::string title_line(const SaliencyMap& map, const Vocab& vocab) {
  std::string out = std::string(method_name(map.method)) + " (" +
                    std::string(output_mode_name(map.pair.mode())) + ")";
  if (map.method == Method::Random) return out;
  out += ": why " + html_escape(vocab.token(map.pair.target()));
  if (map.pair.foil()) out += " instead of " + html_escape(vocab.token(*map.pair.foil()));
  return out;
}

std::string page(const std::string& title, const std::string& body, std::string_view provenance) {
  std::string out =
      "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>" + title +
      "</title>\n<style>body{font-family:sans-serif}.tok{padding:2px 4px;margin:1px;"
      "border-radius:3px;display:inline-block}</style>\n</head>\n<body>\n";
  if (!provenance.empty()) {
    std::string safe(provenance);
    for (std::size_t at = safe.find("--"); at != std::string::npos; at = safe.find("--", at)) {
      safe.replace(at, 2, "- -");
    }
    out += "<!-- provenance " + safe + " -->\n";
  }
  out += "<h3>" + title + "</h3>\n" + body + "</body>\n</html>\n";
  return out;
}

}  // namespace

std::string html_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string heat_color(double score, double max_abs) {
  const double alpha = max_abs > 0.0 ? std::min(1.0, std::abs(score) / max_abs) : 0.0;
  char buf[48];
  if (score < 0.0) {
    std::snprintf(buf, sizeof(buf), "rgba(0,0,255,%.3f)", alpha);
  } else {
    std::snprintf(buf, sizeof(buf), "rgba(255,0,0,%.3f)", alpha);
  }
  return buf;
}

std::string heat_spans(std::span<const std::string> tokens, std::span<const double> scores) {
  double max_abs = 0.0;
  for (double s : scores) max_abs = std::max(max_abs, std::abs(s));
  std::string out = "<p>";
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const double s = i < scores.size() ? scores[i] : 0.0;
    char value[32];
    std::snprintf(value, sizeof(value), "%.6g", s);
    out += "<span class=\"tok\" title=\"" + std::string(value) + "\" style=\"background:" +
           heat_color(s, max_abs) + "\">" + html_escape(tokens[i]) + "</span>";
  }
  out += "</p>\n";
  return out;
}

std::string saliency_html(const SaliencyMap& map, const Vocab& vocab,
                          std::string_view provenance) {
  std::vector<std::string> tokens = map.input.surface;
  for (std::size_t i = tokens.size(); i < map.scores.size(); ++i) {
    tokens.push_back("#" + std::to_string(i));
  }
  return page(title_line(map, vocab), heat_spans(tokens, map.scores), provenance);
}

std::string seq2seq_html(const Seq2SeqSaliency& map, const Vocab& vocab,
                         std::string_view provenance) {
  const std::string body = "<h4>source</h4>\n" +
                           heat_spans(map.encoder.input.surface, map.encoder.scores) +
                           "<h4>target prefix</h4>\n" +
                           heat_spans(map.decoder.input.surface, map.decoder.scores);
  return page(title_line(map.encoder, vocab), body, provenance);
}

}  // namespace contrast
