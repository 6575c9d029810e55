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

#include "contrast/foil_cluster.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "contrast/error.hpp"
#include "contrast/parallel.hpp"
#include "contrast/rng.hpp"
#include "json.hpp"

namespace contrast {
namespace {

using nlohmann::ordered_json;

constexpr char kMatrixMagic[4] = {'C', 'X', 'M', 'T'};

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
  return s;
}

Matrix member_means(const Matrix& data, const std::vector<std::size_t>& assignments,
                    std::size_t k, std::vector<std::size_t>& counts) {
  Matrix sums(k, data.cols());
  counts.assign(k, 0);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto src = data.row(i);
    auto dst = sums.row(assignments[i]);
    for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
    ++counts[assignments[i]];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) continue;
    const double inv = 1.0 / static_cast<double>(counts[c]);
    for (double& v : sums.row(c)) v *= inv;
  }
  return sums;
}

double total_inertia(const Matrix& data, const Matrix& centroids,
                     const std::vector<std::size_t>& assignments) {
  double s = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    s += squared_distance(data.row(i), centroids.row(assignments[i]));
  }
  return s;
}

std::vector<std::size_t> seed_centers(const Matrix& data, std::size_t k, Rng& rng) {
  const std::size_t n = data.rows();
  std::vector<std::size_t> chosen{rng.below(n)};
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(data.row(i), data.row(chosen[0]));
  while (chosen.size() < k) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t pick = n;
    if (total > 0.0) {
      const double r = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        acc += d2[i];
        pick = i;
        if (acc > r) break;
      }
    } else {
      // Every row coincides with a chosen center; take unused rows in order.
      for (std::size_t i = 0; i < n && pick == n; ++i) {
        if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) pick = i;
      }
    }
    chosen.push_back(pick);
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(data.row(i), data.row(pick)));
    }
  }
  return chosen;
}

// Moves rows to strictly closer centroids; returns whether anything moved.
bool reassign(const Matrix& data, const Matrix& centroids, std::vector<std::size_t>& assignments) {
  bool changed = false;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    std::size_t best = assignments[i];
    double best_d = squared_distance(data.row(i), centroids.row(best));
    for (std::size_t c = 0; c < centroids.rows(); ++c) {
      const double d = squared_distance(data.row(i), centroids.row(c));
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    if (best != assignments[i]) {
      assignments[i] = best;
      changed = true;
    }
  }
  return changed;
}

Matrix update_centroids(const Matrix& data, std::vector<std::size_t>& assignments,
                        std::size_t k) {
  std::vector<std::size_t> counts;
  Matrix centroids = member_means(data, assignments, k, counts);
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] != 0) continue;
    std::size_t far = data.rows();
    double far_d = -1.0;
    for (std::size_t i = 0; i < data.rows(); ++i) {
      if (counts[assignments[i]] < 2) continue;
      const double d = squared_distance(data.row(i), centroids.row(assignments[i]));
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    --counts[assignments[far]];
    assignments[far] = c;
    counts[c] = 1;
    centroids = member_means(data, assignments, k, counts);
  }
  return centroids;
}

std::string join_tokens(const Vocab& vocab, const std::vector<TokenId>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) out += ", ";
    out += vocab.token(ids[i]);
  }
  return out;
}

}  // namespace

std::vector<double> explanation_row(const LanguageModel& lm,
                                    const std::vector<TokenizedSequence>& sentences,
                                    const ContrastPair& pair, Method method, bool normalize) {
  if (method != Method::ContrastiveGradientNorm && method != Method::ContrastiveGradientInput) {
    throw Error(ErrorCode::InvalidArgument,
                "foil aggregation supports GN* and GI*, not " + std::string(method_name(method)));
  }
  std::vector<double> row;
  for (const auto& x : sentences) {
    auto scores = explain(lm, x, pair, method).scores;
    if (normalize) {
      double norm = 0.0;
      for (double s : scores) norm += s * s;
      norm = std::sqrt(norm);
      if (norm > 0.0) {
        for (double& s : scores) s /= norm;
      }
    }
    row.insert(row.end(), scores.begin(), scores.end());
  }
  return row;
}

FoilExplanationMatrix aggregate_explanations(const LanguageModel& lm, TokenId target,
                                             const std::vector<TokenId>& foils,
                                             const std::vector<TokenizedSequence>& sentences,
                                             Method method, bool normalize, OutputMode mode,
                                             std::size_t workers) {
  if (foils.empty()) throw Error(ErrorCode::EmptyFoilSet, "no foils to aggregate");
  if (sentences.empty()) throw Error(ErrorCode::EmptySet, "no sentences to explain");
  std::vector<ContrastPair> pairs;
  for (TokenId f : foils) pairs.push_back(ContrastPair::make(target, f, mode));
  FoilExplanationMatrix m;
  m.target = target;
  m.foils = foils;
  m.method = method;
  m.mode = mode;
  m.normalized = normalize;
  std::size_t width = 0;
  for (const auto& s : sentences) {
    m.sentence_lengths.push_back(s.size());
    width += s.size();
  }
  m.rows = Matrix(foils.size(), width);
  parallel_for(foils.size(), workers, [&](std::size_t i) {
    const auto row = explanation_row(lm, sentences, pairs[i], method, normalize);
    std::copy(row.begin(), row.end(), m.rows.row(i).begin());
  });
  return m;
}

KMeansResult kmeans(const Matrix& data, const KMeansOptions& options) {
  if (options.k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  if (options.k > data.rows()) {
    throw Error(ErrorCode::TooFewRows, "k = " + std::to_string(options.k) + " but only " +
                                           std::to_string(data.rows()) + " rows");
  }
  const std::size_t k = options.k;
  Rng rng(options.seed);
  const auto centers = seed_centers(data, k, rng);
  KMeansResult r;
  r.centroids = Matrix(k, data.cols());
  for (std::size_t c = 0; c < k; ++c) {
    std::copy(data.row(centers[c]).begin(), data.row(centers[c]).end(), r.centroids.row(c).begin());
  }
  r.assignments.assign(data.rows(), 0);
  reassign(data, r.centroids, r.assignments);
  r.inertia = total_inertia(data, r.centroids, r.assignments);
  r.inertia_history.push_back(r.inertia);

  while (r.iterations < options.max_iters) {
    r.centroids = update_centroids(data, r.assignments, k);
    const bool changed = reassign(data, r.centroids, r.assignments);
    const double previous = r.inertia;
    r.inertia = total_inertia(data, r.centroids, r.assignments);
    r.inertia_history.push_back(r.inertia);
    ++r.iterations;
    if (!changed || previous - r.inertia <= options.tol * previous) break;
  }
  std::vector<std::size_t> counts;
  r.centroids = member_means(data, r.assignments, k, counts);
  const double final_inertia = total_inertia(data, r.centroids, r.assignments);
  if (final_inertia < r.inertia) r.inertia_history.push_back(final_inertia);
  r.inertia = std::min(r.inertia, final_inertia);
  return r;
}

double minkowski_distance(std::span<const double> a, std::span<const double> b, double p) {
  if (!(p >= 1.0)) throw Error(ErrorCode::InvalidArgument, "Minkowski order must be >= 1");
  if (a.size() != b.size()) {
    throw Error(ErrorCode::LengthMismatch, "vectors differ in length");
  }
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += std::pow(std::abs(a[j] - b[j]), p);
  return std::pow(s, 1.0 / p);
}

NeighborList embedding_neighbors(const LanguageModel& lm, TokenId anchor, std::size_t n,
                                 double p) {
  if (anchor >= lm.vocab_size()) {
    throw Error(ErrorCode::InvalidToken, "token id " + std::to_string(anchor) + " out of range");
  }
  if (!(p >= 1.0)) throw Error(ErrorCode::InvalidArgument, "Minkowski order must be >= 1");
  std::vector<TokenId> all(lm.vocab_size());
  std::iota(all.begin(), all.end(), TokenId{0});
  const Matrix table = lm.embed(all);
  NeighborList out;
  out.anchor = anchor;
  for (TokenId t = 0; t < all.size(); ++t) {
    if (t == anchor) continue;
    out.neighbors.push_back({t, minkowski_distance(table.row(anchor), table.row(t), p)});
  }
  std::stable_sort(out.neighbors.begin(), out.neighbors.end(),
                   [](const Neighbor& a, const Neighbor& b) { return a.distance < b.distance; });
  if (out.neighbors.size() > n) out.neighbors.resize(n);
  return out;
}

ClusterReport cluster_foils(const FoilExplanationMatrix& matrix, const Vocab& vocab,
                            const KMeansOptions& options) {
  const KMeansResult km = kmeans(matrix.rows, options);
  ClusterReport report;
  report.target = matrix.target;
  report.foils = matrix.foils;
  report.assignments = km.assignments;
  report.centroids = km.centroids;
  report.inertia = km.inertia;
  for (std::size_t c = 0; c < options.k; ++c) {
    FoilCluster cluster;
    for (std::size_t i = 0; i < matrix.foils.size(); ++i) {
      if (km.assignments[i] == c) cluster.foils.push_back(matrix.foils[i]);
    }
    if (cluster.foils.empty()) continue;
    std::stable_sort(cluster.foils.begin(), cluster.foils.end(), [&](TokenId a, TokenId b) {
      const auto fa = vocab.frequency(a), fb = vocab.frequency(b);
      return fa != fb ? fa > fb : a < b;
    });
    report.clusters.push_back(std::move(cluster));
  }
  return report;
}

void attach_head_neighbors(ClusterReport& report, const LanguageModel& lm, std::size_t n,
                           double p) {
  report.head_neighbors.clear();
  for (const auto& c : report.clusters) {
    report.head_neighbors.push_back(embedding_neighbors(lm, c.head(), n, p));
  }
}

std::string cluster_report_to_json(const ClusterReport& report, const Vocab& vocab,
                                   std::size_t top) {
  ordered_json j;
  j["target"] = vocab.token(report.target);
  j["num_foils"] = report.foils.size();
  j["inertia"] = report.inertia;
  ordered_json clusters = ordered_json::array();
  for (std::size_t c = 0; c < report.clusters.size(); ++c) {
    const auto& cl = report.clusters[c];
    ordered_json entry;
    entry["head"] = vocab.token(cl.head());
    entry["size"] = cl.foils.size();
    ordered_json foils = ordered_json::array();
    for (std::size_t i = 0; i < cl.foils.size() && i < top; ++i) {
      foils.push_back(vocab.token(cl.foils[i]));
    }
    entry["foils"] = foils;
    if (c < report.head_neighbors.size()) {
      ordered_json nb = ordered_json::array();
      for (const auto& n : report.head_neighbors[c].neighbors) {
        nb.push_back({{"token", vocab.token(n.token)}, {"distance", n.distance}});
      }
      entry["head_neighbors"] = nb;
    }
    clusters.push_back(entry);
  }
  j["clusters"] = clusters;
  ordered_json assignments = ordered_json::object();
  for (std::size_t i = 0; i < report.foils.size(); ++i) {
    assignments[vocab.token(report.foils[i])] = report.assignments[i];
  }
  j["assignments"] = assignments;
  return j.dump(2);
}

std::string cluster_report_to_text(const ClusterReport& report, const Vocab& vocab,
                                   std::size_t top) {
  std::string out = "target: " + vocab.token(report.target) + "\n";
  for (std::size_t c = 0; c < report.clusters.size(); ++c) {
    const auto& cl = report.clusters[c];
    const std::vector<TokenId> shown(
        cl.foils.begin(), cl.foils.begin() + static_cast<std::ptrdiff_t>(std::min(top, cl.foils.size())));
    out += "cluster " + std::to_string(c + 1) + " (" + std::to_string(cl.foils.size()) +
           " foils): " + join_tokens(vocab, shown) + "\n";
    if (c < report.head_neighbors.size()) {
      std::vector<TokenId> nb;
      for (const auto& n : report.head_neighbors[c].neighbors) nb.push_back(n.token);
      out += "  neighbors of " + vocab.token(cl.head()) + ": " + join_tokens(vocab, nb) +
             "\n";
    }
  }
  return out;
}

void save_explanation_matrix(const std::filesystem::path& path, const FoilExplanationMatrix& m,
                             const Vocab& vocab, std::uint64_t inputs_hash) {
  std::string bytes(kMatrixMagic, 4);
  auto put_u64 = [&](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  };
  put_u64(m.rows.rows());
  put_u64(m.rows.cols());
  for (double v : m.rows.values()) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    put_u64(bits);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());

  ordered_json side;
  side["target"] = vocab.token(m.target);
  std::vector<std::string> foils;
  for (TokenId f : m.foils) foils.push_back(vocab.token(f));
  side["foils"] = foils;
  side["sentence_lengths"] = m.sentence_lengths;
  side["method"] = std::string(method_name(m.method));
  side["mode"] = std::string(output_mode_name(m.mode));
  side["normalized"] = m.normalized;
  side["rows"] = m.rows.rows();
  side["cols"] = m.rows.cols();
  side["inputs_hash"] = inputs_hash;
  std::ofstream sidecar(path.string() + ".json", std::ios::binary | std::ios::trunc);
  if (!sidecar) throw Error(ErrorCode::Io, "cannot open " + path.string() + ".json for writing");
  sidecar << side.dump(2) << '\n';
  if (!sidecar) throw Error(ErrorCode::Io, "failed writing " + path.string() + ".json");
}

FoilExplanationMatrix load_explanation_matrix(const std::filesystem::path& path,
                                              const Vocab& vocab) {
  std::ifstream in(path, std::ios::binary);
  std::ifstream side_in(path.string() + ".json", std::ios::binary);
  if (!in || !side_in) throw Error(ErrorCode::Io, "cannot open matrix " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), {});
  if (bytes.size() < 20 || bytes.compare(0, 4, kMatrixMagic, 4) != 0) {
    throw Error(ErrorCode::FormatVersionMismatch, path.string() + " is not a matrix file");
  }
  auto get_u64 = [&](std::size_t at) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[at + i])) << (8 * i);
    }
    return v;
  };
  const std::size_t rows = get_u64(4), cols = get_u64(12);
  if (bytes.size() != 20 + 8 * rows * cols) {
    throw Error(ErrorCode::Io, path.string() + " is truncated");
  }
  FoilExplanationMatrix m;
  m.rows = Matrix(rows, cols);
  for (std::size_t i = 0; i < rows * cols; ++i) {
    const std::uint64_t bits = get_u64(20 + 8 * i);
    std::memcpy(&m.rows.values()[i], &bits, sizeof bits);
  }
  try {
    const auto side = nlohmann::json::parse(side_in);
    m.target = vocab.id(side.at("target").get<std::string>());
    for (const auto& f : side.at("foils")) m.foils.push_back(vocab.id(f.get<std::string>()));
    m.sentence_lengths = side.at("sentence_lengths").get<std::vector<std::size_t>>();
    m.method = parse_method(side.at("method").get<std::string>());
    m.mode = parse_output_mode(side.at("mode").get<std::string>());
    m.normalized = side.at("normalized").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ".json: " + e.what());
  }
  if (m.foils.size() != rows ||
      std::accumulate(m.sentence_lengths.begin(), m.sentence_lengths.end(), std::size_t{0}) !=
          cols) {
    throw Error(ErrorCode::ValidationError, path.string() + ": sidecar does not match the tensor");
  }
  return m;
}

std::optional<std::uint64_t> saved_inputs_hash(const std::filesystem::path& path) {
  std::ifstream side_in(path.string() + ".json", std::ios::binary);
  if (!side_in || !std::filesystem::exists(path)) return std::nullopt;
  try {
    return nlohmann::json::parse(side_in).at("inputs_hash").get<std::uint64_t>();
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

}  // namespace contrast
