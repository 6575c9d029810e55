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

#ifndef CONTRAST_FOIL_CLUSTER_HPP_
#define CONTRAST_FOIL_CLUSTER_HPP_

// Clustering foils by the contrastive explanations they induce, and the
// embedding-space neighbour lists they are compared against.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "contrast/language_model.hpp"
#include "contrast/matrix.hpp"
#include "contrast/saliency.hpp"
#include "contrast/vocab.hpp"

namespace contrast {

struct FoilExplanationMatrix {
  TokenId target = 0;
  std::vector<TokenId> foils;               // row order
  std::vector<std::size_t> sentence_lengths;  // column blocks, in sentence order
  Method method = Method::ContrastiveGradientNorm;
  OutputMode mode = OutputMode::Logit;
  bool normalized = false;
  Matrix rows;  // [foils x sum(sentence_lengths)]
};

// One row: the maps for `pair` over every sentence, concatenated. With
// `normalize`, each sentence's map is scaled to unit L2 norm first (all-zero
// maps stay zero). `method` must be GN* or GI*.
std::vector<double> explanation_row(const LanguageModel& lm,
                                    const std::vector<TokenizedSequence>& sentences,
                                    const ContrastPair& pair, Method method, bool normalize);

// Throws EmptyFoilSet for no foils, SamePair when a foil equals the target,
// InvalidArgument for methods other than GN* and GI*.
FoilExplanationMatrix aggregate_explanations(const LanguageModel& lm, TokenId target,
                                             const std::vector<TokenId>& foils,
                                             const std::vector<TokenizedSequence>& sentences,
                                             Method method, bool normalize,
                                             OutputMode mode = OutputMode::Logit,
                                             std::size_t workers = 1);

struct KMeansOptions {
  std::size_t k = 10;
  std::uint64_t seed = 0;
  std::size_t max_iters = 300;
  double tol = 1e-6;  // stop when inertia improves by less than tol * inertia
};

struct KMeansResult {
  std::vector<std::size_t> assignments;  // per row
  Matrix centroids;                      // [k x cols], each the mean of its rows
  double inertia = 0.0;
  std::vector<double> inertia_history;  // after initialization, then per iteration
  std::size_t iterations = 0;
};

// k-means++ seeding followed by Lloyd iterations. A row whose nearest
// centroids tie stays in its current cluster (the lowest index on the first
// assignment). An emptied cluster is reseeded with the row farthest from its
// centroid. Throws TooFewRows when k exceeds the row count and
// InvalidArgument when k is 0.
KMeansResult kmeans(const Matrix& data, const KMeansOptions& options);

struct Neighbor {
  TokenId token = 0;
  double distance = 0.0;
};

struct NeighborList {
  TokenId anchor = 0;
  std::vector<Neighbor> neighbors;  // ascending distance, ties by token id
};

double minkowski_distance(std::span<const double> a, std::span<const double> b, double p);

// The n tokens whose input embeddings are closest to the anchor's, anchor
// excluded. Throws InvalidToken and InvalidArgument (p < 1).
NeighborList embedding_neighbors(const LanguageModel& lm, TokenId anchor, std::size_t n,
                                 double p = 2.0);

struct FoilCluster {
  std::vector<TokenId> foils;  // descending corpus frequency, ties by token id
  TokenId head() const { return foils.front(); }
};

struct ClusterReport {
  TokenId target = 0;
  std::vector<TokenId> foils;            // matrix row order
  std::vector<std::size_t> assignments;  // per foil
  std::vector<FoilCluster> clusters;     // by cluster id; empty clusters are omitted
  Matrix centroids;
  double inertia = 0.0;
  std::vector<NeighborList> head_neighbors;  // one per cluster, may be empty
};

ClusterReport cluster_foils(const FoilExplanationMatrix& matrix, const Vocab& vocab,
                            const KMeansOptions& options);

// Fills head_neighbors with the n embedding neighbours of each cluster head.
void attach_head_neighbors(ClusterReport& report, const LanguageModel& lm, std::size_t n,
                           double p = 2.0);

// `top` limits how many foils are listed per cluster.
std::string cluster_report_to_json(const ClusterReport& report, const Vocab& vocab,
                                   std::size_t top = 20);
std::string cluster_report_to_text(const ClusterReport& report, const Vocab& vocab,
                                   std::size_t top = 20);

// Binary little-endian f64 tensor at `path` plus `path`.json describing it.
// `inputs_hash` identifies the model and sentences the matrix came from.
void save_explanation_matrix(const std::filesystem::path& path, const FoilExplanationMatrix& m,
                             const Vocab& vocab, std::uint64_t inputs_hash);
FoilExplanationMatrix load_explanation_matrix(const std::filesystem::path& path,
                                              const Vocab& vocab);
// The inputs hash recorded next to a saved matrix, or nullopt when absent.
std::optional<std::uint64_t> saved_inputs_hash(const std::filesystem::path& path);

}  // namespace contrast

#endif  // CONTRAST_FOIL_CLUSTER_HPP_
