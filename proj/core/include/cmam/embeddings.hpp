/*
 * Copyright 2026 the cmam authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cmam/corpus.hpp"
#include "cmam/matrix.hpp"
#include "cmam/rng.hpp"

namespace cmam {

struct SkipgramConfig {
  std::size_t dim = 200;
  std::size_t window = 10;      // full window, no random shrink
  std::size_t negatives = 20;
  std::size_t epochs = 5;
  double lr = 0.025;            // linear decay, floored at lr * 1e-4
  std::uint64_t seed = 1;
  std::size_t threads = 1;      // >1: lock-free async updates, nondeterministic
};

// Samples token ids proportional to freq^power via inverse-CDF binary search.
class UnigramSampler {
 public:
  explicit UnigramSampler(const std::vector<std::size_t>& freq,
                          double power = 0.75);
  std::size_t sample(Rng& rng) const;
  const std::vector<double>& weights() const { return weights_; }

 private:
  std::vector<double> weights_;  // normalized freq^power
  std::vector<double> cdf_;
};

// Skip-gram with negative sampling, SGD, returns the input-vector matrix
// (V x dim). Deterministic for a fixed seed when threads == 1.
Matrix train_skipgram(const std::vector<EncodedSentence>& corpus,
                      const Vocabulary& vocab, const SkipgramConfig& cfg);

struct LoadedEmbeddings {
  Matrix values;                   // V x dim, rows aligned to vocabulary ids
  std::size_t missing_tokens = 0;  // vocab tokens absent from the file
};

// word2vec text format: header "V d", then one "token v1 ... vd" per line.
// Missing vocabulary tokens are initialized uniformly in [-0.05, 0.05] from
// the given seed. Values round-trip bit-exactly through save/load.
LoadedEmbeddings load_embeddings(const std::string& path,
                                 const Vocabulary& vocab, std::uint64_t seed);
void save_embeddings(const Matrix& values, const Vocabulary& vocab,
                     const std::string& path);

struct KmeansResult {
  Matrix centroids;                      // k x d, each the mean of its members
  std::vector<std::size_t> assignments;  // per input row
  double inertia = 0.0;                  // sum of squared distances
  std::size_t iterations = 0;
  std::size_t reseeded = 0;              // empty-cluster rescues
};

// Lloyd's algorithm with k-means++ seeding and squared Euclidean distance.
// Nearest-centroid ties break to the lower index. An empty cluster is
// re-seeded to the point currently farthest from its assigned centroid.
// Inertia is asserted non-increasing across iterations.
KmeansResult kmeans(const Matrix& points, std::size_t k,
                    std::size_t max_iters, std::uint64_t seed);

// k x d aspect embedding matrix: k-means centroids over the embedding rows,
// each row L2-normalized (keeps the orthogonality penalty meaningful at
// step 0).
Matrix init_aspects(const Matrix& embeddings, std::size_t k,
                    std::uint64_t seed, std::size_t max_iters = 100);

}  // namespace cmam
