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
#include "cmam/embeddings.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <thread>
#include <unordered_map>

#include "cmam/errors.hpp"

namespace cmam {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Matrix access policies for the worker loop: plain single-threaded reads
// and writes, or relaxed atomics so concurrent lock-free updates stay
// defined behavior (updates may still be lost, which hogwild tolerates).
struct PlainAccess {
  static double load(double& x) { return x; }
  static void add(double& x, double delta) { x += delta; }
};

struct RelaxedAccess {
  static double load(double& x) {
    return std::atomic_ref<double>(x).load(std::memory_order_relaxed);
  }
  static void add(double& x, double delta) {
    std::atomic_ref<double> ref(x);
    ref.store(ref.load(std::memory_order_relaxed) + delta,
              std::memory_order_relaxed);
  }
};

template <class Access>
void skipgram_worker(const std::vector<EncodedSentence>& corpus,
                     std::size_t shard_begin, std::size_t shard_end,
                     const SkipgramConfig& cfg, const UnigramSampler& sampler,
                     std::uint64_t rng_seed, std::uint64_t total_steps,
                     std::atomic<std::uint64_t>& processed, Matrix& syn0,
                     Matrix& syn1) {
  const std::size_t d = cfg.dim;
  Rng rng(rng_seed);
  std::vector<double> neu1e(d);
  const double min_lr = cfg.lr * 1e-4;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t si = shard_begin; si < shard_end; ++si) {
      const auto& ids = corpus[si].ids;
      for (std::size_t center = 0; center < ids.size(); ++center) {
        const std::uint64_t done =
            processed.fetch_add(1, std::memory_order_relaxed);
        const double lr =
            std::max(cfg.lr * (1.0 - static_cast<double>(done) /
                                         static_cast<double>(total_steps)),
                     min_lr);
        const std::size_t in = ids[center];
        double* in_row = syn0.row(in).data();
        const std::size_t lo = center > cfg.window ? center - cfg.window : 0;
        const std::size_t hi = std::min(ids.size() - 1, center + cfg.window);
        for (std::size_t ctx = lo; ctx <= hi; ++ctx) {
          if (ctx == center) continue;
          const std::size_t positive = ids[ctx];
          std::fill(neu1e.begin(), neu1e.end(), 0.0);
          for (std::size_t k = 0; k <= cfg.negatives; ++k) {
            std::size_t target;
            double label;
            if (k == 0) {
              target = positive;
              label = 1.0;
            } else {
              target = sampler.sample(rng);
              if (target == positive) continue;
              label = 0.0;
            }
            double* out_row = syn1.row(target).data();
            double f = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
              f += Access::load(in_row[c]) * Access::load(out_row[c]);
            }
            const double g = (label - sigmoid(f)) * lr;
            for (std::size_t c = 0; c < d; ++c) {
              neu1e[c] += g * Access::load(out_row[c]);
            }
            for (std::size_t c = 0; c < d; ++c) {
              Access::add(out_row[c], g * Access::load(in_row[c]));
            }
          }
          for (std::size_t c = 0; c < d; ++c) {
            Access::add(in_row[c], neu1e[c]);
          }
        }
      }
    }
  }
}

double dist2(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    acc += diff * diff;
  }
  return acc;
}

}  // namespace

UnigramSampler::UnigramSampler(const std::vector<std::size_t>& freq,
                               double power) {
  weights_.resize(freq.size());
  double total = 0.0;
  for (std::size_t i = 0; i < freq.size(); ++i) {
    weights_[i] = std::pow(static_cast<double>(freq[i]), power);
    total += weights_[i];
  }
  if (!(total > 0.0)) {
    throw config_error("unigram sampler: empty frequency table");
  }
  cdf_.resize(freq.size());
  double cum = 0.0;
  for (std::size_t i = 0; i < freq.size(); ++i) {
    weights_[i] /= total;
    cum += weights_[i];
    cdf_[i] = cum;
  }
  cdf_.back() = 1.0;
}

std::size_t UnigramSampler::sample(Rng& rng) const {
  const double u = rng.uniform();
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  const auto idx = static_cast<std::size_t>(it - cdf_.begin());
  return std::min(idx, cdf_.size() - 1);
}

Matrix train_skipgram(const std::vector<EncodedSentence>& corpus,
                      const Vocabulary& vocab, const SkipgramConfig& cfg) {
  if (corpus.empty()) throw config_error("skip-gram: empty corpus");
  if (cfg.dim == 0) throw config_error("skip-gram: dim must be >= 1");
  const std::size_t v = vocab.size();
  const std::size_t d = cfg.dim;

  Matrix syn0(v, d);
  Matrix syn1(v, d);
  Rng init_rng(cfg.seed);
  const double half = 0.5 / static_cast<double>(d);
  for (double& x : syn0.data) x = init_rng.uniform(-half, half);

  UnigramSampler sampler(vocab.freq);
  std::uint64_t total_words = 0;
  for (const auto& sentence : corpus) total_words += sentence.ids.size();
  const std::uint64_t total_steps = cfg.epochs * total_words + 1;
  std::atomic<std::uint64_t> processed{0};

  const std::size_t threads = std::max<std::size_t>(1, cfg.threads);
  if (threads == 1) {
    skipgram_worker<PlainAccess>(corpus, 0, corpus.size(), cfg, sampler,
                                 cfg.seed + 1, total_steps, processed, syn0,
                                 syn1);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      const std::size_t begin = corpus.size() * t / threads;
      const std::size_t end = corpus.size() * (t + 1) / threads;
      pool.emplace_back([&, begin, end, t] {
        skipgram_worker<RelaxedAccess>(corpus, begin, end, cfg, sampler,
                                       cfg.seed + 1 + t, total_steps,
                                       processed, syn0, syn1);
      });
    }
    for (auto& th : pool) th.join();
  }

  if (!all_finite(syn0)) {
    throw numeric_error("skip-gram produced non-finite embeddings");
  }
  return syn0;
}

LoadedEmbeddings load_embeddings(const std::string& path,
                                 const Vocabulary& vocab, std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot read embedding file: " + path);
  std::size_t file_v = 0;
  std::size_t file_d = 0;
  if (!(in >> file_v >> file_d) || file_d == 0) {
    throw io_error("malformed embedding header: " + path);
  }
  std::unordered_map<std::string, std::vector<double>> by_token;
  by_token.reserve(file_v);
  for (std::size_t r = 0; r < file_v; ++r) {
    std::string token;
    if (!(in >> token)) {
      throw io_error("truncated embedding file: " + path);
    }
    std::vector<double> row(file_d);
    for (std::size_t c = 0; c < file_d; ++c) {
      if (!(in >> row[c])) {
        throw io_error("embedding dimension mismatch at token \"" + token +
                       "\": " + path);
      }
    }
    by_token[token] = std::move(row);
  }

  LoadedEmbeddings result;
  result.values = Matrix(vocab.size(), file_d);
  Rng rng(seed);
  for (std::size_t id = 0; id < vocab.size(); ++id) {
    const auto it = by_token.find(vocab.id_to_token[id]);
    auto row = result.values.row(id);
    if (it != by_token.end()) {
      std::copy(it->second.begin(), it->second.end(), row.begin());
    } else {
      ++result.missing_tokens;
      for (double& x : row) x = rng.uniform(-0.05, 0.05);
    }
  }
  return result;
}

void save_embeddings(const Matrix& values, const Vocabulary& vocab,
                     const std::string& path) {
  if (values.rows != vocab.size()) {
    throw config_error("embedding row count does not match the vocabulary");
  }
  std::ofstream out(path);
  if (!out) throw io_error("cannot write embedding file: " + path);
  out << values.rows << ' ' << values.cols << '\n';
  char buf[40];
  for (std::size_t id = 0; id < values.rows; ++id) {
    out << vocab.id_to_token[id];
    for (std::size_t c = 0; c < values.cols; ++c) {
      std::snprintf(buf, sizeof buf, " %.17g", values(id, c));
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw io_error("failed writing embedding file: " + path);
}

KmeansResult kmeans(const Matrix& points, std::size_t k,
                    std::size_t max_iters, std::uint64_t seed) {
  const std::size_t v = points.rows;
  const std::size_t d = points.cols;
  if (k == 0) throw config_error("k-means: k must be >= 1");
  if (v < k) {
    throw config_error("k-means: " + std::to_string(v) + " points for k=" +
                       std::to_string(k));
  }
  Rng rng(seed);
  KmeansResult result;
  result.centroids = Matrix(k, d);

  // k-means++ seeding: next seed drawn proportional to the squared distance
  // to the nearest already-chosen seed.
  std::vector<double> best_d2(v, 0.0);
  {
    const std::size_t first = rng.index(v);
    std::copy(points.row(first).begin(), points.row(first).end(),
              result.centroids.row(0).begin());
    for (std::size_t i = 0; i < v; ++i) {
      best_d2[i] = dist2(points.row(i), result.centroids.row(0));
    }
    for (std::size_t j = 1; j < k; ++j) {
      double total = 0.0;
      for (double w : best_d2) total += w;
      std::size_t idx = v - 1;
      if (total > 0.0) {
        const double r = rng.uniform() * total;
        double cum = 0.0;
        for (std::size_t i = 0; i < v; ++i) {
          cum += best_d2[i];
          if (r < cum) {
            idx = i;
            break;
          }
        }
      } else {
        idx = rng.index(v);
      }
      std::copy(points.row(idx).begin(), points.row(idx).end(),
                result.centroids.row(j).begin());
      for (std::size_t i = 0; i < v; ++i) {
        best_d2[i] =
            std::min(best_d2[i], dist2(points.row(i), result.centroids.row(j)));
      }
    }
  }

  result.assignments.assign(v, k);  // k = unassigned sentinel
  std::vector<double> point_d2(v, 0.0);
  std::vector<std::size_t> counts(k, 0);
  double prev_inertia = std::numeric_limits<double>::infinity();

  for (std::size_t iter = 1; iter <= max_iters; ++iter) {
    bool changed = false;
    double inertia = 0.0;
    for (std::size_t i = 0; i < v; ++i) {
      std::size_t best_j = 0;
      double best = dist2(points.row(i), result.centroids.row(0));
      for (std::size_t j = 1; j < k; ++j) {
        const double dd = dist2(points.row(i), result.centroids.row(j));
        if (dd < best) {  // strict: ties stay at the lower index
          best = dd;
          best_j = j;
        }
      }
      inertia += best;
      point_d2[i] = best;
      if (result.assignments[i] != best_j) {
        result.assignments[i] = best_j;
        changed = true;
      }
    }
    if (inertia > prev_inertia + 1e-9 * std::max(1.0, prev_inertia)) {
      throw numeric_error("k-means inertia increased between iterations");
    }
    prev_inertia = inertia;
    result.inertia = inertia;
    result.iterations = iter;

    result.centroids.fill(0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < v; ++i) {
      ++counts[result.assignments[i]];
      axpy(1.0, points.row(i), result.centroids.row(result.assignments[i]));
    }
    bool reseeded_now = false;
    for (std::size_t j = 0; j < k; ++j) {
      if (counts[j] > 0) {
        const double inv = 1.0 / static_cast<double>(counts[j]);
        for (double& x : result.centroids.row(j)) x *= inv;
        continue;
      }
      // Re-seed an empty cluster to the point that currently fits worst.
      std::size_t worst = 0;
      for (std::size_t i = 1; i < v; ++i) {
        if (point_d2[i] > point_d2[worst]) worst = i;
      }
      std::copy(points.row(worst).begin(), points.row(worst).end(),
                result.centroids.row(j).begin());
      result.assignments[worst] = j;
      point_d2[worst] = 0.0;
      ++result.reseeded;
      reseeded_now = true;
    }
    if (!changed && !reseeded_now) break;
  }
  return result;
}

Matrix init_aspects(const Matrix& embeddings, std::size_t k,
                    std::uint64_t seed, std::size_t max_iters) {
  KmeansResult clusters = kmeans(embeddings, k, max_iters, seed);
  Matrix aem = std::move(clusters.centroids);
  for (std::size_t j = 0; j < aem.rows; ++j) {
    const double norm = l2_norm(aem.row(j));
    if (norm == 0.0) {
      throw numeric_error("aspect centroid " + std::to_string(j) +
                          " has zero norm");
    }
    for (double& x : aem.row(j)) x /= norm;
  }
  return aem;
}

}  // namespace cmam
