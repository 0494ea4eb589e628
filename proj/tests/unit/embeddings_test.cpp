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
#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "cmam/corpus.hpp"
#include "cmam/embeddings.hpp"
#include "cmam/errors.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace cmam;

namespace {

double cosine(std::span<const double> a, std::span<const double> b) {
  return dot(a, b) / (l2_norm(a) * l2_norm(b));
}

// Corpus of two disjoint co-occurrence pairs: {a,b} and {c,d}.
struct PairCorpus {
  Vocabulary vocab;
  std::vector<EncodedSentence> sentences;
};

PairCorpus make_pair_corpus(std::size_t repeats) {
  std::vector<std::vector<std::string>> raw;
  for (std::size_t i = 0; i < repeats; ++i) {
    raw.push_back({"a", "b"});
    raw.push_back({"c", "d"});
  }
  PairCorpus out;
  out.vocab = build_vocabulary(raw, 100, 1);
  for (auto& tokens : raw) out.sentences.push_back(encode(tokens, out.vocab));
  return out;
}

}  // namespace

TEST_CASE("unigram sampler tracks freq^0.75 within 5% over 1e6 draws") {
  const std::vector<std::size_t> freq{0, 50, 30, 20, 100};
  const UnigramSampler sampler(freq);

  double total = 0.0;
  for (std::size_t f : freq) total += std::pow(static_cast<double>(f), 0.75);
  for (std::size_t i = 0; i < freq.size(); ++i) {
    const double expected = std::pow(static_cast<double>(freq[i]), 0.75) / total;
    CHECK(sampler.weights()[i] == doctest::Approx(expected).epsilon(1e-12));
  }

  Rng rng(123);
  std::vector<std::size_t> hits(freq.size(), 0);
  const std::size_t draws = 1000000;
  for (std::size_t i = 0; i < draws; ++i) ++hits[sampler.sample(rng)];

  CHECK(hits[0] == 0);  // zero-frequency ids are never drawn
  for (std::size_t i = 1; i < freq.size(); ++i) {
    const double observed = static_cast<double>(hits[i]) / draws;
    const double expected = sampler.weights()[i];
    CHECK(std::fabs(observed - expected) / expected < 0.05);
  }
}

TEST_CASE("unigram sampler rejects an all-zero table") {
  CHECK_THROWS_AS(UnigramSampler({0, 0, 0}), config_error);
  CHECK_THROWS_AS(UnigramSampler({}), config_error);
}

TEST_CASE("skip-gram separates disjoint co-occurrence clusters") {
  const PairCorpus corpus = make_pair_corpus(300);
  SkipgramConfig cfg;
  cfg.dim = 16;
  cfg.negatives = 5;
  cfg.epochs = 10;
  cfg.lr = 0.05;
  cfg.seed = 3;
  const Matrix emb = train_skipgram(corpus.sentences, corpus.vocab, cfg);

  const std::size_t a = corpus.vocab.id_of("a");
  const std::size_t b = corpus.vocab.id_of("b");
  const std::size_t c = corpus.vocab.id_of("c");
  CHECK(cosine(emb.row(a), emb.row(b)) > cosine(emb.row(a), emb.row(c)));
}

TEST_CASE("skip-gram window clamps to the sentence on 2-token input") {
  // Both window sizes enumerate exactly the pairs {(a,b),(b,a)}, so the
  // trained matrices agree bit for bit.
  const PairCorpus corpus = make_pair_corpus(20);
  SkipgramConfig narrow;
  narrow.dim = 8;
  narrow.window = 1;
  narrow.epochs = 2;
  narrow.seed = 9;
  SkipgramConfig wide = narrow;
  wide.window = 10;

  const Matrix m1 = train_skipgram(corpus.sentences, corpus.vocab, narrow);
  const Matrix m2 = train_skipgram(corpus.sentences, corpus.vocab, wide);
  CHECK(m1.data == m2.data);
}

TEST_CASE("skip-gram is deterministic per seed in single-thread mode") {
  const PairCorpus corpus = make_pair_corpus(50);
  SkipgramConfig cfg;
  cfg.dim = 12;
  cfg.epochs = 3;
  cfg.seed = 21;
  const Matrix m1 = train_skipgram(corpus.sentences, corpus.vocab, cfg);
  const Matrix m2 = train_skipgram(corpus.sentences, corpus.vocab, cfg);
  CHECK(m1.data == m2.data);

  cfg.seed = 22;
  const Matrix m3 = train_skipgram(corpus.sentences, corpus.vocab, cfg);
  CHECK(m1.data != m3.data);
}

TEST_CASE("skip-gram rejects an empty corpus") {
  const PairCorpus corpus = make_pair_corpus(1);
  CHECK_THROWS_AS(train_skipgram({}, corpus.vocab, SkipgramConfig{}),
                  config_error);
}

TEST_CASE("embedding save/load round-trips bit-exactly") {
  testutil::TempDir dir("emb");
  const Vocabulary vocab = build_vocabulary({{"a", "a", "b"}}, 10, 1);
  Rng rng(5);
  const Matrix values = testutil::random_matrix(vocab.size(), 7, 2.0, rng);
  save_embeddings(values, vocab, dir.file("emb.txt"));

  const LoadedEmbeddings loaded =
      load_embeddings(dir.file("emb.txt"), vocab, 77);
  CHECK(loaded.missing_tokens == 0);
  CHECK(loaded.values.data == values.data);
}

TEST_CASE("embedding load fills vocabulary gaps from the seed") {
  testutil::TempDir dir("embgap");
  testutil::write_file(dir.file("emb.txt"),
                       "2 3\n"
                       "unknown 0 0 0\n"
                       "a 1 2 3\n");
  const Vocabulary vocab = build_vocabulary({{"a", "a", "b"}}, 10, 1);
  const LoadedEmbeddings loaded =
      load_embeddings(dir.file("emb.txt"), vocab, 77);
  CHECK(loaded.missing_tokens == 1);
  CHECK(loaded.values.rows == vocab.size());
  const std::size_t b = vocab.id_of("b");
  for (double v : loaded.values.row(b)) {
    CHECK(std::fabs(v) <= 0.05);
  }
  // Same seed reproduces the same fill values.
  const LoadedEmbeddings again =
      load_embeddings(dir.file("emb.txt"), vocab, 77);
  CHECK(again.values.data == loaded.values.data);
}

TEST_CASE("embedding load rejects malformed input") {
  testutil::TempDir dir("embbad");
  const Vocabulary vocab = build_vocabulary({{"a", "a"}}, 10, 1);
  testutil::write_file(dir.file("head.txt"), "not a header\n");
  CHECK_THROWS_AS(load_embeddings(dir.file("head.txt"), vocab, 1), io_error);
  testutil::write_file(dir.file("dim.txt"), "1 3\na 1 2\n");
  CHECK_THROWS_AS(load_embeddings(dir.file("dim.txt"), vocab, 1), io_error);
  CHECK_THROWS_AS(load_embeddings(dir.file("missing.txt"), vocab, 1),
                  io_error);
}

TEST_CASE("kmeans recovers two well-separated 2-D clusters") {
  Matrix points(4, 2);
  points(0, 0) = 0;  points(0, 1) = 0;
  points(1, 0) = 0;  points(1, 1) = 1;
  points(2, 0) = 10; points(2, 1) = 10;
  points(3, 0) = 10; points(3, 1) = 11;

  const KmeansResult result = kmeans(points, 2, 100, 4);
  REQUIRE(result.centroids.rows == 2);
  // Order of the two centroids is seed-dependent; match as a set.
  std::set<std::pair<double, double>> got;
  for (std::size_t j = 0; j < 2; ++j) {
    got.insert({result.centroids(j, 0), result.centroids(j, 1)});
  }
  const std::set<std::pair<double, double>> want{{0.0, 0.5}, {10.0, 10.5}};
  CHECK(got == want);
  CHECK(result.assignments[0] == result.assignments[1]);
  CHECK(result.assignments[2] == result.assignments[3]);
  CHECK(result.assignments[0] != result.assignments[2]);
  CHECK(result.inertia == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("kmeans with k equal to the point count is exact") {
  Rng rng(8);
  const Matrix points = testutil::random_matrix(5, 3, 1.0, rng);
  const KmeansResult result = kmeans(points, 5, 100, 2);
  CHECK(result.inertia == doctest::Approx(0.0).epsilon(1e-15));
  std::set<std::vector<double>> centroid_rows;
  for (std::size_t j = 0; j < 5; ++j) {
    auto row = result.centroids.row(j);
    centroid_rows.insert(std::vector<double>(row.begin(), row.end()));
  }
  CHECK(centroid_rows.size() == 5);  // each centroid is a distinct point
}

TEST_CASE("kmeans handles all-identical points by re-seeding") {
  Matrix points(4, 2, 3.5);
  const KmeansResult result = kmeans(points, 2, 100, 1);
  CHECK(result.inertia == 0.0);
  CHECK(result.reseeded > 0);
  CHECK(result.centroids(0, 0) == 3.5);
  CHECK(result.centroids(1, 0) == 3.5);
}

TEST_CASE("kmeans inertia matches a direct recomputation") {
  Rng rng(14);
  const Matrix points = testutil::random_matrix(40, 4, 1.0, rng);
  const KmeansResult result = kmeans(points, 5, 100, 6);
  double inertia = 0.0;
  for (std::size_t i = 0; i < points.rows; ++i) {
    const auto c = result.centroids.row(result.assignments[i]);
    for (std::size_t col = 0; col < points.cols; ++col) {
      const double diff = points(i, col) - c[col];
      inertia += diff * diff;
    }
  }
  CHECK(result.inertia == doctest::Approx(inertia).epsilon(1e-9));
  // Every assignment is the argmin centroid (ties to the lower index).
  for (std::size_t i = 0; i < points.rows; ++i) {
    double best = 1e300;
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < result.centroids.rows; ++j) {
      double d2 = 0.0;
      for (std::size_t col = 0; col < points.cols; ++col) {
        const double diff = points(i, col) - result.centroids(j, col);
        d2 += diff * diff;
      }
      if (d2 < best) {
        best = d2;
        best_j = j;
      }
    }
    CHECK(result.assignments[i] == best_j);
  }
}

TEST_CASE("kmeans rejects more clusters than points") {
  Matrix points(2, 2, 1.0);
  CHECK_THROWS_AS(kmeans(points, 3, 10, 1), config_error);
}

TEST_CASE("init_aspects returns unit-norm centroid rows") {
  Rng rng(31);
  const Matrix emb = testutil::random_matrix(50, 6, 1.0, rng);
  const Matrix aem = init_aspects(emb, 4, 9);
  REQUIRE(aem.rows == 4);
  REQUIRE(aem.cols == 6);
  for (std::size_t j = 0; j < aem.rows; ++j) {
    CHECK(l2_norm(aem.row(j)) == doctest::Approx(1.0).epsilon(1e-12));
  }
}
