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
#include <span>
#include <string>
#include <vector>

#include "cmam/corpus.hpp"
#include "cmam/matrix.hpp"
#include "cmam/model.hpp"
#include "cmam/rng.hpp"

namespace cmam {

struct LossBreakdown {
  double h = 0.0;  // hinge reconstruction
  double u = 0.0;  // offset orthogonality
  double t = 0.0;  // triplet-like aspect spreading
  double total = 0.0;  // always exactly h + u + t
};

struct TrainConfig {
  std::size_t epochs = 5;
  std::size_t batch_size = 64;
  double lr = 0.0005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double lambda = 0.5;          // orthogonality weight
  double ortho_offset_s = 0.3;  // penalty-free band below this norm
  std::size_t negatives_per_sample = 20;
  bool tlas_enabled = true;
  // Multiplies the spreading term and its gradients when tlas_enabled; the
  // ablation-consistency check compares tlas_scale=0 against tlas_enabled=
  // false for bit-identical trajectories.
  double tlas_scale = 1.0;
  std::uint64_t seed = 1;
  std::size_t threads = 1;  // per-batch evaluation fan-out; results identical
  std::string checkpoint_dir;  // per-epoch checkpoints when non-empty
  std::string log_path;        // CSV loss log when non-empty
};

// H = sum_i max(0, 1 - rs.ts + rs.n_i), margin fixed at 1. Each negative is
// a sampled sentence's mean word embedding.
double hinge_loss(std::span<const double> rs, std::span<const double> ts,
                  const Matrix& negatives);

// U = lambda * max(0, ||Ahat Ahat^T - I||_F - s) with Ahat the row-normalized
// aem. Throws numeric_error on a zero row.
double ortho_loss(const Matrix& aem, double lambda, double s);

// T = max(0, 1 + ||as_rows[j] - aem[j]|| - ||as_rows[j] - as_rows[l]||) with
// j, l the top-2 indices of p (ties to the lower index). Requires K >= 2.
double tlas_loss(const ForwardState& state, const Matrix& aem);

// Indices of the two largest values, ties broken by lower index.
std::pair<std::size_t, std::size_t> top_two(std::span<const double> p);

// total = h + u + t exactly; t is 0 when tlas_enabled is false, otherwise
// tlas_scale * tlas_loss.
LossBreakdown total_loss(const ForwardState& state, const Matrix& negatives,
                         const Matrix& aem, const TrainConfig& cfg);

// Which loss term the gradient is taken of; the finite-difference check
// exercises each separately.
enum class LossTerm { kHinge, kOrtho, kTlas, kTotal };

// Exact gradients of the selected term with respect to every learnable
// tensor, routed through model gradients. Shapes match the params.
CmamParams sentence_gradients(const ForwardState& state,
                              const Matrix& negatives,
                              const CmamParams& params, const TrainConfig& cfg,
                              LossTerm term = LossTerm::kTotal);

// Mean word embedding per corpus sentence; rows align with sentence order.
Matrix sentence_means(const std::vector<EncodedSentence>& corpus,
                      const Matrix& embeddings);

// `count` distinct indices into [0, pool_size) excluding `exclude`, uniform
// without replacement. Throws config_error when pool_size <= count.
std::vector<std::size_t> sample_negatives(std::size_t pool_size,
                                          std::size_t exclude,
                                          std::size_t count, Rng& rng);

struct AdamState {
  CmamParams m;  // first moments, zero shapes of the params
  CmamParams v;  // second moments
  std::size_t step = 0;
};
AdamState init_adam(const CmamParams& params);

// Bias-corrected Adam on every learnable tensor. Throws numeric_error naming
// the tensor on a non-finite gradient.
void adam_step(CmamParams& params, const CmamParams& grads, AdamState& state,
               const TrainConfig& cfg);

struct BatchLogEntry {
  std::size_t epoch = 0;  // 1-based
  std::size_t batch = 0;  // 1-based within the epoch
  LossBreakdown loss;     // mean over the batch sentences
};

struct TrainResult {
  CmamParams params;
  std::vector<BatchLogEntry> log;
};

// Shuffles per epoch from cfg.seed, batches of cfg.batch_size with the last
// partial batch kept, negatives pre-sampled sequentially per batch (so the
// trajectory is independent of cfg.threads), Adam step per batch, checkpoint
// per epoch. Aborts with the sentence index on a non-finite loss.
TrainResult train(const std::vector<EncodedSentence>& corpus,
                  const Matrix& embeddings, CmamParams params,
                  const TrainConfig& cfg, std::uint64_t vocab_hash = 0);

// CSV "epoch,batch,h,u,t,total" with full round-trip precision.
void write_loss_log(const std::vector<BatchLogEntry>& log,
                    const std::string& path);

}  // namespace cmam
