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
#include "cmam/objective.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <thread>
#include <utility>

#include "cmam/errors.hpp"

namespace cmam {

namespace {

// Row-normalized aem, the Gram deviation M - I, and its Frobenius norm;
// shared by the orthogonality loss and its backward pass.
struct OrthoParts {
  Matrix ahat;
  Matrix gram_dev;  // ahat ahat^T - I, K x K
  std::vector<double> norms;
  double frob = 0.0;
};

OrthoParts ortho_parts(const Matrix& aem) {
  OrthoParts parts;
  const std::size_t k = aem.rows;
  parts.ahat = aem;
  parts.norms.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    const double norm = l2_norm(parts.ahat.row(j));
    if (norm == 0.0) {
      throw numeric_error("orthogonality loss: aspect row " +
                          std::to_string(j) + " is zero");
    }
    parts.norms[j] = norm;
    for (double& x : parts.ahat.row(j)) x /= norm;
  }
  parts.gram_dev = Matrix(k, k);
  double sq = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      double m = dot(parts.ahat.row(i), parts.ahat.row(j));
      if (i == j) m -= 1.0;
      parts.gram_dev(i, j) = m;
      sq += m * m;
    }
  }
  parts.frob = std::sqrt(sq);
  return parts;
}

void hinge_backward(const ForwardState& state, const Matrix& negatives,
                    std::vector<double>& d_rs) {
  const double rst = dot(std::span<const double>(state.rs),
                         std::span<const double>(state.ts));
  for (std::size_t i = 0; i < negatives.rows; ++i) {
    const auto neg = negatives.row(i);
    const double arg = 1.0 - rst + dot(std::span<const double>(state.rs), neg);
    if (arg > 0.0) {  // subgradient 0 exactly at the kink
      for (std::size_t c = 0; c < neg.size(); ++c) {
        d_rs[c] += neg[c] - state.ts[c];
      }
    }
  }
}

void ortho_backward(const Matrix& aem, double lambda, double s,
                    Matrix& d_aem) {
  if (lambda == 0.0) return;
  const OrthoParts parts = ortho_parts(aem);
  if (parts.frob - s <= 0.0 || parts.frob == 0.0) return;
  const std::size_t k = aem.rows;
  const std::size_t d = aem.cols;
  // d frob / d ahat = (2 / frob) * (M - I) * ahat, then back through the
  // row normalization ahat_j = a_j / |a_j|.
  Matrix d_ahat(k, d);
  const double coeff = lambda * 2.0 / parts.frob;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      axpy(coeff * parts.gram_dev(i, j), parts.ahat.row(j), d_ahat.row(i));
    }
  }
  for (std::size_t j = 0; j < k; ++j) {
    const auto u = d_ahat.row(j);
    const auto ahat = parts.ahat.row(j);
    const double along = dot(std::span<const double>(u),
                             std::span<const double>(ahat));
    auto out = d_aem.row(j);
    for (std::size_t c = 0; c < d; ++c) {
      out[c] += (u[c] - along * ahat[c]) / parts.norms[j];
    }
  }
}

void tlas_backward(const ForwardState& state, const Matrix& aem, double scale,
                   LossGrads& up) {
  const auto [j, l] = top_two(std::span<const double>(state.p));
  const std::size_t d = aem.cols;
  std::vector<double> diff1(d);
  std::vector<double> diff2(d);
  for (std::size_t c = 0; c < d; ++c) {
    diff1[c] = state.as_rows(j, c) - aem(j, c);
    diff2[c] = state.as_rows(j, c) - state.as_rows(l, c);
  }
  const double d1 = l2_norm(diff1);
  const double d2 = l2_norm(diff2);
  if (1.0 + d1 - d2 <= 0.0) return;
  if (d1 > 0.0) {
    axpy(scale / d1, std::span<const double>(diff1), up.d_as_rows.row(j));
    axpy(-scale / d1, std::span<const double>(diff1), up.d_aem.row(j));
  }
  if (d2 > 0.0) {
    axpy(-scale / d2, std::span<const double>(diff2), up.d_as_rows.row(j));
    axpy(scale / d2, std::span<const double>(diff2), up.d_as_rows.row(l));
  }
}

std::string format_full(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

}  // namespace

double hinge_loss(std::span<const double> rs, std::span<const double> ts,
                  const Matrix& negatives) {
  if (negatives.rows == 0) {
    throw config_error("hinge loss needs at least one negative");
  }
  const double rst = dot(rs, ts);
  double h = 0.0;
  for (std::size_t i = 0; i < negatives.rows; ++i) {
    h += std::max(0.0, 1.0 - rst + dot(rs, negatives.row(i)));
  }
  return h;
}

double ortho_loss(const Matrix& aem, double lambda, double s) {
  if (lambda < 0.0 || s < 0.0) {
    throw config_error("orthogonality weight and offset must be >= 0");
  }
  if (lambda == 0.0) return 0.0;
  return lambda * std::max(0.0, ortho_parts(aem).frob - s);
}

std::pair<std::size_t, std::size_t> top_two(std::span<const double> p) {
  if (p.size() < 2) {
    throw config_error("top_two needs at least two values");
  }
  std::size_t j = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[j]) j = i;
  }
  std::size_t l = j == 0 ? 1 : 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i != j && p[i] > p[l]) l = i;
  }
  return {j, l};
}

double tlas_loss(const ForwardState& state, const Matrix& aem) {
  const auto [j, l] = top_two(std::span<const double>(state.p));
  double sq1 = 0.0;
  double sq2 = 0.0;
  for (std::size_t c = 0; c < aem.cols; ++c) {
    const double e1 = state.as_rows(j, c) - aem(j, c);
    const double e2 = state.as_rows(j, c) - state.as_rows(l, c);
    sq1 += e1 * e1;
    sq2 += e2 * e2;
  }
  return std::max(0.0, 1.0 + std::sqrt(sq1) - std::sqrt(sq2));
}

LossBreakdown total_loss(const ForwardState& state, const Matrix& negatives,
                         const Matrix& aem, const TrainConfig& cfg) {
  LossBreakdown loss;
  loss.h = hinge_loss(std::span<const double>(state.rs),
                      std::span<const double>(state.ts), negatives);
  loss.u = ortho_loss(aem, cfg.lambda, cfg.ortho_offset_s);
  loss.t = cfg.tlas_enabled ? cfg.tlas_scale * tlas_loss(state, aem) : 0.0;
  loss.total = loss.h + loss.u + loss.t;
  return loss;
}

CmamParams sentence_gradients(const ForwardState& state,
                              const Matrix& negatives,
                              const CmamParams& params, const TrainConfig& cfg,
                              LossTerm term) {
  LossGrads up;
  up.d_rs.assign(params.dim, 0.0);
  up.d_as_rows = Matrix(params.n_aspects, params.dim);
  up.d_aem = Matrix(params.n_aspects, params.dim);
  const bool want_h = term == LossTerm::kHinge || term == LossTerm::kTotal;
  const bool want_u = term == LossTerm::kOrtho || term == LossTerm::kTotal;
  const bool want_t = (term == LossTerm::kTlas || term == LossTerm::kTotal) &&
                      cfg.tlas_enabled;
  if (want_h) hinge_backward(state, negatives, up.d_rs);
  if (want_u) ortho_backward(params.aem, cfg.lambda, cfg.ortho_offset_s,
                             up.d_aem);
  if (want_t) tlas_backward(state, params.aem, cfg.tlas_scale, up);
  return gradients(state, params, up);
}

Matrix sentence_means(const std::vector<EncodedSentence>& corpus,
                      const Matrix& embeddings) {
  Matrix means(corpus.size(), embeddings.cols);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& ids = corpus[i].ids;
    if (ids.empty()) {
      throw config_error("sentence " + std::to_string(i) + " is empty");
    }
    auto row = means.row(i);
    for (std::size_t id : ids) axpy(1.0, embeddings.row(id), row);
    const double inv = 1.0 / static_cast<double>(ids.size());
    for (double& x : row) x *= inv;
  }
  return means;
}

std::vector<std::size_t> sample_negatives(std::size_t pool_size,
                                          std::size_t exclude,
                                          std::size_t count, Rng& rng) {
  if (count == 0) throw config_error("negative count must be >= 1");
  if (pool_size <= count) {
    throw config_error("negative pool of " + std::to_string(pool_size) +
                       " cannot supply " + std::to_string(count) +
                       " distinct sentences");
  }
  std::vector<std::size_t> out;
  out.reserve(count);
  while (out.size() < count) {
    const std::size_t i = rng.index(pool_size);
    if (i == exclude) continue;
    if (std::find(out.begin(), out.end(), i) != out.end()) continue;
    out.push_back(i);
  }
  return out;
}

AdamState init_adam(const CmamParams& params) {
  AdamState state;
  state.m = zeros_like(params);
  state.v = zeros_like(params);
  return state;
}

void adam_step(CmamParams& params, const CmamParams& grads, AdamState& state,
               const TrainConfig& cfg) {
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  auto p_refs = tensor_refs(params);
  auto g_refs = tensor_refs(grads);
  auto m_refs = tensor_refs(state.m);
  auto v_refs = tensor_refs(state.v);
  if (g_refs.size() != p_refs.size()) {
    throw config_error("adam: gradient shapes do not match the parameters");
  }
  for (std::size_t r = 0; r < p_refs.size(); ++r) {
    auto& theta = *p_refs[r].values;
    const auto& g = *g_refs[r].values;
    auto& m = *m_refs[r].values;
    auto& v = *v_refs[r].values;
    if (g.size() != theta.size()) {
      throw config_error("adam: gradient shapes do not match the parameters");
    }
    for (std::size_t e = 0; e < theta.size(); ++e) {
      const double grad = g[e];
      if (!std::isfinite(grad)) {
        throw numeric_error("adam: non-finite gradient in " + p_refs[r].name);
      }
      m[e] = cfg.beta1 * m[e] + (1.0 - cfg.beta1) * grad;
      v[e] = cfg.beta2 * v[e] + (1.0 - cfg.beta2) * grad * grad;
      const double m_hat = m[e] / bc1;
      const double v_hat = v[e] / bc2;
      theta[e] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
    }
  }
}

TrainResult train(const std::vector<EncodedSentence>& corpus,
                  const Matrix& embeddings, CmamParams params,
                  const TrainConfig& cfg, std::uint64_t vocab_hash) {
  if (corpus.empty()) throw config_error("train: empty corpus");
  if (cfg.batch_size == 0) throw config_error("batch_size must be >= 1");
  if (cfg.epochs == 0) throw config_error("epochs must be >= 1");
  if (cfg.negatives_per_sample == 0) {
    throw config_error("negatives_per_sample must be >= 1");
  }
  if (corpus.size() <= cfg.negatives_per_sample) {
    throw config_error("corpus too small for the configured negative count");
  }
  if (embeddings.cols != params.dim) {
    throw config_error("embedding width does not match the model dimension");
  }

  const std::size_t n = corpus.size();
  const std::size_t n_threads = std::max<std::size_t>(1, cfg.threads);
  const Matrix means = sentence_means(corpus, embeddings);
  AdamState adam = init_adam(params);
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t b_size = std::min(cfg.batch_size, n - start);
      ++batch_index;

      // Negatives are drawn sequentially before any parallel work so the
      // trajectory does not depend on the thread count.
      std::vector<Matrix> negatives(b_size);
      for (std::size_t b = 0; b < b_size; ++b) {
        const auto picks =
            sample_negatives(n, order[start + b], cfg.negatives_per_sample, rng);
        negatives[b] = Matrix(picks.size(), embeddings.cols);
        for (std::size_t i = 0; i < picks.size(); ++i) {
          const auto src = means.row(picks[i]);
          std::copy(src.begin(), src.end(), negatives[b].row(i).begin());
        }
      }

      std::vector<LossBreakdown> losses(b_size);
      std::vector<CmamParams> grads(b_size);
      const auto eval_one = [&](std::size_t b) {
        const std::size_t idx = order[start + b];
        const ForwardState state = forward(corpus[idx], embeddings, params);
        losses[b] = total_loss(state, negatives[b], params.aem, cfg);
        if (!std::isfinite(losses[b].total)) {
          throw numeric_error("non-finite loss at sentence " +
                              std::to_string(idx));
        }
        if (losses[b].h < 0.0 || losses[b].u < 0.0 || losses[b].t < 0.0) {
          throw numeric_error("negative loss component at sentence " +
                              std::to_string(idx));
        }
        grads[b] =
            sentence_gradients(state, negatives[b], params, cfg,
                               LossTerm::kTotal);
      };
      if (n_threads == 1 || b_size == 1) {
        for (std::size_t b = 0; b < b_size; ++b) eval_one(b);
      } else {
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> pool;
        const std::size_t used = std::min(n_threads, b_size);
        pool.reserve(used);
        for (std::size_t t = 0; t < used; ++t) {
          pool.emplace_back([&, t] {
            try {
              for (std::size_t b = t; b < b_size; b += used) eval_one(b);
            } catch (...) {
              const std::lock_guard<std::mutex> lock(failure_mutex);
              if (!failure) failure = std::current_exception();
            }
          });
        }
        for (auto& th : pool) th.join();
        if (failure) std::rethrow_exception(failure);
      }

      // Ordered reduction keeps the batch gradient bit-reproducible.
      CmamParams batch_grads = zeros_like(params);
      auto acc_refs = tensor_refs(batch_grads);
      LossBreakdown mean_loss;
      const double inv_b = 1.0 / static_cast<double>(b_size);
      for (std::size_t b = 0; b < b_size; ++b) {
        const auto one_refs = tensor_refs(std::as_const(grads[b]));
        for (std::size_t r = 0; r < acc_refs.size(); ++r) {
          auto& acc = *acc_refs[r].values;
          const auto& one = *one_refs[r].values;
          for (std::size_t e = 0; e < acc.size(); ++e) acc[e] += one[e];
        }
        mean_loss.h += losses[b].h;
        mean_loss.u += losses[b].u;
        mean_loss.t += losses[b].t;
      }
      for (auto& ref : acc_refs) {
        for (double& x : *ref.values) x *= inv_b;
      }
      mean_loss.h *= inv_b;
      mean_loss.u *= inv_b;
      mean_loss.t *= inv_b;
      mean_loss.total = mean_loss.h + mean_loss.u + mean_loss.t;

      adam_step(params, batch_grads, adam, cfg);
      result.log.push_back({epoch, batch_index, mean_loss});
    }
    if (!cfg.checkpoint_dir.empty()) {
      save_checkpoint(params, vocab_hash,
                      cfg.checkpoint_dir + "/epoch_" + std::to_string(epoch) +
                          ".ckpt");
    }
  }
  if (!cfg.log_path.empty()) write_loss_log(result.log, cfg.log_path);
  result.params = std::move(params);
  return result;
}

void write_loss_log(const std::vector<BatchLogEntry>& log,
                    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write loss log: " + path);
  out << "epoch,batch,h,u,t,total\n";
  for (const auto& entry : log) {
    out << entry.epoch << ',' << entry.batch << ',' << format_full(entry.loss.h)
        << ',' << format_full(entry.loss.u) << ',' << format_full(entry.loss.t)
        << ',' << format_full(entry.loss.total) << '\n';
  }
  if (!out) throw io_error("failed writing loss log: " + path);
}

}  // namespace cmam
