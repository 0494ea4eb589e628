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
#include "cmam/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "cmam/errors.hpp"
#include "cmam/rng.hpp"

namespace cmam {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void validate_params(const CmamParams& params) {
  if (params.kernels.empty()) throw config_error("model needs F >= 1 kernels");
  if (params.dim == 0 || params.n_aspects == 0) {
    throw config_error("model dimensions must be positive");
  }
  for (const auto& kernel : params.kernels) {
    if (kernel.len % 2 == 0 || kernel.len == 0) {
      throw config_error("kernel lengths must be odd");
    }
  }
}

}  // namespace

CmamParams zeros_like(const CmamParams& like) {
  CmamParams out;
  out.dim = like.dim;
  out.n_aspects = like.n_aspects;
  out.kernels.resize(like.kernels.size());
  for (std::size_t f = 0; f < like.kernels.size(); ++f) {
    out.kernels[f].len = like.kernels[f].len;
    out.kernels[f].weights =
        Matrix(like.kernels[f].weights.rows, like.kernels[f].weights.cols);
    out.kernels[f].bias.assign(like.kernels[f].bias.size(), 0.0);
  }
  out.head_w = Matrix(like.head_w.rows, like.head_w.cols);
  out.head_b.assign(like.head_b.size(), 0.0);
  out.aem = Matrix(like.aem.rows, like.aem.cols);
  return out;
}

CmamParams init_params(std::size_t dim, std::size_t n_aspects,
                       const std::vector<std::size_t>& kernel_lens,
                       const Matrix& aem, std::uint64_t seed) {
  if (aem.rows != n_aspects || aem.cols != dim) {
    throw config_error("aspect matrix shape does not match model dimensions");
  }
  CmamParams params;
  params.dim = dim;
  params.n_aspects = n_aspects;
  Rng rng(seed);
  params.kernels.resize(kernel_lens.size());
  for (std::size_t f = 0; f < kernel_lens.size(); ++f) {
    auto& kernel = params.kernels[f];
    kernel.len = kernel_lens[f];
    kernel.weights = Matrix(kernel_lens[f] * dim, n_aspects);
    const double bound = std::sqrt(
        6.0 / (static_cast<double>(kernel_lens[f] * dim + n_aspects)));
    for (double& w : kernel.weights.data) w = rng.uniform(-bound, bound);
    kernel.bias.assign(n_aspects, 0.0);
  }
  // Zero head: the initial aspect probabilities sit at 0.5 uniformly.
  params.head_w = Matrix(n_aspects, dim);
  params.head_b.assign(n_aspects, 0.0);
  params.aem = aem;
  validate_params(params);
  return params;
}

void conv_attention(const Matrix& s, const CmamParams& params, Matrix& a_pre,
                    Matrix& a) {
  validate_params(params);
  if (s.rows == 0 || s.cols != params.dim) {
    throw config_error("conv_attention: input shape mismatch");
  }
  if (!all_finite(s)) throw numeric_error("conv_attention: non-finite input");
  const std::size_t n = s.rows;
  const std::size_t d = s.cols;
  const std::size_t k = params.n_aspects;

  a_pre = Matrix(n, k);
  for (const auto& kernel : params.kernels) {
    const std::size_t off = kernel.len / 2;
    for (std::size_t i = 0; i < n; ++i) {
      auto out_row = a_pre.row(i);
      for (std::size_t t = 0; t < kernel.len; ++t) {
        // Zero "same" padding: out-of-range positions contribute nothing.
        if (i + t < off || i + t - off >= n) continue;
        const std::size_t src = i + t - off;
        const auto s_row = s.row(src);
        for (std::size_t c = 0; c < d; ++c) {
          axpy(s_row[c], kernel.weights.row(t * d + c), out_row);
        }
      }
      axpy(1.0, std::span<const double>(kernel.bias), out_row);
    }
  }
  const double inv_f = 1.0 / static_cast<double>(params.kernels.size());
  for (double& x : a_pre.data) x *= inv_f;

  a = Matrix(n, k);
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    a.data[i] = sigmoid(a_pre.data[i]);
  }
}

Matrix aspect_sentences(const Matrix& a, const Matrix& s) {
  Matrix as_rows(a.cols, s.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const auto s_row = s.row(i);
    for (std::size_t j = 0; j < a.cols; ++j) {
      axpy(a(i, j), s_row, as_rows.row(j));
    }
  }
  return as_rows;
}

std::vector<double> average_sentence(const Matrix& as_rows) {
  std::vector<double> mean(as_rows.cols, 0.0);
  for (std::size_t j = 0; j < as_rows.rows; ++j) {
    axpy(1.0, as_rows.row(j), std::span<double>(mean));
  }
  const double inv = 1.0 / static_cast<double>(as_rows.rows);
  for (double& x : mean) x *= inv;
  return mean;
}

std::vector<double> aspect_probs(std::span<const double> as_mean,
                                 const CmamParams& params) {
  std::vector<double> p(params.n_aspects);
  for (std::size_t k = 0; k < params.n_aspects; ++k) {
    p[k] = sigmoid(dot(params.head_w.row(k), as_mean) + params.head_b[k]);
  }
  return p;
}

std::vector<double> reconstruct(std::span<const double> p, const Matrix& aem) {
  double sum = 0.0;
  for (double x : p) sum += x;
  if (!(sum > 0.0)) {
    throw numeric_error("reconstruct: aspect probabilities sum to zero");
  }
  std::vector<double> rs(aem.cols, 0.0);
  for (std::size_t k = 0; k < aem.rows; ++k) {
    axpy(p[k] / sum, aem.row(k), std::span<double>(rs));
  }
  return rs;
}

ForwardState forward(const Matrix& s, const CmamParams& params) {
  ForwardState state;
  state.s = s;
  conv_attention(state.s, params, state.a_pre, state.a);
  state.as_rows = aspect_sentences(state.a, state.s);
  state.as_mean = average_sentence(state.as_rows);
  state.p = aspect_probs(state.as_mean, params);
  state.rs = reconstruct(state.p, params.aem);
  state.ts.assign(s.cols, 0.0);
  for (std::size_t i = 0; i < s.rows; ++i) {
    axpy(1.0, s.row(i), std::span<double>(state.ts));
  }
  const double inv = 1.0 / static_cast<double>(s.rows);
  for (double& x : state.ts) x *= inv;
  return state;
}

Matrix lookup_embeddings(const EncodedSentence& sentence,
                         const Matrix& embeddings) {
  Matrix s(sentence.ids.size(), embeddings.cols);
  for (std::size_t i = 0; i < sentence.ids.size(); ++i) {
    const auto row = embeddings.row(sentence.ids[i]);
    std::copy(row.begin(), row.end(), s.row(i).begin());
  }
  return s;
}

ForwardState forward(const EncodedSentence& sentence, const Matrix& embeddings,
                     const CmamParams& params) {
  if (sentence.ids.empty()) throw config_error("forward: empty sentence");
  return forward(lookup_embeddings(sentence, embeddings), params);
}

CmamParams gradients(const ForwardState& state, const CmamParams& params,
                     const LossGrads& upstream) {
  const std::size_t n = state.s.rows;
  const std::size_t d = state.s.cols;
  const std::size_t k = params.n_aspects;
  CmamParams grads = zeros_like(params);

  // Reconstruction path: rs = sum_k (p_k / sum p) * aem_k.
  std::vector<double> d_p(k, 0.0);
  if (!upstream.d_rs.empty()) {
    double sum_p = 0.0;
    for (double x : state.p) sum_p += x;
    std::vector<double> d_phat(k);
    double mix = 0.0;  // sum_k d_phat_k * phat_k
    for (std::size_t j = 0; j < k; ++j) {
      d_phat[j] = dot(params.aem.row(j), std::span<const double>(upstream.d_rs));
      mix += d_phat[j] * state.p[j] / sum_p;
    }
    for (std::size_t j = 0; j < k; ++j) {
      axpy(state.p[j] / sum_p, std::span<const double>(upstream.d_rs),
           grads.aem.row(j));
      d_p[j] = (d_phat[j] - mix) / sum_p;
    }
  }

  // Head: p_k = sigmoid(head_w_k . as_mean + head_b_k).
  std::vector<double> d_as_mean(d, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    const double d_z = d_p[j] * state.p[j] * (1.0 - state.p[j]);
    grads.head_b[j] += d_z;
    axpy(d_z, std::span<const double>(state.as_mean), grads.head_w.row(j));
    axpy(d_z, params.head_w.row(j), std::span<double>(d_as_mean));
  }

  // as_mean averages the K as_rows; the spreading loss feeds as_rows too.
  Matrix d_as_rows(k, d);
  const double inv_k = 1.0 / static_cast<double>(k);
  for (std::size_t j = 0; j < k; ++j) {
    auto row = d_as_rows.row(j);
    for (std::size_t c = 0; c < d; ++c) row[c] = d_as_mean[c] * inv_k;
    if (!upstream.d_as_rows.empty()) {
      axpy(1.0, upstream.d_as_rows.row(j), row);
    }
  }

  // Attention: as_rows_j = sum_i a(i,j) s_i; a = sigmoid(a_pre).
  Matrix d_conv(n, k);  // d a_pre scaled by 1/F, shared by every kernel
  const double inv_f = 1.0 / static_cast<double>(params.kernels.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto s_row = state.s.row(i);
    for (std::size_t j = 0; j < k; ++j) {
      const double d_a = dot(d_as_rows.row(j), s_row);
      const double aij = state.a(i, j);
      d_conv(i, j) = d_a * aij * (1.0 - aij) * inv_f;
    }
  }

  for (std::size_t f = 0; f < params.kernels.size(); ++f) {
    const auto& kernel = params.kernels[f];
    auto& g_kernel = grads.kernels[f];
    const std::size_t off = kernel.len / 2;
    for (std::size_t i = 0; i < n; ++i) {
      const auto d_row = d_conv.row(i);
      for (std::size_t t = 0; t < kernel.len; ++t) {
        if (i + t < off || i + t - off >= n) continue;
        const std::size_t src = i + t - off;
        const auto s_row = state.s.row(src);
        for (std::size_t c = 0; c < d; ++c) {
          axpy(s_row[c], d_row, g_kernel.weights.row(t * d + c));
        }
      }
      axpy(1.0, d_row, std::span<double>(g_kernel.bias));
    }
  }

  if (!upstream.d_aem.empty()) {
    for (std::size_t i = 0; i < grads.aem.data.size(); ++i) {
      grads.aem.data[i] += upstream.d_aem.data[i];
    }
  }
  return grads;
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

constexpr char kCheckpointMagic[8] = {'C', 'M', 'A', 'M', 'C', 'K', 'P', '1'};

void write_u64(std::ofstream& out, std::uint64_t value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

std::uint64_t read_u64(std::ifstream& in, const std::string& path) {
  std::uint64_t value = 0;
  if (!in.read(reinterpret_cast<char*>(&value), sizeof value)) {
    throw io_error("truncated checkpoint: " + path);
  }
  return value;
}

}  // namespace

void save_checkpoint(const CmamParams& params, std::uint64_t vocab_hash,
                     const std::string& path) {
  validate_params(params);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write checkpoint: " + path);
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  write_u64(out, params.dim);
  write_u64(out, params.n_aspects);
  write_u64(out, params.kernels.size());
  for (const auto& kernel : params.kernels) write_u64(out, kernel.len);
  write_u64(out, vocab_hash);
  for_each_tensor(params, [&](const std::string&, const std::vector<double>& v) {
    write_u64(out, v.size());
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
  });
  if (!out) throw io_error("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot read checkpoint: " + path);
  char magic[sizeof kCheckpointMagic];
  if (!in.read(magic, sizeof magic) ||
      std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
    throw io_error("not a model checkpoint: " + path);
  }
  Checkpoint ckpt;
  ckpt.params.dim = read_u64(in, path);
  ckpt.params.n_aspects = read_u64(in, path);
  const std::uint64_t f = read_u64(in, path);
  std::vector<std::size_t> lens(f);
  for (auto& len : lens) len = read_u64(in, path);
  ckpt.vocab_hash = read_u64(in, path);

  // Rebuild the shapes, then read the tensors in the canonical order.
  CmamParams& p = ckpt.params;
  p.kernels.resize(f);
  for (std::size_t i = 0; i < f; ++i) {
    p.kernels[i].len = lens[i];
    p.kernels[i].weights = Matrix(lens[i] * p.dim, p.n_aspects);
    p.kernels[i].bias.assign(p.n_aspects, 0.0);
  }
  p.head_w = Matrix(p.n_aspects, p.dim);
  p.head_b.assign(p.n_aspects, 0.0);
  p.aem = Matrix(p.n_aspects, p.dim);
  for_each_tensor(p, [&](const std::string& name, std::vector<double>& v) {
    const std::uint64_t count = read_u64(in, path);
    if (count != v.size()) {
      throw io_error("checkpoint tensor " + name + " has " +
                     std::to_string(count) + " values, expected " +
                     std::to_string(v.size()) + ": " + path);
    }
    if (!in.read(reinterpret_cast<char*>(v.data()),
                 static_cast<std::streamsize>(v.size() * sizeof(double)))) {
      throw io_error("truncated checkpoint: " + path);
    }
  });
  validate_params(p);
  return ckpt;
}

std::uint64_t vocabulary_hash(const Vocabulary& vocab) {
  std::uint64_t h = 14695981039346656037ULL;
  const auto mix = [&h](unsigned char byte) {
    h ^= byte;
    h *= 1099511628211ULL;
  };
  for (const auto& token : vocab.id_to_token) {
    for (char ch : token) mix(static_cast<unsigned char>(ch));
    mix(0);
  }
  return h;
}

}  // namespace cmam
