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

namespace cmam {

// One depthwise convolution over token positions: the kernel consumes the
// full d-wide embedding at each of `len` positions and emits K channels.
// weights(t * d + c, k) multiplies S[i + t - len/2, c] into channel k.
struct ConvKernel {
  std::size_t len = 1;  // odd, so "same" zero padding is symmetric
  Matrix weights;       // (len * d) x K
  std::vector<double> bias;  // K, per output channel
};

struct CmamParams {
  std::size_t dim = 0;        // d
  std::size_t n_aspects = 0;  // K
  std::vector<ConvKernel> kernels;  // F >= 1 kernels
  Matrix head_w;                    // K x d, aspect scoring weights
  std::vector<double> head_b;       // K
  Matrix aem;                       // K x d, aspect embedding matrix
};

// Visits every learnable tensor as (name, flat value vector) in a fixed
// order; the optimizer and the checkpoint format both rely on this order.
template <class Params, class Fn>
void for_each_tensor(Params&& params, Fn&& fn) {
  for (std::size_t f = 0; f < params.kernels.size(); ++f) {
    const std::string tag = "kernel" + std::to_string(f);
    fn(tag + ".weights", params.kernels[f].weights.data);
    fn(tag + ".bias", params.kernels[f].bias);
  }
  fn("head_w", params.head_w.data);
  fn("head_b", params.head_b);
  fn("aem", params.aem.data);
}

// Flat views of the learnable tensors in for_each_tensor order, for code
// that iterates several same-shaped containers in lockstep (optimizer
// moments, finite-difference probes).
struct TensorRef {
  std::string name;
  std::vector<double>* values;
};
inline std::vector<TensorRef> tensor_refs(CmamParams& params) {
  std::vector<TensorRef> refs;
  for_each_tensor(params, [&](const std::string& name, std::vector<double>& v) {
    refs.push_back({name, &v});
  });
  return refs;
}
struct ConstTensorRef {
  std::string name;
  const std::vector<double>* values;
};
inline std::vector<ConstTensorRef> tensor_refs(const CmamParams& params) {
  std::vector<ConstTensorRef> refs;
  for_each_tensor(params,
                  [&](const std::string& name, const std::vector<double>& v) {
                    refs.push_back({name, &v});
                  });
  return refs;
}

// Same tensor shapes as `like`, all values zero. Gradients and optimizer
// moments are carried in this container.
CmamParams zeros_like(const CmamParams& like);

// Kernel weights uniform in +-sqrt(6 / (len * d + K)); head zeros so the
// initial p is uniform at 0.5; aem copied from the k-means initialization.
CmamParams init_params(std::size_t dim, std::size_t n_aspects,
                       const std::vector<std::size_t>& kernel_lens,
                       const Matrix& aem, std::uint64_t seed);

struct ForwardState {
  Matrix s;         // N x d input embeddings (frozen)
  Matrix a_pre;     // N x K, mean over kernels of the convolution outputs
  Matrix a;         // N x K, sigmoid(a_pre), attention per token per aspect
  Matrix as_rows;   // K x d, row j = sum_i a(i,j) * s(i,:)
  std::vector<double> as_mean;  // d, mean over the K as_rows
  std::vector<double> p;        // K, sigmoid head scores (not softmax)
  std::vector<double> rs;       // d, reconstruction sum_k phat_k * aem(k,:)
  std::vector<double> ts;       // d, mean of s rows (hinge target)
};

// Upstream loss gradients feeding the parameter backward pass. Empty
// members are treated as zero.
struct LossGrads {
  std::vector<double> d_rs;  // dL/d rs
  Matrix d_as_rows;          // dL/d as_rows (triplet spreading path)
  Matrix d_aem;              // direct dL/d aem (orthogonality, triplet)
};

// a_pre = (1/F) * sum_f conv_f(s) with zero "same" padding; a = sigmoid.
// Throws numeric_error on non-finite input.
void conv_attention(const Matrix& s, const CmamParams& params, Matrix& a_pre,
                    Matrix& a);

Matrix aspect_sentences(const Matrix& a, const Matrix& s);
std::vector<double> average_sentence(const Matrix& as_rows);
// p_k = sigmoid(head_w(k,:) . as_mean + head_b[k]); sigmoid because a
// sentence can carry several aspects at once.
std::vector<double> aspect_probs(std::span<const double> as_mean,
                                 const CmamParams& params);
// rs = sum_k phat_k * aem(k,:) with phat = p / sum(p); sum(p) > 0 always
// holds for sigmoid outputs and is asserted.
std::vector<double> reconstruct(std::span<const double> p, const Matrix& aem);

ForwardState forward(const Matrix& s, const CmamParams& params);

Matrix lookup_embeddings(const EncodedSentence& sentence,
                         const Matrix& embeddings);
ForwardState forward(const EncodedSentence& sentence, const Matrix& embeddings,
                     const CmamParams& params);

// Exact analytic gradients of the upstream record through the forward pass,
// for every learnable tensor; word embeddings are frozen. upstream.d_aem is
// added to the aem gradient on top of the reconstruction path.
CmamParams gradients(const ForwardState& state, const CmamParams& params,
                     const LossGrads& upstream);

// Self-describing binary container: dims, kernel lengths, vocabulary hash,
// then the tensors in for_each_tensor order. Round-trips bit-exactly.
struct Checkpoint {
  CmamParams params;
  std::uint64_t vocab_hash = 0;
};
void save_checkpoint(const CmamParams& params, std::uint64_t vocab_hash,
                     const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// FNV-1a over tokens in id order; detects checkpoint/vocabulary mismatch.
std::uint64_t vocabulary_hash(const Vocabulary& vocab);

}  // namespace cmam
