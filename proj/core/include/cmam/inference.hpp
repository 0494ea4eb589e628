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

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cmam/corpus.hpp"
#include "cmam/matrix.hpp"
#include "cmam/model.hpp"

namespace cmam {

struct InferenceConfig {
  double q_as = 0.9;     // aspect-weight quantile threshold
  std::size_t n_as = 2;  // max aspects kept per sentence
  double q_at = 0.9;     // attention-weight quantile threshold
  std::size_t n_at = 3;  // max term tokens kept per aspect
};

struct TermSelection {
  std::size_t pos = 0;  // token position in the sentence
  std::string token;    // surface form
  double weight = 0.0;  // attention weight
  bool unknown = false; // out-of-vocabulary; scored as an error downstream
};

struct AspectSelection {
  std::size_t aspect = 0;
  double weight = 0.0;  // p value
  std::vector<TermSelection> terms;  // in sentence order
};

struct Prediction {
  std::string sentence;  // original text line
  std::vector<AspectSelection> aspects;  // sorted by descending weight
};

// Linear-interpolation quantile: sorted ascending, h = q * (n - 1), returns
// v[floor(h)] + frac(h) * (v[ceil(h)] - v[floor(h)]). Throws config_error on
// an empty input.
double quantile(std::vector<double> values, double q);

// threshold = quantile(p, q_as); keeps values strictly above it, top n_as by
// descending value with ties to the lower index. An all-equal input selects
// nothing.
std::vector<std::pair<std::size_t, double>> select_aspects(
    std::span<const double> p, const InferenceConfig& cfg);

// Same rule on an attention column, top n_at, returned in sentence order.
std::vector<TermSelection> select_terms(std::span<const double> a_column,
                                        const std::vector<std::string>& tokens,
                                        const InferenceConfig& cfg);

// forward + select_aspects + select_terms per selected aspect on that
// aspect's attention column; terms at unknown-token positions are kept but
// flagged. Throws config_error on an empty sentence.
Prediction predict(const EncodedSentence& sentence, const Matrix& embeddings,
                   const CmamParams& params, const InferenceConfig& cfg);

// JSON-lines, one object per sentence:
// {"sentence": str, "aspects": [{"id": int, "label": str|null, "weight":
//  float, "terms": [{"pos": int, "token": str, "weight": float, "unknown":
//  bool}]}]}. labels, when given, maps aspect id to a label string.
void write_predictions(const std::vector<Prediction>& predictions,
                       const std::vector<std::string>* labels,
                       const std::string& path);
std::vector<Prediction> read_predictions(const std::string& path);

}  // namespace cmam
