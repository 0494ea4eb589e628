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

#include <map>
#include <set>
#include <string>
#include <vector>

#include "cmam/corpus.hpp"
#include "cmam/inference.hpp"
#include "cmam/matrix.hpp"

namespace cmam {

// The reserved label for aspects excluded from scoring.
inline constexpr const char* kOmittedLabel = "omitted";
// Category collecting examples whose gold carries two or more scored labels.
inline constexpr const char* kMultiLabels = "Multi-labels";

struct GoldPair {
  std::string label;
  std::vector<std::string> term_tokens;  // normalized term span
};

struct LabeledExample {
  std::string text;
  std::vector<GoldPair> pairs;  // at least one
};

// aspect id -> gold label, every id in [0, K) present; "omitted" excludes an
// aspect from scoring.
using GoldMapping = std::vector<std::string>;

struct Counts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  Counts counts;
};
Prf prf_from_counts(const Counts& c);

// Top-n vocabulary tokens by cosine similarity to the aspect's aem row,
// excluding the unknown sentinel.
std::vector<std::string> representative_words(std::size_t aspect,
                                              const Matrix& aem,
                                              const Matrix& embeddings,
                                              const Vocabulary& vocab,
                                              std::size_t top_n);

// Per-sentence-per-label scoring: TP when a selected aspect maps to a gold
// label, FP when it maps to a non-gold label, FN when a gold label has no
// mapped selection. Labels outside the mapping's scored set are ignored;
// examples with no scored gold label are skipped. Throws config_error on an
// unmapped aspect id.
std::map<std::string, Prf> score_aspects(
    const std::vector<Prediction>& predictions,
    const std::vector<LabeledExample>& gold, const GoldMapping& mapping);

// Pair scoring under the partial-match rule: a predicted (label, term) is a
// TP when the label matches a gold pair and the terms share at least one
// token; gold pairs are consumed at most once, matched greedily by
// descending predicted aspect weight. Exact-duplicate predicted pairs are
// deduplicated. Unknown-flagged terms never match. Categories are the single
// gold label or "Multi-labels"; micro pools counts over all examples.
struct PairScores {
  std::map<std::string, Prf> per_category;
  Prf micro;
};
PairScores score_pairs(const std::vector<Prediction>& predictions,
                       const std::vector<LabeledExample>& gold,
                       const GoldMapping& mapping);

// Maps each aspect to the label whose core-token set overlaps its top-n
// representative words the most; zero overlap maps to "omitted", ties to the
// lexicographically smaller label.
GoldMapping auto_map_by_overlap(
    const Matrix& aem, const Matrix& embeddings, const Vocabulary& vocab,
    const std::map<std::string, std::set<std::string>>& label_cores,
    std::size_t top_n = 10);

struct EvalReport {
  std::map<std::string, Prf> aspect_scores;  // per label
  PairScores pair_scores;
};
EvalReport evaluate(const std::vector<Prediction>& predictions,
                    const std::vector<LabeledExample>& gold,
                    const GoldMapping& mapping);
std::string format_report(const EvalReport& report);   // human-readable table
std::string report_json(const EvalReport& report);     // machine-readable twin

// Gold data: JSON-lines {"text": str, "pairs": [{"label": str, "term":
// str}]}; terms are tokenized with an empty stop-word set on read.
std::vector<LabeledExample> read_gold(const std::string& path);
void write_gold(const std::vector<LabeledExample>& examples,
                const std::string& path);

// Mapping file: "aspect_id<TAB>label<TAB>representative words..." per line.
GoldMapping read_mapping(const std::string& path, std::size_t n_aspects);
void write_mapping(const GoldMapping& mapping,
                   const std::vector<std::vector<std::string>>& rep_words,
                   const std::string& path);

// Draft with every label left "omitted" for a human to fill in.
std::string draft_mapping(const Matrix& aem, const Matrix& embeddings,
                          const Vocabulary& vocab, std::size_t top_n);

}  // namespace cmam
