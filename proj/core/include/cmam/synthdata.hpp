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

#include "cmam/evaluation.hpp"

namespace cmam {

struct TopicSpec {
  std::string name;                      // gold label
  std::vector<std::string> core_tokens;  // disjoint across topics
};

struct SynthConfig {
  std::vector<TopicSpec> topics;            // >= 2 for multi-topic mixes
  std::vector<std::string> filler_tokens;   // shared pool, Zipf(1.0) weights
  std::vector<double> topic_count_probs = {0.7, 0.3};  // P(1 topic), P(2), ...
  std::size_t n_sentences = 10000;
  std::size_t min_len = 8;
  std::size_t max_len = 12;
  std::size_t min_core_per_topic = 1;
  std::size_t max_core_per_topic = 3;
  std::uint64_t seed = 1;
};

struct SynthOutput {
  std::vector<std::string> sentences;  // raw corpus lines
  std::vector<LabeledExample> gold;    // one pair per chosen topic
};

// Each sentence draws its topic count from topic_count_probs, the topics
// uniformly without replacement, 1..max core tokens per chosen topic, and
// fillers elsewhere; token order is shuffled. Gold pairs record each chosen
// topic with its drawn core tokens in sentence order. Deterministic per
// seed. Throws config_error on an empty spec or an infeasible length range.
SynthOutput generate(const SynthConfig& cfg);

// 3 topics (food, staff, ambience) x 30 core tokens, 500 shared fillers,
// 10k sentences of 8..12 tokens; trains end to end in minutes.
SynthConfig restaurant_toy(std::uint64_t seed);

void write_corpus(const std::vector<std::string>& sentences,
                  const std::string& path);

}  // namespace cmam
