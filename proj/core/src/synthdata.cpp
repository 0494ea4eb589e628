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
#include "cmam/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "cmam/errors.hpp"
#include "cmam/rng.hpp"

namespace cmam {

namespace {

void validate(const SynthConfig& cfg) {
  if (cfg.topics.empty()) throw config_error("synth: no topics configured");
  if (cfg.n_sentences == 0) throw config_error("synth: n_sentences is zero");
  if (cfg.min_len == 0 || cfg.min_len > cfg.max_len) {
    throw config_error("synth: bad sentence length range");
  }
  if (cfg.min_core_per_topic == 0 ||
      cfg.min_core_per_topic > cfg.max_core_per_topic) {
    throw config_error("synth: bad core-per-topic range");
  }
  if (cfg.topic_count_probs.empty() ||
      cfg.topic_count_probs.size() > cfg.topics.size()) {
    throw config_error("synth: topic-count distribution does not fit");
  }
  double prob_total = 0.0;
  for (double p : cfg.topic_count_probs) {
    if (p < 0.0) throw config_error("synth: negative topic-count probability");
    prob_total += p;
  }
  if (prob_total <= 0.0) {
    throw config_error("synth: topic-count probabilities sum to zero");
  }
  // The drawn cores must always fit in the shortest sentence.
  if (cfg.topic_count_probs.size() * cfg.max_core_per_topic > cfg.min_len) {
    throw config_error("synth: cores can exceed the minimum sentence length");
  }
  std::set<std::string> seen;
  for (const auto& topic : cfg.topics) {
    if (topic.name.empty()) throw config_error("synth: unnamed topic");
    if (topic.core_tokens.empty()) {
      throw config_error("synth: topic " + topic.name + " has no core tokens");
    }
    for (const auto& token : topic.core_tokens) {
      if (!seen.insert(token).second) {
        throw config_error("synth: core token \"" + token +
                           "\" appears in two topics");
      }
    }
  }
  for (const auto& token : cfg.filler_tokens) {
    if (seen.count(token)) {
      throw config_error("synth: filler token \"" + token +
                         "\" collides with a core token");
    }
  }
  if (cfg.filler_tokens.empty()) {
    std::size_t capacity = 0;
    for (const auto& topic : cfg.topics) capacity += topic.core_tokens.size();
    if (capacity < cfg.max_len) {
      throw config_error(
          "synth: no fillers and too few core tokens to fill a sentence");
    }
  }
}

// Draws `count` distinct indices in [0, n) beyond those already in `taken`.
void draw_distinct(std::size_t n, std::size_t count,
                   std::vector<std::size_t>& taken, Rng& rng) {
  const std::size_t want = taken.size() + count;
  while (taken.size() < want) {
    const std::size_t i = rng.index(n);
    if (std::find(taken.begin(), taken.end(), i) == taken.end()) {
      taken.push_back(i);
    }
  }
}

}  // namespace

SynthOutput generate(const SynthConfig& cfg) {
  validate(cfg);
  Rng rng(cfg.seed);
  const std::size_t n_topics = cfg.topics.size();

  double prob_total = 0.0;
  for (double p : cfg.topic_count_probs) prob_total += p;

  // Zipf(1.0) cumulative weights over the filler pool.
  std::vector<double> filler_cdf(cfg.filler_tokens.size());
  double filler_total = 0.0;
  for (std::size_t i = 0; i < cfg.filler_tokens.size(); ++i) {
    filler_total += 1.0 / static_cast<double>(i + 1);
    filler_cdf[i] = filler_total;
  }

  SynthOutput out;
  out.sentences.reserve(cfg.n_sentences);
  out.gold.reserve(cfg.n_sentences);

  for (std::size_t s = 0; s < cfg.n_sentences; ++s) {
    // Topic count from the mix distribution.
    std::size_t t_count = cfg.topic_count_probs.size();
    {
      const double r = rng.uniform() * prob_total;
      double cum = 0.0;
      for (std::size_t i = 0; i < cfg.topic_count_probs.size(); ++i) {
        cum += cfg.topic_count_probs[i];
        if (r < cum) {
          t_count = i + 1;
          break;
        }
      }
      t_count = std::min(t_count, cfg.topic_count_probs.size());
    }

    std::vector<std::size_t> chosen;
    draw_distinct(n_topics, t_count, chosen, rng);

    const std::size_t length =
        cfg.min_len + rng.index(cfg.max_len - cfg.min_len + 1);

    // Core draws per chosen topic, distinct within a topic.
    std::vector<std::vector<std::size_t>> core_draws(chosen.size());
    std::size_t total_core = 0;
    for (std::size_t t = 0; t < chosen.size(); ++t) {
      const auto& topic = cfg.topics[chosen[t]];
      std::size_t want =
          cfg.min_core_per_topic +
          rng.index(cfg.max_core_per_topic - cfg.min_core_per_topic + 1);
      want = std::min(want, topic.core_tokens.size());
      draw_distinct(topic.core_tokens.size(), want, core_draws[t], rng);
      total_core += want;
    }

    // Without a filler pool the cores must carry the whole sentence.
    if (cfg.filler_tokens.empty()) {
      std::size_t t = 0;
      while (total_core < length) {
        bool grew = false;
        for (std::size_t step = 0; step < chosen.size() && total_core < length;
             ++step) {
          const auto& topic = cfg.topics[chosen[t]];
          if (core_draws[t].size() < topic.core_tokens.size()) {
            draw_distinct(topic.core_tokens.size(), 1, core_draws[t], rng);
            ++total_core;
            grew = true;
          }
          t = (t + 1) % chosen.size();
        }
        if (!grew) {
          throw config_error("synth: ran out of core tokens for a sentence");
        }
      }
    }

    std::vector<std::string> tokens;
    tokens.reserve(length);
    for (std::size_t t = 0; t < chosen.size(); ++t) {
      for (std::size_t idx : core_draws[t]) {
        tokens.push_back(cfg.topics[chosen[t]].core_tokens[idx]);
      }
    }
    while (tokens.size() < length) {
      const double r = rng.uniform() * filler_total;
      const auto it =
          std::upper_bound(filler_cdf.begin(), filler_cdf.end(), r);
      const auto idx = std::min(
          static_cast<std::size_t>(it - filler_cdf.begin()),
          cfg.filler_tokens.size() - 1);
      tokens.push_back(cfg.filler_tokens[idx]);
    }
    rng.shuffle(tokens);

    std::string sentence;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (i > 0) sentence += ' ';
      sentence += tokens[i];
    }

    LabeledExample example;
    example.text = sentence;
    for (std::size_t t = 0; t < chosen.size(); ++t) {
      const auto& topic = cfg.topics[chosen[t]];
      std::set<std::string> drawn;
      for (std::size_t idx : core_draws[t]) {
        drawn.insert(topic.core_tokens[idx]);
      }
      GoldPair pair;
      pair.label = topic.name;
      for (const auto& token : tokens) {  // term tokens in sentence order
        if (drawn.erase(token) > 0) pair.term_tokens.push_back(token);
      }
      example.pairs.push_back(std::move(pair));
    }
    out.sentences.push_back(std::move(sentence));
    out.gold.push_back(std::move(example));
  }
  return out;
}

SynthConfig restaurant_toy(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.seed = seed;
  const char* names[] = {"food", "staff", "ambience"};
  for (const char* name : names) {
    TopicSpec topic;
    topic.name = name;
    for (std::size_t i = 0; i < 30; ++i) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%s%02zu", name, i);
      topic.core_tokens.emplace_back(buf);
    }
    cfg.topics.push_back(std::move(topic));
  }
  for (std::size_t i = 0; i < 500; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "fill%03zu", i);
    cfg.filler_tokens.emplace_back(buf);
  }
  return cfg;
}

void write_corpus(const std::vector<std::string>& sentences,
                  const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write corpus file: " + path);
  for (const auto& sentence : sentences) out << sentence << '\n';
  if (!out) throw io_error("failed writing corpus file: " + path);
}

}  // namespace cmam
