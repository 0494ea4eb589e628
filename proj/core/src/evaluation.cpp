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
#include "cmam/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cmam/errors.hpp"

namespace cmam {

namespace {

// One normalized predicted pair ready for matching.
struct PredictedPair {
  std::string label;
  std::vector<std::string> tokens;         // surface forms
  std::vector<bool> unknown;               // parallel; flagged tokens never match
};

std::set<std::string> scored_labels(const GoldMapping& mapping) {
  std::set<std::string> labels;
  for (const auto& label : mapping) {
    if (label != kOmittedLabel) labels.insert(label);
  }
  return labels;
}

const std::string& mapped_label(const GoldMapping& mapping,
                                std::size_t aspect) {
  if (aspect >= mapping.size()) {
    throw config_error("prediction uses aspect " + std::to_string(aspect) +
                       " but the mapping covers only " +
                       std::to_string(mapping.size()) + " aspects");
  }
  return mapping[aspect];
}

void check_alignment(const std::vector<Prediction>& predictions,
                     const std::vector<LabeledExample>& gold) {
  if (predictions.size() != gold.size()) {
    throw config_error("prediction count " +
                       std::to_string(predictions.size()) +
                       " does not match gold count " +
                       std::to_string(gold.size()));
  }
}

nlohmann::json prf_json(const Prf& prf) {
  return {{"precision", prf.precision}, {"recall", prf.recall},
          {"f1", prf.f1},               {"tp", prf.counts.tp},
          {"fp", prf.counts.fp},        {"fn", prf.counts.fn}};
}

void format_prf_line(std::string& out, const std::string& name,
                     const Prf& prf) {
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "  %-14s P %.4f  R %.4f  F1 %.4f  (tp %zu fp %zu fn %zu)\n",
                name.c_str(), prf.precision, prf.recall, prf.f1, prf.counts.tp,
                prf.counts.fp, prf.counts.fn);
  out += buf;
}

}  // namespace

Prf prf_from_counts(const Counts& c) {
  Prf prf;
  prf.counts = c;
  const double tp = static_cast<double>(c.tp);
  prf.precision = c.tp + c.fp == 0 ? 0.0 : tp / static_cast<double>(c.tp + c.fp);
  prf.recall = c.tp + c.fn == 0 ? 0.0 : tp / static_cast<double>(c.tp + c.fn);
  prf.f1 = prf.precision + prf.recall == 0.0
               ? 0.0
               : 2.0 * prf.precision * prf.recall /
                     (prf.precision + prf.recall);
  return prf;
}

std::vector<std::string> representative_words(std::size_t aspect,
                                              const Matrix& aem,
                                              const Matrix& embeddings,
                                              const Vocabulary& vocab,
                                              std::size_t top_n) {
  if (aspect >= aem.rows) throw config_error("aspect index out of range");
  const auto row = aem.row(aspect);
  const double row_norm = l2_norm(row);
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(vocab.size());
  for (std::size_t id = 1; id < vocab.size() && id < embeddings.rows; ++id) {
    const auto e = embeddings.row(id);
    const double norm = l2_norm(e);
    if (norm == 0.0 || row_norm == 0.0) continue;
    scored.emplace_back(dot(row, e) / (norm * row_norm), id);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::string> words;
  for (std::size_t i = 0; i < scored.size() && i < top_n; ++i) {
    words.push_back(vocab.id_to_token[scored[i].second]);
  }
  return words;
}

std::map<std::string, Prf> score_aspects(
    const std::vector<Prediction>& predictions,
    const std::vector<LabeledExample>& gold, const GoldMapping& mapping) {
  check_alignment(predictions, gold);
  const std::set<std::string> scored = scored_labels(mapping);
  std::map<std::string, Counts> counts;
  for (const auto& label : scored) counts[label];

  for (std::size_t i = 0; i < gold.size(); ++i) {
    std::set<std::string> gold_labels;
    for (const auto& pair : gold[i].pairs) {
      if (scored.count(pair.label)) gold_labels.insert(pair.label);
    }
    if (gold_labels.empty()) continue;  // nothing scoreable in this example
    std::set<std::string> predicted_labels;
    for (const auto& aspect : predictions[i].aspects) {
      const std::string& label = mapped_label(mapping, aspect.aspect);
      if (label != kOmittedLabel) predicted_labels.insert(label);
    }
    for (const auto& label : scored) {
      const bool in_gold = gold_labels.count(label) > 0;
      const bool in_pred = predicted_labels.count(label) > 0;
      if (in_gold && in_pred) {
        ++counts[label].tp;
      } else if (in_pred) {
        ++counts[label].fp;
      } else if (in_gold) {
        ++counts[label].fn;
      }
    }
  }

  std::map<std::string, Prf> result;
  for (const auto& [label, c] : counts) result[label] = prf_from_counts(c);
  return result;
}

PairScores score_pairs(const std::vector<Prediction>& predictions,
                       const std::vector<LabeledExample>& gold,
                       const GoldMapping& mapping) {
  check_alignment(predictions, gold);
  const std::set<std::string> scored = scored_labels(mapping);
  std::map<std::string, Counts> per_category;
  Counts micro;

  for (std::size_t i = 0; i < gold.size(); ++i) {
    std::vector<const GoldPair*> gold_pairs;
    std::set<std::string> gold_labels;
    for (const auto& pair : gold[i].pairs) {
      if (!scored.count(pair.label)) continue;
      gold_pairs.push_back(&pair);
      gold_labels.insert(pair.label);
    }
    if (gold_pairs.empty()) continue;
    const std::string category =
        gold_labels.size() >= 2 ? kMultiLabels : *gold_labels.begin();

    // Predictions arrive sorted by descending aspect weight; greedy matching
    // honors that order. Exact duplicates collapse to one attempt so that
    // doubling predictions cannot change TP or FN.
    std::vector<PredictedPair> pairs;
    std::set<std::string> seen;
    for (const auto& aspect : predictions[i].aspects) {
      const std::string& label = mapped_label(mapping, aspect.aspect);
      if (label == kOmittedLabel || aspect.terms.empty()) continue;
      PredictedPair pair;
      pair.label = label;
      for (const auto& term : aspect.terms) {
        pair.tokens.push_back(term.token);
        pair.unknown.push_back(term.unknown);
      }
      std::vector<std::string> key_tokens = pair.tokens;
      std::sort(key_tokens.begin(), key_tokens.end());
      std::string key = label;
      for (const auto& token : key_tokens) {
        key += '\x1f';
        key += token;
      }
      if (!seen.insert(std::move(key)).second) continue;
      pairs.push_back(std::move(pair));
    }

    std::vector<bool> consumed(gold_pairs.size(), false);
    Counts local;
    for (const auto& pair : pairs) {
      bool matched = false;
      for (std::size_t g = 0; g < gold_pairs.size() && !matched; ++g) {
        if (consumed[g] || gold_pairs[g]->label != pair.label) continue;
        for (std::size_t t = 0; t < pair.tokens.size(); ++t) {
          if (pair.unknown[t]) continue;
          const auto& gt = gold_pairs[g]->term_tokens;
          if (std::find(gt.begin(), gt.end(), pair.tokens[t]) != gt.end()) {
            matched = true;
            consumed[g] = true;
            break;
          }
        }
      }
      if (matched) {
        ++local.tp;
      } else {
        ++local.fp;
      }
    }
    for (bool used : consumed) {
      if (!used) ++local.fn;
    }
    per_category[category].tp += local.tp;
    per_category[category].fp += local.fp;
    per_category[category].fn += local.fn;
    micro.tp += local.tp;
    micro.fp += local.fp;
    micro.fn += local.fn;
  }

  PairScores result;
  for (const auto& [category, c] : per_category) {
    result.per_category[category] = prf_from_counts(c);
  }
  result.micro = prf_from_counts(micro);
  return result;
}

GoldMapping auto_map_by_overlap(
    const Matrix& aem, const Matrix& embeddings, const Vocabulary& vocab,
    const std::map<std::string, std::set<std::string>>& label_cores,
    std::size_t top_n) {
  GoldMapping mapping(aem.rows, kOmittedLabel);
  for (std::size_t k = 0; k < aem.rows; ++k) {
    const auto words =
        representative_words(k, aem, embeddings, vocab, top_n);
    std::size_t best_overlap = 0;
    for (const auto& [label, cores] : label_cores) {  // map order: ties go to
      std::size_t overlap = 0;                        // the smaller label
      for (const auto& word : words) {
        if (cores.count(word)) ++overlap;
      }
      if (overlap > best_overlap) {
        best_overlap = overlap;
        mapping[k] = label;
      }
    }
  }
  return mapping;
}

EvalReport evaluate(const std::vector<Prediction>& predictions,
                    const std::vector<LabeledExample>& gold,
                    const GoldMapping& mapping) {
  EvalReport report;
  report.aspect_scores = score_aspects(predictions, gold, mapping);
  report.pair_scores = score_pairs(predictions, gold, mapping);
  return report;
}

std::string format_report(const EvalReport& report) {
  std::string out = "Aspect extraction (per label)\n";
  for (const auto& [label, prf] : report.aspect_scores) {
    format_prf_line(out, label, prf);
  }
  out += "Pair extraction (per category)\n";
  for (const auto& [category, prf] : report.pair_scores.per_category) {
    format_prf_line(out, category, prf);
  }
  format_prf_line(out, "micro-average", report.pair_scores.micro);
  return out;
}

std::string report_json(const EvalReport& report) {
  nlohmann::json j;
  for (const auto& [label, prf] : report.aspect_scores) {
    j["aspects"][label] = prf_json(prf);
  }
  for (const auto& [category, prf] : report.pair_scores.per_category) {
    j["pairs"]["per_category"][category] = prf_json(prf);
  }
  j["pairs"]["micro"] = prf_json(report.pair_scores.micro);
  return j.dump(2);
}

std::vector<LabeledExample> read_gold(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot read gold file: " + path);
  std::vector<LabeledExample> examples;
  const StopwordSet no_stopwords;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto record = nlohmann::json::parse(line);
      LabeledExample example;
      example.text = record.at("text").get<std::string>();
      for (const auto& pair : record.at("pairs")) {
        GoldPair gold_pair;
        gold_pair.label = pair.at("label").get<std::string>();
        gold_pair.term_tokens =
            tokenize(pair.at("term").get<std::string>(), no_stopwords);
        example.pairs.push_back(std::move(gold_pair));
      }
      if (example.pairs.empty()) {
        throw io_error("gold example without pairs at line " +
                       std::to_string(line_no) + ": " + path);
      }
      examples.push_back(std::move(example));
    } catch (const nlohmann::json::exception& e) {
      throw io_error("malformed gold record at line " +
                     std::to_string(line_no) + " of " + path + ": " +
                     e.what());
    }
  }
  return examples;
}

void write_gold(const std::vector<LabeledExample>& examples,
                const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write gold file: " + path);
  for (const auto& example : examples) {
    nlohmann::json record;
    record["text"] = example.text;
    record["pairs"] = nlohmann::json::array();
    for (const auto& pair : example.pairs) {
      std::string term;
      for (std::size_t i = 0; i < pair.term_tokens.size(); ++i) {
        if (i > 0) term += ' ';
        term += pair.term_tokens[i];
      }
      record["pairs"].push_back({{"label", pair.label}, {"term", term}});
    }
    out << record.dump() << '\n';
  }
  if (!out) throw io_error("failed writing gold file: " + path);
}

GoldMapping read_mapping(const std::string& path, std::size_t n_aspects) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot read mapping file: " + path);
  GoldMapping mapping(n_aspects);
  std::vector<bool> seen(n_aspects, false);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::size_t aspect = 0;
    std::string label;
    if (!(fields >> aspect >> label) || aspect >= n_aspects) {
      throw io_error("malformed mapping at line " + std::to_string(line_no) +
                     ": " + path);
    }
    if (seen[aspect]) {
      throw config_error("aspect " + std::to_string(aspect) +
                         " mapped twice: " + path);
    }
    seen[aspect] = true;
    mapping[aspect] = label;
  }
  for (std::size_t k = 0; k < n_aspects; ++k) {
    if (!seen[k]) {
      throw config_error("aspect " + std::to_string(k) + " missing from " +
                         path);
    }
  }
  return mapping;
}

void write_mapping(const GoldMapping& mapping,
                   const std::vector<std::vector<std::string>>& rep_words,
                   const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write mapping file: " + path);
  for (std::size_t k = 0; k < mapping.size(); ++k) {
    out << k << '\t' << mapping[k] << '\t';
    if (k < rep_words.size()) {
      for (std::size_t i = 0; i < rep_words[k].size(); ++i) {
        if (i > 0) out << ' ';
        out << rep_words[k][i];
      }
    }
    out << '\n';
  }
  if (!out) throw io_error("failed writing mapping file: " + path);
}

std::string draft_mapping(const Matrix& aem, const Matrix& embeddings,
                          const Vocabulary& vocab, std::size_t top_n) {
  std::string out;
  for (std::size_t k = 0; k < aem.rows; ++k) {
    out += std::to_string(k);
    out += '\t';
    out += kOmittedLabel;
    out += '\t';
    const auto words = representative_words(k, aem, embeddings, vocab, top_n);
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (i > 0) out += ' ';
      out += words[i];
    }
    out += '\n';
  }
  return out;
}

}  // namespace cmam
