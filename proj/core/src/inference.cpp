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
#include "cmam/inference.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "cmam/errors.hpp"

namespace cmam {

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw config_error("quantile of an empty sequence");
  if (q < 0.0 || q > 1.0) throw config_error("quantile order outside [0,1]");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = static_cast<std::size_t>(std::ceil(h));
  return values[lo] + (h - std::floor(h)) * (values[hi] - values[lo]);
}

namespace {

// Indices with value strictly above the q-quantile, ranked by descending
// value with ties to the lower index, truncated to n.
std::vector<std::size_t> select_above_quantile(std::span<const double> values,
                                               double q, std::size_t n) {
  const double threshold =
      quantile(std::vector<double>(values.begin(), values.end()), q);
  std::vector<std::size_t> picked;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] > threshold) picked.push_back(i);
  }
  std::sort(picked.begin(), picked.end(), [&](std::size_t a, std::size_t b) {
    if (values[a] != values[b]) return values[a] > values[b];
    return a < b;
  });
  if (picked.size() > n) picked.resize(n);
  return picked;
}

}  // namespace

std::vector<std::pair<std::size_t, double>> select_aspects(
    std::span<const double> p, const InferenceConfig& cfg) {
  if (cfg.n_as == 0) throw config_error("n_as must be >= 1");
  std::vector<std::pair<std::size_t, double>> out;
  for (std::size_t k : select_above_quantile(p, cfg.q_as, cfg.n_as)) {
    out.emplace_back(k, p[k]);
  }
  return out;
}

std::vector<TermSelection> select_terms(std::span<const double> a_column,
                                        const std::vector<std::string>& tokens,
                                        const InferenceConfig& cfg) {
  if (cfg.n_at == 0) throw config_error("n_at must be >= 1");
  if (a_column.size() != tokens.size()) {
    throw config_error("attention column and token count differ");
  }
  std::vector<std::size_t> picked =
      select_above_quantile(a_column, cfg.q_at, cfg.n_at);
  std::sort(picked.begin(), picked.end());  // back to sentence order
  std::vector<TermSelection> out;
  out.reserve(picked.size());
  for (std::size_t pos : picked) {
    out.push_back({pos, tokens[pos], a_column[pos], false});
  }
  return out;
}

Prediction predict(const EncodedSentence& sentence, const Matrix& embeddings,
                   const CmamParams& params, const InferenceConfig& cfg) {
  if (sentence.ids.empty()) throw config_error("predict: empty sentence");
  const ForwardState state = forward(sentence, embeddings, params);
  Prediction prediction;
  for (std::size_t i = 0; i < sentence.raw_tokens.size(); ++i) {
    if (i > 0) prediction.sentence += ' ';
    prediction.sentence += sentence.raw_tokens[i];
  }
  const auto aspects =
      select_aspects(std::span<const double>(state.p), cfg);
  std::vector<double> column(state.a.rows);
  for (const auto& [k, weight] : aspects) {
    for (std::size_t i = 0; i < state.a.rows; ++i) column[i] = state.a(i, k);
    AspectSelection selection;
    selection.aspect = k;
    selection.weight = weight;
    selection.terms =
        select_terms(std::span<const double>(column), sentence.raw_tokens, cfg);
    for (auto& term : selection.terms) {
      term.unknown = sentence.ids[term.pos] == Vocabulary::kUnkId;
    }
    prediction.aspects.push_back(std::move(selection));
  }
  return prediction;
}

void write_predictions(const std::vector<Prediction>& predictions,
                       const std::vector<std::string>* labels,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write predictions: " + path);
  for (const auto& prediction : predictions) {
    nlohmann::json record;
    record["sentence"] = prediction.sentence;
    record["aspects"] = nlohmann::json::array();
    for (const auto& aspect : prediction.aspects) {
      nlohmann::json a;
      a["id"] = aspect.aspect;
      if (labels != nullptr && aspect.aspect < labels->size()) {
        a["label"] = (*labels)[aspect.aspect];
      } else {
        a["label"] = nullptr;
      }
      a["weight"] = aspect.weight;
      a["terms"] = nlohmann::json::array();
      for (const auto& term : aspect.terms) {
        a["terms"].push_back({{"pos", term.pos},
                              {"token", term.token},
                              {"weight", term.weight},
                              {"unknown", term.unknown}});
      }
      record["aspects"].push_back(std::move(a));
    }
    out << record.dump() << '\n';
  }
  if (!out) throw io_error("failed writing predictions: " + path);
}

std::vector<Prediction> read_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot read predictions: " + path);
  std::vector<Prediction> predictions;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
      Prediction prediction;
      prediction.sentence = record.at("sentence").get<std::string>();
      for (const auto& a : record.at("aspects")) {
        AspectSelection aspect;
        aspect.aspect = a.at("id").get<std::size_t>();
        aspect.weight = a.at("weight").get<double>();
        for (const auto& t : a.at("terms")) {
          TermSelection term;
          term.pos = t.at("pos").get<std::size_t>();
          term.token = t.at("token").get<std::string>();
          term.weight = t.at("weight").get<double>();
          term.unknown = t.value("unknown", false);
          aspect.terms.push_back(std::move(term));
        }
        prediction.aspects.push_back(std::move(aspect));
      }
      predictions.push_back(std::move(prediction));
    } catch (const nlohmann::json::exception& e) {
      throw io_error("malformed prediction at line " +
                     std::to_string(line_no) + " of " + path + ": " +
                     e.what());
    }
  }
  return predictions;
}

}  // namespace cmam
