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
#include <fstream>

#include "cmam/corpus.hpp"
#include "cmam/errors.hpp"

namespace cmam {

namespace {

// The common English list (function words plus the contraction fragments the
// tokenizer produces by splitting on apostrophes). Content words that carry
// sentiment or aspect signal ("best", "ever") are deliberately absent.
constexpr const char* kEnglishStopwords[] = {
    "i",       "me",      "my",      "myself",  "we",        "our",
    "ours",    "ourselves", "you",   "your",    "yours",     "yourself",
    "yourselves", "he",   "him",     "his",     "himself",   "she",
    "her",     "hers",    "herself", "it",      "its",       "itself",
    "they",    "them",    "their",   "theirs",  "themselves", "what",
    "which",   "who",     "whom",    "this",    "that",      "these",
    "those",   "am",      "is",      "are",     "was",       "were",
    "be",      "been",    "being",   "have",    "has",       "had",
    "having",  "do",      "does",    "did",     "doing",     "a",
    "an",      "the",     "and",     "but",     "if",        "or",
    "because", "as",      "until",   "while",   "of",        "at",
    "by",      "for",     "with",    "about",   "against",   "between",
    "into",    "through", "during",  "before",  "after",     "above",
    "below",   "to",      "from",    "up",      "down",      "in",
    "out",     "on",      "off",     "over",    "under",     "again",
    "further", "then",    "once",    "here",    "there",     "when",
    "where",   "why",     "how",     "all",     "any",       "both",
    "each",    "few",     "more",    "most",    "other",     "some",
    "such",    "no",      "nor",     "not",     "only",      "own",
    "same",    "so",      "than",    "too",     "very",      "s",
    "t",       "can",     "will",    "just",    "don",       "should",
    "now",     "d",       "ll",      "m",       "o",         "re",
    "ve",      "y",       "ain",     "aren",    "couldn",    "didn",
    "doesn",   "hadn",    "hasn",    "haven",   "isn",       "ma",
    "mightn",  "mustn",   "needn",   "shan",    "shouldn",   "wasn",
    "weren",   "won",     "wouldn",
};

}  // namespace

const StopwordSet& default_stopwords() {
  static const StopwordSet set(std::begin(kEnglishStopwords),
                               std::end(kEnglishStopwords));
  return set;
}

StopwordSet load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot read stop-word file: " + path);
  StopwordSet set;
  const StopwordSet empty;
  std::string line;
  while (std::getline(in, line)) {
    // Same normalization as the tokenizer, so file entries written in any
    // case or with punctuation match what tokenize produces.
    for (auto& token : tokenize(line, empty)) set.insert(std::move(token));
  }
  return set;
}

}  // namespace cmam
