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

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace cmam {

using StopwordSet = std::unordered_set<std::string>;

struct TokenizerOptions {
  // Numeric tokens (all ASCII digits) are kept unless this is set.
  bool drop_numeric_tokens = false;
};

// Token id 0 is reserved for the literal surface form "unknown"; every
// out-of-vocabulary token encodes to it and its stored count is the total
// number of such occurrences seen while building the vocabulary.
struct Vocabulary {
  static constexpr std::size_t kUnkId = 0;

  std::unordered_map<std::string, std::size_t> token_to_id;
  std::vector<std::string> id_to_token;  // id_to_token[0] == "unknown"
  std::vector<std::size_t> freq;         // freq[0] == out-of-vocab count

  std::size_t size() const { return id_to_token.size(); }
  std::size_t id_of(std::string_view token) const;
};

struct EncodedSentence {
  std::vector<std::size_t> ids;          // each < vocab size
  std::vector<std::string> raw_tokens;   // parallel to ids, surface forms
};

struct CorpusStats {
  std::size_t kept_sentences = 0;
  std::size_t dropped_short = 0;          // under min_len after filtering
  std::size_t skipped_invalid_utf8 = 0;
  std::size_t total_tokens = 0;           // tokens in kept sentences
  std::size_t in_vocab_tokens = 0;
  double coverage() const {
    return total_tokens == 0 ? 0.0
                             : static_cast<double>(in_vocab_tokens) /
                                   static_cast<double>(total_tokens);
  }
};

struct TokenizedCorpus {
  std::vector<std::vector<std::string>> sentences;
  std::size_t skipped_invalid_utf8 = 0;
};

struct EncodedCorpus {
  std::vector<EncodedSentence> sentences;
  CorpusStats stats;
};

// Lowercases ASCII letters, splits on Unicode whitespace and on strip-set
// punctuation (ASCII punctuation), removes stop words, preserves order.
// Never emits an empty token or one containing strip-set characters.
std::vector<std::string> tokenize(std::string_view text,
                                  const StopwordSet& stopwords,
                                  const TokenizerOptions& opts = {});

// Keeps the max_vocab-1 most frequent tokens with count >= min_count, ties
// broken lexicographically; ids 1.. assigned by descending count then token.
// The literal token "unknown" is never a candidate (it is the OOV sentinel).
// Throws config_error when no token qualifies.
Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& sentences,
                            std::size_t max_vocab, std::size_t min_count);

EncodedSentence encode(std::vector<std::string> tokens, const Vocabulary& vocab);

// One sentence per non-empty line; lines that are not valid UTF-8 are
// skipped and counted. Throws io_error when the file cannot be read.
TokenizedCorpus read_tokenized_lines(const std::string& path,
                                     const StopwordSet& stopwords,
                                     const TokenizerOptions& opts = {});

// read_tokenized_lines + encode; sentences shorter than min_len after
// filtering are dropped and counted (a 1-token sentence degenerates both
// negative sampling and attention).
EncodedCorpus load_corpus(const std::string& path, const Vocabulary& vocab,
                          const StopwordSet& stopwords,
                          const TokenizerOptions& opts = {},
                          std::size_t min_len = 2);

// Text format, one "token<TAB>id<TAB>count" line per id, sorted by id;
// line 0 is always "unknown<TAB>0<TAB><oov_count>".
void save_vocabulary(const Vocabulary& vocab, const std::string& path);
Vocabulary load_vocabulary(const std::string& path);

// Fixed built-in English stop-word list; deterministic across runs.
const StopwordSet& default_stopwords();
// One token per line, passed through the same normalization as tokenize.
StopwordSet load_stopwords(const std::string& path);

bool is_valid_utf8(std::string_view text);

}  // namespace cmam
