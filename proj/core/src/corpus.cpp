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
#include "cmam/corpus.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <utility>

#include "cmam/errors.hpp"

namespace cmam {

namespace {

constexpr const char* kUnknownToken = "unknown";

// ASCII punctuation; these characters separate tokens, which subsumes both
// leading/trailing stripping and the invariant that no emitted token
// contains a strip-set character.
bool is_strip_char(std::uint32_t cp) {
  return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
         (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
}

bool is_space_cp(std::uint32_t cp) {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200B;
  }
}

// Decodes the codepoint at `i`, advancing `i`. Malformed sequences consume
// one byte and yield that byte value (callers gate on is_valid_utf8 where
// strictness matters).
std::uint32_t next_codepoint(std::string_view text, std::size_t& i) {
  const auto byte = static_cast<unsigned char>(text[i]);
  std::size_t len = 1;
  std::uint32_t cp = byte;
  if (byte >= 0xF0) {
    len = 4;
    cp = byte & 0x07u;
  } else if (byte >= 0xE0) {
    len = 3;
    cp = byte & 0x0Fu;
  } else if (byte >= 0xC0) {
    len = 2;
    cp = byte & 0x1Fu;
  }
  if (len > 1) {
    if (i + len > text.size()) {
      ++i;
      return byte;
    }
    std::uint32_t acc = cp;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cont = static_cast<unsigned char>(text[i + k]);
      if ((cont & 0xC0u) != 0x80u) {
        ++i;
        return byte;
      }
      acc = (acc << 6) | (cont & 0x3Fu);
    }
    i += len;
    return acc;
  }
  ++i;
  return cp;
}

bool is_numeric_token(const std::string& token) {
  if (token.empty()) return false;
  for (char ch : token) {
    if (ch < '0' || ch > '9') return false;
  }
  return true;
}

void append_codepoint(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

}  // namespace

std::size_t Vocabulary::id_of(std::string_view token) const {
  const auto it = token_to_id.find(std::string(token));
  return it == token_to_id.end() ? kUnkId : it->second;
}

std::vector<std::string> tokenize(std::string_view text,
                                  const StopwordSet& stopwords,
                                  const TokenizerOptions& opts) {
  std::vector<std::string> out;
  std::string current;
  const auto flush = [&] {
    if (current.empty()) return;
    if (stopwords.find(current) == stopwords.end() &&
        !(opts.drop_numeric_tokens && is_numeric_token(current))) {
      out.push_back(current);
    }
    current.clear();
  };
  std::size_t i = 0;
  while (i < text.size()) {
    std::uint32_t cp = next_codepoint(text, i);
    if (is_space_cp(cp) || is_strip_char(cp)) {
      flush();
      continue;
    }
    if (cp >= 'A' && cp <= 'Z') cp += 'a' - 'A';
    append_codepoint(current, cp);
  }
  flush();
  return out;
}

Vocabulary build_vocabulary(
    const std::vector<std::vector<std::string>>& sentences,
    std::size_t max_vocab, std::size_t min_count) {
  if (max_vocab < 1) throw config_error("max_vocab must be >= 1");
  std::unordered_map<std::string, std::size_t> counts;
  std::size_t total = 0;
  for (const auto& sentence : sentences) {
    for (const auto& token : sentence) {
      ++counts[token];
      ++total;
    }
  }
  if (total == 0) throw config_error("no trainable data: corpus is empty");

  std::vector<std::pair<std::string, std::size_t>> candidates;
  candidates.reserve(counts.size());
  for (const auto& [token, count] : counts) {
    // The OOV sentinel's surface form is reserved; literal occurrences
    // count as out-of-vocabulary like everything else not kept.
    if (count >= min_count && token != kUnknownToken) {
      candidates.emplace_back(token, count);
    }
  }
  if (candidates.empty()) {
    throw config_error("no trainable data: no token reaches min_count");
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const auto& a, const auto& b) {
              if (a.second != b.second) return a.second > b.second;
              return a.first < b.first;
            });

  const std::size_t keep = std::min(candidates.size(), max_vocab - 1);
  Vocabulary vocab;
  vocab.id_to_token.reserve(keep + 1);
  vocab.freq.reserve(keep + 1);
  vocab.id_to_token.emplace_back(kUnknownToken);
  vocab.freq.push_back(0);
  vocab.token_to_id.emplace(kUnknownToken, 0);
  std::size_t kept_total = 0;
  for (std::size_t i = 0; i < keep; ++i) {
    vocab.token_to_id.emplace(candidates[i].first, i + 1);
    vocab.id_to_token.push_back(candidates[i].first);
    vocab.freq.push_back(candidates[i].second);
    kept_total += candidates[i].second;
  }
  vocab.freq[0] = total - kept_total;
  return vocab;
}

EncodedSentence encode(std::vector<std::string> tokens,
                       const Vocabulary& vocab) {
  EncodedSentence sentence;
  sentence.ids.reserve(tokens.size());
  for (const auto& token : tokens) sentence.ids.push_back(vocab.id_of(token));
  sentence.raw_tokens = std::move(tokens);
  return sentence;
}

TokenizedCorpus read_tokenized_lines(const std::string& path,
                                     const StopwordSet& stopwords,
                                     const TokenizerOptions& opts) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot read corpus file: " + path);
  TokenizedCorpus result;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!is_valid_utf8(line)) {
      ++result.skipped_invalid_utf8;
      continue;
    }
    result.sentences.push_back(tokenize(line, stopwords, opts));
  }
  return result;
}

EncodedCorpus load_corpus(const std::string& path, const Vocabulary& vocab,
                          const StopwordSet& stopwords,
                          const TokenizerOptions& opts, std::size_t min_len) {
  TokenizedCorpus tokenized = read_tokenized_lines(path, stopwords, opts);
  EncodedCorpus result;
  result.stats.skipped_invalid_utf8 = tokenized.skipped_invalid_utf8;
  for (auto& tokens : tokenized.sentences) {
    if (tokens.size() < min_len) {
      ++result.stats.dropped_short;
      continue;
    }
    EncodedSentence sentence = encode(std::move(tokens), vocab);
    result.stats.total_tokens += sentence.ids.size();
    for (std::size_t id : sentence.ids) {
      if (id != Vocabulary::kUnkId) ++result.stats.in_vocab_tokens;
    }
    ++result.stats.kept_sentences;
    result.sentences.push_back(std::move(sentence));
  }
  return result;
}

void save_vocabulary(const Vocabulary& vocab, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write vocabulary file: " + path);
  for (std::size_t id = 0; id < vocab.size(); ++id) {
    out << vocab.id_to_token[id] << '\t' << id << '\t' << vocab.freq[id]
        << '\n';
  }
  if (!out) throw io_error("failed writing vocabulary file: " + path);
}

Vocabulary load_vocabulary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot read vocabulary file: " + path);
  Vocabulary vocab;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string token;
    std::size_t id = 0;
    std::size_t count = 0;
    if (!(fields >> token >> id >> count) || id != line_no) {
      throw io_error("malformed vocabulary file at line " +
                     std::to_string(line_no + 1) + ": " + path);
    }
    vocab.token_to_id.emplace(token, id);
    vocab.id_to_token.push_back(std::move(token));
    vocab.freq.push_back(count);
    ++line_no;
  }
  if (vocab.id_to_token.empty() || vocab.id_to_token[0] != kUnknownToken) {
    throw io_error("vocabulary file must reserve id 0 for \"unknown\": " +
                   path);
  }
  return vocab;
}

bool is_valid_utf8(std::string_view text) {
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const auto byte = static_cast<unsigned char>(text[i]);
    if (byte < 0x80) {
      ++i;
      continue;
    }
    std::size_t len = 0;
    std::uint32_t cp = 0;
    std::uint32_t min_cp = 0;
    if ((byte & 0xE0u) == 0xC0u) {
      len = 2;
      cp = byte & 0x1Fu;
      min_cp = 0x80;
    } else if ((byte & 0xF0u) == 0xE0u) {
      len = 3;
      cp = byte & 0x0Fu;
      min_cp = 0x800;
    } else if ((byte & 0xF8u) == 0xF0u) {
      len = 4;
      cp = byte & 0x07u;
      min_cp = 0x10000;
    } else {
      return false;
    }
    if (i + len > n) return false;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cont = static_cast<unsigned char>(text[i + k]);
      if ((cont & 0xC0u) != 0x80u) return false;
      cp = (cp << 6) | (cont & 0x3Fu);
    }
    // Overlongs, UTF-16 surrogates, and beyond-plane values are invalid.
    if (cp < min_cp || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      return false;
    }
    i += len;
  }
  return true;
}

}  // namespace cmam
