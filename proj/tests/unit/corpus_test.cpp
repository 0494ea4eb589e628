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
#include <string>
#include <vector>

#include "cmam/corpus.hpp"
#include "cmam/errors.hpp"
#include "cmam/rng.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace cmam;

namespace {
using Tokens = std::vector<std::string>;
}

TEST_CASE("tokenize lowercases, strips punctuation, drops stop words") {
  const StopwordSet sw{"i", "had"};
  CHECK(tokenize("Best Pastrami I ever had", sw) ==
        Tokens{"best", "pastrami", "ever"});
  CHECK(tokenize("", sw).empty());
  CHECK(tokenize("GREAT, great; GrEaT!!!", {}) ==
        Tokens{"great", "great", "great"});
}

TEST_CASE("default stop-word list handles the canonical sentence") {
  const StopwordSet& sw = default_stopwords();
  CHECK(sw.count("i") == 1);
  CHECK(sw.count("had") == 1);
  CHECK(sw.count("the") == 1);
  CHECK(sw.count("best") == 0);
  CHECK(sw.count("ever") == 0);
  CHECK(sw.count("pastrami") == 0);
  CHECK(tokenize("Best Pastrami I ever had", sw) ==
        Tokens{"best", "pastrami", "ever"});
}

TEST_CASE("tokenize splits on punctuation inside words and keeps digits") {
  CHECK(tokenize("don't stop-word", {}) == Tokens{"don", "t", "stop", "word"});
  CHECK(tokenize("room 101", {}) == Tokens{"room", "101"});
  TokenizerOptions drop;
  drop.drop_numeric_tokens = true;
  CHECK(tokenize("room 101", {}, drop) == Tokens{"room"});
  // Non-ASCII letters pass through untouched.
  CHECK(tokenize("caf\xc3\xa9 bar", {}) == Tokens{"caf\xc3\xa9", "bar"});
}

TEST_CASE("tokenize never emits separators or empty tokens") {
  const char pool[] =
      "abcXYZ019 .,;:!?()[]{}<>/\\'\"`~@#$%^&*-_=+|\t\n\r";
  Rng rng(11);
  for (int round = 0; round < 200; ++round) {
    std::string text;
    const std::size_t len = rng.index(60);
    for (std::size_t i = 0; i < len; ++i) {
      text += pool[rng.index(sizeof pool - 1)];
    }
    for (const auto& token : tokenize(text, {})) {
      CHECK_FALSE(token.empty());
      for (char ch : token) {
        const bool alnum = (ch >= 'a' && ch <= 'z') || (ch >= '0' && ch <= '9');
        CHECK(alnum);
      }
    }
  }
}

TEST_CASE("build_vocabulary keeps the most frequent tokens under the cap") {
  std::vector<Tokens> sentences;
  for (int i = 0; i < 5; ++i) sentences.push_back({"a"});
  for (int i = 0; i < 3; ++i) sentences.push_back({"b"});
  sentences.push_back({"c"});

  const Vocabulary vocab = build_vocabulary(sentences, 3, 1);
  CHECK(vocab.size() == 3);
  CHECK(vocab.id_to_token[0] == "unknown");
  CHECK(vocab.id_of("a") == 1);
  CHECK(vocab.id_of("b") == 2);
  CHECK(vocab.id_of("c") == Vocabulary::kUnkId);
  CHECK(vocab.freq[1] == 5);
  CHECK(vocab.freq[2] == 3);
  CHECK(vocab.freq[0] == 1);  // c's occurrence lands in the OOV bucket
}

TEST_CASE("build_vocabulary leaves slack capacity unused") {
  const Vocabulary vocab = build_vocabulary({{"a", "a", "a", "a", "a"}}, 10, 1);
  CHECK(vocab.size() == 2);
  CHECK(vocab.id_of("a") == 1);
}

TEST_CASE("build_vocabulary breaks count ties lexicographically") {
  const Vocabulary vocab = build_vocabulary({{"b", "a"}, {"a", "b"}}, 3, 1);
  CHECK(vocab.id_of("a") == 1);
  CHECK(vocab.id_of("b") == 2);
}

TEST_CASE("build_vocabulary rejects empty input and applies min_count") {
  CHECK_THROWS_AS(build_vocabulary({}, 10, 1), config_error);
  CHECK_THROWS_AS(build_vocabulary({{"a"}}, 10, 2), config_error);
  const Vocabulary vocab = build_vocabulary({{"a", "a", "b"}}, 10, 2);
  CHECK(vocab.id_of("a") == 1);
  CHECK(vocab.id_of("b") == Vocabulary::kUnkId);
}

TEST_CASE("encode maps tokens to ids with OOV fallback") {
  const Vocabulary vocab =
      build_vocabulary({{"pastrami", "pastrami"}, {"a", "a", "a"}}, 10, 1);
  const std::size_t pastrami = vocab.id_of("pastrami");

  EncodedSentence enc = encode({"pastrami", "zzz-oov"}, vocab);
  CHECK(enc.ids == std::vector<std::size_t>{pastrami, Vocabulary::kUnkId});
  CHECK(enc.raw_tokens == Tokens{"pastrami", "zzz-oov"});

  CHECK(encode({}, vocab).ids.empty());
  const std::size_t a = vocab.id_of("a");
  CHECK(encode({"a", "a"}, vocab).ids == std::vector<std::size_t>{a, a});
}

TEST_CASE("vocabulary save/load round-trips") {
  testutil::TempDir dir("vocab");
  const Vocabulary vocab =
      build_vocabulary({{"a", "a", "b", "zebra", "zebra", "zebra"}}, 4, 1);
  save_vocabulary(vocab, dir.file("vocab.tsv"));
  const Vocabulary loaded = load_vocabulary(dir.file("vocab.tsv"));
  CHECK(loaded.id_to_token == vocab.id_to_token);
  CHECK(loaded.freq == vocab.freq);
  for (const auto& [token, id] : vocab.token_to_id) {
    CHECK(loaded.id_of(token) == id);
  }
  CHECK_THROWS_AS(load_vocabulary(dir.file("missing.tsv")), io_error);
}

TEST_CASE("load_corpus drops short sentences and skips invalid UTF-8") {
  testutil::TempDir dir("corpus");
  const std::string path = dir.file("corpus.txt");
  testutil::write_file(path,
                       "good meal here\n"
                       "\n"
                       "single\n"
                       "bad \xff\xfe line\n"
                       "another fine meal\n");
  const Vocabulary vocab = build_vocabulary(
      {{"good", "meal", "here", "another", "fine", "single"}}, 100, 1);
  const EncodedCorpus corpus = load_corpus(path, vocab, {});
  CHECK(corpus.sentences.size() == 2);
  CHECK(corpus.stats.kept_sentences == 2);
  CHECK(corpus.stats.dropped_short == 1);
  CHECK(corpus.stats.skipped_invalid_utf8 == 1);
  CHECK(corpus.stats.total_tokens == 6);
  CHECK(corpus.stats.in_vocab_tokens == 6);
  CHECK(corpus.stats.coverage() == 1.0);
  CHECK(corpus.sentences[0].raw_tokens == Tokens{"good", "meal", "here"});

  CHECK_THROWS_AS(load_corpus(dir.file("missing.txt"), vocab, {}), io_error);
}

TEST_CASE("coverage counts OOV tokens in kept sentences") {
  testutil::TempDir dir("coverage");
  const std::string path = dir.file("corpus.txt");
  testutil::write_file(path, "good meal mystery\n");
  const Vocabulary vocab = build_vocabulary({{"good", "meal"}}, 100, 1);
  const EncodedCorpus corpus = load_corpus(path, vocab, {});
  CHECK(corpus.stats.total_tokens == 3);
  CHECK(corpus.stats.in_vocab_tokens == 2);
  CHECK(corpus.stats.coverage() == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("utf8 validation rejects malformed sequences") {
  CHECK(is_valid_utf8("plain ascii"));
  CHECK(is_valid_utf8("caf\xc3\xa9"));
  CHECK(is_valid_utf8("\xe2\x82\xac"));      // three-byte code point
  CHECK(is_valid_utf8("\xf0\x9f\x8d\x95"));  // four-byte code point
  CHECK_FALSE(is_valid_utf8("\xff"));
  CHECK_FALSE(is_valid_utf8("\xc3"));          // truncated sequence
  CHECK_FALSE(is_valid_utf8("\xc0\xaf"));      // overlong encoding
  CHECK_FALSE(is_valid_utf8("\xed\xa0\x80"));  // surrogate half
}

TEST_CASE("stop-word files are normalized like corpus text") {
  testutil::TempDir dir("stopwords");
  const std::string path = dir.file("stop.txt");
  testutil::write_file(path, "The\nHAD\n  i  \n");
  const StopwordSet sw = load_stopwords(path);
  CHECK(sw.count("the") == 1);
  CHECK(sw.count("had") == 1);
  CHECK(sw.count("i") == 1);
}
