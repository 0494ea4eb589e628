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
#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "cmam/errors.hpp"
#include "cmam/evaluation.hpp"
#include "cmam/inference.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace cmam;

namespace {

Prediction make_prediction(
    const std::string& text,
    const std::vector<std::pair<std::size_t, std::vector<std::string>>>&
        aspect_terms) {
  Prediction pred;
  pred.sentence = text;
  double weight = 0.9;
  for (const auto& [aspect, tokens] : aspect_terms) {
    AspectSelection sel;
    sel.aspect = aspect;
    sel.weight = weight;
    weight -= 0.1;  // descending, mirroring real selection output
    std::size_t pos = 0;
    for (const auto& token : tokens) {
      TermSelection term;
      term.pos = pos++;
      term.token = token;
      term.weight = 0.5;
      sel.terms.push_back(term);
    }
    pred.aspects.push_back(sel);
  }
  return pred;
}

LabeledExample make_gold(
    const std::string& text,
    const std::vector<std::pair<std::string, std::vector<std::string>>>&
        pairs) {
  LabeledExample example;
  example.text = text;
  for (const auto& [label, tokens] : pairs) {
    GoldPair pair;
    pair.label = label;
    pair.term_tokens = tokens;
    example.pairs.push_back(pair);
  }
  return example;
}

}  // namespace

TEST_CASE("prf_from_counts covers the degenerate denominators") {
  const Prf perfect = prf_from_counts({10, 0, 0});
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.f1 == 1.0);

  const Prf mixed = prf_from_counts({2, 1, 1});
  CHECK(mixed.precision == doctest::Approx(2.0 / 3.0));
  CHECK(mixed.recall == doctest::Approx(2.0 / 3.0));
  CHECK(mixed.f1 == doctest::Approx(2.0 / 3.0));

  const Prf empty = prf_from_counts({0, 0, 5});
  CHECK(empty.precision == 0.0);
  CHECK(empty.recall == 0.0);
  CHECK(empty.f1 == 0.0);
}

TEST_CASE("prf invariants hold over random count tuples") {
  Rng rng(23);
  for (int round = 0; round < 200; ++round) {
    const Counts counts{rng.index(20), rng.index(20), rng.index(20)};
    const Prf prf = prf_from_counts(counts);
    CHECK(prf.precision >= 0.0);
    CHECK(prf.precision <= 1.0);
    CHECK(prf.recall >= 0.0);
    CHECK(prf.recall <= 1.0);
    CHECK(prf.f1 >= 0.0);
    CHECK(prf.f1 <= std::max(prf.precision, prf.recall) + 1e-15);
    CHECK((prf.f1 == 0.0) == (prf.precision * prf.recall == 0.0));
  }
}

TEST_CASE("representative_words ranks by cosine similarity") {
  Rng rng(24);
  Vocabulary vocab;
  vocab.id_to_token = {"unknown", "beer", "pizza", "waiter", "decor"};
  for (std::size_t i = 0; i < vocab.id_to_token.size(); ++i) {
    vocab.token_to_id[vocab.id_to_token[i]] = i;
    vocab.freq.push_back(1);
  }
  const Matrix emb = testutil::random_matrix(vocab.size(), 6, 1.0, rng);

  Matrix aem(2, 6);
  for (std::size_t c = 0; c < 6; ++c) {
    aem(0, c) = emb(vocab.id_of("beer"), c);  // aspect 0 sits on "beer"
    aem(1, c) = -emb(vocab.id_of("decor"), c);
  }

  const auto words = representative_words(0, aem, emb, vocab, 2);
  REQUIRE(words.size() == 2);
  CHECK(words[0] == "beer");

  const auto all = representative_words(0, aem, emb, vocab, vocab.size() - 1);
  CHECK(all.size() == vocab.size() - 1);
  const std::set<std::string> unique(all.begin(), all.end());
  CHECK(unique.size() == all.size());
  CHECK(unique.count("unknown") == 0);
}

TEST_CASE("score_aspects counts per-sentence-per-label decisions") {
  const GoldMapping mapping{"food", "staff"};

  SUBCASE("perfect predictions") {
    std::vector<Prediction> preds{
        make_prediction("s1", {{0, {}}}),
        make_prediction("s2", {{1, {}}}),
    };
    std::vector<LabeledExample> gold{
        make_gold("s1", {{"food", {"pasta"}}}),
        make_gold("s2", {{"staff", {"waiter"}}}),
    };
    const auto scores = score_aspects(preds, gold, mapping);
    CHECK(scores.at("food").f1 == 1.0);
    CHECK(scores.at("staff").f1 == 1.0);
  }

  SUBCASE("tp 2, fp 1, fn 1 gives two-thirds everywhere") {
    std::vector<Prediction> preds{
        make_prediction("s1", {{0, {}}}),   // TP food
        make_prediction("s2", {{0, {}}}),   // TP food
        make_prediction("s3", {{0, {}}}),   // FP food (gold staff only)
        make_prediction("s4", {}),          // FN food
    };
    std::vector<LabeledExample> gold{
        make_gold("s1", {{"food", {"a"}}}),
        make_gold("s2", {{"food", {"b"}}}),
        make_gold("s3", {{"staff", {"c"}}}),
        make_gold("s4", {{"food", {"d"}}}),
    };
    const auto scores = score_aspects(preds, gold, mapping);
    CHECK(scores.at("food").counts.tp == 2);
    CHECK(scores.at("food").counts.fp == 1);
    CHECK(scores.at("food").counts.fn == 1);
    CHECK(scores.at("food").precision == doctest::Approx(2.0 / 3.0));
    CHECK(scores.at("food").recall == doctest::Approx(2.0 / 3.0));
    CHECK(scores.at("food").f1 == doctest::Approx(2.0 / 3.0));
  }

  SUBCASE("no predictions at all scores zero") {
    std::vector<Prediction> preds{make_prediction("s1", {})};
    std::vector<LabeledExample> gold{make_gold("s1", {{"food", {"a"}}})};
    const auto scores = score_aspects(preds, gold, mapping);
    CHECK(scores.at("food").precision == 0.0);
    CHECK(scores.at("food").recall == 0.0);
    CHECK(scores.at("food").f1 == 0.0);
  }

  SUBCASE("omitted aspects and unscored gold labels are ignored") {
    const GoldMapping with_omitted{"food", "omitted"};
    std::vector<Prediction> preds{
        make_prediction("s1", {{1, {}}}),  // maps to omitted: no FP
    };
    std::vector<LabeledExample> gold{
        make_gold("s1", {{"food", {"a"}}, {"price", {"cheap"}}}),
    };
    const auto scores = score_aspects(preds, gold, with_omitted);
    CHECK(scores.count("price") == 0);
    CHECK(scores.at("food").counts.fn == 1);
    CHECK(scores.at("food").counts.fp == 0);
  }

  SUBCASE("examples with no scored gold label are skipped") {
    const GoldMapping only_food{"food"};
    std::vector<Prediction> preds{
        make_prediction("s1", {{0, {}}}),  // would be FP if scored
    };
    std::vector<LabeledExample> gold{
        make_gold("s1", {{"price", {"cheap"}}}),
    };
    const auto scores = score_aspects(preds, gold, only_food);
    CHECK(scores.at("food").counts.fp == 0);
    CHECK(scores.at("food").counts.tp == 0);
    CHECK(scores.at("food").counts.fn == 0);
  }

  SUBCASE("unmapped aspect ids are configuration errors") {
    std::vector<Prediction> preds{make_prediction("s1", {{7, {}}})};
    std::vector<LabeledExample> gold{make_gold("s1", {{"food", {"a"}}})};
    CHECK_THROWS_AS(score_aspects(preds, gold, mapping), config_error);
  }

  SUBCASE("prediction/gold count mismatch is rejected") {
    std::vector<Prediction> preds{make_prediction("s1", {})};
    CHECK_THROWS_AS(score_aspects(preds, {}, mapping), config_error);
  }
}

TEST_CASE("score_pairs applies the partial-match rule") {
  const GoldMapping mapping{"food", "staff"};

  SUBCASE("exact term match is a true positive") {
    std::vector<Prediction> preds{
        make_prediction("s1", {{0, {"pastrami"}}}),
    };
    std::vector<LabeledExample> gold{
        make_gold("s1", {{"food", {"pastrami"}}}),
    };
    const PairScores scores = score_pairs(preds, gold, mapping);
    CHECK(scores.micro.counts.tp == 1);
    CHECK(scores.micro.counts.fp == 0);
    CHECK(scores.micro.counts.fn == 0);
    CHECK(scores.per_category.at("food").f1 == 1.0);
  }

  SUBCASE("sharing one token of a longer gold span still matches") {
    std::vector<Prediction> preds{
        make_prediction("s1", {{0, {"portion"}}}),
    };
    std::vector<LabeledExample> gold{
        make_gold("s1", {{"food", {"great", "portion"}}}),
    };
    const PairScores scores = score_pairs(preds, gold, mapping);
    CHECK(scores.micro.counts.tp == 1);
    CHECK(scores.micro.counts.fn == 0);
  }

  SUBCASE("right term under the wrong label is FP plus FN") {
    std::vector<Prediction> preds{
        make_prediction("s1", {{1, {"pastrami"}}}),
    };
    std::vector<LabeledExample> gold{
        make_gold("s1", {{"food", {"pastrami"}}}),
    };
    const PairScores scores = score_pairs(preds, gold, mapping);
    CHECK(scores.micro.counts.tp == 0);
    CHECK(scores.micro.counts.fp == 1);
    CHECK(scores.micro.counts.fn == 1);
    CHECK(scores.per_category.at("food").counts.fn == 1);
  }

  SUBCASE("each gold pair is consumed at most once") {
    // Distinct predicted pairs (different tokens) both overlap the same gold
    // pair; only the higher-weight one may claim it.
    std::vector<Prediction> preds{
        make_prediction("s1", {{0, {"pasta"}}, {1, {"great"}}}),
    };
    const GoldMapping both_food{"food", "food"};
    std::vector<LabeledExample> gold{
        make_gold("s1", {{"food", {"great", "pasta"}}}),
    };
    const PairScores scores = score_pairs(preds, gold, both_food);
    CHECK(scores.micro.counts.tp == 1);
    CHECK(scores.micro.counts.fp == 1);  // second prediction finds no gold
    CHECK(scores.micro.counts.fn == 0);
  }

  SUBCASE("identical label and tokens collapse to one predicted pair") {
    std::vector<Prediction> preds{
        make_prediction("s1", {{0, {"pasta"}}, {1, {"pasta"}}}),
    };
    const GoldMapping both_food{"food", "food"};
    std::vector<LabeledExample> gold{
        make_gold("s1", {{"food", {"pasta"}}}),
    };
    const PairScores scores = score_pairs(preds, gold, both_food);
    CHECK(scores.micro.counts.tp == 1);
    CHECK(scores.micro.counts.fp == 0);
  }

  SUBCASE("unknown-flagged term tokens never match") {
    Prediction pred = make_prediction("s1", {{0, {"pastrami"}}});
    pred.aspects[0].terms[0].unknown = true;
    std::vector<LabeledExample> gold{
        make_gold("s1", {{"food", {"pastrami"}}}),
    };
    const PairScores scores = score_pairs({pred}, gold, mapping);
    CHECK(scores.micro.counts.tp == 0);
    CHECK(scores.micro.counts.fp == 1);
    CHECK(scores.micro.counts.fn == 1);
  }

  SUBCASE("aspects without terms contribute no predicted pair") {
    std::vector<Prediction> preds{make_prediction("s1", {{0, {}}})};
    std::vector<LabeledExample> gold{
        make_gold("s1", {{"food", {"pasta"}}}),
    };
    const PairScores scores = score_pairs(preds, gold, mapping);
    CHECK(scores.micro.counts.fp == 0);
    CHECK(scores.micro.counts.fn == 1);
  }

  SUBCASE("multi-label sentences pool under their own category") {
    std::vector<Prediction> preds{
        make_prediction("s1", {{0, {"pasta"}}, {1, {"waiter"}}}),
    };
    std::vector<LabeledExample> gold{
        make_gold("s1", {{"food", {"pasta"}}, {"staff", {"waiter"}}}),
    };
    const PairScores scores = score_pairs(preds, gold, mapping);
    REQUIRE(scores.per_category.count(kMultiLabels) == 1);
    CHECK(scores.per_category.at(kMultiLabels).counts.tp == 2);
    CHECK(scores.per_category.count("food") == 0);  // example is multi-label
    CHECK(scores.micro.counts.tp == 2);
  }
}

TEST_CASE("pair scoring invariants") {
  Rng rng(25);
  const GoldMapping mapping{"food", "staff", "omitted"};
  const std::vector<std::string> label_pool{"food", "staff"};
  const std::vector<std::string> token_pool{"pasta", "waiter", "wall",
                                            "soup", "menu"};

  for (int round = 0; round < 50; ++round) {
    std::vector<Prediction> preds;
    std::vector<LabeledExample> gold;
    const std::size_t n = 1 + rng.index(6);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::pair<std::size_t, std::vector<std::string>>> pa;
      const std::size_t n_aspects = rng.index(3);
      for (std::size_t a = 0; a < n_aspects; ++a) {
        std::vector<std::string> tokens;
        const std::size_t n_tokens = rng.index(3);
        for (std::size_t t = 0; t < n_tokens; ++t) {
          tokens.push_back(token_pool[rng.index(token_pool.size())]);
        }
        pa.push_back({rng.index(3), tokens});
      }
      preds.push_back(make_prediction("s", pa));

      std::vector<std::pair<std::string, std::vector<std::string>>> gp;
      const std::size_t n_pairs = 1 + rng.index(2);
      for (std::size_t g = 0; g < n_pairs; ++g) {
        gp.push_back({label_pool[rng.index(label_pool.size())],
                      {token_pool[rng.index(token_pool.size())]}});
      }
      gold.push_back(make_gold("s", gp));
    }

    const PairScores base = score_pairs(preds, gold, mapping);

    // tp + fn accounts for every gold pair exactly once.
    std::size_t gold_pairs = 0;
    for (const auto& example : gold) gold_pairs += example.pairs.size();
    CHECK(base.micro.counts.tp + base.micro.counts.fn == gold_pairs);

    // Micro counts equal the sum of the per-category counts.
    Counts pooled;
    for (const auto& [category, prf] : base.per_category) {
      pooled.tp += prf.counts.tp;
      pooled.fp += prf.counts.fp;
      pooled.fn += prf.counts.fn;
    }
    CHECK(pooled.tp == base.micro.counts.tp);
    CHECK(pooled.fp == base.micro.counts.fp);
    CHECK(pooled.fn == base.micro.counts.fn);

    // Exact duplicates collapse: doubling every prediction changes nothing.
    std::vector<Prediction> doubled = preds;
    for (auto& pred : doubled) {
      const auto copy = pred.aspects;
      pred.aspects.insert(pred.aspects.end(), copy.begin(), copy.end());
    }
    const PairScores twice = score_pairs(doubled, gold, mapping);
    CHECK(twice.micro.counts.tp == base.micro.counts.tp);
    CHECK(twice.micro.counts.fn == base.micro.counts.fn);
    CHECK(twice.micro.counts.fp >= base.micro.counts.fp);

    // Shuffling the example stream leaves every count unchanged.
    std::vector<std::size_t> order(preds.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    std::vector<Prediction> preds_shuffled;
    std::vector<LabeledExample> gold_shuffled;
    for (std::size_t idx : order) {
      preds_shuffled.push_back(preds[idx]);
      gold_shuffled.push_back(gold[idx]);
    }
    const PairScores moved = score_pairs(preds_shuffled, gold_shuffled,
                                         mapping);
    CHECK(moved.micro.counts.tp == base.micro.counts.tp);
    CHECK(moved.micro.counts.fp == base.micro.counts.fp);
    CHECK(moved.micro.counts.fn == base.micro.counts.fn);

    const auto aspects_base = score_aspects(preds, gold, mapping);
    const auto aspects_moved =
        score_aspects(preds_shuffled, gold_shuffled, mapping);
    for (const auto& [label, prf] : aspects_base) {
      CHECK(aspects_moved.at(label).counts.tp == prf.counts.tp);
      CHECK(aspects_moved.at(label).counts.fp == prf.counts.fp);
      CHECK(aspects_moved.at(label).counts.fn == prf.counts.fn);
    }
  }
}

TEST_CASE("auto_map_by_overlap assigns labels by core-token overlap") {
  Vocabulary vocab;
  vocab.id_to_token = {"unknown", "pasta", "soup", "waiter", "lamp"};
  for (std::size_t i = 0; i < vocab.id_to_token.size(); ++i) {
    vocab.token_to_id[vocab.id_to_token[i]] = i;
    vocab.freq.push_back(1);
  }
  // Embeddings on distinct axes make cosine ranks unambiguous.
  Matrix emb(5, 5, 0.0);
  for (std::size_t i = 0; i < 5; ++i) emb(i, i) = 1.0;

  Matrix aem(3, 5, 0.0);
  aem(0, vocab.id_of("pasta")) = 1.0;   // nearest words: pasta then ties
  aem(1, vocab.id_of("waiter")) = 1.0;  // nearest: waiter
  aem(2, vocab.id_of("lamp")) = 1.0;    // nearest: lamp, unmatched below

  const std::map<std::string, std::set<std::string>> cores{
      {"food", {"pasta", "soup"}},
      {"staff", {"waiter"}},
  };
  const GoldMapping mapping = auto_map_by_overlap(aem, emb, vocab, cores, 1);
  REQUIRE(mapping.size() == 3);
  CHECK(mapping[0] == "food");
  CHECK(mapping[1] == "staff");
  CHECK(mapping[2] == kOmittedLabel);
}

TEST_CASE("gold files round-trip through json-lines") {
  testutil::TempDir dir("gold");
  std::vector<LabeledExample> examples{
      make_gold("Best pastrami ever", {{"food", {"pastrami"}}}),
      make_gold("waiter was rude",
                {{"staff", {"waiter"}}, {"food", {"soup", "cold"}}}),
  };
  const std::string path = dir.file("gold.jsonl");
  write_gold(examples, path);
  const auto loaded = read_gold(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].text == "Best pastrami ever");
  REQUIRE(loaded[1].pairs.size() == 2);
  CHECK(loaded[1].pairs[0].label == "staff");
  CHECK(loaded[1].pairs[1].term_tokens ==
        std::vector<std::string>{"soup", "cold"});

  testutil::write_file(dir.file("empty_pairs.jsonl"),
                       R"({"text": "x", "pairs": []})"
                       "\n");
  CHECK_THROWS_AS(read_gold(dir.file("empty_pairs.jsonl")), io_error);
}

TEST_CASE("gold terms are normalized like corpus text on read") {
  testutil::TempDir dir("goldnorm");
  testutil::write_file(
      dir.file("gold.jsonl"),
      R"({"text": "x", "pairs": [{"label": "food", "term": "Great Portion!"}]})"
      "\n");
  const auto loaded = read_gold(dir.file("gold.jsonl"));
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].pairs[0].term_tokens ==
        std::vector<std::string>{"great", "portion"});
}

TEST_CASE("mapping files round-trip and validate coverage") {
  testutil::TempDir dir("mapping");
  const GoldMapping mapping{"food", "omitted", "staff"};
  const std::vector<std::vector<std::string>> rep_words{
      {"pasta", "soup"}, {"lamp"}, {"waiter"}};
  const std::string path = dir.file("map.tsv");
  write_mapping(mapping, rep_words, path);
  const GoldMapping loaded = read_mapping(path, 3);
  CHECK(loaded == mapping);

  CHECK_THROWS_AS(read_mapping(path, 4), config_error);  // missing aspect 3
  testutil::write_file(dir.file("dup.tsv"),
                       "0\tfood\tx\n0\tstaff\ty\n");
  CHECK_THROWS_AS(read_mapping(dir.file("dup.tsv"), 2), config_error);
}

TEST_CASE("report formatting exposes every scored block") {
  const GoldMapping mapping{"food", "staff"};
  std::vector<Prediction> preds{
      make_prediction("s1", {{0, {"pasta"}}}),
      make_prediction("s2", {{1, {"waiter"}}}),
  };
  std::vector<LabeledExample> gold{
      make_gold("s1", {{"food", {"pasta"}}}),
      make_gold("s2", {{"staff", {"waiter"}}}),
  };
  const EvalReport report = evaluate(preds, gold, mapping);
  const std::string text = format_report(report);
  CHECK(text.find("food") != std::string::npos);
  CHECK(text.find("staff") != std::string::npos);
  CHECK(text.find("micro") != std::string::npos);

  const std::string json = report_json(report);
  CHECK(json.find("\"aspects\"") != std::string::npos);
  CHECK(json.find("\"pairs\"") != std::string::npos);
  CHECK(json.find("\"micro\"") != std::string::npos);
}
