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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cmam/corpus.hpp"
#include "cmam/embeddings.hpp"
#include "cmam/errors.hpp"
#include "cmam/evaluation.hpp"
#include "cmam/gradcheck.hpp"
#include "cmam/inference.hpp"
#include "cmam/model.hpp"
#include "cmam/objective.hpp"
#include "cmam/synthdata.hpp"

namespace {

using namespace cmam;

StopwordSet resolve_stopwords(const std::string& path) {
  return path.empty() ? default_stopwords() : load_stopwords(path);
}

// Raw lines, one record per input line including empty ones; predictions
// must stay line-aligned with the gold file.
std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open corpus file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

Checkpoint load_matching_checkpoint(const std::string& path,
                                    const Vocabulary& vocab) {
  Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.vocab_hash != vocabulary_hash(vocab)) {
    throw config_error("checkpoint was trained on a different vocabulary: " +
                       path);
  }
  return ckpt;
}

std::map<std::string, std::set<std::string>> read_cores_json(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open core-token file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw io_error("bad core-token JSON in " + path + ": " + e.what());
  }
  if (!j.is_object() || j.empty()) {
    throw config_error("core-token file must be a non-empty JSON object: " +
                       path);
  }
  std::map<std::string, std::set<std::string>> cores;
  for (const auto& [label, tokens] : j.items()) {
    if (!tokens.is_array()) {
      throw config_error("core tokens for label '" + label +
                         "' must be an array");
    }
    for (const auto& token : tokens) {
      cores[label].insert(token.get<std::string>());
    }
  }
  return cores;
}

std::string trim(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = text.find_last_not_of(" \t");
  return text.substr(begin, end - begin + 1);
}

// Expands a subcommand's --config file (flat key=value, '#' comments) into
// trailing --key=value arguments. Keys already given explicitly are skipped,
// so the precedence is flag > config file > built-in default.
std::vector<std::string> expand_config_args(const CLI::App& app,
                                            std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    }
  }
  if (path.empty()) return args;

  const CLI::App* sub =
      args.empty() ? nullptr : app.get_subcommand_no_throw(args.front());
  if (sub == nullptr) return args;  // parse will reject the command line

  std::ifstream in(path);
  if (!in) throw io_error("cannot open config file: " + path);
  const auto given = [&args](const std::string& flag) {
    for (const std::string& arg : args) {
      if (arg == flag || arg.rfind(flag + "=", 0) == 0) return true;
    }
    return false;
  };
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw config_error(path + ":" + std::to_string(lineno) +
                         ": expected key=value");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    const std::string flag = "--" + key;
    if (key == "config" || sub->get_option_no_throw(flag) == nullptr) {
      throw config_error(path + ":" + std::to_string(lineno) +
                         ": unknown key '" + key + "' for command '" +
                         sub->get_name() + "'");
    }
    if (given(flag)) continue;
    args.push_back(flag + "=" + value);
  }
  return args;
}

std::size_t count_mapping_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open mapping file: " + path);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) ++n;
  }
  return n;
}

struct EmbedArgs {
  std::string corpus;
  std::string output;
  std::string vocab_out;
  std::string stopwords;
  bool drop_numeric = false;
  std::size_t min_len = 2;
  std::size_t max_vocab = 9000;
  std::size_t min_count = 2;
  SkipgramConfig sg;
};

int cmd_embed(const EmbedArgs& args) {
  const StopwordSet sw = resolve_stopwords(args.stopwords);
  const TokenizerOptions opts{args.drop_numeric};
  const TokenizedCorpus toks = read_tokenized_lines(args.corpus, sw, opts);
  const Vocabulary vocab =
      build_vocabulary(toks.sentences, args.max_vocab, args.min_count);
  const EncodedCorpus enc =
      load_corpus(args.corpus, vocab, sw, opts, args.min_len);
  const Matrix emb = train_skipgram(enc.sentences, vocab, args.sg);
  save_embeddings(emb, vocab, args.output);
  save_vocabulary(vocab, args.vocab_out);
  std::printf("sentences %zu (dropped %zu short, %zu invalid)\n",
              enc.stats.kept_sentences, enc.stats.dropped_short,
              enc.stats.skipped_invalid_utf8);
  std::printf("vocabulary %zu tokens, coverage %.3f\n", vocab.size(),
              enc.stats.coverage());
  std::printf("embeddings %zu x %zu -> %s\n", emb.rows, emb.cols,
              args.output.c_str());
  return 0;
}

struct TrainArgs {
  std::string corpus;
  std::string embeddings;
  std::string vocab;
  std::string output;
  std::string stopwords;
  bool drop_numeric = false;
  std::size_t min_len = 2;
  std::size_t n_aspects = 30;
  std::vector<std::size_t> kernel_lens = {1, 3, 5};
  std::size_t kmeans_iters = 100;
  std::uint64_t seed = 1;
  bool no_tlas = false;
  TrainConfig tc;
};

int cmd_train(const TrainArgs& args) {
  const StopwordSet sw = resolve_stopwords(args.stopwords);
  const TokenizerOptions opts{args.drop_numeric};
  const Vocabulary vocab = load_vocabulary(args.vocab);
  const EncodedCorpus enc =
      load_corpus(args.corpus, vocab, sw, opts, args.min_len);
  const Matrix emb = load_embeddings(args.embeddings, vocab, args.seed).values;

  const Matrix aem0 =
      init_aspects(emb, args.n_aspects, args.seed, args.kmeans_iters);
  CmamParams params = init_params(emb.cols, args.n_aspects, args.kernel_lens,
                                  aem0, args.seed + 1);

  TrainConfig tc = args.tc;
  tc.tlas_enabled = !args.no_tlas;
  tc.seed = args.seed + 2;
  if (!tc.checkpoint_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(tc.checkpoint_dir, ec);
    if (ec) {
      throw io_error("cannot create checkpoint directory: " +
                     tc.checkpoint_dir);
    }
  }
  const std::uint64_t hash = vocabulary_hash(vocab);
  const TrainResult result = train(enc.sentences, emb, std::move(params), tc, hash);
  save_checkpoint(result.params, hash, args.output);

  if (!result.log.empty()) {
    const BatchLogEntry& first = result.log.front();
    const BatchLogEntry& last = result.log.back();
    std::printf("loss %.6f -> %.6f over %zu batches\n", first.loss.total,
                last.loss.total, result.log.size());
  }
  std::printf("checkpoint -> %s\n", args.output.c_str());
  return 0;
}

struct PredictArgs {
  std::string corpus;
  std::string embeddings;
  std::string vocab;
  std::string checkpoint;
  std::string output;
  std::string mapping;
  std::string stopwords;
  bool drop_numeric = false;
  std::uint64_t seed = 1;
  InferenceConfig ic;
};

int cmd_predict(const PredictArgs& args) {
  const StopwordSet sw = resolve_stopwords(args.stopwords);
  const TokenizerOptions opts{args.drop_numeric};
  const Vocabulary vocab = load_vocabulary(args.vocab);
  const Checkpoint ckpt = load_matching_checkpoint(args.checkpoint, vocab);
  const Matrix emb = load_embeddings(args.embeddings, vocab, args.seed).values;
  if (emb.cols != ckpt.params.dim) {
    throw config_error("embedding width does not match the checkpoint");
  }

  GoldMapping labels;
  if (!args.mapping.empty()) {
    labels = read_mapping(args.mapping, ckpt.params.n_aspects);
  }

  const std::vector<std::string> lines = read_lines(args.corpus);
  std::vector<Prediction> predictions;
  predictions.reserve(lines.size());
  std::size_t degenerate = 0;
  for (const std::string& line : lines) {
    // Unparseable lines keep an empty record so output stays line-aligned.
    if (!is_valid_utf8(line)) {
      predictions.push_back({line, {}});
      ++degenerate;
      continue;
    }
    std::vector<std::string> tokens = tokenize(line, sw, opts);
    if (tokens.empty()) {
      predictions.push_back({line, {}});
      ++degenerate;
      continue;
    }
    const EncodedSentence sentence = encode(std::move(tokens), vocab);
    predictions.push_back(predict(sentence, emb, ckpt.params, args.ic));
  }
  write_predictions(predictions, labels.empty() ? nullptr : &labels,
                    args.output);
  std::printf("predictions %zu (%zu without tokens) -> %s\n",
              predictions.size(), degenerate, args.output.c_str());
  return 0;
}

struct EvalArgs {
  std::string predictions;
  std::string gold;
  std::string mapping;
  std::string json_out;
};

int cmd_eval(const EvalArgs& args) {
  const std::vector<Prediction> preds = read_predictions(args.predictions);
  const std::vector<LabeledExample> gold = read_gold(args.gold);
  const GoldMapping mapping =
      read_mapping(args.mapping, count_mapping_lines(args.mapping));
  const EvalReport report = evaluate(preds, gold, mapping);
  std::fputs(format_report(report).c_str(), stdout);
  if (!args.json_out.empty()) {
    std::ofstream out(args.json_out);
    if (!out) throw io_error("cannot write report: " + args.json_out);
    out << report_json(report) << '\n';
  }
  return 0;
}

struct SynthArgs {
  std::string corpus;
  std::string gold;
  std::string cores;
  std::size_t sentences = 10000;
  double two_topic_prob = 0.3;
  std::uint64_t seed = 1;
};

int cmd_synth(const SynthArgs& args) {
  if (args.two_topic_prob < 0.0 || args.two_topic_prob > 1.0) {
    throw config_error("--two-topic-prob must lie in [0, 1]");
  }
  SynthConfig cfg = restaurant_toy(args.seed);
  cfg.n_sentences = args.sentences;
  cfg.topic_count_probs = {1.0 - args.two_topic_prob, args.two_topic_prob};
  const SynthOutput out = generate(cfg);
  write_corpus(out.sentences, args.corpus);
  write_gold(out.gold, args.gold);
  if (!args.cores.empty()) {
    nlohmann::json j;
    for (const TopicSpec& topic : cfg.topics) j[topic.name] = topic.core_tokens;
    std::ofstream f(args.cores);
    if (!f) throw io_error("cannot write core-token file: " + args.cores);
    f << j.dump(2) << '\n';
  }
  std::printf("synthetic corpus %zu sentences -> %s\n", out.sentences.size(),
              args.corpus.c_str());
  return 0;
}

int cmd_gradcheck(const GradCheckConfig& cfg) {
  const GradCheckReport report = run_gradient_check(cfg);
  std::printf("instances %zu, comparisons %zu, failures %zu\n",
              report.instances_run, report.comparisons, report.failures);
  std::printf("worst relative error %.3e at %s\n", report.worst_rel_err,
              report.worst_site.c_str());
  if (!report.passed()) {
    std::printf("FAIL\n");
    return 4;
  }
  std::printf("PASS\n");
  return 0;
}

struct AspectsArgs {
  std::string embeddings;
  std::string vocab;
  std::string checkpoint;
  std::string output;
  std::string cores;
  std::size_t top_n = 10;
  std::uint64_t seed = 1;
};

int cmd_aspects(const AspectsArgs& args) {
  const Vocabulary vocab = load_vocabulary(args.vocab);
  const Checkpoint ckpt = load_matching_checkpoint(args.checkpoint, vocab);
  const Matrix emb = load_embeddings(args.embeddings, vocab, args.seed).values;
  if (emb.cols != ckpt.params.dim) {
    throw config_error("embedding width does not match the checkpoint");
  }
  const Matrix& aem = ckpt.params.aem;

  GoldMapping mapping(ckpt.params.n_aspects, kOmittedLabel);
  if (!args.cores.empty()) {
    mapping = auto_map_by_overlap(aem, emb, vocab, read_cores_json(args.cores),
                                  args.top_n);
  }
  std::vector<std::vector<std::string>> rep(ckpt.params.n_aspects);
  for (std::size_t k = 0; k < ckpt.params.n_aspects; ++k) {
    rep[k] = representative_words(k, aem, emb, vocab, args.top_n);
  }
  if (!args.output.empty()) {
    write_mapping(mapping, rep, args.output);
    return 0;
  }
  for (std::size_t k = 0; k < mapping.size(); ++k) {
    std::printf("%zu\t%s\t", k, mapping[k].c_str());
    for (std::size_t i = 0; i < rep[k].size(); ++i) {
      std::printf("%s%s", i == 0 ? "" : " ", rep[k][i].c_str());
    }
    std::printf("\n");
  }
  return 0;
}

void add_config_option(CLI::App* cmd) {
  cmd->add_option("--config",
                  "Flat key=value file; explicit flags take precedence");
}

void add_corpus_options(CLI::App* cmd, std::string& stopwords,
                        bool& drop_numeric) {
  cmd->add_option("--stopwords", stopwords,
                  "Stop-word file, one token per line (default: built-in)");
  cmd->add_flag("--drop-numeric", drop_numeric, "Drop all-digit tokens");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Unsupervised aspect and aspect-term extraction: convolutional "
      "multi-attention with a spreading penalty"};
  app.require_subcommand(1);

  EmbedArgs embed_args;
  CLI::App* embed = app.add_subcommand(
      "embed", "Train skip-gram embeddings and a vocabulary from raw text");
  add_config_option(embed);
  embed->add_option("--corpus", embed_args.corpus, "Raw text, one sentence per line")
      ->required();
  embed->add_option("--output", embed_args.output, "Embedding text file to write")
      ->required();
  embed->add_option("--vocab-out", embed_args.vocab_out, "Vocabulary file to write")
      ->required();
  add_corpus_options(embed, embed_args.stopwords, embed_args.drop_numeric);
  embed->add_option("--min-len", embed_args.min_len,
                    "Minimum tokens per kept sentence")->capture_default_str();
  embed->add_option("--max-vocab", embed_args.max_vocab,
                    "Vocabulary capacity including the unknown slot")->capture_default_str();
  embed->add_option("--min-count", embed_args.min_count,
                    "Minimum token frequency")->capture_default_str();
  embed->add_option("--dim", embed_args.sg.dim, "Embedding width")->capture_default_str();
  embed->add_option("--window", embed_args.sg.window, "Context window radius")->capture_default_str();
  embed->add_option("--negatives", embed_args.sg.negatives,
                    "Negative samples per pair")->capture_default_str();
  embed->add_option("--epochs", embed_args.sg.epochs, "Training epochs")->capture_default_str();
  embed->add_option("--lr", embed_args.sg.lr, "Initial learning rate")->capture_default_str();
  embed->add_option("--seed", embed_args.sg.seed, "Random seed")->capture_default_str();
  embed->add_option("--threads", embed_args.sg.threads,
                    "Worker threads; >1 is nondeterministic")->capture_default_str();
  int rc = 0;
  embed->callback([&] { rc = cmd_embed(embed_args); });

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand(
      "train", "Train the aspect model on an embedded corpus");
  add_config_option(train);
  train->add_option("--corpus", train_args.corpus, "Raw text, one sentence per line")
      ->required();
  train->add_option("--embeddings", train_args.embeddings, "Embedding text file")
      ->required();
  train->add_option("--vocab", train_args.vocab, "Vocabulary file")->required();
  train->add_option("--output", train_args.output, "Final checkpoint to write")
      ->required();
  add_corpus_options(train, train_args.stopwords, train_args.drop_numeric);
  train->add_option("--min-len", train_args.min_len,
                    "Minimum tokens per kept sentence")->capture_default_str();
  train->add_option("--aspects", train_args.n_aspects, "Number of aspects")->capture_default_str();
  train->add_option("--kernel-lens", train_args.kernel_lens,
                    "Odd convolution kernel lengths")->capture_default_str()
      ->delimiter(',');
  train->add_option("--kmeans-iters", train_args.kmeans_iters,
                    "Aspect-initialization k-means iteration cap")->capture_default_str();
  train->add_option("--epochs", train_args.tc.epochs, "Training epochs")->capture_default_str();
  train->add_option("--batch-size", train_args.tc.batch_size, "Batch size")->capture_default_str();
  train->add_option("--lr", train_args.tc.lr, "Adam learning rate")->capture_default_str();
  train->add_option("--beta1", train_args.tc.beta1, "Adam beta1")->capture_default_str();
  train->add_option("--beta2", train_args.tc.beta2, "Adam beta2")->capture_default_str();
  train->add_option("--adam-eps", train_args.tc.adam_eps, "Adam epsilon")->capture_default_str();
  train->add_option("--lambda", train_args.tc.lambda,
                    "Orthogonality penalty weight")->capture_default_str();
  train->add_option("--ortho-offset", train_args.tc.ortho_offset_s,
                    "Penalty-free band for the orthogonality term")->capture_default_str();
  train->add_option("--negatives", train_args.tc.negatives_per_sample,
                    "Negative sentences per example")->capture_default_str();
  train->add_flag("--no-tlas", train_args.no_tlas,
                  "Disable the aspect-spreading term");
  train->add_option("--tlas-scale", train_args.tc.tlas_scale,
                    "Multiplier on the aspect-spreading term")->capture_default_str();
  train->add_option("--seed", train_args.seed, "Random seed")->capture_default_str();
  train->add_option("--threads", train_args.tc.threads,
                    "Batch evaluation threads; trajectory is thread-count "
                    "independent")->capture_default_str();
  train->add_option("--checkpoint-dir", train_args.tc.checkpoint_dir,
                    "Directory for per-epoch checkpoints");
  train->add_option("--log", train_args.tc.log_path, "CSV loss log to write");
  train->callback([&] { rc = cmd_train(train_args); });

  PredictArgs predict_args;
  CLI::App* predict = app.add_subcommand(
      "predict", "Extract aspects and terms from raw text");
  add_config_option(predict);
  predict->add_option("--corpus", predict_args.corpus,
                      "Raw text, one sentence per line")
      ->required();
  predict->add_option("--embeddings", predict_args.embeddings,
                      "Embedding text file")
      ->required();
  predict->add_option("--vocab", predict_args.vocab, "Vocabulary file")
      ->required();
  predict->add_option("--checkpoint", predict_args.checkpoint,
                      "Model checkpoint")
      ->required();
  predict->add_option("--output", predict_args.output,
                      "Predictions JSON-lines file to write")
      ->required();
  predict->add_option("--mapping", predict_args.mapping,
                      "Aspect-to-label mapping to embed in the output");
  add_corpus_options(predict, predict_args.stopwords,
                     predict_args.drop_numeric);
  predict->add_option("--q-as", predict_args.ic.q_as,
                      "Aspect-weight quantile threshold")->capture_default_str();
  predict->add_option("--n-as", predict_args.ic.n_as,
                      "Max aspects per sentence")->capture_default_str();
  predict->add_option("--q-at", predict_args.ic.q_at,
                      "Attention-weight quantile threshold")->capture_default_str();
  predict->add_option("--n-at", predict_args.ic.n_at,
                      "Max term tokens per aspect")->capture_default_str();
  predict->add_option("--seed", predict_args.seed,
                      "Seed for missing-embedding fill")->capture_default_str();
  predict->callback([&] { rc = cmd_predict(predict_args); });

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand(
      "eval", "Score predictions against gold aspect-term pairs");
  add_config_option(eval);
  eval->add_option("--predictions", eval_args.predictions,
                   "Predictions JSON-lines file")
      ->required();
  eval->add_option("--gold", eval_args.gold, "Gold JSON-lines file")->required();
  eval->add_option("--mapping", eval_args.mapping, "Aspect-to-label mapping")
      ->required();
  eval->add_option("--json-out", eval_args.json_out,
                   "Write the report as JSON too");
  eval->callback([&] { rc = cmd_eval(eval_args); });

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand(
      "synth", "Generate the synthetic labeled restaurant corpus");
  add_config_option(synth);
  synth->add_option("--corpus", synth_args.corpus, "Corpus file to write")
      ->required();
  synth->add_option("--gold", synth_args.gold, "Gold JSON-lines file to write")
      ->required();
  synth->add_option("--cores", synth_args.cores,
                    "Also write the topic core tokens as JSON");
  synth->add_option("--sentences", synth_args.sentences, "Sentence count")->capture_default_str();
  synth->add_option("--two-topic-prob", synth_args.two_topic_prob,
                    "Probability a sentence mixes two topics")->capture_default_str();
  synth->add_option("--seed", synth_args.seed, "Random seed")->capture_default_str();
  synth->callback([&] { rc = cmd_synth(synth_args); });

  GradCheckConfig gc;
  CLI::App* gradcheck = app.add_subcommand(
      "gradcheck", "Compare analytic gradients against finite differences");
  add_config_option(gradcheck);
  gradcheck->add_option("--instances", gc.instances, "Random instances")->capture_default_str();
  gradcheck->add_option("--step", gc.step, "Finite-difference step")->capture_default_str();
  gradcheck->add_option("--tolerance", gc.tolerance,
                        "Max relative error")->capture_default_str();
  gradcheck->add_option("--seed", gc.seed, "Random seed")->capture_default_str();
  gradcheck->callback([&] { rc = cmd_gradcheck(gc); });

  AspectsArgs aspects_args;
  CLI::App* aspects = app.add_subcommand(
      "aspects", "List representative words per aspect; draft or auto-fill a "
                 "label mapping");
  add_config_option(aspects);
  aspects->add_option("--embeddings", aspects_args.embeddings,
                      "Embedding text file")
      ->required();
  aspects->add_option("--vocab", aspects_args.vocab, "Vocabulary file")
      ->required();
  aspects->add_option("--checkpoint", aspects_args.checkpoint,
                      "Model checkpoint")
      ->required();
  aspects->add_option("--output", aspects_args.output,
                      "Mapping file to write (default: print to stdout)");
  aspects->add_option("--cores", aspects_args.cores,
                      "Topic core-token JSON; map each aspect to the label "
                      "with max overlap");
  aspects->add_option("--top-n", aspects_args.top_n,
                      "Representative words per aspect")->capture_default_str();
  aspects->add_option("--seed", aspects_args.seed,
                      "Seed for missing-embedding fill")->capture_default_str();
  aspects->callback([&] { rc = cmd_aspects(aspects_args); });

  try {
    std::vector<std::string> args =
        expand_config_args(app, {argv + 1, argv + argc});
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const io_error& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 3;
  } catch (const numeric_error& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return rc;
}
