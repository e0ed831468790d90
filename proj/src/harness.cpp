#include "sanmt/harness.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include "sanmt/align_supervision.hpp"
#include "sanmt/errors.hpp"
#include "sanmt/eval.hpp"
#include "sanmt/tape.hpp"

namespace sanmt {

std::string_view to_string(SynthTask task) {
  switch (task) {
    case SynthTask::Copy: return "copy";
    case SynthTask::Reverse: return "reverse";
    case SynthTask::LocalSwap: return "local-swap";
  }
  return "copy";
}

SynthTask parse_synth_task(std::string_view text) {
  if (text == "copy") return SynthTask::Copy;
  if (text == "reverse") return SynthTask::Reverse;
  if (text == "local-swap") return SynthTask::LocalSwap;
  throw ConfigError("unknown task '" + std::string(text) + "' (copy, reverse, local-swap)");
}

void SynthSpec::validate() const {
  if (min_len < 1 || max_len > 20 || min_len > max_len) {
    throw ConfigError("synthetic length range must satisfy 1 <= min <= max <= 20");
  }
  if (vocab_size < 1) throw ConfigError("synthetic vocabulary size must be at least 1");
  if (train_size < 1 || dev_size < 1 || test_size < 1) throw ConfigError("split sizes must be at least 1");
}

std::vector<std::size_t> task_permutation(SynthTask task, std::size_t length) {
  std::vector<std::size_t> perm(length);
  for (std::size_t i = 0; i < length; ++i) {
    switch (task) {
      case SynthTask::Copy: perm[i] = i; break;
      case SynthTask::Reverse: perm[i] = length - 1 - i; break;
      case SynthTask::LocalSwap:
        // pairs (0,1), (2,3), ...; a trailing odd word stays put
        perm[i] = (i % 2 == 0) ? (i + 1 < length ? i + 1 : i) : i - 1;
        break;
    }
  }
  return perm;
}

namespace {

SynthSplit generate_split(const SynthSpec& spec, std::size_t count, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> length(spec.min_len, spec.max_len);
  std::uniform_int_distribution<std::size_t> word(0, spec.vocab_size - 1);
  SynthSplit split;
  for (std::size_t s = 0; s < count; ++s) {
    const std::size_t len = length(rng);
    std::vector<std::size_t> words(len);
    for (auto& w : words) w = word(rng);
    const auto perm = task_permutation(spec.task, len);
    std::vector<std::string> target(len);
    LinkSet links;
    std::string source;
    for (std::size_t i = 0; i < len; ++i) {
      if (i > 0) source += ' ';
      source += "t" + std::to_string(words[i]);
      target[perm[i]] = "u" + std::to_string(words[i]);
      links.insert({i, perm[i]});
    }
    std::string joined;
    for (std::size_t j = 0; j < len; ++j) {
      if (j > 0) joined += ' ';
      joined += target[j];
    }
    split.source.push_back(std::move(source));
    split.target.push_back(std::move(joined));
    split.alignment.push_back(format_pharaoh(links));
  }
  return split;
}

}  // namespace

SynthCorpus generate(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  SynthCorpus corpus;
  corpus.train = generate_split(spec, spec.train_size, rng);
  corpus.dev = generate_split(spec, spec.dev_size, rng);
  corpus.test = generate_split(spec, spec.test_size, rng);
  return corpus;
}

void write_corpus(const std::filesystem::path& dir, const SynthCorpus& corpus) {
  std::filesystem::create_directories(dir);
  const std::pair<const char*, const SynthSplit*> splits[] = {
      {"train", &corpus.train}, {"dev", &corpus.dev}, {"test", &corpus.test}};
  for (const auto& [name, split] : splits) {
    write_lines(dir / (std::string(name) + ".src"), split->source);
    write_lines(dir / (std::string(name) + ".tgt"), split->target);
    write_lines(dir / (std::string(name) + ".align"), split->alignment);
  }
}

double teacher_forced_accuracy(const ModelParams& params, std::span<const SentencePair> pairs) {
  std::size_t correct = 0, total = 0;
  for (const SentencePair& pair : pairs) {
    Tape tape(false);
    const BoundParams p(tape, params);
    const EncoderStates enc = encode(p, pair.source);
    Var h = initial_state(p, enc);
    Token prev = kEol;
    for (Token gold : pair.target) {
      const StepOutput step = decoder_step(p, prev, h, enc);
      const auto lp = step.log_probs.value().values();
      const auto best = static_cast<Token>(std::max_element(lp.begin(), lp.end()) - lp.begin());
      correct += best == gold ? 1 : 0;
      ++total;
      h = step.state.h;
      prev = gold;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

void write_heatmap(const std::filesystem::path& path, const Matrix& alpha) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << alpha.rows() << ' ' << alpha.cols() << '\n';
  for (std::size_t r = 0; r < alpha.rows(); ++r) {
    for (std::size_t c = 0; c < alpha.cols(); ++c) {
      if (c > 0) out << ' ';
      out << format_double(alpha(r, c));
    }
    out << '\n';
  }
}

void write_report(const std::filesystem::path& path, std::span<const ExperimentRow> rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "config,task,dev_bleu,test_bleu,test_aer,token_acc\n";
  for (const ExperimentRow& r : rows) {
    out << r.config << ',' << r.task << ',' << format_double(r.dev_bleu) << ','
        << format_double(r.test_bleu) << ',' << format_double(r.test_aer) << ','
        << format_double(r.token_acc) << '\n';
  }
  if (!out) throw IoError("write failure on " + path.string());
}

std::vector<ExperimentRow> run_experiment(const SynthSpec& spec, std::span<const ExperimentConfig> configs,
                                          const ExperimentOptions& options,
                                          const ExperimentObserver& observer) {
  const bool has_baseline = std::any_of(configs.begin(), configs.end(),
                                        [](const auto& c) { return !c.train.loss.supervised(); });
  const bool has_supervised = std::any_of(configs.begin(), configs.end(),
                                          [](const auto& c) { return c.train.loss.supervised(); });
  if (!has_baseline || !has_supervised) {
    throw ConfigError("run_experiment needs an unsupervised and a supervised config");
  }

  const SynthCorpus corpus = generate(spec);
  const Vocab source_vocab = build_vocab(corpus.train.source, kDefaultVocabCap);
  const Vocab target_vocab = build_vocab(corpus.train.target, kDefaultVocabCap);
  const auto train_pairs = encode_parallel({corpus.train.source, corpus.train.target}, source_vocab, target_vocab);
  const auto dev_pairs = encode_parallel({corpus.dev.source, corpus.dev.target}, source_vocab, target_vocab);
  const auto test_pairs = encode_parallel({corpus.test.source, corpus.test.target}, source_vocab, target_vocab);

  std::vector<Matrix> supervision;
  for (std::size_t i = 0; i < train_pairs.size(); ++i) {
    supervision.push_back(
        to_supervision(parse_pharaoh(corpus.train.alignment[i], train_pairs[i].m(), train_pairs[i].n())));
  }
  std::vector<GoldAlignment> test_gold;
  for (const std::string& line : corpus.test.alignment) test_gold.push_back(parse_gold_alignment(line));

  if (!options.output_dir.empty()) {
    std::filesystem::create_directories(options.output_dir);
    write_corpus(options.output_dir / "data", corpus);
  }

  std::vector<ExperimentRow> rows;
  for (const ExperimentConfig& cfg : configs) {
    ModelConfig model;
    model.source_vocab = source_vocab.size();
    model.target_vocab = target_vocab.size();
    model.embedding_dim = cfg.embedding_dim;
    model.hidden_dim = cfg.hidden_dim;
    model.attention_dim = cfg.attention_dim;

    TrainData data;
    data.train = train_pairs;
    data.supervision = &supervision;
    data.dev = dev_pairs;
    data.dev_references = corpus.dev.target;
    data.target_vocab = &target_vocab;
    TrainObserver hook;
    if (observer) hook = [&](const CurvePoint& p) { observer(cfg.name, p); };
    const TrainResult trained =
        train(data, cfg.train, ModelParams::initialized(model, cfg.init_seed), std::nullopt, hook);

    ExperimentRow row;
    row.config = cfg.name;
    row.task = std::string(to_string(spec.task));
    row.dev_bleu = trained.best_dev_bleu;
    row.curve = trained.curve;

    std::vector<std::string> hyps;
    std::vector<LinkSet> system;
    BeamOptions beam;
    beam.beam = options.beam;
    for (std::size_t i = 0; i < test_pairs.size(); ++i) {
      hyps.push_back(decode(beam_search(trained.best, test_pairs[i].source, beam).translation().tokens,
                            target_vocab));
      const Matrix alpha = force_decode(trained.best, test_pairs[i]);
      system.push_back(extract_hard_alignment(alpha).links);
      if (i < options.heatmap_samples) row.heatmaps.push_back(alpha);
    }
    row.test_bleu = bleu4(hyps, corpus.test.target);
    row.test_aer = aer(system, test_gold);
    row.token_acc = teacher_forced_accuracy(trained.best, test_pairs);

    if (!options.output_dir.empty()) {
      write_learning_curve(options.output_dir / (cfg.name + "_curve.csv"), row.curve);
      write_lines(options.output_dir / (cfg.name + "_test.hyp"), hyps);
      for (std::size_t k = 0; k < row.heatmaps.size(); ++k) {
        write_heatmap(options.output_dir / (cfg.name + "_heatmap_" + std::to_string(k) + ".txt"),
                      row.heatmaps[k]);
      }
    }
    rows.push_back(std::move(row));
  }
  if (!options.output_dir.empty()) write_report(options.output_dir / "report.csv", rows);
  return rows;
}

}  // namespace sanmt
