#include "sanmt/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <vector>

#include "sanmt/align_supervision.hpp"
#include "sanmt/checkpoint.hpp"
#include "sanmt/data.hpp"
#include "sanmt/decoding.hpp"
#include "sanmt/errors.hpp"
#include "sanmt/eval.hpp"
#include "sanmt/harness.hpp"
#include "sanmt/manifest.hpp"
#include "sanmt/training.hpp"

namespace fs = std::filesystem;

namespace sanmt {

namespace {

std::string str(double x) { return format_double(x); }
std::string str(std::size_t x) { return std::to_string(x); }

struct PreprocessOptions {
  std::string src, tgt, align, out;
  std::string align_order = "source-target";
  std::size_t src_vocab = kDefaultVocabCap;
  std::size_t tgt_vocab = kDefaultVocabCap;
  std::size_t max_len = kDefaultMaxLen;
};

struct TrainOptions {
  std::string data, out, dev_src, dev_tgt;
  std::string delta = "ce";
  double lambda = 0.3;
  std::size_t emb_dim = 620, hidden_dim = 1000, attn_dim = 1000;
  std::size_t batch_size = kDefaultBatchSize;
  std::size_t max_updates = 300000;
  std::size_t eval_every = 1000;
  std::uint64_t seed = 1;
  double clip = 1.0;
  bool no_clip = false;
  std::string optimizer = "adadelta";
  double lr = 0.1;
  bool resume = false;
};

struct TranslateOptions {
  std::string model, input, output;
  std::size_t beam = kDefaultBeam;
  std::size_t max_len = 0;
  bool length_normalize = false;
};

struct AlignOptions {
  std::string model, src, tgt, output;
};

struct EvalOptions {
  std::string mode = "bleu";
  std::string hyp, gold, output;
  std::vector<std::string> refs;
  std::size_t bootstrap = 1000;
  std::uint64_t seed = 1;
};

struct SynthOptions {
  std::string task = "reverse", out;
  std::size_t vocab = 20, min_len = 3, max_len = 8, train = 3000, dev = 200, test = 200;
  std::uint64_t seed = 1;
};

struct ExperimentOptionsCli {
  SynthOptions synth;
  std::string delta = "ce";
  double lambda = 1.0;
  std::size_t emb_dim = 32, hidden_dim = 64, attn_dim = 64;
  std::size_t batch_size = 16, max_updates = 3000, eval_every = 250, beam = kDefaultBeam;
  std::uint64_t train_seed = 1;
};

void record_synth(RunManifest& m, const SynthOptions& o) {
  m.option("task", o.task);
  m.option("vocab", str(o.vocab));
  m.option("min-len", str(o.min_len));
  m.option("max-len", str(o.max_len));
  m.option("train", str(o.train));
  m.option("dev", str(o.dev));
  m.option("test", str(o.test));
  m.option("seed", std::to_string(o.seed));
  m.option("out", o.out);
}

SynthSpec to_spec(const SynthOptions& o) {
  SynthSpec spec;
  spec.task = parse_synth_task(o.task);
  spec.vocab_size = o.vocab;
  spec.min_len = o.min_len;
  spec.max_len = o.max_len;
  spec.train_size = o.train;
  spec.dev_size = o.dev;
  spec.test_size = o.test;
  spec.seed = o.seed;
  return spec;
}

void run_preprocess(const PreprocessOptions& o, std::ostream& out) {
  RunManifest manifest;
  manifest.command = "preprocess";
  manifest.option("src", o.src);
  manifest.option("tgt", o.tgt);
  if (!o.align.empty()) manifest.option("align", o.align);
  manifest.option("align-order", o.align_order);
  manifest.option("src-vocab", str(o.src_vocab));
  manifest.option("tgt-vocab", str(o.tgt_vocab));
  manifest.option("max-len", str(o.max_len));
  manifest.option("out", o.out);
  manifest.input(o.src);
  manifest.input(o.tgt);
  if (!o.align.empty()) manifest.input(o.align);

  const PharaohOrder order = o.align_order == "target-source" ? PharaohOrder::TargetSource
                             : o.align_order == "source-target"
                                 ? PharaohOrder::SourceTarget
                                 : throw ConfigError("--align-order must be source-target or target-source");
  if (o.max_len < 1) throw ConfigError("--max-len must be at least 1");

  const ParallelText text = read_parallel(o.src, o.tgt);
  std::vector<std::string> align_lines;
  if (!o.align.empty()) {
    align_lines = read_lines(o.align);
    if (align_lines.size() != text.source.size()) {
      throw ConsistencyError("line count mismatch: " + o.align + " has " + std::to_string(align_lines.size()) +
                             " lines, corpus has " + std::to_string(text.source.size()));
    }
  }

  std::vector<std::size_t> kept;
  ParallelText filtered;
  for (std::size_t i = 0; i < text.source.size(); ++i) {
    if (split_tokens(text.source[i]).size() <= o.max_len && split_tokens(text.target[i]).size() <= o.max_len) {
      kept.push_back(i);
      filtered.source.push_back(text.source[i]);
      filtered.target.push_back(text.target[i]);
    }
  }
  const Vocab src_vocab = build_vocab(filtered.source, o.src_vocab);
  const Vocab tgt_vocab = build_vocab(filtered.target, o.tgt_vocab);

  fs::create_directories(o.out);
  const fs::path dir(o.out);
  save_vocab(dir / "src.vocab", src_vocab);
  save_vocab(dir / "tgt.vocab", tgt_vocab);
  write_lines(dir / "train.src", filtered.source);
  write_lines(dir / "train.tgt", filtered.target);
  std::vector<std::string> kept_lines;
  for (std::size_t i : kept) kept_lines.push_back(std::to_string(i));
  write_lines(dir / "kept.idx", kept_lines);

  if (!o.align.empty()) {
    std::vector<Matrix> supervision;
    for (std::size_t i : kept) {
      const std::size_t m = split_tokens(text.source[i]).size();
      const std::size_t n = split_tokens(text.target[i]).size();
      try {
        supervision.push_back(to_supervision(parse_pharaoh(align_lines[i], m, n, order)));
      } catch (const ParseError& e) {
        throw ParseError(o.align + " line " + std::to_string(i + 1) + ": " + e.what());
      }
    }
    save_supervision(dir / "supervision.txt", supervision);
  }
  manifest.save(dir / "preprocess.manifest");
  out << "kept " << kept.size() << " of " << text.source.size() << " pairs; vocab " << src_vocab.size()
      << " source, " << tgt_vocab.size() << " target\n";
}

void run_train(const TrainOptions& o, std::ostream& out) {
  RunManifest manifest;
  manifest.command = "train";
  manifest.option("data", o.data);
  manifest.option("out", o.out);
  if (!o.dev_src.empty()) manifest.option("dev-src", o.dev_src);
  if (!o.dev_tgt.empty()) manifest.option("dev-tgt", o.dev_tgt);
  manifest.option("delta", o.delta);
  manifest.option("lambda", str(o.lambda));
  manifest.option("emb-dim", str(o.emb_dim));
  manifest.option("hidden-dim", str(o.hidden_dim));
  manifest.option("attn-dim", str(o.attn_dim));
  manifest.option("batch-size", str(o.batch_size));
  manifest.option("max-updates", str(o.max_updates));
  manifest.option("eval-every", str(o.eval_every));
  manifest.option("seed", std::to_string(o.seed));
  manifest.option("clip", str(o.clip));
  manifest.flag("no-clip", o.no_clip);
  manifest.option("optimizer", o.optimizer);
  manifest.option("lr", str(o.lr));
  manifest.flag("resume", o.resume);

  const fs::path data(o.data);
  const fs::path dir(o.out);
  for (const char* name : {"src.vocab", "tgt.vocab", "train.src", "train.tgt"}) manifest.input(data / name);
  if (fs::exists(data / "supervision.txt")) manifest.input(data / "supervision.txt");
  if (o.dev_src.empty() != o.dev_tgt.empty()) throw ConfigError("--dev-src and --dev-tgt go together");
  if (!o.dev_src.empty()) {
    manifest.input(o.dev_src);
    manifest.input(o.dev_tgt);
  }
  if (o.resume) {
    manifest.input(dir / "last.ckpt");
    manifest.input(dir / "optimizer.state");
  }

  TrainConfig cfg;
  cfg.loss.delta = parse_delta_kind(o.delta);
  cfg.loss.lambda = o.lambda;
  cfg.batch_size = o.batch_size;
  cfg.max_updates = o.max_updates;
  cfg.eval_interval = o.eval_every;
  cfg.seed = o.seed;
  cfg.clip = !o.no_clip;
  cfg.clip_threshold = o.clip;
  if (o.optimizer == "adadelta") {
    cfg.optimizer = OptimizerKind::Adadelta;
  } else if (o.optimizer == "sgd") {
    cfg.optimizer = OptimizerKind::Sgd;
  } else {
    throw ConfigError("--optimizer must be adadelta or sgd");
  }
  cfg.sgd_learning_rate = o.lr;

  const Vocab src_vocab = load_vocab(data / "src.vocab");
  const Vocab tgt_vocab = load_vocab(data / "tgt.vocab");
  const auto pairs = encode_parallel(read_parallel(data / "train.src", data / "train.tgt"), src_vocab, tgt_vocab);
  std::vector<Matrix> supervision;
  if (cfg.loss.supervised()) {
    if (!fs::exists(data / "supervision.txt")) {
      throw ConfigError("--delta " + o.delta + " needs supervision.txt; run preprocess with --align");
    }
    supervision = load_supervision(data / "supervision.txt");
    if (supervision.size() != pairs.size()) {
      throw ConsistencyError("supervision.txt has " + std::to_string(supervision.size()) + " matrices for " +
                             std::to_string(pairs.size()) + " pairs");
    }
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (supervision[i].rows() != pairs[i].n() + 1 || supervision[i].cols() != pairs[i].m() + 1) {
        throw ConsistencyError("supervision matrix " + std::to_string(i + 1) + " does not match its pair");
      }
    }
  }
  ParallelText dev;
  std::vector<SentencePair> dev_pairs;
  if (!o.dev_src.empty()) {
    dev = read_parallel(o.dev_src, o.dev_tgt);
    dev_pairs = encode_parallel(dev, src_vocab, tgt_vocab);
  }

  ModelParams params;
  std::optional<OptimizerState> state;
  if (o.resume) {
    Checkpoint last = load_checkpoint(dir / "last.ckpt");
    params = std::move(last.params);
    state = load_optimizer_state(dir / "optimizer.state", params.config);
  } else {
    ModelConfig model;
    model.source_vocab = src_vocab.size();
    model.target_vocab = tgt_vocab.size();
    model.embedding_dim = o.emb_dim;
    model.hidden_dim = o.hidden_dim;
    model.attention_dim = o.attn_dim;
    params = ModelParams::initialized(model, o.seed);
  }

  TrainData td;
  td.train = pairs;
  td.supervision = cfg.loss.supervised() ? &supervision : nullptr;
  td.dev = dev_pairs;
  td.dev_references = dev.target;
  td.target_vocab = &tgt_vocab;
  const TrainResult result = train(td, cfg, std::move(params), std::move(state), [&](const CurvePoint& p) {
    out << "update " << p.update << " train_loss " << format_double(p.train_loss) << " dev_bleu "
        << format_double(p.dev_bleu) << '\n';
  });

  fs::create_directories(dir);
  save_checkpoint(dir / "model.ckpt", {result.best, src_vocab, tgt_vocab});
  save_checkpoint(dir / "last.ckpt", {result.last, src_vocab, tgt_vocab});
  save_optimizer_state(dir / "optimizer.state", result.optimizer);
  write_learning_curve(dir / "learning_curve.csv", result.curve);
  manifest.save(dir / "train.manifest");
}

void run_translate(const TranslateOptions& o, std::ostream& out) {
  RunManifest manifest;
  manifest.command = "translate";
  manifest.option("model", o.model);
  manifest.option("input", o.input);
  manifest.option("output", o.output);
  manifest.option("beam", str(o.beam));
  manifest.option("max-len", str(o.max_len));
  manifest.flag("length-normalize", o.length_normalize);
  manifest.input(o.model);
  manifest.input(o.input);

  const Checkpoint ckpt = load_checkpoint(o.model);
  BeamOptions beam;
  beam.beam = o.beam;
  beam.max_len = o.max_len;
  beam.length_normalize = o.length_normalize;
  std::vector<std::string> lines;
  for (const std::string& line : read_lines(o.input)) {
    const TokenSeq source = encode(line, ckpt.source_vocab);
    lines.push_back(decode(beam_search(ckpt.params, source, beam).translation().tokens, ckpt.target_vocab));
  }
  write_lines(o.output, lines);
  manifest.save(o.output + ".manifest");
  out << "translated " << lines.size() << " sentences\n";
}

void run_align(const AlignOptions& o, std::ostream& out) {
  RunManifest manifest;
  manifest.command = "align";
  manifest.option("model", o.model);
  manifest.option("src", o.src);
  manifest.option("tgt", o.tgt);
  manifest.option("output", o.output);
  manifest.input(o.model);
  manifest.input(o.src);
  manifest.input(o.tgt);

  const Checkpoint ckpt = load_checkpoint(o.model);
  const auto pairs = encode_parallel(read_parallel(o.src, o.tgt), ckpt.source_vocab, ckpt.target_vocab);
  std::vector<std::string> lines;
  for (const SentencePair& pair : pairs) {
    lines.push_back(format_pharaoh(extract_hard_alignment(force_decode(ckpt.params, pair)).links));
  }
  write_lines(o.output, lines);
  manifest.save(o.output + ".manifest");
  out << "aligned " << lines.size() << " pairs\n";
}

void run_eval(const EvalOptions& o, std::ostream& out) {
  RunManifest manifest;
  manifest.command = "eval";
  manifest.option("mode", o.mode);
  manifest.option("hyp", o.hyp);
  for (const std::string& r : o.refs) manifest.option("ref", r);
  if (!o.gold.empty()) manifest.option("gold", o.gold);
  manifest.option("bootstrap", str(o.bootstrap));
  manifest.option("seed", std::to_string(o.seed));
  if (!o.output.empty()) manifest.option("output", o.output);
  manifest.input(o.hyp);
  for (const std::string& r : o.refs) manifest.input(r);
  if (!o.gold.empty()) manifest.input(o.gold);

  const auto hyps = read_lines(o.hyp);
  std::string report;
  if (o.mode == "bleu") {
    if (o.refs.empty()) throw ConfigError("--mode bleu needs at least one --ref");
    std::vector<std::vector<std::string>> refs;
    for (const std::string& r : o.refs) refs.push_back(read_lines(r));
    const double score = bleu4(hyps, refs);
    report = "bleu " + format_double(score) + "\n";
    if (o.bootstrap > 0) {
      const Interval ci = bootstrap_bleu(hyps, refs.front(), o.bootstrap, o.seed);
      report += "bleu_low " + format_double(ci.low) + "\nbleu_high " + format_double(ci.high) + "\n";
    }
  } else if (o.mode == "aer") {
    if (o.gold.empty()) throw ConfigError("--mode aer needs --gold");
    const auto gold_lines = read_lines(o.gold);
    std::vector<LinkSet> system;
    std::vector<GoldAlignment> gold;
    for (std::size_t i = 0; i < hyps.size(); ++i) {
      try {
        system.push_back(parse_links(hyps[i]));
      } catch (const ParseError& e) {
        throw ParseError(o.hyp + " line " + std::to_string(i + 1) + ": " + e.what());
      }
    }
    for (std::size_t i = 0; i < gold_lines.size(); ++i) {
      try {
        gold.push_back(parse_gold_alignment(gold_lines[i]));
      } catch (const ParseError& e) {
        throw ParseError(o.gold + " line " + std::to_string(i + 1) + ": " + e.what());
      }
    }
    const double score = aer(system, gold);
    report = "aer " + format_double(score) + "\n";
    if (o.bootstrap > 0) {
      const Interval ci = bootstrap_aer(system, gold, o.bootstrap, o.seed);
      report += "aer_low " + format_double(ci.low) + "\naer_high " + format_double(ci.high) + "\n";
    }
  } else {
    throw ConfigError("--mode must be bleu or aer");
  }
  out << report;
  if (!o.output.empty()) {
    std::ofstream file(o.output, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot write " + o.output);
    file << report;
    manifest.save(o.output + ".manifest");
  }
}

void run_synth(const SynthOptions& o, std::ostream& out) {
  RunManifest manifest;
  manifest.command = "synth";
  record_synth(manifest, o);
  write_corpus(o.out, generate(to_spec(o)));
  manifest.save(fs::path(o.out) / "synth.manifest");
  out << "wrote synthetic " << o.task << " corpus to " << o.out << '\n';
}

void run_experiment_cmd(const ExperimentOptionsCli& o, std::ostream& out) {
  RunManifest manifest;
  manifest.command = "experiment";
  record_synth(manifest, o.synth);
  manifest.option("delta", o.delta);
  manifest.option("lambda", str(o.lambda));
  manifest.option("emb-dim", str(o.emb_dim));
  manifest.option("hidden-dim", str(o.hidden_dim));
  manifest.option("attn-dim", str(o.attn_dim));
  manifest.option("batch-size", str(o.batch_size));
  manifest.option("max-updates", str(o.max_updates));
  manifest.option("eval-every", str(o.eval_every));
  manifest.option("beam", str(o.beam));
  manifest.option("train-seed", std::to_string(o.train_seed));

  std::vector<ExperimentConfig> configs(2);
  configs[0].name = "nmt";
  configs[0].train.loss = {DeltaKind::None, 0.0};
  configs[1].name = "sa-nmt";
  configs[1].train.loss = {parse_delta_kind(o.delta), o.lambda};
  if (!configs[1].train.loss.supervised()) throw ConfigError("experiment --delta must be supervised");
  for (ExperimentConfig& c : configs) {
    c.train.batch_size = o.batch_size;
    c.train.max_updates = o.max_updates;
    c.train.eval_interval = o.eval_every;
    c.train.seed = o.train_seed;
    c.init_seed = o.train_seed;
    c.embedding_dim = o.emb_dim;
    c.hidden_dim = o.hidden_dim;
    c.attention_dim = o.attn_dim;
  }
  ExperimentOptions options;
  options.beam = o.beam;
  options.output_dir = o.synth.out;
  const auto rows = run_experiment(to_spec(o.synth), configs, options, [&](const std::string& name, const CurvePoint& p) {
    out << name << " update " << p.update << " train_loss " << format_double(p.train_loss) << " dev_bleu "
        << format_double(p.dev_bleu) << '\n';
  });
  for (const ExperimentRow& r : rows) {
    out << r.config << ": test_bleu " << format_double(r.test_bleu) << " test_aer " << format_double(r.test_aer)
        << " token_acc " << format_double(r.token_acc) << '\n';
  }
  manifest.save(fs::path(o.synth.out) / "experiment.manifest");
}

void add_synth_options(CLI::App* cmd, SynthOptions& o) {
  cmd->add_option("--task", o.task, "copy, reverse or local-swap")->capture_default_str();
  cmd->add_option("--vocab", o.vocab, "source vocabulary size")->capture_default_str();
  cmd->add_option("--min-len", o.min_len)->capture_default_str();
  cmd->add_option("--max-len", o.max_len)->capture_default_str();
  cmd->add_option("--train", o.train, "training pairs")->capture_default_str();
  cmd->add_option("--dev", o.dev, "development pairs")->capture_default_str();
  cmd->add_option("--test", o.test, "test pairs")->capture_default_str();
  cmd->add_option("--seed", o.seed)->capture_default_str();
  cmd->add_option("--out", o.out, "output directory")->required();
}

int run_replay(const std::string& path, std::ostream& out, std::ostream& err) {
  const RunManifest manifest = RunManifest::load(path);
  if (manifest.command == "replay") throw ConfigError("cannot replay a replay");
  for (const auto& [file, digest] : manifest.inputs) {
    if (sha256_file(file) != digest) throw DataError("input " + file + " changed since the manifest was written");
  }
  const auto args = manifest.argv();
  return run_cli(args, out, err);
}

}  // namespace

int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Attention-based NMT with supervised attention"};
  app.name("sanmt");
  app.require_subcommand(1);

  PreprocessOptions pre;
  auto* pre_cmd = app.add_subcommand("preprocess", "build vocabularies and attention supervision");
  pre_cmd->add_option("--src", pre.src, "source corpus")->required();
  pre_cmd->add_option("--tgt", pre.tgt, "target corpus")->required();
  pre_cmd->add_option("--align", pre.align, "Pharaoh alignments, one line per pair");
  pre_cmd->add_option("--align-order", pre.align_order, "source-target or target-source")->capture_default_str();
  pre_cmd->add_option("--src-vocab", pre.src_vocab)->capture_default_str();
  pre_cmd->add_option("--tgt-vocab", pre.tgt_vocab)->capture_default_str();
  pre_cmd->add_option("--max-len", pre.max_len, "drop pairs longer than this on either side")->capture_default_str();
  pre_cmd->add_option("--out", pre.out, "output directory")->required();

  TrainOptions tr;
  auto* train_cmd = app.add_subcommand("train", "train a model on preprocessed data");
  train_cmd->add_option("--data", tr.data, "preprocess output directory")->required();
  train_cmd->add_option("--out", tr.out, "output directory")->required();
  train_cmd->add_option("--dev-src", tr.dev_src);
  train_cmd->add_option("--dev-tgt", tr.dev_tgt);
  train_cmd->add_option("--delta", tr.delta, "none, mse, mul or ce")->capture_default_str();
  train_cmd->add_option("--lambda", tr.lambda)->capture_default_str();
  train_cmd->add_option("--emb-dim", tr.emb_dim)->capture_default_str();
  train_cmd->add_option("--hidden-dim", tr.hidden_dim)->capture_default_str();
  train_cmd->add_option("--attn-dim", tr.attn_dim)->capture_default_str();
  train_cmd->add_option("--batch-size", tr.batch_size)->capture_default_str();
  train_cmd->add_option("--max-updates", tr.max_updates)->capture_default_str();
  train_cmd->add_option("--eval-every", tr.eval_every)->capture_default_str();
  train_cmd->add_option("--seed", tr.seed)->capture_default_str();
  train_cmd->add_option("--clip", tr.clip, "global gradient norm threshold")->capture_default_str();
  train_cmd->add_flag("--no-clip", tr.no_clip, "disable gradient clipping");
  train_cmd->add_option("--optimizer", tr.optimizer, "adadelta or sgd")->capture_default_str();
  train_cmd->add_option("--lr", tr.lr, "sgd learning rate")->capture_default_str();
  train_cmd->add_flag("--resume", tr.resume, "continue from last.ckpt and optimizer.state in --out");

  TranslateOptions tl;
  auto* tl_cmd = app.add_subcommand("translate", "beam-search translation");
  tl_cmd->add_option("--model", tl.model)->required();
  tl_cmd->add_option("--input", tl.input)->required();
  tl_cmd->add_option("--output", tl.output)->required();
  tl_cmd->add_option("--beam", tl.beam)->capture_default_str();
  tl_cmd->add_option("--max-len", tl.max_len, "0 = 2*source length + 10")->capture_default_str();
  tl_cmd->add_flag("--length-normalize", tl.length_normalize);

  AlignOptions al;
  auto* al_cmd = app.add_subcommand("align", "force-decode pairs and write argmax alignments");
  al_cmd->add_option("--model", al.model)->required();
  al_cmd->add_option("--src", al.src)->required();
  al_cmd->add_option("--tgt", al.tgt)->required();
  al_cmd->add_option("--output", al.output)->required();

  EvalOptions ev;
  auto* ev_cmd = app.add_subcommand("eval", "BLEU4 or AER");
  ev_cmd->add_option("--mode", ev.mode, "bleu or aer")->capture_default_str();
  ev_cmd->add_option("--hyp", ev.hyp)->required();
  ev_cmd->add_option("--ref", ev.refs, "reference file, repeatable");
  ev_cmd->add_option("--gold", ev.gold, "gold alignments with i-j sure and i?j possible links");
  ev_cmd->add_option("--bootstrap", ev.bootstrap, "resamples, 0 disables")->capture_default_str();
  ev_cmd->add_option("--seed", ev.seed)->capture_default_str();
  ev_cmd->add_option("--output", ev.output);

  SynthOptions sy;
  auto* sy_cmd = app.add_subcommand("synth", "generate a synthetic parallel corpus with gold alignments");
  add_synth_options(sy_cmd, sy);

  ExperimentOptionsCli ex;
  auto* ex_cmd = app.add_subcommand("experiment", "compare NMT and supervised-attention NMT on synthetic data");
  add_synth_options(ex_cmd, ex.synth);
  ex_cmd->add_option("--delta", ex.delta)->capture_default_str();
  ex_cmd->add_option("--lambda", ex.lambda)->capture_default_str();
  ex_cmd->add_option("--emb-dim", ex.emb_dim)->capture_default_str();
  ex_cmd->add_option("--hidden-dim", ex.hidden_dim)->capture_default_str();
  ex_cmd->add_option("--attn-dim", ex.attn_dim)->capture_default_str();
  ex_cmd->add_option("--batch-size", ex.batch_size)->capture_default_str();
  ex_cmd->add_option("--max-updates", ex.max_updates)->capture_default_str();
  ex_cmd->add_option("--eval-every", ex.eval_every)->capture_default_str();
  ex_cmd->add_option("--beam", ex.beam)->capture_default_str();
  ex_cmd->add_option("--train-seed", ex.train_seed)->capture_default_str();

  std::string manifest_path;
  auto* rp_cmd = app.add_subcommand("replay", "re-run a command from its manifest");
  rp_cmd->add_option("manifest", manifest_path)->required();

  std::vector<std::string> argv_storage{"sanmt"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (std::string& a : argv_storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (pre_cmd->parsed()) run_preprocess(pre, out);
    else if (train_cmd->parsed()) run_train(tr, out);
    else if (tl_cmd->parsed()) run_translate(tl, out);
    else if (al_cmd->parsed()) run_align(al, out);
    else if (ev_cmd->parsed()) run_eval(ev, out);
    else if (sy_cmd->parsed()) run_synth(sy, out);
    else if (ex_cmd->parsed()) run_experiment_cmd(ex, out);
    else if (rp_cmd->parsed()) return run_replay(manifest_path, out, err);
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace sanmt
