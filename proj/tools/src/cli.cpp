#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "config_file.hpp"
#include "ink2tex/attention_export.hpp"
#include "ink2tex/beam_search.hpp"
#include "ink2tex/dataset.hpp"
#include "ink2tex/errors.hpp"
#include "ink2tex/metrics.hpp"
#include "ink2tex/model_io.hpp"
#include "ink2tex/synth.hpp"
#include "ink2tex/train.hpp"
#include "ink2tex/vocabulary.hpp"

namespace ink2tex::cli {
namespace fs = std::filesystem;
namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ' ') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<std::size_t> parse_indices(const std::string& s) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(s)) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError("'" + item + "' is not a layer index");
    }
  }
  return out;
}

std::size_t default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

// ---------------------------------------------------------------- synth

struct SynthOptions {
  std::string out_dir;
  std::size_t count = 20;
  SynthSpec spec;
  std::string symbols = "x,e,1,2,+,-,^,_,{,}";
};

int cmd_synth(const SynthOptions& o, std::ostream& out) {
  SynthSpec spec = o.spec;
  spec.symbols = split_list(o.symbols);
  const auto inks = generate(spec, o.count);
  std::vector<std::pair<std::string, Ink>> named;
  char id[32];
  for (std::size_t i = 0; i < inks.size(); ++i) {
    std::snprintf(id, sizeof(id), "synth_%04zu", i);
    named.emplace_back(id, inks[i]);
  }
  write_raw_directory(o.out_dir, named);
  std::set<std::string> used;
  for (const auto& ink : inks) used.insert(ink.label->begin(), ink.label->end());
  write_file(fs::path(o.out_dir) / "vocab.txt", Vocabulary({used.begin(), used.end()}).save());
  out << "wrote " << inks.size() << " expressions to " << o.out_dir << '\n';
  return kExitOk;
}

// ----------------------------------------------------------- preprocess

struct PreprocessOptions {
  std::string in_dir;
  std::string out_dir;
  double spacing = kDefaultSpacing;
};

int cmd_preprocess(const PreprocessOptions& o, std::ostream& out) {
  if (!(o.spacing > 0.0)) throw ConfigError("--spacing must be positive");
  std::vector<Sample> samples;
  for (const auto& [id, ink] : read_raw_directory(o.in_dir)) samples.push_back(make_sample(id, ink, o.spacing));
  write_dataset(o.out_dir, samples);
  out << "wrote " << samples.size() << " samples to " << o.out_dir << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainOptions {
  std::string train_dir;
  std::string valid_dir;
  std::string model_out;
  std::string vocab_path;
  std::string log_path;
  std::string init_model;
  ModelConfig model;
  std::string pooled = "2,3";
  std::string pooling = "max";
  TrainConfig train;
  std::uint64_t init_seed = 1;
};

std::vector<TrainingExample> to_examples(const std::vector<Sample>& samples, const Vocabulary& vocab) {
  std::vector<TrainingExample> out;
  for (const auto& s : samples) {
    if (s.label.empty()) throw FormatError("sample '" + s.id + "' has no label");
    auto y = vocab.encode(s.label);
    y.push_back(Vocabulary::kEnd);
    out.push_back({s.features, std::move(y)});
  }
  return out;
}

int cmd_train(TrainOptions o, std::ostream& out) {
  const auto train_samples = read_dataset(o.train_dir);
  const auto valid_samples = o.valid_dir.empty() ? train_samples : read_dataset(o.valid_dir);

  Vocabulary vocab;
  if (!o.vocab_path.empty()) {
    vocab = Vocabulary::load(read_file(o.vocab_path));
  } else {
    std::set<std::string> used;
    for (const auto& s : train_samples) used.insert(s.label.begin(), s.label.end());
    vocab = Vocabulary({used.begin(), used.end()});
  }

  ModelParams init;
  if (!o.init_model.empty()) {
    init = load_model(o.init_model);
    if (init.config.vocabulary != vocab.tokens()) throw ConfigError("--init model vocabulary differs");
  } else {
    o.model.pooled_layers = parse_indices(o.pooled);
    if (o.pooling == "max") {
      o.model.pooling_mode = PoolMode::kMax;
    } else if (o.pooling == "mean") {
      o.model.pooling_mode = PoolMode::kMean;
    } else if (o.pooling == "subsample") {
      o.model.pooling_mode = PoolMode::kSubsample;
    } else {
      throw ConfigError("--pooling must be max, mean or subsample");
    }
    o.model.vocab_size = vocab.size();
    o.model.vocabulary = vocab.tokens();
    validate(o.model);
    init = init_params(o.model, o.init_seed);
  }

  const auto train_set = to_examples(train_samples, vocab);
  const auto valid_set = to_examples(valid_samples, vocab);
  std::string log;
  const auto result = train_loop(init, train_set, valid_set, o.train, [&](const EpochRecord& r) {
    const auto line = format_log_line(r);
    log += line + '\n';
    out << line << '\n';
    if (!o.log_path.empty()) write_file(o.log_path, log);
  });
  save_model(result.best, o.model_out);
  out << "saved " << o.model_out << " after " << result.updates << " updates\n";
  return kExitOk;
}

// --------------------------------------------------------------- decode

struct DecodeOptions {
  std::vector<std::string> models;
  std::string input;
  std::string out_path;
  std::string attention_dir;
  BeamConfig beam;
  double spacing = kDefaultSpacing;
  std::size_t workers = default_workers();
};

std::vector<Sample> load_inputs(const std::string& input, double spacing) {
  const fs::path p(input);
  if (fs::is_directory(p)) {
    if (fs::exists(p / "manifest.tsv")) return read_dataset(p);
    std::vector<Sample> out;
    for (const auto& [id, ink] : read_raw_directory(p)) out.push_back(make_sample(id, ink, spacing));
    return out;
  }
  if (!fs::exists(p)) throw Error("input " + input + " does not exist");
  const auto text = read_file(p);
  const Ink ink = p.extension() == ".inkml" ? parse_inkml(text) : parse_points(text);
  return {make_sample(p.stem().string(), ink, spacing)};
}

int cmd_decode(const DecodeOptions& o, std::ostream& out) {
  std::vector<ModelParams> models;
  for (const auto& m : o.models) models.push_back(load_model(m));
  const auto samples = load_inputs(o.input, o.spacing);

  std::vector<DecodeResult> results(samples.size());
  std::vector<std::thread> threads;
  const std::size_t workers = std::clamp<std::size_t>(o.workers, 1, samples.size());
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < samples.size(); i += workers) {
          results[i] = beam_search(models, samples[i].features, o.beam);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::string text;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::vector<std::string> tokens;
    for (TokenId id : results[i].tokens) {
      if (id == Vocabulary::kEnd || id == Vocabulary::kStart) continue;
      tokens.push_back(token_name(models.front().config, id));
    }
    text += samples[i].id + '\t';
    for (std::size_t k = 0; k < tokens.size(); ++k) text += (k ? " " : "") + tokens[k];
    char score[40];
    std::snprintf(score, sizeof(score), "\t%.17g", results[i].log_prob);
    text += score;
    if (results[i].truncated) text += "\ttruncated";
    text += '\n';
    if (!o.attention_dir.empty()) {
      if (samples[i].ink.points.empty()) throw Error("sample '" + samples[i].id + "' has no stored trajectory");
      export_attention(results[i].trace, samples[i].ink, fs::path(o.attention_dir) / samples[i].id);
    }
  }
  if (o.out_path.empty()) {
    out << text;
  } else {
    write_file(o.out_path, text);
  }
  return kExitOk;
}

// ------------------------------------------------------------- evaluate

std::vector<Transcription> load_transcriptions(const std::string& path) {
  if (fs::is_directory(path)) {
    std::vector<Transcription> out;
    for (const auto& s : read_dataset(path)) out.push_back({s.id, s.label});
    return out;
  }
  return parse_transcriptions(read_file(path));
}

int cmd_evaluate(const std::string& refs_path, const std::string& hyps_path, std::ostream& out) {
  const auto refs = load_transcriptions(refs_path);
  const auto hyps = load_transcriptions(hyps_path);
  std::map<std::string, const Transcription*> by_id;
  for (const auto& h : hyps) by_id.emplace(h.id, &h);
  std::vector<TokenSeq> r, h;
  for (const auto& ref : refs) {
    const auto it = by_id.find(ref.id);
    if (it == by_id.end()) throw FormatError("no hypothesis for '" + ref.id + "'");
    r.push_back(ref.tokens);
    h.push_back(it->second->tokens);
  }
  if (r.empty()) throw EmptyInputError("no reference expressions");
  const auto rates = exprate(r, h);
  char buf[160];
  std::snprintf(buf, sizeof(buf), "ExpRate %.2f\n<=1 %.2f\n<=2 %.2f\n<=3 %.2f\nWER %.4f\n", 100.0 * rates.exact,
                100.0 * rates.within1, 100.0 * rates.within2, 100.0 * rates.within3, corpus_wer(r, h));
  out << buf;
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Handwritten math trajectories to LaTeX tokens"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")->capture_default_str();

  SynthOptions synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic labeled corpus of .points files");
  s->add_option("--out", synth.out_dir, "Output directory")->required();
  s->add_option("--count", synth.count, "Number of expressions")->capture_default_str();
  s->add_option("--seed", synth.spec.seed, "Random seed")->capture_default_str();
  s->add_option("--depth", synth.spec.depth, "Relation nesting depth")->capture_default_str();
  s->add_option("--symbols", synth.symbols, "Comma-separated glyphs and structural tokens")->capture_default_str();
  s->add_option("--max-terms", synth.spec.max_terms, "Terms per top-level row")->capture_default_str();
  s->add_option("--glyph-size", synth.spec.glyph_size, "Glyph height")->capture_default_str();
  s->add_option("--jitter", synth.spec.jitter, "Vertex jitter relative to glyph size")->capture_default_str();

  PreprocessOptions prep;
  auto* p = app.add_subcommand("preprocess", "Normalize, resample and featurize a directory of ink files");
  p->add_option("--in", prep.in_dir, "Directory of .inkml / .points files")->required();
  p->add_option("--out", prep.out_dir, "Dataset directory to write")->required();
  p->add_option("--spacing", prep.spacing, "Resampling distance")->capture_default_str();

  TrainOptions train;
  train.train.workers = default_workers();
  auto* t = app.add_subcommand("train", "Train a model on a preprocessed dataset");
  t->add_option("--train", train.train_dir, "Training dataset directory")->required();
  t->add_option("--valid", train.valid_dir, "Validation dataset directory (default: training set)");
  t->add_option("--model-out", train.model_out, "Where to write the best model")->required();
  t->add_option("--vocab", train.vocab_path, "Vocabulary file (default: tokens of the training labels)");
  t->add_option("--log", train.log_path, "Training log file");
  t->add_option("--init", train.init_model, "Start from this model instead of a fresh one");
  t->add_option("--init-seed", train.init_seed, "Seed for weight initialization")->capture_default_str();
  t->add_option("--layers", train.model.encoder_layers, "Encoder layers")->capture_default_str();
  t->add_option("--hidden", train.model.encoder_hidden, "Encoder units per direction")->capture_default_str();
  t->add_option("--pooled", train.pooled, "Comma-separated pooled layer indices")->capture_default_str();
  t->add_option("--pooling", train.pooling, "max, mean or subsample")->capture_default_str();
  t->add_option("--decoder-hidden", train.model.decoder_hidden, "Decoder units")->capture_default_str();
  t->add_option("--embedding", train.model.embedding_dim, "Embedding size")->capture_default_str();
  t->add_option("--attention", train.model.attention_dim, "Attention size")->capture_default_str();
  t->add_option("--coverage", train.model.coverage, "Use the coverage vector")->capture_default_str();
  t->add_option("--coverage-width", train.model.coverage_width, "Coverage filter width")->capture_default_str();
  t->add_option("--coverage-channels", train.model.coverage_channels, "Coverage filters")->capture_default_str();
  t->add_option("--rho", train.train.optimizer.rho, "AdaDelta decay")->capture_default_str();
  t->add_option("--epsilon", train.train.optimizer.epsilon, "AdaDelta epsilon")->capture_default_str();
  t->add_option("--clip-norm", train.train.optimizer.clip_norm, "Global gradient norm limit")->capture_default_str();
  t->add_option("--weight-noise", train.train.weight_noise_std, "Phase 2 weight noise std")->capture_default_str();
  t->add_option("--max-epochs", train.train.max_epochs, "Epochs per phase")->capture_default_str();
  t->add_option("--patience", train.train.patience, "Epochs without improvement")->capture_default_str();
  t->add_option("--seed", train.train.seed, "Shuffling and noise seed")->capture_default_str();
  t->add_option("--batch-size", train.train.batch_size, "Sequences per update")->capture_default_str();
  t->add_option("--max-updates", train.train.max_updates, "Update cap, 0 for none")->capture_default_str();
  t->add_option("--anneal", train.train.anneal, "Run the weight-noise phase")->capture_default_str();
  t->add_option("--valid-beam", train.train.valid_beam, "Beam width for validation")->capture_default_str();
  t->add_option("--workers", train.train.workers, "Worker threads")->capture_default_str();

  DecodeOptions decode;
  auto* d = app.add_subcommand("decode", "Transcribe ink with one model or an ensemble");
  d->add_option("--model", decode.models, "Model file; repeat for an ensemble")->required();
  d->add_option("--input", decode.input, "Dataset directory, ink directory or ink file")->required();
  d->add_option("--out", decode.out_path, "Transcription file (default: stdout)");
  d->add_option("--beam", decode.beam.beam, "Beam width")->capture_default_str();
  d->add_option("--max-len", decode.beam.max_len, "Maximum output length")->capture_default_str();
  d->add_option("--spacing", decode.spacing, "Resampling distance for raw ink")->capture_default_str();
  d->add_option("--attention-dir", decode.attention_dir, "Write attention JSON and heatmaps here");
  d->add_option("--workers", decode.workers, "Worker threads")->capture_default_str();

  std::string refs, hyps;
  auto* e = app.add_subcommand("evaluate", "Score transcriptions against references");
  e->add_option("--refs", refs, "Reference transcriptions or dataset directory")->required();
  e->add_option("--hyps", hyps, "Hypothesis transcriptions")->required();

  try {
    auto args = merge_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const ConfigError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitUsage;
  }

  spdlog::set_level(spdlog::level::from_str(log_level));
  try {
    if (*s) return cmd_synth(synth, out);
    if (*p) return cmd_preprocess(prep, out);
    if (*t) return cmd_train(train, out);
    if (*d) return cmd_decode(decode, out);
    if (*e) return cmd_evaluate(refs, hyps, out);
  } catch (const ConfigError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

int run(const std::vector<std::string>& args) { return run(args, std::cout, std::cerr); }

}  // namespace ink2tex::cli
