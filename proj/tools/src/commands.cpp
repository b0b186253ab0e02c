#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "dvauth/binary_io.hpp"
#include "dvauth/corpus.hpp"
#include "dvauth/deviation.hpp"
#include "dvauth/error.hpp"
#include "dvauth/eval.hpp"
#include "dvauth/projection.hpp"
#include "dvauth/synth.hpp"
#include "dvauth/textmodel.hpp"
#include "dvauth/viz.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dvauth::cli {
namespace {

std::vector<fs::path> text_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

Dataset load_required_dataset(const std::optional<fs::path>& root, const std::optional<fs::path>& truth,
                              const char* key) {
  require_dir(root, key);
  if (truth && !fs::is_regular_file(*truth)) {
    throw ConfigError(std::string(key) + ": truth file not found: " + truth->string());
  }
  return load_dataset(*root, truth);
}

void write_report(const RunConfig& cfg, const EvalReport& report, const ThresholdScheme& scheme,
                  double threshold) {
  json j = json::parse(report.to_json());
  j["threshold_scheme"] = scheme.to_string();
  j["threshold"] = threshold;
  j["margin"] = cfg.margin;
  io::write_file_text(cfg.out / "report.json", j.dump(2) + "\n");
  io::write_file_text(cfg.out / "report.txt", report.to_table());
  spdlog::info("report written to {}", (cfg.out / "report.json").string());
}

// Writes scores and, for labeled data, the report files.
void finish_run(const RunConfig& cfg, const Dataset& data, std::vector<ProblemScore>& scores,
                const ThresholdScheme& scheme, double threshold, const std::string& method) {
  fs::create_directories(cfg.out);
  write_scores_csv(cfg.out / "scores.csv", scores);
  spdlog::info("scores written to {}", (cfg.out / "scores.csv").string());
  if (!data.labeled()) {
    spdlog::info("dataset {} has no truth labels; report skipped", data.name);
    return;
  }
  const auto report = evaluate_run(scores, cfg.metric, data.name, method);
  std::cout << report.to_table();
  write_report(cfg, report, scheme, threshold);
}

// Median of the calibration scores for train-median; the scheme otherwise.
template <typename ScoreFn>
ThresholdScheme calibrate(const RunConfig& cfg, const std::optional<fs::path>& calibration, ScoreFn&& score) {
  ThresholdScheme scheme = cfg.threshold;
  if (scheme.kind != ThresholdKind::train_median) return scheme;
  require_dir(calibration, "calibration");
  const Dataset cal = load_dataset(*calibration);
  const auto scores = score(cal);
  scheme.value = resolve_threshold(ThresholdScheme{}, scores);
  spdlog::info("train-median threshold {:.6g} from {} calibration problems", scheme.value, cal.problems.size());
  return scheme;
}

DvSequence concat_sequences(const std::vector<DvSequence>& parts, std::string id) {
  DvSequence out;
  out.source_doc_id = std::move(id);
  if (parts.empty()) return out;
  out.mode = parts.front().mode;
  Eigen::Index rows = 0;
  for (const auto& p : parts) rows += p.vectors.rows();
  out.vectors.resize(rows, parts.front().vectors.cols());
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.vectors.middleRows(at, p.vectors.rows()) = p.vectors;
    at += p.vectors.rows();
  }
  return out;
}

}  // namespace

std::unique_ptr<NwsModel> load_nws(const RunConfig& cfg) {
  if (cfg.backend == Backend::external) {
    require_dir(cfg.external_dir, "external_dir");
    auto ext = std::make_unique<ExternalNws>(load_external_dir(*cfg.external_dir));
    if (cfg.mode_explicit && ext->mode() != cfg.mode) {
      throw ConfigError("external DVEX files are " + std::string(mode_name(ext->mode())) + " but mode " +
                        std::string(mode_name(cfg.mode)) + " was requested");
    }
    return ext;
  }
  require_file(cfg.model, "model");
  require_file(cfg.vocab, "vocab");
  auto nws = std::make_unique<BuiltinNws>(BuiltinNws::load(*cfg.model, *cfg.vocab));
  if (cfg.mode_explicit && nws->mode() != cfg.mode) {
    throw ConfigError("model " + cfg.model->string() + " is " + std::string(mode_name(nws->mode())) +
                      " but mode " + std::string(mode_name(cfg.mode)) + " was requested");
  }
  return nws;
}

void cmd_nws_train(const RunConfig& cfg) {
  require_dir(cfg.corpus, "corpus");
  TrainConfig tc = cfg.nws;
  tc.seed = cfg.nws_seed;
  tc.validate();
  if (cfg.min_count < 1) throw ConfigError("nws.min_count must be >= 1");
  const auto files = text_files(*cfg.corpus);
  if (files.empty()) throw ConfigError("corpus: no .txt files under " + cfg.corpus->string());

  std::vector<std::string> texts;
  texts.reserve(files.size());
  for (const auto& f : files) {
    auto text = io::read_file_text(f);
    if (!is_valid_utf8(text)) throw DecodeError(f.string(), f.string() + ": not valid UTF-8");
    texts.push_back(std::move(text));
  }
  const Vocabulary vocab = build_vocab(texts, cfg.min_count);
  std::vector<TokenSeq> corpus;
  std::size_t tokens = 0;
  for (const auto& t : texts) {
    corpus.push_back(encode(tokenize(t), vocab));
    tokens += corpus.back().size();
  }
  spdlog::info("corpus: {} files, {} tokens, vocabulary {}", files.size(), tokens, vocab.size());

  auto emb = train_embeddings(corpus, vocab.size(), tc);
  spdlog::info("embeddings trained ({} epochs)", emb.epoch_loss.size());
  auto pred = train_predictor(corpus, emb.table, tc, cfg.mode);
  spdlog::info("predictor trained ({} epochs)", pred.epoch_loss.size());

  fs::create_directories(cfg.out);
  const BuiltinNws nws(vocab, std::move(emb.table), std::move(pred.predictor));
  nws.save(cfg.out / "nws.dvnw", cfg.out / "vocab.json");

  json side;
  side["format"] = "DVNW";
  side["mode"] = mode_name(cfg.mode);
  side["config"] = {{"d", tc.d},
                    {"h", tc.h},
                    {"m", tc.m},
                    {"negative_samples", tc.negative_samples},
                    {"epochs", tc.epochs},
                    {"learning_rate", tc.learning_rate},
                    {"min_count", cfg.min_count},
                    {"seed", tc.seed}};
  side["corpus"] = {{"documents", files.size()}, {"tokens", tokens}, {"vocab_size", vocab.size()}};
  side["training"] = {{"embedding_loss", emb.epoch_loss}, {"predictor_mse", pred.epoch_loss}};
  io::write_file_text(cfg.out / "nws.json", side.dump(2) + "\n");
  spdlog::info("model written to {}", cfg.out.string());
}

void cmd_verify(const RunConfig& cfg) {
  const Dataset data = load_required_dataset(cfg.dataset, cfg.truth, "dataset");
  const auto nws = load_nws(cfg);
  VerifyOptions opts;
  opts.margin = cfg.margin;
  opts.jobs = cfg.jobs;
  opts.threshold = calibrate(cfg, cfg.calibration, [&](const Dataset& cal) {
    return score_unsupervised(*nws, cal, opts);
  });
  auto scores = score_unsupervised(*nws, data, opts);
  const double t = resolve_threshold(opts.threshold, scores);
  apply_threshold(scores, t, opts.margin);
  finish_run(cfg, data, scores, opts.threshold, t, "dv-distance");
}

void cmd_proj_train(const RunConfig& cfg) {
  const Dataset train = load_required_dataset(cfg.train_dataset, cfg.train_truth, "train_dataset");
  if (!train.labeled()) throw ConfigError("train_dataset needs truth labels (train_truth)");
  const auto nws = load_nws(cfg);
  ProjectionTrainConfig pc = cfg.proj;
  pc.seed = cfg.projection_seed;
  pc.validate();
  PairOptions po = cfg.pairs;
  po.jobs = cfg.jobs;
  const PairSet pairs = make_segment_pairs(train, *nws, po);
  spdlog::info("{} segments, {} pairs, {:.3f} positive", pairs.segments.size(), pairs.pairs.size(),
               pairs.positive_fraction());
  const auto fit = train_projection(pairs, pc);
  fs::create_directories(cfg.out);
  fit.model.save(cfg.out / "projection.dvpj");
  io::write_file_text(cfg.out / "projection.json", projection_sidecar_json(fit.model, pc, fit.report, po));
  spdlog::info("training accuracy {:.4f}, checkpoint written to {}", fit.report.train_accuracy,
               (cfg.out / "projection.dvpj").string());
}

void cmd_proj_eval(const RunConfig& cfg) {
  require_file(cfg.projection, "projection");
  const Dataset data = load_required_dataset(cfg.dataset, cfg.truth, "dataset");
  const auto nws = load_nws(cfg);
  const ProjectionModel model = ProjectionModel::load(*cfg.projection);
  PairOptions po = cfg.pairs;
  po.jobs = cfg.jobs;
  const auto& cal_root = cfg.calibration ? cfg.calibration : cfg.train_dataset;
  const ThresholdScheme scheme = calibrate(cfg, cal_root, [&](const Dataset& cal) {
    return score_projection(model, *nws, cal, po);
  });
  auto scores = score_projection(model, *nws, data, po);
  const double t = resolve_threshold(scheme, scores);
  apply_threshold(scores, t, cfg.margin);
  finish_run(cfg, data, scores, scheme, t, "dv-projection");
}

void cmd_visualize(const RunConfig& cfg) {
  if (!cfg.problem) throw ConfigError("missing required setting 'problem'");
  const FlowerFormat format = parse_flower_format(cfg.format);
  const Dataset data = load_required_dataset(cfg.dataset, cfg.truth, "dataset");
  const Problem* p = data.find(*cfg.problem);
  if (!p) throw ConfigError("unknown problem id '" + *cfg.problem + "' in " + data.name);
  const auto nws = load_nws(cfg);
  const ProblemEvidence ev = gather_evidence(*nws, *p);
  const std::string known_id = ev.known.size() == 1 ? ev.known.front().source_doc_id : p->id + "/known";
  const auto proj = pca_2d(concat_sequences(ev.known, known_id), ev.unknown);
  fs::create_directories(cfg.out);
  const fs::path out = cfg.out / ("flower-" + p->id + (format == FlowerFormat::svg ? ".svg" : ".csv"));
  render_flower(proj, out, format);
  spdlog::info("flower plot written to {}", out.string());
}

void cmd_synth(const SynthOptions& opts) {
  if (opts.problems < 2 || opts.tokens < 2 || opts.reference_documents < 1 || opts.reference_tokens < 2) {
    throw ConfigError("synth sizes are too small");
  }
  const StyleGenerator gen;
  const auto ref = gen.reference_corpus(opts.reference_documents, opts.reference_tokens, opts.seed);
  const fs::path ref_dir = opts.out / "reference";
  fs::create_directories(ref_dir);
  for (std::size_t i = 0; i < ref.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "ref%04zu.txt", i + 1);
    io::write_file_text(ref_dir / name, ref[i]);
  }
  const Dataset data = gen.make_dataset(opts.problems, opts.tokens, opts.seed + 1, "problems");
  write_dataset(data, opts.out / "problems", opts.out / "truth.txt");
  spdlog::info("synthetic corpus and {} problems written to {}", data.problems.size(), opts.out.string());
}

int run(int argc, char** argv) {
  CLI::App app{"Authorship verification with deviation vectors"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "dvauth 0.1.0");

  std::optional<std::string> config_path, mode, threshold, backend, metric, out, problem, format;
  std::optional<double> margin;
  std::optional<int> jobs;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> corpus, dataset, truth, train_dataset, train_truth, calibration, vocab, model,
      external_dir, projection;
  bool verbose = false;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration");
    sub->add_option("--mode", mode, "causal or masked");
    sub->add_option("--backend", backend, "builtin or external");
    sub->add_option("--jobs", jobs, "worker threads");
    sub->add_option("--seed", seed, "seed for every random stage");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--vocab", vocab, "vocabulary JSON");
    sub->add_option("--model", model, "DVNW checkpoint");
    sub->add_option("--external", external_dir, "directory of DVEX files");
    sub->add_flag("-v,--verbose", verbose, "debug logging");
  };
  const auto add_scoring = [&](CLI::App* sub) {
    sub->add_option("--dataset", dataset, "problem tree");
    sub->add_option("--truth", truth, "truth file");
    sub->add_option("--threshold", threshold, "test-median, train-median or fixed:<value>");
    sub->add_option("--margin", margin, "abstention margin around the threshold");
    sub->add_option("--metric", metric, "pan13 or pan14plus");
    sub->add_option("--calibration", calibration, "problem tree for train-median");
  };

  auto* nws_train = app.add_subcommand("nws-train", "train the builtin NWS model on a reference corpus");
  add_common(nws_train);
  nws_train->add_option("--corpus", corpus, "directory of .txt files");

  auto* verify = app.add_subcommand("verify", "unsupervised DV-Distance verification");
  add_common(verify);
  add_scoring(verify);

  auto* proj_train = app.add_subcommand("proj-train", "train the DV-Projection scorer");
  add_common(proj_train);
  proj_train->add_option("--train-dataset", train_dataset, "labeled problem tree");
  proj_train->add_option("--train-truth", train_truth, "truth file for the training tree");

  auto* proj_eval = app.add_subcommand("proj-eval", "score problems with a trained DV-Projection model");
  add_common(proj_eval);
  add_scoring(proj_eval);
  proj_eval->add_option("--projection", projection, "DVPJ checkpoint");
  proj_eval->add_option("--train-dataset", train_dataset, "fallback calibration tree for train-median");

  auto* visualize = app.add_subcommand("visualize", "flower plot of one problem");
  add_common(visualize);
  visualize->add_option("--dataset", dataset, "problem tree");
  visualize->add_option("--problem", problem, "problem id");
  visualize->add_option("--format", format, "svg or csv");

  SynthOptions synth_opts;
  auto* synth = app.add_subcommand("synth", "write a synthetic reference corpus and problem set");
  synth->add_option("--out", synth_opts.out, "output directory");
  synth->add_option("--problems", synth_opts.problems, "number of problems");
  synth->add_option("--tokens", synth_opts.tokens, "tokens per problem document");
  synth->add_option("--reference-docs", synth_opts.reference_documents, "reference documents");
  synth->add_option("--reference-tokens", synth_opts.reference_tokens, "tokens per reference document");
  synth->add_option("--seed", synth_opts.seed, "generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  auto logger = spdlog::get("dvauth");
  if (!logger) logger = spdlog::stderr_color_mt("dvauth");
  spdlog::set_default_logger(logger);
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (synth->parsed()) {
      cmd_synth(synth_opts);
      return kExitOk;
    }
    RunConfig cfg = config_path ? load_config(*config_path) : RunConfig{};
    // Flags win over the config file; an empty value clears the setting.
    const auto set_path = [](std::optional<fs::path>& dst, const std::optional<std::string>& src) {
      if (!src) return;
      if (src->empty()) dst.reset();
      else dst = fs::path(*src);
    };
    set_path(cfg.corpus, corpus);
    set_path(cfg.dataset, dataset);
    set_path(cfg.truth, truth);
    set_path(cfg.train_dataset, train_dataset);
    set_path(cfg.train_truth, train_truth);
    set_path(cfg.calibration, calibration);
    set_path(cfg.vocab, vocab);
    set_path(cfg.model, model);
    set_path(cfg.external_dir, external_dir);
    set_path(cfg.projection, projection);
    if (external_dir && !backend) cfg.backend = Backend::external;
    if (backend) {
      if (*backend == "builtin") {
        cfg.backend = Backend::builtin;
      } else if (*backend == "external") {
        cfg.backend = Backend::external;
      } else {
        throw ConfigError("unknown backend '" + *backend + "' (expected builtin|external)");
      }
    }
    if (mode) {
      cfg.mode = parse_mode(*mode);
      cfg.mode_explicit = true;
    }
    if (threshold) cfg.threshold = ThresholdScheme::parse(*threshold);
    if (margin) cfg.margin = *margin;
    if (metric) cfg.metric = parse_metric_scheme(*metric);
    if (jobs) cfg.jobs = *jobs;
    if (seed) cfg.nws_seed = cfg.projection_seed = *seed;
    if (out) cfg.out = *out;
    if (problem) cfg.problem = *problem;
    if (format) cfg.format = *format;
    if (cfg.jobs < 1) throw ConfigError("jobs must be >= 1");
    if (cfg.margin < 0.0) throw ConfigError("margin must be non-negative");

    if (nws_train->parsed()) cmd_nws_train(cfg);
    if (verify->parsed()) cmd_verify(cfg);
    if (proj_train->parsed()) cmd_proj_train(cfg);
    if (proj_eval->parsed()) cmd_proj_eval(cfg);
    if (visualize->parsed()) cmd_visualize(cfg);
    return kExitOk;
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const StructuralError& e) {
    spdlog::error("problem {}: {}", e.problem_id(), e.what());
    return kExitRuntime;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitRuntime;
  }
}

}  // namespace dvauth::cli
