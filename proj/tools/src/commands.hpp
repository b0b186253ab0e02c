#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>

#include "dvauth/nws.hpp"
#include "run_config.hpp"

namespace dvauth::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Trains vocabulary, embeddings and predictor on cfg.corpus and writes
// vocab.json, nws.dvnw and nws.json into cfg.out.
void cmd_nws_train(const RunConfig& cfg);

// DV-Distance over cfg.dataset: scores.csv, plus report.json/report.txt when
// the dataset is labeled.
void cmd_verify(const RunConfig& cfg);

// Trains the projection scorer on cfg.train_dataset: projection.dvpj and
// projection.json.
void cmd_proj_train(const RunConfig& cfg);

// Scores cfg.dataset with cfg.projection: scores.csv and, when labeled, the
// report files.
void cmd_proj_eval(const RunConfig& cfg);

// Flower plot of one problem: flower-<problem>.svg or .csv.
void cmd_visualize(const RunConfig& cfg);

struct SynthOptions {
  std::filesystem::path out = "synthetic";
  std::size_t problems = 100;
  std::size_t tokens = 500;
  std::size_t reference_documents = 300;
  std::size_t reference_tokens = 1000;
  std::uint64_t seed = 1;
};

// Writes <out>/reference/*.txt, <out>/problems/ and <out>/truth.txt from the
// synthetic style generator.
void cmd_synth(const SynthOptions& opts);

std::unique_ptr<NwsModel> load_nws(const RunConfig& cfg);

// Parses argv and dispatches; returns the process exit code.
int run(int argc, char** argv);

}  // namespace dvauth::cli
