#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "dvauth/deviation.hpp"
#include "dvauth/eval.hpp"
#include "dvauth/nws.hpp"
#include "dvauth/projection.hpp"

namespace dvauth::cli {

enum class Backend { builtin, external };

// Everything one command invocation needs. Loaded from a JSON file, then
// patched by command-line flags.
struct RunConfig {
  // Inputs.
  std::optional<std::filesystem::path> corpus;             // nws-train reference texts
  std::optional<std::filesystem::path> dataset;            // problems to score
  std::optional<std::filesystem::path> truth;
  std::optional<std::filesystem::path> train_dataset;      // proj-train
  std::optional<std::filesystem::path> train_truth;
  std::optional<std::filesystem::path> calibration;        // train-median source
  std::optional<std::filesystem::path> vocab;
  std::optional<std::filesystem::path> model;              // DVNW checkpoint
  std::optional<std::filesystem::path> external_dir;       // *.dvex files
  std::optional<std::filesystem::path> projection;         // DVPJ checkpoint

  Backend backend = Backend::builtin;
  Mode mode = Mode::causal;
  bool mode_explicit = false;
  ThresholdScheme threshold;
  double margin = 0.0;
  MetricScheme metric = MetricScheme::pan14plus;
  int jobs = 1;
  std::filesystem::path out = "out";

  std::uint64_t nws_seed = 1;
  std::uint64_t projection_seed = 1;

  TrainConfig nws;
  int min_count = 1;
  ProjectionTrainConfig proj;
  PairOptions pairs;

  // visualize
  std::optional<std::string> problem;
  std::string format = "svg";
};

RunConfig config_from_json(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

// Throws ConfigError naming the missing key or path.
void require_path(const std::optional<std::filesystem::path>& path, const char* key);
void require_file(const std::optional<std::filesystem::path>& path, const char* key);
void require_dir(const std::optional<std::filesystem::path>& path, const char* key);

}  // namespace dvauth::cli
