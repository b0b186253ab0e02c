#include "run_config.hpp"

#include <set>

#include <nlohmann/json.hpp>

#include "dvauth/binary_io.hpp"
#include "dvauth/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dvauth::cli {
namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown config key '" + where + key + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (auto it = obj.find(key); it != obj.end()) out = it->get<T>();
}

void read_path(const json& obj, const char* key, std::optional<fs::path>& out) {
  if (auto it = obj.find(key); it != obj.end()) out = fs::path(it->get<std::string>());
}

Backend parse_backend(const std::string& name) {
  if (name == "builtin") return Backend::builtin;
  if (name == "external") return Backend::external;
  throw ConfigError("unknown backend '" + name + "' (expected builtin|external)");
}

}  // namespace

RunConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j,
                 {"corpus", "dataset", "truth", "train_dataset", "train_truth", "calibration", "vocab",
                  "model", "external_dir", "projection", "backend", "mode", "threshold", "margin",
                  "metric", "jobs", "out", "seeds", "nws", "projection_train", "problem", "format"},
                 "");
  RunConfig c;
  try {
    read_path(j, "corpus", c.corpus);
    read_path(j, "dataset", c.dataset);
    read_path(j, "truth", c.truth);
    read_path(j, "train_dataset", c.train_dataset);
    read_path(j, "train_truth", c.train_truth);
    read_path(j, "calibration", c.calibration);
    read_path(j, "vocab", c.vocab);
    read_path(j, "model", c.model);
    read_path(j, "external_dir", c.external_dir);
    read_path(j, "projection", c.projection);
    if (j.contains("backend")) c.backend = parse_backend(j["backend"].get<std::string>());
    if (j.contains("mode")) {
      c.mode = parse_mode(j["mode"].get<std::string>());
      c.mode_explicit = true;
    }
    if (j.contains("threshold")) c.threshold = ThresholdScheme::parse(j["threshold"].get<std::string>());
    read(j, "margin", c.margin);
    if (j.contains("metric")) c.metric = parse_metric_scheme(j["metric"].get<std::string>());
    read(j, "jobs", c.jobs);
    if (j.contains("out")) c.out = j["out"].get<std::string>();
    if (j.contains("problem")) c.problem = j["problem"].get<std::string>();
    read(j, "format", c.format);

    if (auto it = j.find("seeds"); it != j.end()) {
      reject_unknown(*it, {"nws", "projection"}, "seeds.");
      read(*it, "nws", c.nws_seed);
      read(*it, "projection", c.projection_seed);
    }
    if (auto it = j.find("nws"); it != j.end()) {
      reject_unknown(*it, {"d", "h", "m", "negative_samples", "epochs", "learning_rate", "min_count"}, "nws.");
      read(*it, "d", c.nws.d);
      read(*it, "h", c.nws.h);
      read(*it, "m", c.nws.m);
      read(*it, "negative_samples", c.nws.negative_samples);
      read(*it, "epochs", c.nws.epochs);
      read(*it, "learning_rate", c.nws.learning_rate);
      read(*it, "min_count", c.min_count);
    }
    if (auto it = j.find("projection_train"); it != j.end()) {
      reject_unknown(*it,
                     {"h", "epochs", "learning_rate", "batch_size", "segment_length", "min_tail", "known_pairs"},
                     "projection_train.");
      read(*it, "h", c.proj.h);
      read(*it, "epochs", c.proj.epochs);
      read(*it, "learning_rate", c.proj.learning_rate);
      read(*it, "batch_size", c.proj.batch_size);
      read(*it, "segment_length", c.pairs.max_len);
      read(*it, "min_tail", c.pairs.min_tail);
      read(*it, "known_pairs", c.pairs.include_known_pairs);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  return c;
}

RunConfig load_config(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw ConfigError("config file not found: " + path.string());
  RunConfig c = config_from_json(io::read_file_text(path));
  // Relative paths are taken relative to the config file.
  const fs::path base = path.parent_path();
  for (auto* p : {&c.corpus, &c.dataset, &c.truth, &c.train_dataset, &c.train_truth, &c.calibration,
                  &c.vocab, &c.model, &c.external_dir, &c.projection}) {
    if (*p && p->value().is_relative()) *p = base / p->value();
  }
  if (c.out.is_relative()) c.out = base / c.out;
  return c;
}

void require_path(const std::optional<fs::path>& path, const char* key) {
  if (!path) throw ConfigError(std::string("missing required setting '") + key + "'");
}

void require_file(const std::optional<fs::path>& path, const char* key) {
  require_path(path, key);
  if (!fs::is_regular_file(*path)) {
    throw ConfigError(std::string(key) + ": file not found: " + path->string());
  }
}

void require_dir(const std::optional<fs::path>& path, const char* key) {
  require_path(path, key);
  if (!fs::is_directory(*path)) {
    throw ConfigError(std::string(key) + ": directory not found: " + path->string());
  }
}

}  // namespace dvauth::cli
