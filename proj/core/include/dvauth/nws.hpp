#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "dvauth/textmodel.hpp"

namespace dvauth {

// Causal: predict token i from tokens before it. Masked: predict token i from
// both sides with position i hidden.
enum class Mode : std::uint8_t { causal = 0, masked = 1 };

std::string_view mode_name(Mode mode);
Mode parse_mode(std::string_view name);

// Rows are EMB(token); row 0 is the trained UNK vector.
struct EmbeddingTable {
  Eigen::MatrixXf vectors;

  std::size_t vocab_size() const noexcept { return static_cast<std::size_t>(vectors.rows()); }
  int dim() const noexcept { return static_cast<int>(vectors.cols()); }
};

struct TrainConfig {
  int d = 64;
  int h = 128;
  int m = 5;
  int negative_samples = 5;
  int epochs = 5;
  double learning_rate = 0.025;
  std::uint64_t seed = 1;

  void validate() const;
};

// A document prepared for a language model: its lookup key, surface tokens and
// vocabulary ids (ids may be empty for backends that do not need them).
struct EncodedDocument {
  std::string key;
  std::vector<std::string> surface;
  TokenSeq seq;

  std::size_t size() const noexcept { return surface.size(); }
};

// Row i of `actual` is EMB(w_i); row i of `predicted` is LM(w_i). Rows before
// `valid_from` carry no prediction.
struct Prediction {
  Eigen::MatrixXf actual;
  Eigen::MatrixXf predicted;
  std::size_t valid_from = 0;
  Mode mode = Mode::causal;

  std::size_t size() const noexcept { return static_cast<std::size_t>(actual.rows()); }
  std::size_t valid_count() const noexcept { return size() - valid_from; }
};

// The Normal Writing Style model: embeds tokens and predicts what an average
// writer would have put at each position.
class NwsModel {
 public:
  virtual ~NwsModel() = default;

  virtual Mode mode() const = 0;
  virtual int dim() const = 0;
  virtual EncodedDocument encode(std::string key, std::string_view text) const = 0;
  virtual Prediction predict(const EncodedDocument& doc) const = 0;
};

// Checks the length contract for the model's mode, then predicts.
Prediction predict_sequence(const NwsModel& model, const EncodedDocument& doc);

std::size_t min_tokens_for(Mode mode);

// Context-averaging MLP: feature = mean of context embeddings, output
// W2 * tanh(W1 * feature + b1) + b2 lives in embedding space.
struct BuiltinPredictor {
  Mode mode = Mode::causal;
  int m = 5;
  Eigen::MatrixXf w1;  // h x d
  Eigen::VectorXf b1;
  Eigen::MatrixXf w2;  // d x h
  Eigen::VectorXf b2;

  int d() const noexcept { return static_cast<int>(w2.rows()); }
  int h() const noexcept { return static_cast<int>(w1.rows()); }

  static BuiltinPredictor initialize(Mode mode, int d, int h, int m, std::uint64_t seed);

  // n x d mean-of-context features, BOS-padded at the boundaries.
  Eigen::MatrixXf context_features(const EmbeddingTable& emb, std::span<const TokenId> ids) const;
  Eigen::MatrixXf forward(const Eigen::MatrixXf& features) const;

  friend bool operator==(const BuiltinPredictor& a, const BuiltinPredictor& b) {
    return a.mode == b.mode && a.m == b.m && a.w1 == b.w1 && a.b1 == b.b1 && a.w2 == b.w2 &&
           a.b2 == b.b2;
  }
};

struct EmbeddingFit {
  EmbeddingTable table;
  std::vector<double> epoch_loss;
};

struct PredictorFit {
  BuiltinPredictor predictor;
  std::vector<double> epoch_loss;  // mean squared error per epoch
};

// Skip-gram with negative sampling over window cfg.m.
EmbeddingFit train_embeddings(std::span<const TokenSeq> corpus, std::size_t vocab_size,
                              const TrainConfig& cfg);

// Fits the predictor against frozen embeddings.
PredictorFit train_predictor(std::span<const TokenSeq> corpus, const EmbeddingTable& emb,
                             const TrainConfig& cfg, Mode mode);

class BuiltinNws final : public NwsModel {
 public:
  BuiltinNws(Vocabulary vocab, EmbeddingTable emb, BuiltinPredictor predictor);

  Mode mode() const override { return predictor_.mode; }
  int dim() const override { return emb_.dim(); }
  EncodedDocument encode(std::string key, std::string_view text) const override;
  Prediction predict(const EncodedDocument& doc) const override;

  const Vocabulary& vocabulary() const noexcept { return vocab_; }
  const EmbeddingTable& embeddings() const noexcept { return emb_; }
  const BuiltinPredictor& predictor() const noexcept { return predictor_; }

  // Binary checkpoint "DVNW" (embeddings + predictor); vocabulary as JSON.
  void save(const std::filesystem::path& model_path, const std::filesystem::path& vocab_path) const;
  static BuiltinNws load(const std::filesystem::path& model_path,
                         const std::filesystem::path& vocab_path);

 private:
  Vocabulary vocab_;
  EmbeddingTable emb_;
  BuiltinPredictor predictor_;
};

// ---- DVEX interchange -------------------------------------------------------

// One externally computed document. Row 0 of a causal record is zero-filled.
struct DvexRecord {
  Mode mode = Mode::masked;
  Eigen::MatrixXf actual;     // n x d
  Eigen::MatrixXf predicted;  // n x d
  std::string doc_id;
  std::vector<std::string> tokens;
};

std::filesystem::path dvex_sidecar_path(const std::filesystem::path& dvex_path);

// Writes the binary file and its `<file>.tokens.json` sidecar.
void write_dvex(const std::filesystem::path& path, const DvexRecord& record);
DvexRecord read_dvex(const std::filesystem::path& path);

// Replays stored matrices, keyed by the sidecar doc_id.
class ExternalNws final : public NwsModel {
 public:
  explicit ExternalNws(std::vector<DvexRecord> records);

  Mode mode() const override { return mode_; }
  int dim() const override { return dim_; }
  EncodedDocument encode(std::string key, std::string_view text) const override;
  Prediction predict(const EncodedDocument& doc) const override;

  std::size_t size() const noexcept { return records_.size(); }
  bool contains(std::string_view doc_id) const;

 private:
  std::map<std::string, DvexRecord, std::less<>> records_;
  Mode mode_ = Mode::masked;
  int dim_ = 0;
};

ExternalNws load_external(const std::filesystem::path& path);
// Loads every *.dvex file in `dir`.
ExternalNws load_external_dir(const std::filesystem::path& dir);

}  // namespace dvauth
