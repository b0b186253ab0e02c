#include "dvauth/nws.hpp"

#include <cmath>

#include "dvauth/binary_io.hpp"
#include "dvauth/error.hpp"
#include "dvauth/rng.hpp"

namespace dvauth {
namespace {

constexpr std::string_view kNwsMagic = "DVNW";
constexpr std::uint32_t kNwsVersion = 1;

Eigen::MatrixXf uniform_matrix(Rng& rng, int rows, int cols, double bound) {
  Eigen::MatrixXf m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = static_cast<float>(rng.uniform(-bound, bound));
  }
  return m;
}

}  // namespace

std::string_view mode_name(Mode mode) { return mode == Mode::causal ? "causal" : "masked"; }

Mode parse_mode(std::string_view name) {
  if (name == "causal") return Mode::causal;
  if (name == "masked") return Mode::masked;
  throw ConfigError("unknown mode '" + std::string(name) + "' (expected causal|masked)");
}

void TrainConfig::validate() const {
  if (d < 2) throw ConfigError("embedding dimension d must be >= 2");
  if (h < 1 || m < 1 || negative_samples < 1) {
    throw ConfigError("h, m and negative_samples must be positive");
  }
  if (epochs < 0) throw ConfigError("epochs must be non-negative");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
}

std::size_t min_tokens_for(Mode mode) { return mode == Mode::causal ? 2 : 1; }

Prediction predict_sequence(const NwsModel& model, const EncodedDocument& doc) {
  const auto need = min_tokens_for(model.mode());
  if (doc.size() < need) {
    throw ContractError(std::string(mode_name(model.mode())) + " mode needs at least " +
                        std::to_string(need) + " tokens, document '" + doc.key + "' has " +
                        std::to_string(doc.size()));
  }
  Prediction p = model.predict(doc);
  if (p.actual.cols() != model.dim() || p.predicted.cols() != model.dim() ||
      p.actual.rows() != p.predicted.rows()) {
    throw ContractError("model returned inconsistent prediction shapes for '" + doc.key + "'");
  }
  return p;
}

BuiltinPredictor BuiltinPredictor::initialize(Mode mode, int d, int h, int m, std::uint64_t seed) {
  Rng rng(seed);
  BuiltinPredictor p;
  p.mode = mode;
  p.m = m;
  p.w1 = uniform_matrix(rng, h, d, 1.0 / std::sqrt(static_cast<double>(d)));
  p.b1 = Eigen::VectorXf::Zero(h);
  p.w2 = uniform_matrix(rng, d, h, 1.0 / std::sqrt(static_cast<double>(h)));
  p.b2 = Eigen::VectorXf::Zero(d);
  return p;
}

Eigen::MatrixXf BuiltinPredictor::context_features(const EmbeddingTable& emb,
                                                   std::span<const TokenId> ids) const {
  const auto n = static_cast<std::ptrdiff_t>(ids.size());
  const int width = mode == Mode::causal ? m : 2 * m;
  Eigen::MatrixXf features = Eigen::MatrixXf::Zero(n, emb.dim());
  const auto row_of = [&](std::ptrdiff_t pos) {
    const TokenId id = (pos < 0 || pos >= n) ? kBosId : ids[static_cast<std::size_t>(pos)];
    return emb.vectors.row(id);
  };
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    for (int k = 1; k <= m; ++k) features.row(i) += row_of(i - k);
    if (mode == Mode::masked) {
      for (int k = 1; k <= m; ++k) features.row(i) += row_of(i + k);
    }
  }
  features /= static_cast<float>(width);
  return features;
}

Eigen::MatrixXf BuiltinPredictor::forward(const Eigen::MatrixXf& features) const {
  Eigen::MatrixXf hidden = (features * w1.transpose()).rowwise() + b1.transpose();
  hidden = hidden.array().tanh();
  Eigen::MatrixXf out = (hidden * w2.transpose()).rowwise() + b2.transpose();
  return out;
}

BuiltinNws::BuiltinNws(Vocabulary vocab, EmbeddingTable emb, BuiltinPredictor predictor)
    : vocab_(std::move(vocab)), emb_(std::move(emb)), predictor_(std::move(predictor)) {
  if (emb_.vocab_size() != vocab_.size()) {
    throw ConfigError("embedding table has " + std::to_string(emb_.vocab_size()) +
                      " rows but vocabulary has " + std::to_string(vocab_.size()));
  }
  if (predictor_.d() != emb_.dim() || predictor_.w1.cols() != emb_.dim()) {
    throw ConfigError("predictor dimension does not match embedding dimension");
  }
}

EncodedDocument BuiltinNws::encode(std::string key, std::string_view text) const {
  EncodedDocument doc;
  doc.key = std::move(key);
  doc.surface = tokenize(text);
  doc.seq = dvauth::encode(doc.surface, vocab_);
  return doc;
}

Prediction BuiltinNws::predict(const EncodedDocument& doc) const {
  Prediction p;
  p.mode = predictor_.mode;
  p.valid_from = predictor_.mode == Mode::causal ? 1 : 0;
  const auto n = static_cast<Eigen::Index>(doc.seq.size());
  p.actual.resize(n, emb_.dim());
  for (Eigen::Index i = 0; i < n; ++i) {
    const TokenId id = doc.seq.ids[static_cast<std::size_t>(i)];
    if (id >= emb_.vocab_size()) {
      throw ContractError("token id " + std::to_string(id) + " outside vocabulary");
    }
    p.actual.row(i) = emb_.vectors.row(id);
  }
  p.predicted = predictor_.forward(predictor_.context_features(emb_, doc.seq.ids));
  return p;
}

void BuiltinNws::save(const std::filesystem::path& model_path,
                      const std::filesystem::path& vocab_path) const {
  io::ByteWriter w;
  w.magic(kNwsMagic);
  w.u32(kNwsVersion);
  w.u8(static_cast<std::uint8_t>(predictor_.mode));
  w.u32(static_cast<std::uint32_t>(emb_.vocab_size()));
  w.u32(static_cast<std::uint32_t>(emb_.dim()));
  w.u32(static_cast<std::uint32_t>(predictor_.h()));
  w.u32(static_cast<std::uint32_t>(predictor_.m));
  w.matrix(emb_.vectors);
  w.matrix(predictor_.w1);
  w.vector(predictor_.b1);
  w.matrix(predictor_.w2);
  w.vector(predictor_.b2);
  w.write_file(model_path);
  vocab_.save(vocab_path);
}

BuiltinNws BuiltinNws::load(const std::filesystem::path& model_path,
                            const std::filesystem::path& vocab_path) {
  auto r = io::ByteReader::from_file(model_path);
  r.expect_magic(kNwsMagic);
  if (const auto v = r.u32(); v != kNwsVersion) {
    throw FormatError(model_path.string() + ": unsupported version " + std::to_string(v));
  }
  const auto mode_byte = r.u8();
  if (mode_byte > 1) throw FormatError(model_path.string() + ": bad mode byte");
  const auto vocab_size = r.u32();
  const auto d = r.u32();
  const auto h = r.u32();
  const auto m = r.u32();
  EmbeddingTable emb{r.matrix(vocab_size, d)};
  BuiltinPredictor p;
  p.mode = static_cast<Mode>(mode_byte);
  p.m = static_cast<int>(m);
  p.w1 = r.matrix(h, d);
  p.b1 = r.vector(h);
  p.w2 = r.matrix(d, h);
  p.b2 = r.vector(d);
  r.expect_end();
  return BuiltinNws(Vocabulary::load(vocab_path), std::move(emb), std::move(p));
}

}  // namespace dvauth
