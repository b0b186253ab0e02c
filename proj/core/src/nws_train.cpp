#include <algorithm>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

#include "dvauth/error.hpp"
#include "dvauth/nws.hpp"
#include "dvauth/rng.hpp"

namespace dvauth {
namespace {

// Cumulative unigram^(3/4) distribution for negative sampling.
class NegativeSampler {
 public:
  explicit NegativeSampler(const std::vector<std::size_t>& counts) {
    cumulative_.resize(counts.size());
    double total = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      total += std::pow(static_cast<double>(counts[i]), 0.75);
      cumulative_[i] = total;
    }
    total_ = total;
  }

  TokenId draw(Rng& rng) const {
    const double u = rng.uniform() * total_;
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    const auto idx = static_cast<std::size_t>(it - cumulative_.begin());
    return static_cast<TokenId>(std::min(idx, cumulative_.size() - 1));
  }

 private:
  std::vector<double> cumulative_;
  double total_ = 0.0;
};

inline float sigmoid(float x) { return 1.0f / (1.0f + std::exp(-x)); }

double decayed_rate(double base, std::size_t done, std::size_t total) {
  const double frac = total == 0 ? 0.0 : static_cast<double>(done) / static_cast<double>(total);
  return base * std::max(1e-4, 1.0 - frac);
}

}  // namespace

EmbeddingFit train_embeddings(std::span<const TokenSeq> corpus, std::size_t vocab_size,
                              const TrainConfig& cfg) {
  cfg.validate();
  if (vocab_size < kReservedTokens) throw ConfigError("vocabulary smaller than reserved set");

  std::vector<std::size_t> counts(vocab_size, 0);
  std::size_t total_tokens = 0;
  for (const auto& seq : corpus) {
    for (TokenId id : seq.ids) {
      if (id >= vocab_size) throw ContractError("token id outside vocabulary in training corpus");
      ++counts[id];
    }
    total_tokens += seq.size();
  }
  if (total_tokens == 0) throw TrainingError("train_embeddings: empty corpus");
  if (total_tokens < 10 * vocab_size) {
    spdlog::warn("train_embeddings: corpus of {} tokens is small for a vocabulary of {}",
                 total_tokens, vocab_size);
  }

  const int d = cfg.d;
  Rng rng(cfg.seed);
  EmbeddingFit fit;
  Eigen::MatrixXf& syn0 = fit.table.vectors;
  syn0.resize(static_cast<Eigen::Index>(vocab_size), d);
  const double bound = 0.5 / d;
  for (Eigen::Index r = 0; r < syn0.rows(); ++r) {
    for (int c = 0; c < d; ++c) syn0(r, c) = static_cast<float>(rng.uniform(-bound, bound));
  }
  Eigen::MatrixXf syn1 = Eigen::MatrixXf::Zero(static_cast<Eigen::Index>(vocab_size), d);

  const NegativeSampler sampler(counts);
  Eigen::VectorXf grad_in(d);
  const std::size_t planned = total_tokens * static_cast<std::size_t>(cfg.epochs);
  std::size_t processed = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double loss = 0.0;
    std::size_t terms = 0;
    for (const auto& seq : corpus) {
      const auto n = static_cast<std::ptrdiff_t>(seq.size());
      for (std::ptrdiff_t i = 0; i < n; ++i, ++processed) {
        const auto alpha = static_cast<float>(decayed_rate(cfg.learning_rate, processed, planned));
        const TokenId target = seq.ids[static_cast<std::size_t>(i)];
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - cfg.m);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + cfg.m);
        for (std::ptrdiff_t j = lo; j <= hi; ++j) {
          if (j == i) continue;
          const TokenId ctx = seq.ids[static_cast<std::size_t>(j)];
          auto in = syn0.row(ctx);
          grad_in.setZero();
          for (int k = 0; k <= cfg.negative_samples; ++k) {
            TokenId out;
            float label;
            if (k == 0) {
              out = target;
              label = 1.0f;
            } else {
              out = sampler.draw(rng);
              if (out == target) continue;
              label = 0.0f;
            }
            auto outv = syn1.row(out);
            const float score = sigmoid(in.dot(outv));
            loss -= std::log(std::max(1e-7f, label > 0.5f ? score : 1.0f - score));
            ++terms;
            const float g = (label - score) * alpha;
            grad_in += g * outv.transpose();
            outv += g * in;
          }
          in += grad_in.transpose();
        }
      }
    }
    fit.epoch_loss.push_back(terms == 0 ? 0.0 : loss / static_cast<double>(terms));
  }
  if (!syn0.allFinite()) throw TrainingError("train_embeddings: non-finite embeddings");
  return fit;
}

PredictorFit train_predictor(std::span<const TokenSeq> corpus, const EmbeddingTable& emb,
                             const TrainConfig& cfg, Mode mode) {
  cfg.validate();
  if (emb.dim() != cfg.d) {
    throw ConfigError("embedding dimension " + std::to_string(emb.dim()) +
                      " does not match config d=" + std::to_string(cfg.d));
  }
  const std::size_t first = mode == Mode::causal ? 1 : 0;
  struct Sample {
    std::uint32_t seq;
    std::uint32_t pos;
  };
  std::vector<Sample> samples;
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    for (std::size_t i = first; i < corpus[s].size(); ++i) {
      samples.push_back({static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(i)});
    }
  }
  if (samples.empty()) throw TrainingError("train_predictor: empty corpus");

  Rng rng(cfg.seed);
  PredictorFit fit;
  fit.predictor = BuiltinPredictor::initialize(mode, cfg.d, cfg.h, cfg.m, rng.next());
  BuiltinPredictor& p = fit.predictor;

  // Features depend only on the frozen embeddings, so compute them once.
  std::vector<Eigen::MatrixXf> features;
  features.reserve(corpus.size());
  for (const auto& seq : corpus) features.push_back(p.context_features(emb, seq.ids));

  const std::size_t planned = samples.size() * static_cast<std::size_t>(cfg.epochs);
  std::size_t processed = 0;
  Eigen::VectorXf hidden(cfg.h);
  Eigen::VectorXf err(cfg.d);
  Eigen::VectorXf grad_hidden(cfg.h);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span<Sample>(samples));
    double sse = 0.0;
    for (const Sample& smp : samples) {
      const auto alpha = static_cast<float>(decayed_rate(cfg.learning_rate, processed++, planned));
      const auto x = features[smp.seq].row(smp.pos).transpose();
      const auto target = emb.vectors.row(corpus[smp.seq].ids[smp.pos]).transpose();
      hidden = (p.w1 * x + p.b1).array().tanh();
      err = p.w2 * hidden + p.b2 - target;
      sse += err.squaredNorm();
      // Gradient of 0.5 * ||err||^2.
      grad_hidden = (p.w2.transpose() * err).array() * (1.0f - hidden.array().square());
      p.w2.noalias() -= alpha * err * hidden.transpose();
      p.b2 -= alpha * err;
      p.w1.noalias() -= alpha * grad_hidden * x.transpose();
      p.b1 -= alpha * grad_hidden;
    }
    const double mse = sse / (static_cast<double>(samples.size()) * cfg.d);
    if (!std::isfinite(mse)) throw TrainingError("train_predictor: loss diverged");
    fit.epoch_loss.push_back(mse);
    spdlog::debug("predictor epoch {} mse {:.6g}", epoch + 1, mse);
  }
  return fit;
}

}  // namespace dvauth
