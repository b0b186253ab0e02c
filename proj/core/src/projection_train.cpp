#include <algorithm>
#include <cmath>
#include <map>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "dvauth/error.hpp"
#include "dvauth/parallel.hpp"
#include "dvauth/projection.hpp"
#include "dvauth/rng.hpp"
#include "projection_detail.hpp"

namespace dvauth {
namespace {

using detail::head_backward;
using detail::head_logit;
using detail::segment_backward;
using detail::segment_forward;
using detail::SegmentPass;

std::vector<Eigen::VectorXd> all_doc_features(const ProjectionParams& p, const PairSet& set) {
  std::vector<Eigen::VectorXd> docs(set.segments.size());
  for (std::size_t i = 0; i < set.segments.size(); ++i) {
    docs[i] = segment_forward(p, set.segments[i].inputs).doc;
  }
  return docs;
}

class Adam {
 public:
  Adam(Eigen::Index n, double lr) : lr_(lr), m_(Eigen::VectorXd::Zero(n)), v_(Eigen::VectorXd::Zero(n)) {}

  void step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad) {
    ++t_;
    m_ = kBeta1 * m_ + (1.0 - kBeta1) * grad;
    v_ = kBeta2 * v_ + (1.0 - kBeta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    theta.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + kEps);
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  double lr_;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  long t_ = 0;
};

}  // namespace

double PairSet::positive_fraction() const {
  if (pairs.empty()) return 0.0;
  const auto pos = std::count_if(pairs.begin(), pairs.end(), [](const TrainingPair& p) { return p.label; });
  return static_cast<double>(pos) / static_cast<double>(pairs.size());
}

std::vector<SegmentFeatures> document_segments(const NwsModel& nws, const Problem& problem,
                                               const Document& doc, const PairOptions& opts) {
  const auto encoded = nws.encode(Problem::document_key(problem.id, doc.id), doc.text);
  const Prediction pred = predict_sequence(nws, encoded);
  auto ranges = segment_ranges(pred.size(), opts.max_len, opts.min_tail);
  if (ranges.empty()) {
    spdlog::warn("{}: {} tokens is shorter than min_tail={}, using a single short segment", encoded.key,
                 pred.size(), opts.min_tail);
    ranges.push_back({0, pred.size()});
  }
  std::vector<SegmentFeatures> out;
  for (const auto& r : ranges) {
    const std::size_t from = std::max(r.begin, pred.valid_from);
    if (from >= r.end) continue;
    const auto rows = static_cast<Eigen::Index>(r.end - from);
    const auto start = static_cast<Eigen::Index>(from);
    SegmentFeatures f;
    f.segment.problem_id = problem.id;
    f.segment.source_doc_id = doc.id;
    f.segment.offset = r.begin;
    f.segment.role = doc.role;
    if (!encoded.seq.empty()) {
      f.segment.tokens.assign(encoded.seq.ids.begin() + static_cast<std::ptrdiff_t>(r.begin),
                              encoded.seq.ids.begin() + static_cast<std::ptrdiff_t>(r.end));
    }
    f.inputs.emb = pred.actual.middleRows(start, rows).cast<double>();
    f.inputs.dv = pred.predicted.middleRows(start, rows).cast<double>() - f.inputs.emb;
    out.push_back(std::move(f));
  }
  return out;
}

PairSet make_segment_pairs(const Dataset& data, const NwsModel& nws, const PairOptions& opts) {
  if (!data.labeled()) throw ContractError("make_segment_pairs: dataset must be labeled");

  struct ProblemSegments {
    std::vector<SegmentFeatures> known;
    std::vector<SegmentFeatures> unknown;
  };
  std::vector<ProblemSegments> per_problem(data.problems.size());
  std::vector<std::string> errors(data.problems.size());
  parallel_for(data.problems.size(), opts.jobs, [&](std::size_t i) {
    const Problem& p = data.problems[i];
    try {
      for (const auto& doc : p.known) {
        for (auto& s : document_segments(nws, p, doc, opts)) per_problem[i].known.push_back(std::move(s));
      }
      per_problem[i].unknown = document_segments(nws, p, p.unknown, opts);
    } catch (const std::exception& e) {
      errors[i] = p.id + ": " + e.what();
    }
  });
  for (const auto& e : errors) {
    if (!e.empty()) throw Error("make_segment_pairs: " + e);
  }

  PairSet set;
  for (std::size_t i = 0; i < data.problems.size(); ++i) {
    const bool label = *data.problems[i].label;
    auto& ps = per_problem[i];
    const std::size_t known_base = set.segments.size();
    for (auto& s : ps.known) set.segments.push_back(std::move(s));
    const std::size_t unknown_base = set.segments.size();
    for (auto& s : ps.unknown) set.segments.push_back(std::move(s));
    const std::size_t nk = unknown_base - known_base;
    const std::size_t nu = set.segments.size() - unknown_base;
    for (std::size_t a = 0; a < nk; ++a) {
      for (std::size_t b = 0; b < nu; ++b) set.pairs.push_back({known_base + a, unknown_base + b, label});
    }
    if (opts.include_known_pairs) {
      for (std::size_t a = 0; a < nk; ++a) {
        for (std::size_t b = a + 1; b < nk; ++b) set.pairs.push_back({known_base + a, known_base + b, true});
      }
    }
  }
  return set;
}

void ProjectionTrainConfig::validate() const {
  if (h < 1 || batch_size < 1) throw ConfigError("projection h and batch_size must be positive");
  if (epochs < 0) throw ConfigError("projection epochs must be non-negative");
  if (!(learning_rate > 0.0)) throw ConfigError("projection learning_rate must be positive");
}

ProjectionFit train_projection(const PairSet& set, const ProjectionTrainConfig& cfg) {
  cfg.validate();
  if (set.pairs.empty()) throw ContractError("train_projection: no training pairs");
  const int d = static_cast<int>(set.segments.front().inputs.emb.cols());

  TrainReport report;
  report.pairs = set.pairs.size();
  report.seed = cfg.seed;
  report.positive_fraction = set.positive_fraction();
  if (report.positive_fraction == 0.0 || report.positive_fraction == 1.0) {
    spdlog::warn("train_projection: all {} pairs share one label", set.pairs.size());
  }

  Rng rng(cfg.seed);
  const std::uint64_t init_seed = rng.next();
  ProjectionParams params(ProjectionModel::initialize(d, cfg.h, init_seed));
  Adam adam(params.flat().size(), cfg.learning_rate);

  {
    const auto docs = all_doc_features(params, set);
    double total = 0.0;
    for (const auto& pr : set.pairs) total += bce_with_logit(head_logit(params, docs[pr.known], docs[pr.unknown]), pr.label);
    report.initial_loss = total / static_cast<double>(set.pairs.size());
  }

  std::vector<std::size_t> order(set.pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  const int h = cfg.h;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const double scale = 1.0 / static_cast<double>(end - start);

      // Unique segments of this batch, in first-use order.
      std::map<std::size_t, std::size_t> slot_of;
      std::vector<std::size_t> used;
      for (std::size_t k = start; k < end; ++k) {
        for (std::size_t seg : {set.pairs[order[k]].known, set.pairs[order[k]].unknown}) {
          if (slot_of.emplace(seg, used.size()).second) used.push_back(seg);
        }
      }
      std::vector<SegmentPass> passes;
      passes.reserve(used.size());
      for (std::size_t seg : used) passes.push_back(segment_forward(params, set.segments[seg].inputs));
      std::vector<Eigen::VectorXd> grad_doc(used.size(), Eigen::VectorXd::Zero(h));

      ProjectionParams grad(d, h);
      double batch_loss = 0.0;
      Eigen::VectorXd joint;
      Eigen::VectorXd z;
      for (std::size_t k = start; k < end; ++k) {
        const TrainingPair& pr = set.pairs[order[k]];
        const std::size_t sk = slot_of[pr.known];
        const std::size_t su = slot_of[pr.unknown];
        const double logit = head_logit(params, passes[sk].doc, passes[su].doc, &joint, &z);
        batch_loss += bce_with_logit(logit, pr.label);
        const double g = (sigmoid(logit) - (pr.label ? 1.0 : 0.0)) * scale;
        const Eigen::VectorXd grad_joint = head_backward(params, joint, z, g, grad);
        grad_doc[sk] += grad_joint.head(h);
        grad_doc[su] += grad_joint.tail(h);
      }
      if (!std::isfinite(batch_loss)) {
        throw TrainingError("train_projection: non-finite loss at epoch " + std::to_string(epoch + 1) +
                            ", batch starting at pair " + std::to_string(start) +
                            " (learning_rate=" + std::to_string(cfg.learning_rate) + ")");
      }
      for (std::size_t s = 0; s < used.size(); ++s) {
        segment_backward(params, set.segments[used[s]].inputs, passes[s], grad_doc[s], grad);
      }
      adam.step(params.flat(), grad.flat());
      epoch_loss += batch_loss;
    }
    report.epoch_loss.push_back(epoch_loss / static_cast<double>(set.pairs.size()));
    spdlog::debug("projection epoch {} loss {:.6f}", epoch + 1, report.epoch_loss.back());
  }

  ProjectionFit fit{params.to_model(init_seed), report};
  const ProjectionParams final_params(fit.model);
  const auto docs = all_doc_features(final_params, set);
  std::size_t correct = 0;
  for (const auto& pr : set.pairs) {
    const bool said_same = sigmoid(head_logit(final_params, docs[pr.known], docs[pr.unknown])) >= 0.5;
    if (said_same == pr.label) ++correct;
  }
  fit.report.train_accuracy = static_cast<double>(correct) / static_cast<double>(set.pairs.size());
  return fit;
}

std::string projection_sidecar_json(const ProjectionModel& model, const ProjectionTrainConfig& cfg,
                                    const TrainReport& report, const PairOptions& pair_opts) {
  nlohmann::json j;
  j["format"] = "DVPJ";
  j["version"] = 1;
  j["d"] = model.d;
  j["h"] = model.h;
  j["concat_order"] = {{"p_inter", {"embedding", "dv"}}, {"p_d1", {"known", "unknown"}}};
  j["config"] = {{"h", cfg.h},
                 {"epochs", cfg.epochs},
                 {"learning_rate", cfg.learning_rate},
                 {"batch_size", cfg.batch_size},
                 {"seed", cfg.seed}};
  j["pairs"] = {{"max_len", pair_opts.max_len},
                {"min_tail", pair_opts.min_tail},
                {"include_known_pairs", pair_opts.include_known_pairs}};
  j["training"] = {{"initial_loss", report.initial_loss},
                   {"epoch_loss", report.epoch_loss},
                   {"positive_fraction", report.positive_fraction},
                   {"train_accuracy", report.train_accuracy},
                   {"pairs", report.pairs},
                   {"init_seed", model.seed}};
  return j.dump(2) + "\n";
}

double score_problem(const ProjectionModel& model, const NwsModel& nws, const Problem& problem,
                     const PairOptions& opts) {
  if (nws.dim() != model.d) {
    throw ContractError("projection model d=" + std::to_string(model.d) + " but NWS model d=" +
                        std::to_string(nws.dim()));
  }
  const ProjectionParams params(model);
  std::vector<Eigen::VectorXd> known_docs;
  for (const auto& doc : problem.known) {
    for (const auto& s : document_segments(nws, problem, doc, opts)) {
      known_docs.push_back(segment_forward(params, s.inputs).doc);
    }
  }
  std::vector<Eigen::VectorXd> unknown_docs;
  for (const auto& s : document_segments(nws, problem, problem.unknown, opts)) {
    unknown_docs.push_back(segment_forward(params, s.inputs).doc);
  }
  if (known_docs.empty() || unknown_docs.empty()) {
    throw EmptyEvidenceError(problem.id + ": no usable segments");
  }
  double total = 0.0;
  for (const auto& k : known_docs) {
    for (const auto& u : unknown_docs) total += sigmoid(head_logit(params, k, u));
  }
  return total / static_cast<double>(known_docs.size() * unknown_docs.size());
}

std::vector<ProblemScore> score_projection(const ProjectionModel& model, const NwsModel& nws,
                                           const Dataset& data, const PairOptions& opts,
                                           double max_failure_fraction) {
  std::vector<ProblemScore> scores(data.problems.size());
  parallel_for(data.problems.size(), opts.jobs, [&](std::size_t i) {
    const Problem& p = data.problems[i];
    ProblemScore& s = scores[i];
    s.problem_id = p.id;
    s.label = p.label;
    try {
      s.similarity = score_problem(model, nws, p, opts);
    } catch (const std::exception& e) {
      s.similarity = std::nan("");
      s.failure = e.what();
    }
  });
  std::size_t failed = 0;
  for (const auto& s : scores) failed += s.failure ? 1 : 0;
  if (static_cast<double>(failed) > max_failure_fraction * static_cast<double>(scores.size())) {
    throw Error(std::to_string(failed) + " of " + std::to_string(scores.size()) + " problems failed to score");
  }
  return scores;
}

}  // namespace dvauth
