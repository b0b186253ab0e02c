#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dvauth/corpus.hpp"
#include "dvauth/deviation.hpp"
#include "dvauth/nws.hpp"

namespace dvauth {

struct DenseLayer {
  Eigen::MatrixXf weight;  // out x in
  Eigen::VectorXf bias;

  friend bool operator==(const DenseLayer& a, const DenseLayer& b) {
    return a.weight == b.weight && a.bias == b.bias;
  }
};

// The DV-Projection scorer.
//
//   token_i  = tanh(P_inter [tanh(P_e emb_i); tanh(P_dv dv_i)])
//   doc      = mean_i token_i                        (per side)
//   logit    = P_d2 tanh(P_d1 [doc_known; doc_unknown])
//
// Concatenations put the embedding branch first and the known side first.
struct ProjectionModel {
  int d = 0;
  int h = 0;
  std::uint64_t seed = 0;
  DenseLayer p_e;      // d  -> h
  DenseLayer p_dv;     // d  -> h
  DenseLayer p_inter;  // 2h -> h
  DenseLayer p_d1;     // 2h -> h
  DenseLayer p_d2;     // h  -> 1

  // Weights and biases uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  static ProjectionModel initialize(int d, int h, std::uint64_t seed);
  static ProjectionModel zeros(int d, int h);

  std::size_t parameter_count() const;

  // "DVPJ" checkpoint: version, d, h, then the five (weight, bias) pairs in
  // declaration order, float32 little-endian row-major.
  void save(const std::filesystem::path& path) const;
  static ProjectionModel load(const std::filesystem::path& path);

  friend bool operator==(const ProjectionModel& a, const ProjectionModel& b) {
    return a.d == b.d && a.h == b.h && a.p_e == b.p_e && a.p_dv == b.p_dv &&
           a.p_inter == b.p_inter && a.p_d1 == b.p_d1 && a.p_d2 == b.p_d2;
  }
};

// Token-level inputs for one side: rows are positions.
struct SideInputs {
  Eigen::MatrixXd emb;
  Eigen::MatrixXd dv;

  std::size_t size() const noexcept { return static_cast<std::size_t>(emb.rows()); }
};

// Double-precision working copy of every parameter, flattened for the
// optimizer. Layer views follow ProjectionModel's declaration order.
class ProjectionParams {
 public:
  using MatMap = Eigen::Map<Eigen::MatrixXd>;
  using VecMap = Eigen::Map<Eigen::VectorXd>;
  using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;
  using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

  ProjectionParams(int d, int h);
  explicit ProjectionParams(const ProjectionModel& model);

  int d() const noexcept { return d_; }
  int h() const noexcept { return h_; }
  Eigen::VectorXd& flat() noexcept { return flat_; }
  const Eigen::VectorXd& flat() const noexcept { return flat_; }

  // Layer index 0..4 = P_e, P_dv, P_inter, P_d1, P_d2.
  MatMap weight(int layer);
  VecMap bias(int layer);
  ConstMatMap weight(int layer) const;
  ConstVecMap bias(int layer) const;

  ProjectionModel to_model(std::uint64_t seed) const;

  static constexpr int kLayers = 5;

 private:
  struct Slot {
    Eigen::Index offset;
    Eigen::Index rows;
    Eigen::Index cols;
  };
  void layout();

  int d_;
  int h_;
  Eigen::VectorXd flat_;
  Slot weights_[kLayers];
  Slot biases_[kLayers];
};

double forward(const ProjectionModel& model, const SideInputs& known, const SideInputs& unknown);
double forward(const ProjectionModel& model, const Eigen::MatrixXd& k_emb, const Eigen::MatrixXd& k_dv,
               const Eigen::MatrixXd& u_emb, const Eigen::MatrixXd& u_dv);
double forward(const ProjectionParams& params, const SideInputs& known, const SideInputs& unknown);

double sigmoid(double logit);
// Numerically stable -[y log s(z) + (1-y) log(1 - s(z))].
double bce_with_logit(double logit, bool label);

// BCE loss of one pair; the gradient is accumulated (added) into `grad`.
double loss_and_gradient(const ProjectionParams& params, const SideInputs& known,
                         const SideInputs& unknown, bool label, ProjectionParams& grad);

// Max relative error |g_a - g_n| / max(|g_a|, |g_n|, 1e-8) between the
// analytic gradient and central differences, over every parameter.
double gradient_check(const ProjectionModel& model, const SideInputs& known, const SideInputs& unknown,
                      bool label, double epsilon = 1e-4);

// ---- pairs and training -----------------------------------------------------

struct SegmentFeatures {
  Segment segment;
  SideInputs inputs;
};

struct TrainingPair {
  std::size_t known;    // index into PairSet::segments
  std::size_t unknown;  // index into PairSet::segments
  bool label;
};

struct PairSet {
  std::vector<SegmentFeatures> segments;
  std::vector<TrainingPair> pairs;

  double positive_fraction() const;
};

struct PairOptions {
  std::size_t max_len = kSegmentLength;
  std::size_t min_tail = kMinSegmentTail;
  bool include_known_pairs = true;  // known-known positives
  int jobs = 1;
};

// Segments of one document with their embedding and DV rows. Documents
// shorter than min_tail come back as a single short segment.
std::vector<SegmentFeatures> document_segments(const NwsModel& nws, const Problem& problem,
                                               const Document& doc, const PairOptions& opts = {});

// Per problem: every known x unknown segment pair with the problem label,
// then (optionally) every unordered pair of distinct known segments as a
// positive.
PairSet make_segment_pairs(const Dataset& data, const NwsModel& nws, const PairOptions& opts = {});

struct ProjectionTrainConfig {
  int h = 64;
  int epochs = 20;
  double learning_rate = 1e-3;
  int batch_size = 32;
  std::uint64_t seed = 1;

  void validate() const;
};

struct TrainReport {
  double initial_loss = 0.0;        // mean BCE before the first update
  std::vector<double> epoch_loss;   // mean BCE seen during each epoch
  double positive_fraction = 0.0;
  double train_accuracy = 0.0;      // pairs with (p >= 0.5) == label, after training
  std::size_t pairs = 0;
  std::uint64_t seed = 0;
};

struct ProjectionFit {
  ProjectionModel model;
  TrainReport report;
};

// Mini-batch Adam on mean BCE.
ProjectionFit train_projection(const PairSet& pairs, const ProjectionTrainConfig& cfg);

std::string projection_sidecar_json(const ProjectionModel& model, const ProjectionTrainConfig& cfg,
                                    const TrainReport& report, const PairOptions& pair_opts);

// Mean probability over all known-segment x unknown-segment pairs.
double score_problem(const ProjectionModel& model, const NwsModel& nws, const Problem& problem,
                     const PairOptions& opts = {});

// One ProblemScore per problem with similarity = score_problem; no decisions.
std::vector<ProblemScore> score_projection(const ProjectionModel& model, const NwsModel& nws,
                                           const Dataset& data, const PairOptions& opts = {},
                                           double max_failure_fraction = 0.10);

}  // namespace dvauth
