#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "dvauth/corpus.hpp"
#include "dvauth/nws.hpp"

namespace dvauth {

// Deviation vectors LM(w_i) - EMB(w_i), one row per usable position.
struct DvSequence {
  Eigen::MatrixXd vectors;
  std::string source_doc_id;
  Mode mode = Mode::causal;

  std::size_t size() const noexcept { return static_cast<std::size_t>(vectors.rows()); }
  int dim() const noexcept { return static_cast<int>(vectors.cols()); }
};

struct Adv {
  Eigen::VectorXd vector;
  std::size_t token_count = 0;
};

DvSequence dvs_from_prediction(const Prediction& prediction, std::string source_doc_id);
DvSequence compute_dvs(const NwsModel& model, const EncodedDocument& doc);

// Token-weighted mean over every DV of every input sequence.
Adv average_dv(std::span<const DvSequence> dvs);
Adv average_dv(const DvSequence& dvs);

// Cosine similarity of two averaged DVs, clamped to [-1, 1].
double dv_similarity(const Adv& a, const Adv& b);
double dv_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

double median_threshold(std::span<const double> scores);

enum class ThresholdKind { test_median, train_median, fixed };

// Where the decision threshold comes from. For train_median, `value` holds
// the median computed on a calibration dataset.
struct ThresholdScheme {
  ThresholdKind kind = ThresholdKind::test_median;
  double value = 0.0;

  // "test-median", "train-median" or "fixed:<value>".
  static ThresholdScheme parse(std::string_view text);
  std::string to_string() const;
};

struct ProblemScore {
  std::string problem_id;
  double similarity = 0.0;
  std::optional<bool> decision;  // true = same author; empty = unanswered
  std::optional<bool> label;
  std::optional<std::string> failure;
};

// Median over the problems that scored successfully.
double resolve_threshold(const ThresholdScheme& scheme, std::span<const ProblemScore> scores);

// same-author iff similarity >= t + margin, different iff <= t - margin,
// unanswered in between. Failed problems stay unanswered.
void apply_threshold(std::span<ProblemScore> scores, double threshold, double margin);

struct ProblemEvidence {
  std::string problem_id;
  std::optional<bool> label;
  std::vector<DvSequence> known;
  DvSequence unknown;
};

struct VerifyOptions {
  ThresholdScheme threshold;
  double margin = 0.0;
  int jobs = 1;
  double max_failure_fraction = 0.10;
};

ProblemEvidence gather_evidence(const NwsModel& model, const Problem& problem);

// Similarities only, no decisions. Per-problem failures are recorded; throws
// when more than opts.max_failure_fraction of problems fail.
std::vector<ProblemScore> score_unsupervised(const NwsModel& model, const Dataset& data,
                                             const VerifyOptions& opts = {});

std::vector<ProblemScore> verify_from_evidence(std::span<const ProblemEvidence> evidence,
                                               const VerifyOptions& opts = {});

std::vector<ProblemScore> verify_unsupervised(const NwsModel& model, const Dataset& data,
                                              const VerifyOptions& opts = {});

// problem_id,similarity,decision,label with decision in {Y, N, -}.
std::string scores_csv(std::span<const ProblemScore> scores);
void write_scores_csv(const std::filesystem::path& path, std::span<const ProblemScore> scores);

}  // namespace dvauth
