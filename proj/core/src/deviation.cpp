#include "dvauth/deviation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>

#include "dvauth/binary_io.hpp"
#include "dvauth/error.hpp"
#include "dvauth/parallel.hpp"

namespace dvauth {

DvSequence dvs_from_prediction(const Prediction& prediction, std::string source_doc_id) {
  const auto from = static_cast<Eigen::Index>(prediction.valid_from);
  const auto count = static_cast<Eigen::Index>(prediction.valid_count());
  DvSequence out;
  out.source_doc_id = std::move(source_doc_id);
  out.mode = prediction.mode;
  out.vectors = prediction.predicted.middleRows(from, count).cast<double>() -
                prediction.actual.middleRows(from, count).cast<double>();
  if (!out.vectors.allFinite()) {
    throw ContractError("non-finite deviation vectors for '" + out.source_doc_id + "'");
  }
  return out;
}

DvSequence compute_dvs(const NwsModel& model, const EncodedDocument& doc) {
  return dvs_from_prediction(predict_sequence(model, doc), doc.key);
}

Adv average_dv(std::span<const DvSequence> dvs) {
  Adv adv;
  for (const auto& seq : dvs) {
    if (seq.size() == 0) continue;
    if (adv.token_count == 0) {
      adv.vector = Eigen::VectorXd::Zero(seq.dim());
    } else if (seq.dim() != adv.vector.size()) {
      throw ContractError("average_dv: DV dimensions differ");
    }
    adv.vector += seq.vectors.colwise().sum().transpose();
    adv.token_count += seq.size();
  }
  if (adv.token_count == 0) throw EmptyEvidenceError("average_dv: no deviation vectors");
  adv.vector /= static_cast<double>(adv.token_count);
  return adv;
}

Adv average_dv(const DvSequence& dvs) { return average_dv(std::span<const DvSequence>(&dvs, 1)); }

double dv_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw ContractError("dv_similarity: dimension mismatch");
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) {
    using Side = UndefinedSimilarityError::Side;
    const Side side = (na == 0.0 && nb == 0.0) ? Side::both : (na == 0.0 ? Side::first : Side::second);
    throw UndefinedSimilarityError(side, "dv_similarity: zero-norm averaged DV");
  }
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

double dv_similarity(const Adv& a, const Adv& b) { return dv_similarity(a.vector, b.vector); }

double median_threshold(std::span<const double> scores) {
  if (scores.empty()) throw ContractError("median_threshold: empty score list");
  std::vector<double> v(scores.begin(), scores.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

ThresholdScheme ThresholdScheme::parse(std::string_view text) {
  if (text == "test-median") return {ThresholdKind::test_median, 0.0};
  if (text == "train-median") return {ThresholdKind::train_median, 0.0};
  if (text.starts_with("fixed:")) {
    const auto num = text.substr(6);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), value);
    if (ec != std::errc() || ptr != num.data() + num.size() || num.empty()) {
      throw ConfigError("bad fixed threshold '" + std::string(text) + "'");
    }
    return {ThresholdKind::fixed, value};
  }
  throw ConfigError("unknown threshold scheme '" + std::string(text) +
                    "' (expected test-median|train-median|fixed:<value>)");
}

std::string ThresholdScheme::to_string() const {
  switch (kind) {
    case ThresholdKind::test_median:
      return "test-median";
    case ThresholdKind::train_median:
      return "train-median";
    case ThresholdKind::fixed:
      break;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "fixed:%.17g", value);
  return buf;
}

double resolve_threshold(const ThresholdScheme& scheme, std::span<const ProblemScore> scores) {
  if (scheme.kind != ThresholdKind::test_median) return scheme.value;
  std::vector<double> ok;
  for (const auto& s : scores) {
    if (!s.failure) ok.push_back(s.similarity);
  }
  return median_threshold(ok);
}

void apply_threshold(std::span<ProblemScore> scores, double threshold, double margin) {
  for (auto& s : scores) {
    s.decision.reset();
    if (s.failure) continue;
    if (s.similarity >= threshold + margin) {
      s.decision = true;
    } else if (s.similarity <= threshold - margin) {
      s.decision = false;
    }
  }
}

ProblemEvidence gather_evidence(const NwsModel& model, const Problem& problem) {
  ProblemEvidence ev;
  ev.problem_id = problem.id;
  ev.label = problem.label;
  for (const auto& doc : problem.known) {
    ev.known.push_back(compute_dvs(model, model.encode(Problem::document_key(problem.id, doc.id), doc.text)));
  }
  ev.unknown = compute_dvs(
      model, model.encode(Problem::document_key(problem.id, problem.unknown.id), problem.unknown.text));
  return ev;
}

namespace {

ProblemScore score_evidence(const ProblemEvidence& ev) {
  ProblemScore s;
  s.problem_id = ev.problem_id;
  s.label = ev.label;
  s.similarity = dv_similarity(average_dv(ev.known), average_dv(ev.unknown));
  return s;
}

void check_failures(std::span<const ProblemScore> scores, double max_fraction) {
  std::size_t failed = 0;
  std::string first;
  for (const auto& s : scores) {
    if (s.failure) {
      if (failed++ == 0) first = s.problem_id + ": " + *s.failure;
    }
  }
  if (static_cast<double>(failed) > max_fraction * static_cast<double>(scores.size())) {
    throw Error(std::to_string(failed) + " of " + std::to_string(scores.size()) +
                " problems failed; first: " + first);
  }
}

ProblemScore failed_score(const std::string& id, std::optional<bool> label, const char* what) {
  ProblemScore s;
  s.problem_id = id;
  s.label = label;
  s.similarity = std::numeric_limits<double>::quiet_NaN();
  s.failure = what;
  return s;
}

}  // namespace

std::vector<ProblemScore> score_unsupervised(const NwsModel& model, const Dataset& data,
                                             const VerifyOptions& opts) {
  std::vector<ProblemScore> scores(data.problems.size());
  parallel_for(data.problems.size(), opts.jobs, [&](std::size_t i) {
    const Problem& p = data.problems[i];
    try {
      scores[i] = score_evidence(gather_evidence(model, p));
    } catch (const std::exception& e) {
      scores[i] = failed_score(p.id, p.label, e.what());
    }
  });
  check_failures(scores, opts.max_failure_fraction);
  return scores;
}

std::vector<ProblemScore> verify_from_evidence(std::span<const ProblemEvidence> evidence,
                                               const VerifyOptions& opts) {
  std::vector<ProblemScore> scores(evidence.size());
  for (std::size_t i = 0; i < evidence.size(); ++i) {
    try {
      scores[i] = score_evidence(evidence[i]);
    } catch (const std::exception& e) {
      scores[i] = failed_score(evidence[i].problem_id, evidence[i].label, e.what());
    }
  }
  check_failures(scores, opts.max_failure_fraction);
  apply_threshold(scores, resolve_threshold(opts.threshold, scores), opts.margin);
  return scores;
}

std::vector<ProblemScore> verify_unsupervised(const NwsModel& model, const Dataset& data,
                                              const VerifyOptions& opts) {
  auto scores = score_unsupervised(model, data, opts);
  apply_threshold(scores, resolve_threshold(opts.threshold, scores), opts.margin);
  return scores;
}

std::string scores_csv(std::span<const ProblemScore> scores) {
  std::string out = "problem_id,similarity,decision,label\n";
  char buf[64];
  for (const auto& s : scores) {
    out += s.problem_id;
    out.push_back(',');
    if (!s.failure) {
      std::snprintf(buf, sizeof buf, "%.12g", s.similarity);
      out += buf;
    }
    out.push_back(',');
    out += s.decision ? (*s.decision ? "Y" : "N") : "-";
    out.push_back(',');
    if (s.label) out += *s.label ? "Y" : "N";
    out.push_back('\n');
  }
  return out;
}

void write_scores_csv(const std::filesystem::path& path, std::span<const ProblemScore> scores) {
  io::write_file_text(path, scores_csv(scores));
}

}  // namespace dvauth
