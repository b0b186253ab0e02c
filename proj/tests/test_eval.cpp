#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include <nlohmann/json.hpp>

#include "dvauth/error.hpp"
#include "dvauth/eval.hpp"
#include "dvauth/rng.hpp"
#include "support/test_support.hpp"

using namespace dvauth;
using namespace dvauth::testing;

namespace {

double auc(const std::vector<double>& s, const std::vector<bool>& l) {
  const std::unique_ptr<bool[]> buf(new bool[l.size()]);
  for (std::size_t i = 0; i < l.size(); ++i) buf[i] = l[i];
  return roc_auc(s, std::span<const bool>(buf.get(), l.size()));
}

// Forty-five problems: 20 same-author, 25 different-author. Positives beat
// 417 of the 500 (positive, negative) pairs; 27 answers are right, 6 wrong
// and 12 unanswered, so c@1 = 27 * 57 / 45^2 = 0.76 and AUC = 0.834.
std::vector<ProblemScore> reference_run() {
  std::vector<ProblemScore> run;
  const auto add = [&](double sim, bool label) {
    ProblemScore s;
    s.problem_id = "P" + std::to_string(run.size());
    s.similarity = sim;
    s.label = label;
    run.push_back(s);
  };
  for (int k = 0; k < 25; ++k) add(k, false);
  for (int k = 0; k < 16; ++k) add(100.0 + k, true);
  add(16.5, true);
  for (int k = 0; k < 3; ++k) add(-1.0 - k, true);
  for (std::size_t i = 0; i < run.size(); ++i) {
    if (i < 27) run[i].decision = *run[i].label;
    else if (i < 33) run[i].decision = !*run[i].label;
  }
  return run;
}

}  // namespace

TEST(CAt1, ExhaustiveAgainstExactRational) {
  for (std::size_t n = 1; n <= 50; ++n) {
    for (std::size_t nc = 0; nc <= n; ++nc) {
      for (std::size_t nu = 0; nc + nu <= n; ++nu) {
        // (1/n)(n_c + n_u n_c / n) as a single rational, rounded once.
        const double oracle = static_cast<double>(nc * n + nu * nc) / static_cast<double>(n * n);
        EXPECT_EQ(c_at_1(n, nc, nu), oracle) << n << ' ' << nc << ' ' << nu;
        const long double direct = (1.0L / n) * (nc + static_cast<long double>(nu) * nc / n);
        EXPECT_NEAR(c_at_1(n, nc, nu), static_cast<double>(direct), 1e-15);
      }
      EXPECT_EQ(c_at_1(n, nc, 0), static_cast<double>(nc) / static_cast<double>(n));
    }
  }
}

TEST(CAt1, RejectsBadCounts) {
  EXPECT_THROW(c_at_1(0, 0, 0), ContractError);
  EXPECT_THROW(c_at_1(5, 3, 3), ContractError);
}

TEST(CAt1, AbstainingBeatsGuessingWrong) {
  // Unanswered problems earn the answered accuracy.
  EXPECT_DOUBLE_EQ(c_at_1(10, 5, 5), 0.75);
  EXPECT_DOUBLE_EQ(c_at_1(10, 5, 0), 0.5);
}

TEST(RocAuc, WorkedExample) {
  EXPECT_EQ(auc({0.1, 0.35, 0.4, 0.8}, {false, true, false, true}), 0.75);
}

TEST(RocAuc, MatchesBruteForceWithTies) {
  Rng rng(21);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng.below(199);
    std::vector<double> s(n);
    std::vector<bool> l(n);
    const bool coarse = rng.bernoulli(0.5);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = coarse ? static_cast<double>(rng.below(8)) / 8.0 : rng.uniform(-1, 1);
      l[i] = rng.bernoulli(0.5);
    }
    l[0] = true;
    l[1] = false;
    if (!coarse) s[1] = s[0];
    EXPECT_EQ(auc(s, l), brute_force_auc(s, l)) << "trial " << trial;
  }
}

TEST(RocAuc, EdgeCases) {
  EXPECT_EQ(auc({1, 1, 1, 1}, {true, false, true, false}), 0.5);
  EXPECT_EQ(auc({0, 1}, {false, true}), 1.0);
  EXPECT_EQ(auc({0, 1}, {true, false}), 0.0);
  EXPECT_THROW(auc({0, 1}, {true, true}), UndefinedAucError);
  EXPECT_THROW(auc({0, 1}, {false, false}), UndefinedAucError);
}

TEST(RocAuc, InvariantToMonotoneTransform) {
  Rng rng(22);
  std::vector<double> s(60), t(60);
  std::vector<bool> l(60);
  for (std::size_t i = 0; i < 60; ++i) {
    s[i] = rng.uniform(-1, 1);
    t[i] = std::exp(3.0 * s[i]) + 2.0;
    l[i] = i % 3 == 0;
  }
  EXPECT_EQ(auc(s, l), auc(t, l));
}

TEST(CombinedScore, ReferenceValues) {
  EXPECT_NEAR(combined_score(MetricScheme::pan14plus, 0.76, 0.834), 0.634, 0.0005);
  EXPECT_NEAR(combined_score(MetricScheme::pan14plus, 0.82, 0.79), 0.648, 0.0005);
  EXPECT_NEAR(combined_score(MetricScheme::pan13, 0.7, 0.763), 0.534, 0.0005);
}

TEST(EvaluateRun, ReproducesReferenceRun) {
  const auto run = reference_run();
  const auto r = evaluate_run(run, MetricScheme::pan14plus, "set", "method");
  EXPECT_EQ(r.n, 45u);
  EXPECT_EQ(r.n_c, 27u);
  EXPECT_EQ(r.n_u, 12u);
  EXPECT_DOUBLE_EQ(r.c_at_1, 0.76);
  EXPECT_DOUBLE_EQ(r.roc_auc, 0.834);
  EXPECT_NEAR(r.score, 0.634, 0.0005);
  EXPECT_DOUBLE_EQ(r.accuracy, 27.0 / 33.0);

  const auto p13 = evaluate_run(run, MetricScheme::pan13);
  EXPECT_DOUBLE_EQ(p13.score, p13.accuracy * p13.roc_auc);
}

TEST(EvaluateRun, FailedProblemsAreUnansweredAndLeaveAuc) {
  auto run = reference_run();
  ProblemScore failed;
  failed.problem_id = "broken";
  failed.label = true;
  failed.failure = "zero ADV";
  failed.similarity = 1e9;
  run.push_back(failed);
  const auto r = evaluate_run(run, MetricScheme::pan14plus);
  EXPECT_EQ(r.n, 46u);
  EXPECT_EQ(r.n_u, 13u);
  EXPECT_DOUBLE_EQ(r.roc_auc, 0.834);
}

TEST(EvaluateRun, RequiresLabels) {
  std::vector<ProblemScore> run(2);
  run[0].label = true;
  EXPECT_THROW(evaluate_run(run, MetricScheme::pan13), ContractError);
}

TEST(EvalReport, JsonHasAllMetrics) {
  const auto r = evaluate_run(reference_run(), MetricScheme::pan14plus, "set", "m");
  const auto j = nlohmann::json::parse(r.to_json());
  for (const char* key : {"accuracy", "c_at_1", "roc_auc", "score", "n", "n_c", "n_u"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["scheme"], "pan14plus");
  EXPECT_NE(r.to_table().find("0.634"), std::string::npos);
}

TEST(MetricScheme, Parse) {
  EXPECT_EQ(parse_metric_scheme("pan13"), MetricScheme::pan13);
  EXPECT_EQ(parse_metric_scheme("pan15"), MetricScheme::pan14plus);
  EXPECT_THROW(parse_metric_scheme("pan99"), ConfigError);
}
