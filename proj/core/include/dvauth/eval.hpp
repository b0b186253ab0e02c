#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dvauth/deviation.hpp"

namespace dvauth {

// c@1 = (n_c + n_u * n_c / n) / n
double c_at_1(std::size_t n, std::size_t n_c, std::size_t n_u);

// Mann-Whitney statistic: the fraction of (positive, negative) pairs ranked
// correctly, ties counting one half. O(n log n) via mid-ranks.
double roc_auc(std::span<const double> scores, std::span<const bool> labels);

enum class MetricScheme { pan13, pan14plus };

MetricScheme parse_metric_scheme(std::string_view name);
std::string_view metric_scheme_name(MetricScheme scheme);

struct EvalReport {
  std::string dataset_name;
  std::string method_name;
  MetricScheme scheme = MetricScheme::pan14plus;
  std::size_t n = 0;
  std::size_t n_c = 0;
  std::size_t n_u = 0;
  double accuracy = 0.0;  // over answered problems
  double c_at_1 = 0.0;
  double roc_auc = 0.0;
  double score = 0.0;

  std::string to_json() const;
  // Aligned text row in the column order (c@1 or Acc.), ROC, Score.
  std::string to_table() const;
};

// pan13: score = accuracy x AUC. pan14plus: score = c@1 x AUC.
double combined_score(MetricScheme scheme, double accuracy_or_c_at_1, double auc);

EvalReport evaluate_run(std::span<const ProblemScore> scores, MetricScheme scheme,
                        std::string dataset_name = {}, std::string method_name = {});

}  // namespace dvauth
