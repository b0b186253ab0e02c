#include "dvauth/eval.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <numeric>

#include <nlohmann/json.hpp>

#include "dvauth/error.hpp"

namespace dvauth {

double c_at_1(std::size_t n, std::size_t n_c, std::size_t n_u) {
  if (n == 0) throw ContractError("c@1 needs n >= 1");
  if (n_c + n_u > n) throw ContractError("c@1 needs n_c + n_u <= n");
  // (n_c + n_u * n_c / n) / n = n_c (n + n_u) / n^2. While both integers are
  // exact in a double, one division gives the correctly rounded value, which
  // for n_u = 0 is exactly n_c / n.
  constexpr std::uint64_t kExact = std::uint64_t{1} << 53;
  if (n < (std::uint64_t{1} << 26)) {
    const std::uint64_t num = static_cast<std::uint64_t>(n_c) * (n + n_u);
    const std::uint64_t den = static_cast<std::uint64_t>(n) * n;
    if (num < kExact && den < kExact) return static_cast<double>(num) / static_cast<double>(den);
  }
  const double nd = static_cast<double>(n);
  const double ncd = static_cast<double>(n_c);
  return (ncd + static_cast<double>(n_u) * ncd / nd) / nd;
}

double roc_auc(std::span<const double> scores, std::span<const bool> labels) {
  if (scores.size() != labels.size()) throw ContractError("roc_auc: length mismatch");
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
  const std::size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw UndefinedAucError("roc_auc: both classes must be present");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Doubled mid-ranks keep everything in integers: a tie block spanning
  // 1-based ranks [lo, hi] gets doubled rank lo + hi.
  std::uint64_t doubled_rank_sum = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const std::uint64_t doubled = (i + 1) + (j + 1);
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]]) doubled_rank_sum += doubled;
    }
    i = j + 1;
  }
  const std::uint64_t p = positives;
  const std::uint64_t twice_u = doubled_rank_sum - p * (p + 1);
  return static_cast<double>(twice_u) / (2.0 * static_cast<double>(positives * negatives));
}

MetricScheme parse_metric_scheme(std::string_view name) {
  if (name == "pan13") return MetricScheme::pan13;
  if (name == "pan14plus" || name == "pan14" || name == "pan15") return MetricScheme::pan14plus;
  throw ConfigError("unknown metric scheme '" + std::string(name) + "'");
}

std::string_view metric_scheme_name(MetricScheme scheme) {
  return scheme == MetricScheme::pan13 ? "pan13" : "pan14plus";
}

double combined_score(MetricScheme, double accuracy_or_c_at_1, double auc) {
  return accuracy_or_c_at_1 * auc;
}

EvalReport evaluate_run(std::span<const ProblemScore> scores, MetricScheme scheme,
                        std::string dataset_name, std::string method_name) {
  EvalReport r;
  r.dataset_name = std::move(dataset_name);
  r.method_name = std::move(method_name);
  r.scheme = scheme;
  r.n = scores.size();
  if (r.n == 0) throw ContractError("evaluate_run: no scores");

  std::vector<double> sims;
  const auto labels = std::make_unique<bool[]>(scores.size());
  for (const auto& s : scores) {
    if (!s.label) throw ContractError("evaluate_run: problem " + s.problem_id + " has no label");
    if (!s.decision) {
      ++r.n_u;
    } else if (*s.decision == *s.label) {
      ++r.n_c;
    }
    if (!s.failure) {
      labels[sims.size()] = *s.label;
      sims.push_back(s.similarity);
    }
  }
  const std::size_t answered = r.n - r.n_u;
  r.accuracy = answered == 0 ? 0.0 : static_cast<double>(r.n_c) / static_cast<double>(answered);
  r.c_at_1 = c_at_1(r.n, r.n_c, r.n_u);
  r.roc_auc = roc_auc(sims, std::span<const bool>(labels.get(), sims.size()));
  r.score = combined_score(scheme, scheme == MetricScheme::pan13 ? r.accuracy : r.c_at_1, r.roc_auc);
  return r;
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["dataset"] = dataset_name;
  j["method"] = method_name;
  j["scheme"] = metric_scheme_name(scheme);
  j["n"] = n;
  j["n_c"] = n_c;
  j["n_u"] = n_u;
  j["accuracy"] = accuracy;
  j["c_at_1"] = c_at_1;
  j["roc_auc"] = roc_auc;
  j["score"] = score;
  return j.dump(2) + "\n";
}

std::string EvalReport::to_table() const {
  const bool pan13 = scheme == MetricScheme::pan13;
  char buf[512];
  std::snprintf(buf, sizeof buf, "%-16s %-16s %8s %8s %8s\n%-16s %-16s %8.3f %8.3f %8.3f\n",
                "Dataset", "Method", pan13 ? "Acc." : "c@1", "ROC", "Score", dataset_name.c_str(),
                method_name.c_str(), pan13 ? accuracy : c_at_1, roc_auc, score);
  return buf;
}

}  // namespace dvauth
