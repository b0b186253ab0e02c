// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any
// failure. The synthetic end-to-end checks take a few minutes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "dvauth/binary_io.hpp"
#include "dvauth/deviation.hpp"
#include "dvauth/eval.hpp"
#include "dvauth/nws.hpp"
#include "dvauth/projection.hpp"
#include "dvauth/synth.hpp"
#include "support/test_support.hpp"

#ifdef DVAUTH_WITH_CLI
#include "commands.hpp"
#endif

using namespace dvauth;
using namespace dvauth::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const char* name, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

double auc_of(const std::vector<double>& s, const std::vector<bool>& l) {
  const std::unique_ptr<bool[]> buf(new bool[l.size()]);
  for (std::size_t i = 0; i < l.size(); ++i) buf[i] = l[i];
  return roc_auc(s, std::span<const bool>(buf.get(), l.size()));
}

Outcome dv_counting() {
  const std::string text = "a b c d e f g h i j";
  const auto vocab = build_vocab(std::vector<std::string>{text}, 1);
  Rng rng(1);
  const EmbeddingTable emb{random_matrix(rng, static_cast<Eigen::Index>(vocab.size()), 8)};
  std::size_t checked = 0;
  for (Mode mode : {Mode::causal, Mode::masked}) {
    const BuiltinNws nws(vocab, emb, BuiltinPredictor::initialize(mode, 8, 8, 3, 2));
    for (std::size_t n = 2; n <= 50; ++n) {
      std::string doc;
      for (std::size_t i = 0; i < n; ++i) doc += std::string(1, static_cast<char>('a' + i % 12)) + " ";
      const auto dvs = compute_dvs(nws, nws.encode("doc", doc));
      const std::size_t expected = mode == Mode::causal ? n - 1 : n;
      if (dvs.size() != expected) {
        return {false, std::string(mode_name(mode)) + " n=" + std::to_string(n) + " gave " +
                           std::to_string(dvs.size())};
      }
      ++checked;
    }
  }
  return {true, std::to_string(checked) + " documents, n in 2..50, both modes"};
}

Outcome similarity_algebra() {
  Rng rng(2);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.below(127));
    const Eigen::VectorXd a = random_vector(rng, d, rng.uniform(1e-3, 1e3));
    const Eigen::VectorXd b = random_vector(rng, d, rng.uniform(1e-3, 1e3));
    const double ab = dv_similarity(a, b);
    worst = std::max({worst, std::abs(ab - dv_similarity(b, a)), std::abs(dv_similarity(a, a) - 1.0),
                      std::abs(dv_similarity(a, Eigen::VectorXd(-a)) + 1.0)});
    if (ab < -1.0 || ab > 1.0) return {false, "similarity outside [-1, 1]"};
  }
  return {worst <= 1e-12, fmt("1000 pairs, max deviation %.3g (tol 1e-12)", worst)};
}

Outcome decision_invariance() {
  Rng rng(3);
  std::size_t problems = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto fc = random_fake_corpus(rng, 20, trial % 2 ? Mode::causal : Mode::masked, 8, 15 + rng.below(20));
    const ExternalNws nws(fc.records);
    const auto base = verify_unsupervised(nws, fc.data);

    // Scale every DV through the language-model path (power of two, exact in
    // float storage) and directly on the evidence (arbitrary factor).
    std::vector<DvexRecord> scaled = fc.records;
    const float pow2 = std::ldexp(1.0f, static_cast<int>(rng.below(21)) - 10);
    for (auto& r : scaled) {
      r.actual *= pow2;
      r.predicted *= pow2;
    }
    const auto via_model = verify_unsupervised(ExternalNws(scaled), fc.data);

    std::vector<ProblemEvidence> evidence;
    for (const auto& p : fc.data.problems) evidence.push_back(gather_evidence(nws, p));
    const double c = std::exp(rng.uniform(std::log(1e-3), std::log(1e3)));
    for (auto& ev : evidence) {
      for (auto& k : ev.known) k.vectors *= c;
      ev.unknown.vectors *= c;
    }
    const auto via_evidence = verify_from_evidence(evidence);

    for (std::size_t i = 0; i < base.size(); ++i) {
      if (base[i].decision != via_model[i].decision || base[i].decision != via_evidence[i].decision) {
        return {false, "trial " + std::to_string(trial) + " problem " + base[i].problem_id + " changed"};
      }
    }
    problems += base.size();
  }
  return {true, "100 datasets, " + std::to_string(problems) + " decisions unchanged"};
}

Outcome median_split() {
  Rng rng(4);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 * (1 + rng.below(100));
    std::vector<ProblemScore> scores(n);
    for (std::size_t i = 0; i < n; ++i) scores[i].similarity = rng.uniform(-1, 1);
    const double t = resolve_threshold(ThresholdScheme{}, scores);
    apply_threshold(scores, t, 0.0);
    const auto same = std::count_if(scores.begin(), scores.end(), [](const ProblemScore& s) { return s.decision == true; });
    if (static_cast<std::size_t>(same) != n / 2) {
      return {false, "n=" + std::to_string(n) + " gave " + std::to_string(same) + " same-author decisions"};
    }
  }
  return {true, "1000 score sets, exactly n/2 same-author each"};
}

Outcome c_at_1_exact() {
  std::size_t triples = 0;
  for (std::size_t n = 1; n <= 50; ++n) {
    for (std::size_t nc = 0; nc <= n; ++nc) {
      for (std::size_t nu = 0; nc + nu <= n; ++nu) {
        // (1/n)(n_c + n_u n_c / n) = n_c (n + n_u) / n^2, one rounding.
        const double direct = static_cast<double>(nc * (n + nu)) / static_cast<double>(n * n);
        if (c_at_1(n, nc, nu) != direct) return {false, "mismatch at " + std::to_string(n)};
        if (nu == 0 && c_at_1(n, nc, 0) != static_cast<double>(nc) / static_cast<double>(n)) {
          return {false, "n_u = 0 differs from accuracy at n=" + std::to_string(n)};
        }
        ++triples;
      }
    }
  }
  return {true, std::to_string(triples) + " triples exact"};
}

Outcome auc_oracle() {
  if (auc_of({0.1, 0.35, 0.4, 0.8}, {false, true, false, true}) != 0.75) return {false, "worked example"};
  Rng rng(6);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng.below(199);
    std::vector<double> s(n);
    std::vector<bool> l(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = rng.bernoulli(0.3) ? static_cast<double>(rng.below(5)) : rng.uniform(-2, 2);
      l[i] = rng.bernoulli(0.5);
    }
    l[0] = true;
    l[1] = false;
    s[1] = s[0];
    if (auc_of(s, l) != brute_force_auc(s, l)) return {false, "trial " + std::to_string(trial)};
  }
  return {true, "worked example 0.75; 500 instances with ties equal brute force"};
}

Outcome score_composition() {
  const double pan15 = combined_score(MetricScheme::pan14plus, 0.76, 0.834);
  const double pan14n = combined_score(MetricScheme::pan14plus, 0.82, 0.79);
  const bool ok = std::abs(pan15 - 0.634) <= 0.0005 && std::abs(pan14n - 0.648) <= 0.0005;
  return {ok, fmt("0.76 x 0.834 = %.4f, 0.82 x 0.79 = %.4f", pan15, pan14n)};
}

Outcome gradient_check_seeds() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    const int d = 16;
    const auto model = ProjectionModel::initialize(d, 8, seed);
    const SideInputs k{random_matrix(rng, 12, d).cast<double>(), random_matrix(rng, 12, d, 0.3).cast<double>()};
    const SideInputs u{random_matrix(rng, 9, d).cast<double>(), random_matrix(rng, 9, d, 0.3).cast<double>()};
    worst = std::max(worst, gradient_check(model, k, u, seed % 2 == 1));
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-3 && secs < 10.0, fmt("10 seeds, max relative error %.3g, %.2f s", worst, secs)};
}

Outcome zero_model() {
  Rng rng(8);
  const auto model = ProjectionModel::zeros(16, 8);
  double worst_p = 0.0;
  double worst_bce = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto nk = 1 + static_cast<Eigen::Index>(rng.below(30));
    const auto nu = 1 + static_cast<Eigen::Index>(rng.below(30));
    const SideInputs k{random_matrix(rng, nk, 16).cast<double>(), random_matrix(rng, nk, 16).cast<double>()};
    const SideInputs u{random_matrix(rng, nu, 16).cast<double>(), random_matrix(rng, nu, 16).cast<double>()};
    const double logit = forward(model, k, u);
    worst_p = std::max(worst_p, std::abs(sigmoid(logit) - 0.5));
    for (bool y : {true, false}) worst_bce = std::max(worst_bce, std::abs(bce_with_logit(logit, y) + std::log(0.5)));
  }
  return {worst_p == 0.0 && worst_bce <= 1e-9,
          fmt("100 pairs, |p - 0.5| max %.3g, |BCE + ln 0.5| max %.3g", worst_p, worst_bce)};
}

// Shared by the synthetic checks.
struct SyntheticWorld {
  StyleGenerator gen;
  std::unique_ptr<BuiltinNws> nws;
  double nws_seconds = 0.0;
  Dataset test;
  Dataset train;
};

SyntheticWorld build_world() {
  SyntheticWorld w;
  const auto ref = w.gen.reference_corpus(300, 1000, 11);
  const auto t0 = Clock::now();
  const auto vocab = build_vocab(ref, 1);
  std::vector<TokenSeq> corpus;
  for (const auto& t : ref) corpus.push_back(encode(tokenize(t), vocab));
  TrainConfig cfg;
  const auto emb = train_embeddings(corpus, vocab.size(), cfg);
  const auto pred = train_predictor(corpus, emb.table, cfg, Mode::causal);
  w.nws = std::make_unique<BuiltinNws>(vocab, emb.table, pred.predictor);
  w.nws_seconds = seconds_since(t0);
  w.test = w.gen.make_dataset(100, 500, 99);
  w.train = w.gen.make_dataset(100, 500, 123);
  return w;
}

Outcome synthetic_unsupervised(const SyntheticWorld& w) {
  const auto scores = verify_unsupervised(*w.nws, w.test);
  const auto r = evaluate_run(scores, MetricScheme::pan14plus);
  const bool ok = r.roc_auc >= 0.90 && r.accuracy >= 0.85 && w.nws_seconds <= 120.0;
  return {ok, fmt("AUC %.3f (>= 0.90), accuracy %.3f (>= 0.85), ", r.roc_auc, r.accuracy) +
                  fmt("NWS training %.1f s single-threaded (<= 120 s); vocabulary %.0f", w.nws_seconds,
                      static_cast<double>(w.nws->vocabulary().size()))};
}

Outcome synthetic_supervised(const SyntheticWorld& w) {
  const auto t0 = Clock::now();
  const auto pairs = make_segment_pairs(w.train, *w.nws);
  ProjectionTrainConfig cfg;
  cfg.epochs = 20;
  const auto fit = train_projection(pairs, cfg);
  const double secs = seconds_since(t0);
  auto scores = score_projection(fit.model, *w.nws, w.test);
  apply_threshold(scores, resolve_threshold(ThresholdScheme{}, scores), 0.0);
  const auto r = evaluate_run(scores, MetricScheme::pan14plus);
  const bool ok = r.c_at_1 >= 0.85 && secs < 300.0;
  return {ok, fmt("held-out c@1 %.3f (>= 0.85), AUC %.3f, ", r.c_at_1, r.roc_auc) +
                  fmt("20 epochs on %.0f pairs in %.1f s (< 300 s)", static_cast<double>(pairs.pairs.size()), secs)};
}

Outcome verify_determinism(const SyntheticWorld& w) {
  TempDir dir;
#ifdef DVAUTH_WITH_CLI
  w.nws->save(dir / "nws.dvnw", dir / "vocab.json");
  write_dataset(w.test, dir / "problems", dir / "truth.txt");
  io::write_file_text(dir / "run.json", R"({"dataset": "problems", "truth": "truth.txt", "model": "nws.dvnw",
    "vocab": "vocab.json", "mode": "causal"})");
  std::vector<std::string> csvs;
  for (const char* out : {"a", "b"}) {
    std::vector<std::string> args{"dvauth", "verify", "--config", (dir / "run.json").string(), "--out", (dir / out).string()};
    std::vector<char*> argv;
    for (auto& s : args) argv.push_back(s.data());
    if (cli::run(static_cast<int>(argv.size()), argv.data()) != cli::kExitOk) return {false, "verify run failed"};
    csvs.push_back(io::read_file_text(dir / out / "scores.csv"));
  }
  const char* how = "dvauth verify";
#else
  std::vector<std::string> csvs;
  for (int k = 0; k < 2; ++k) csvs.push_back(scores_csv(verify_unsupervised(*w.nws, w.test)));
  const char* how = "verify_unsupervised";
#endif
  const bool same = csvs[0] == csvs[1] && !csvs[0].empty();
  return {same, std::string(how) + " twice: " + std::to_string(csvs[0].size()) + " bytes, " +
                    (same ? "byte-identical" : "different")};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  report("dv-counting", dv_counting);
  report("similarity-algebra", similarity_algebra);
  report("decision-invariance", decision_invariance);
  report("median-split", median_split);
  report("c-at-1", c_at_1_exact);
  report("auc-oracle", auc_oracle);
  report("score-composition", score_composition);
  report("gradient-check", gradient_check_seeds);
  report("zero-model", zero_model);

  std::unique_ptr<SyntheticWorld> world;
  try {
    world = std::make_unique<SyntheticWorld>(build_world());
  } catch (const std::exception& e) {
    std::printf("synthetic world could not be built: %s\n", e.what());
  }
  const auto with_world = [&](const std::function<Outcome(const SyntheticWorld&)>& f) {
    return [&world, f]() -> Outcome {
      if (!world) return {false, "no synthetic world"};
      return f(*world);
    };
  };
  report("synthetic-unsupervised", with_world(synthetic_unsupervised));
  report("synthetic-supervised", with_world(synthetic_supervised));
  report("verify-determinism", with_world(verify_determinism));

  std::printf("%d failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
