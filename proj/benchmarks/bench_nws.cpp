#include <benchmark/benchmark.h>

#include <vector>

#include "dvauth/nws.hpp"
#include "dvauth/synth.hpp"
#include "dvauth/textmodel.hpp"

namespace {

struct Fixture {
  Fixture() {
    const dvauth::StyleGenerator gen;
    const auto ref = gen.reference_corpus(20, 1000, 3);
    vocab = dvauth::build_vocab(ref, 1);
    for (const auto& t : ref) corpus.push_back(dvauth::encode(dvauth::tokenize(t), vocab));
    cfg.epochs = 1;
  }
  dvauth::Vocabulary vocab;
  std::vector<dvauth::TokenSeq> corpus;
  dvauth::TrainConfig cfg;
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

// One skip-gram epoch over 20k tokens.
void BM_SkipGramEpoch(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(dvauth::train_embeddings(f.corpus, f.vocab.size(), f.cfg).table.vectors.data());
  }
  state.SetItemsProcessed(state.iterations() * 20000);
}
BENCHMARK(BM_SkipGramEpoch)->Unit(benchmark::kMillisecond);

void BM_PredictorEpoch(benchmark::State& state) {
  const auto& f = fixture();
  const auto emb = dvauth::train_embeddings(f.corpus, f.vocab.size(), f.cfg).table;
  const auto mode = state.range(0) ? dvauth::Mode::masked : dvauth::Mode::causal;
  for (auto _ : state) {
    benchmark::DoNotOptimize(dvauth::train_predictor(f.corpus, emb, f.cfg, mode).predictor.w1.data());
  }
  state.SetItemsProcessed(state.iterations() * 20000);
}
BENCHMARK(BM_PredictorEpoch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_PredictDocument(benchmark::State& state) {
  const auto& f = fixture();
  const auto emb = dvauth::train_embeddings(f.corpus, f.vocab.size(), f.cfg).table;
  const auto pred = dvauth::train_predictor(f.corpus, emb, f.cfg, dvauth::Mode::causal).predictor;
  const dvauth::BuiltinNws nws(f.vocab, emb, pred);
  const dvauth::StyleGenerator gen;
  dvauth::Rng rng(5);
  const auto doc = nws.encode("doc", gen.author_text(dvauth::Style::archaic, 500, rng));
  for (auto _ : state) benchmark::DoNotOptimize(nws.predict(doc).predicted.data());
}
BENCHMARK(BM_PredictDocument);

}  // namespace
