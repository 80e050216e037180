#include "bse/bench.hpp"
#include "bse/crlb.hpp"
#include "bse/extract.hpp"
#include "bse/mixmodel.hpp"

#include <benchmark/benchmark.h>

using namespace bse;

namespace {

PiecewiseModel model_of(int d, int m, Sharing sharing, std::size_t nb) {
  RandomModelOptions o;
  o.dim = d;
  o.blocks = m;
  o.sharing = sharing;
  o.n_per_block = nb;
  return random_model(o, 1);
}

void BM_SampleGgd(benchmark::State& st) {
  const GgdSpec spec{0.5, 0.4, 1.0};
  std::uint64_t seed = 0;
  for (auto _ : st) benchmark::DoNotOptimize(sample_ggd(spec, static_cast<std::size_t>(st.range(0)), ++seed));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_SampleGgd)->Arg(1000)->Arg(100000);

void BM_Synthesize(benchmark::State& st) {
  const PiecewiseModel m = model_of(5, static_cast<int>(st.range(0)), Sharing::ConstantMixingVector, 5040 / st.range(0));
  std::uint64_t seed = 0;
  for (auto _ : st) benchmark::DoNotOptimize(synthesize(m, ++seed));
}
BENCHMARK(BM_Synthesize)->Arg(1)->Arg(10);

void BM_FimClosedForm(benchmark::State& st) {
  const PiecewiseModel m = model_of(5, static_cast<int>(st.range(0)), Sharing::ConstantSeparatingVector, 500);
  for (auto _ : st) benchmark::DoNotOptimize(fim_closed_form(m));
}
BENCHMARK(BM_FimClosedForm)->Arg(1)->Arg(10);

void BM_FimEmpirical(benchmark::State& st) {
  const PiecewiseModel m = model_of(3, 2, Sharing::ConstantMixingVector, 500);
  for (auto _ : st) benchmark::DoNotOptimize(fim_empirical(m, static_cast<std::size_t>(st.range(0)), 3));
}
BENCHMARK(BM_FimEmpirical)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_CribCsv(benchmark::State& st) {
  std::vector<BlockBound> bb;
  for (int i = 0; i < st.range(0); ++i)
    bb.push_back({source_stats({2.0, 0.0, 1.0 + i}), CMatrix::Identity(4, 4) * (1.0 + 0.1 * i)});
  for (auto _ : st) benchmark::DoNotOptimize(crib_csv(bb, 500));
}
BENCHMARK(BM_CribCsv)->Arg(2)->Arg(10);

void BM_Ogice(benchmark::State& st) {
  const GgdSpec soi{2.0, 0.0, 1.0};
  RandomModelOptions o;
  o.n_per_block = static_cast<std::size_t>(st.range(0));
  const PiecewiseModel m = random_model(o, 5);
  const Dataset ds = synthesize(m, 6);
  const CMatrix x = ds.block(0);
  const CVector w0 = oc_separating(sample_cov(x), perturbed_init(mixing_vector(m.blocks[0].ice), 0.1, 7));
  ExtractOptions opts;
  opts.nonlinearity = ggd_nonlinearity(soi);
  for (auto _ : st) benchmark::DoNotOptimize(ogice(x, opts, w0));
}
BENCHMARK(BM_Ogice)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_Trial(benchmark::State& st) {
  ScenarioConfig c;
  c.blocks = static_cast<int>(st.range(0));
  c.sharing = Sharing::ConstantSeparatingVector;
  c.n_per_block = 5040 / static_cast<std::size_t>(c.blocks);
  std::uint64_t seed = 0;
  for (auto _ : st) benchmark::DoNotOptimize(run_trial(c, ++seed));
}
BENCHMARK(BM_Trial)->Arg(1)->Arg(5)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
