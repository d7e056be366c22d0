#include <benchmark/benchmark.h>

#include <random>
#include <string>

#include "satcons/disagreement.hpp"
#include "satcons/lmi.hpp"
#include "satcons/optimize.hpp"
#include "satcons/regions.hpp"
#include "satcons/sdp.hpp"
#include "satcons/simulate.hpp"
#include "satcons/sysmodel.hpp"

using namespace satcons;

namespace {

NetworkModel Example1() { return LoadModelFile(std::string(SATCONS_SOURCE_DIR) + "/configs/example1.json"); }

// Conic form of the Example-1 analysis family with SPD scalings of matching size.
struct NormalCase {
  sdp::Problem problem;
  std::vector<Matrix> scaling;
};

NormalCase MakeNormalCase() {
  const NetworkModel model = Example1();
  const DisagreementSystem sys = BuildDisagreementSystem(model);
  lmi::AssemblyOptions a;
  a.containment = true;
  NormalCase c;
  c.problem = lmi::AssembleTheorem1(sys, model.polytope, 10.0, 0.5, a).ToConic();
  std::mt19937 rng(3);
  std::normal_distribution<double> g;
  for (const auto& blk : c.problem.blocks) {
    const int n = static_cast<int>(blk.constant.rows());
    Matrix r = Matrix::NullaryExpr(n, n, [&]() { return g(rng); });
    c.scaling.push_back(r * r.transpose() + Matrix::Identity(n, n));
  }
  return c;
}

void BM_NormalMatrixSerial(benchmark::State& state) {
  const NormalCase c = MakeNormalCase();
  for (auto _ : state) benchmark::DoNotOptimize(sdp::AssembleNormalMatrixSerial(c.problem, c.scaling));
}
BENCHMARK(BM_NormalMatrixSerial)->Unit(benchmark::kMicrosecond);

void BM_NormalMatrixParallel(benchmark::State& state) {
  const NormalCase c = MakeNormalCase();
  for (auto _ : state) benchmark::DoNotOptimize(sdp::AssembleNormalMatrixParallel(c.problem, c.scaling));
}
BENCHMARK(BM_NormalMatrixParallel)->Unit(benchmark::kMicrosecond);

struct BatchCase {
  NetworkModel model;
  std::vector<Matrix> shapes;
  sim::BatchSpec spec;
};

BatchCase MakeBatchCase(int realizations) {
  BatchCase c;
  c.model = Example1();
  const opt::RegionResult r = opt::MaximizeRegion(BuildDisagreementSystem(c.model), c.model.polytope, 0.8);
  c.shapes = r.P;
  c.spec.realizations = realizations;
  c.spec.integrate.horizon = 5.0;
  c.spec.integrate.store_every = 0;
  return c;
}

void BM_BatchSerial(benchmark::State& state) {
  const BatchCase c = MakeBatchCase(static_cast<int>(state.range(0)));
  const regions::EllipsoidFamily family(c.shapes, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(sim::RunBatchSerial(c.model, family, 1.25, c.spec));
}
BENCHMARK(BM_BatchSerial)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_BatchParallel(benchmark::State& state) {
  const BatchCase c = MakeBatchCase(static_cast<int>(state.range(0)));
  const regions::EllipsoidFamily family(c.shapes, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(sim::RunBatchParallel(c.model, family, 1.25, c.spec));
}
BENCHMARK(BM_BatchParallel)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
