// Copyright 2026 The qduffing Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <benchmark/benchmark.h>

#include <numbers>

#include "qduffing/duffing_model.hpp"
#include "qduffing/fock.hpp"
#include "qduffing/lyapunov.hpp"
#include "qduffing/sme_engine.hpp"

namespace qduffing {
namespace {

ModelParams bench_params() {
  ModelParams params;
  params.beta = 0.3;
  params.eta = 1.0;
  return params;
}

// One stochastic step on the full basis of the given size.
void BM_Step(benchmark::State& state, StepScheme scheme) {
  const int dim = static_cast<int>(state.range(0));
  const OperatorTable table(dim);
  const ModelParams params = bench_params();
  DensityMatrix rho = DensityMatrix::coherent(dim, Complex(0.5, -0.3));
  const FrameOffset frame{2.0, -1.0};
  const double dt = 2 * std::numbers::pi / 3000;
  SmeIntegrator integrator(scheme);
  GaussianSource noise(5);
  double t = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(integrator.advance(rho, t, dt, noise.next(dt), frame, params, table));
    t += dt;
  }
  state.SetComplexityN(dim);
}
BENCHMARK_CAPTURE(BM_Step, cayley, StepScheme::kCayley)->RangeMultiplier(2)->Range(32, 256);
BENCHMARK_CAPTURE(BM_Step, explicit, StepScheme::kExplicit)->RangeMultiplier(2)->Range(32, 256);

void BM_Displace(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const OperatorTable table(dim);
  const DensityMatrix rho = DensityMatrix::coherent(dim, Complex(0.4, 0.2));
  for (auto _ : state) {
    benchmark::DoNotOptimize(displace(rho.matrix(), Complex(-0.4, -0.2), table));
  }
  state.SetComplexityN(dim);
}
BENCHMARK(BM_Displace)->RangeMultiplier(2)->Range(32, 256);

void BM_LocalJacobian(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const OperatorTable table(dim);
  const ModelParams params = bench_params();
  const DensityMatrix rho = DensityMatrix::coherent(dim, Complex(0.3, 0.1));
  const FrameOffset frame{2.0, -1.0};
  const double dt = 2 * std::numbers::pi / 3000;
  for (auto _ : state) {
    benchmark::DoNotOptimize(local_jacobian(rho, 0.0, dt, frame, params, 1e-3, table));
  }
  state.SetComplexityN(dim);
}
BENCHMARK(BM_LocalJacobian)->RangeMultiplier(2)->Range(32, 256);

}  // namespace
}  // namespace qduffing

BENCHMARK_MAIN();
