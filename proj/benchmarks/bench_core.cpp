// Copyright 2026 The fairmle Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <benchmark/benchmark.h>

#include <vector>

#include "fairmle/cache.hpp"
#include "fairmle/dataset.hpp"
#include "fairmle/effects.hpp"
#include "fairmle/glm.hpp"
#include "fairmle/kde.hpp"
#include "fairmle/train.hpp"

namespace {

using fairmle::Graph;

fairmle::Dataset sample(Graph g, std::size_t n) {
  fairmle::DgpSpec spec;
  spec.variant = g;
  spec.n = n;
  spec.seed = 1;
  return fairmle::simulate(spec);
}

Graph graph_arg(const benchmark::State& state) {
  return state.range(0) == 1 ? Graph::kOneMediator : Graph::kTwoMediator;
}

void BM_ProfileLoglik(benchmark::State& state) {
  const Graph g = graph_arg(state);
  const fairmle::Dataset ds = sample(g, static_cast<std::size_t>(state.range(1)));
  const auto designs = fairmle::ModelDesigns::correct(g);
  const fairmle::DesignCache cache(ds, designs);
  const fairmle::GlmParams p = fairmle::GlmParams::from_truth(fairmle::DgpCoefficients::published(g));
  fairmle::Coefs grad = fairmle::Coefs::zeros_like(p);
  const unsigned blocks =
      fairmle::kBlockA | fairmle::kBlockM | fairmle::kBlockL | fairmle::kBlockY;
  for (auto _ : state) benchmark::DoNotOptimize(cache.profile_loglik(p, blocks, &grad));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_ProfileLoglik)->ArgsProduct({{1, 2}, {5000, 100000}});

void BM_EffectWithGradient(benchmark::State& state) {
  const Graph g = graph_arg(state);
  const fairmle::Dataset ds = sample(g, static_cast<std::size_t>(state.range(1)));
  const fairmle::DesignCache cache(ds, fairmle::ModelDesigns::correct(g));
  const fairmle::GlmParams p = fairmle::GlmParams::from_truth(fairmle::DgpCoefficients::published(g));
  const auto f = fairmle::PseFunctional::unfair_default(g);
  fairmle::Coefs grad = fairmle::Coefs::zeros_like(p);
  for (auto _ : state) benchmark::DoNotOptimize(cache.effect(p, f, &grad));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_EffectWithGradient)->ArgsProduct({{1, 2}, {5000, 100000}});

void BM_Fit(benchmark::State& state) {
  const auto method = static_cast<fairmle::Method>(state.range(0));
  const fairmle::Dataset ds = sample(Graph::kOneMediator, 5000);
  fairmle::TrainConfig cfg;
  cfg.method = method;
  state.SetLabel(std::string(fairmle::to_string(method)));
  for (auto _ : state) benchmark::DoNotOptimize(fairmle::fit(ds, cfg).loglik);
}
BENCHMARK(BM_Fit)
    ->Arg(static_cast<int>(fairmle::Method::kUnconstrained))
    ->Arg(static_cast<int>(fairmle::Method::kConstrainedStandard))
    ->Arg(static_cast<int>(fairmle::Method::kHybrid))
    ->Unit(benchmark::kMillisecond);

void BM_KdeLogDensity(benchmark::State& state) {
  const fairmle::Dataset ds = sample(Graph::kOneMediator, static_cast<std::size_t>(state.range(0)));
  std::vector<double> points(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) points[i] = ds.x(i);
  const fairmle::WeightedKde kde(points);
  double x = -3.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(kde.log_density(x));
    x = x > 3.0 ? -3.0 : x + 1e-3;
  }
}
BENCHMARK(BM_KdeLogDensity)->Arg(5000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
