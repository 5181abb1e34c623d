#include <benchmark/benchmark.h>

#include "prefalign/backend.hpp"
#include "prefalign/compose.hpp"
#include "prefalign/encode.hpp"
#include "prefalign/mllm/parse.hpp"
#include "prefalign/rng.hpp"

using namespace prefalign;

namespace {

Matrix gaussian(SeededRng& rng, int rows, int cols) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = rng.gaussian();
  }
  return m;
}

struct Scene {
  LatentFeatureMap z;
  encode::EmbeddingGroup group;
  layout::LayoutPlan plan;
  compose::AttentionWeights weights;

  Scene(int side, int entities) {
    SeededRng rng(1);
    z.height = z.width = side;
    z.cells = gaussian(rng, side * side, 8);
    weights = {gaussian(rng, 8, 16), gaussian(rng, 32, 16), gaussian(rng, 32, 8)};
    const encode::MockTextEncoder enc;
    group.complex = enc.encode("a lone boat on a dark lake under fog");
    group.background = enc.encode("dark lakeside");
    std::vector<layout::Region> regions;
    for (int e = 0; e < entities; ++e) {
      group.per_entity.push_back(enc.encode("entity " + std::to_string(e)));
      const double x = 0.1 * e;
      regions.push_back({x, x, x + 0.4, x + 0.4});
    }
    plan = layout::order_plan(regions, std::vector<std::string>(regions.size(), "p"));
  }
};

void BM_CrossAttention(benchmark::State& state) {
  const Scene s(static_cast<int>(state.range(0)), 0);
  for (auto _ : state) benchmark::DoNotOptimize(compose::cross_attention(s.z, s.group.complex, s.weights));
}
BENCHMARK(BM_CrossAttention)->Arg(8)->Arg(32)->Arg(64);

void BM_ModulatedAttention(benchmark::State& state) {
  const Scene s(32, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(compose::modulated_attention(s.z, s.group, s.plan, s.weights, 0.2));
  }
}
BENCHMARK(BM_ModulatedAttention)->Arg(1)->Arg(4)->Arg(8);

void BM_ToySample(benchmark::State& state) {
  const Scene s(8, 3);
  backend::ToyDenoiser toy;
  backend::SamplerConfig cfg;
  cfg.steps = static_cast<int>(state.range(0));
  encode::EmbeddingGroup group = s.group;
  group.unconditional = encode::MockTextEncoder().encode("");
  for (auto _ : state) benchmark::DoNotOptimize(backend::sample(toy, {group, s.plan, 0.2}, cfg));
}
BENCHMARK(BM_ToySample)->Arg(30);

void BM_ParseLayout(benchmark::State& state) {
  std::string reply = "Reasoning about placement.\nLayout:\n";
  for (int e = 0; e < 8; ++e) {
    reply += "- entity " + std::to_string(e) + ": [0.1, 0.2, 0.6, 0.9]; entity " + std::to_string(e) +
             " in the middle of the frame\n";
  }
  for (auto _ : state) benchmark::DoNotOptimize(mllm::parse_layout(reply));
}
BENCHMARK(BM_ParseLayout);

void BM_ParseEnrichment(benchmark::State& state) {
  const std::string reply =
      "Entities:\n- boat: a weathered wooden rowing boat\n- fog bank: a dense low fog bank\n"
      "Complex prompt: an oil painting of a lone boat on a dark lake\n"
      "Background prompt: foggy dark lakeside";
  for (auto _ : state) benchmark::DoNotOptimize(mllm::parse_enrichment(reply, "a boat on a lake"));
}
BENCHMARK(BM_ParseEnrichment);

}  // namespace
BENCHMARK_MAIN();
