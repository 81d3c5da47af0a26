// Parallel kernels against their serial references on synthetic scenes.

#include <vector>

#include <benchmark/benchmark.h>

#include "glass3d/centerness.hpp"
#include "glass3d/projection.hpp"
#include "glass3d/synth.hpp"

using namespace glass3d;

namespace {

const SyntheticScene& scene(int planes) {
    static std::vector<SyntheticScene> cache(kMaxPlanesPerImage + 1);
    SyntheticScene& s = cache[static_cast<std::size_t>(planes)];
    if (s.instances.empty()) {
        SceneSpec spec;
        spec.seed = 123;
        spec.category = SceneCategory::multi_angle;
        spec.plane_count = planes;
        spec.compute_centerness = false;
        s = generate_scene(spec);
    }
    return s;
}

std::vector<Plane> planes_of(const SyntheticScene& s) {
    std::vector<Plane> out;
    for (const auto& inst : s.instances) out.push_back(inst.plane);
    return out;
}

void BM_RenderDepth(benchmark::State& state) {
    const SyntheticScene& s = scene(static_cast<int>(state.range(0)));
    const std::vector<Plane> planes = planes_of(s);
    for (auto _ : state) benchmark::DoNotOptimize(render_depth(s.masks, planes, s.spec.intrinsics));
}

void BM_RenderDepthReference(benchmark::State& state) {
    const SyntheticScene& s = scene(static_cast<int>(state.range(0)));
    const std::vector<Plane> planes = planes_of(s);
    for (auto _ : state) benchmark::DoNotOptimize(reference::render_depth(s.masks, planes, s.spec.intrinsics));
}

void BM_Centerness(benchmark::State& state) {
    const SyntheticScene& s = scene(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(centerness_map(s.masks));
}

// The brute-force reference is quadratic in instance size; keep it to one scene.
void BM_CenternessReference(benchmark::State& state) {
    const SyntheticScene& s = scene(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(reference::centerness_map(s.masks));
}

}  // namespace

BENCHMARK(BM_RenderDepth)->Arg(1)->Arg(6)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RenderDepthReference)->Arg(1)->Arg(6)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Centerness)->Arg(1)->Arg(6)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CenternessReference)->Arg(6)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
