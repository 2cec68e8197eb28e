#include "hofsurf/autodiff.hpp"
#include "hofsurf/kdtree.hpp"
#include "hofsurf/losses.hpp"
#include "hofsurf/metrics.hpp"
#include "hofsurf/model.hpp"
#include "hofsurf/sampling.hpp"
#include "hofsurf/training.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace hofsurf;

namespace {

std::vector<Vec3> cloud(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Vec3> out(n);
    for (Vec3& p : out) p = Vec3(u(rng), u(rng), u(rng));
    return out;
}

Tensor random_tensor(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Tensor t({rows, cols});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = g(rng);
    return t;
}

} // namespace

// Hidden layer of the mapping net, forward and backward.
static void BM_MatmulForwardBackward(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Tensor a = random_tensor(n, 128, 1);
    const Tensor b = random_tensor(128, 128, 2);
    for (auto _ : state) {
        ad::Tape tape;
        const ad::Var x = tape.leaf(a);
        const ad::Var w = tape.leaf(b);
        tape.backward(ad::sum(ad::matmul(x, w)));
        benchmark::DoNotOptimize(tape.grad(w)[0]);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_MatmulForwardBackward)->Arg(1000)->Arg(2500)->Unit(benchmark::kMillisecond);

static void BM_KdTreeBuild(benchmark::State& state) {
    const auto pts = cloud(static_cast<std::size_t>(state.range(0)), 3);
    for (auto _ : state) {
        KdTree tree(pts);
        benchmark::DoNotOptimize(tree);
    }
}
BENCHMARK(BM_KdTreeBuild)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

static void BM_KdTreeNearest(benchmark::State& state) {
    const KdTree tree(cloud(static_cast<std::size_t>(state.range(0)), 4));
    const auto queries = cloud(1000, 5);
    for (auto _ : state) {
        for (const Vec3& q : queries) benchmark::DoNotOptimize(tree.nearest(q));
    }
    state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_KdTreeNearest)->Arg(10000)->Arg(100000);

static void BM_ChamferLoss(benchmark::State& state) {
    const Tensor x = PointCloud{cloud(1000, 6)}.to_tensor();
    const auto ypts = cloud(static_cast<std::size_t>(state.range(0)), 7);
    const Tensor y = PointCloud{ypts}.to_tensor();
    const KdTree yi(ypts);
    for (auto _ : state) {
        ad::Tape tape;
        const ad::Var xv = tape.leaf(x);
        tape.backward(chamfer_loss(xv, tape.constant(y), nullptr, &yi));
        benchmark::DoNotOptimize(tape.grad(xv)[0]);
    }
}
BENCHMARK(BM_ChamferLoss)->Arg(10000)->Unit(benchmark::kMillisecond);

static void BM_EvalChamfer(benchmark::State& state) {
    const PointCloud x{cloud(2500, 8)};
    const PointCloud y{cloud(10000, 9)};
    for (auto _ : state) benchmark::DoNotOptimize(eval_chamfer_symmetric(x, y));
}
BENCHMARK(BM_EvalChamfer)->Unit(benchmark::kMillisecond);

// One optimizer step of the default learned-code model on a torus.
static void BM_TrainingStep(benchmark::State& state) {
    EncoderSpec es;
    es.object_count = 1;
    es.head_hidden = static_cast<std::size_t>(state.range(0));
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.iterations_per_object = 1u << 30;
    cfg.learning_rate = 1e-5;
    Trainer trainer(HofModel::initialize(MappingNetSpec{}, es, 1),
                    {{"torus", make_torus(0.3, 0.1, 48, 24), ObjectCode{0}}}, cfg);
    for (auto _ : state) benchmark::DoNotOptimize(trainer.step());
}
BENCHMARK(BM_TrainingStep)->Arg(64)->Arg(1024)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
