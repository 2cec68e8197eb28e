#pragma once

#include "hofsurf/checkpoint.hpp"
#include "hofsurf/geometry.hpp"
#include "hofsurf/metrics.hpp"
#include "hofsurf/training.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

// Self-contained correctness checks. Each one builds its own inputs from a
// fixed seed, compares against an independent oracle and reports a single
// pass/fail verdict with the measured numbers.

namespace hofsurf::checks {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

// "PASS  name  detail  (1.23 s)"
std::string format_result(const CheckResult& r);

// Central differences (h = 1e-5) against backward() for every autodiff op,
// 50 trials each, relative error < 1e-6; and for total_loss through a tiny
// learned-code model, relative error < 1e-4. Must finish within 30 s.
CheckResult gradient_fidelity(std::size_t trials = 50, std::uint64_t seed = 1);

// eval_chamfer and chamfer_loss equal an O(n^2) scan exactly on random pairs.
CheckResult chamfer_oracle(std::size_t pairs = 1000, std::size_t max_points = 500,
                           std::uint64_t seed = 2);

// Chamfer symmetry and permutation invariance, cosine sign-flip invariance
// and range, and total = l_cd * cd + l_cos * cos on every training step.
CheckResult loss_identities(std::uint64_t seed = 3);

// Sphere sampler moments at n = 100000 and cube face fractions at n = 60000.
CheckResult sampler_statistics(std::uint64_t seed = 4);

// PCA normals on 5000 sphere samples with k = 30 are radial for >= 99%.
CheckResult pca_oracle(std::uint64_t seed = 5);

// Self-evaluation, F-score monotonicity and the single-pair Chamfer values.
CheckResult metric_anchors(std::uint64_t seed = 6);

// Identical seeds give identical logs and PLY bytes; a checkpointed and
// resumed run matches an uninterrupted one bit for bit.
CheckResult determinism_persistence(std::uint64_t seed = 7);

// The default mapping network packs to 17798 values.
CheckResult parameter_count_anchor();

// --- torus overfit ----------------------------------------------------------

struct TorusRunConfig {
    double major = 0.3;
    double minor = 0.12;
    std::size_t ring_segments = 48;
    std::size_t tube_segments = 24;
    std::size_t iterations = 2000;
    double learning_rate = 1e-4;
    std::size_t samples_per_iter = 1000;
    std::size_t gt_samples = 10000;
    // With a single learned code theta = W h + b for any head width, so a
    // narrow head fits the same family of mapping networks much faster.
    std::size_t head_hidden = 64;
    std::size_t code_dim = 64;
    std::uint64_t seed = 11;
};

struct TorusRun {
    TorusRunConfig config;
    TriangleMesh mesh;
    std::vector<TrainRecord> records;
    std::optional<Checkpoint> checkpoint;
    Reconstruction coarse; // 1000 samples
    Reconstruction fine;   // 10000 samples
    EvalReport coarse_eval;
    EvalReport fine_eval;
    double seconds = 0.0;
};

TorusRun run_torus_overfit(const TorusRunConfig& cfg = {});

// Both reconstructions evaluate with symmetric Chamfer within 25% of each
// other and the fine one covers the ground truth at least as well.
CheckResult figure1_workflow(const TorusRun& run);

// Final training Chamfer < 25% of iteration 10, eval cosine > 0.80.
CheckResult desk_convergence(const TorusRun& run);

// Everything except the torus run, in criterion order.
std::vector<CheckResult> run_selftest();

} // namespace hofsurf::checks
