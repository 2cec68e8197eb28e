#pragma once

#include "hofsurf/geometry.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace hofsurf {

// How the F-score threshold is compared against nearest-neighbour distances.
enum class TauMode {
    Squared,   // d^2 <= tau
    Euclidean, // d <= tau
};

struct EvalConfig {
    std::size_t n_pred_samples = 2500;
    std::size_t n_gt_samples = 10000;
    // Ground-truth points used for cosine similarity: a prefix of the
    // n_gt_samples draw (itself a uniform sample).
    std::size_t n_cosine_samples = 2500;
    double tau = 1e-4;
    TauMode tau_mode = TauMode::Squared;
    // Applied to Chamfer values in formatted output only.
    double report_scale = 1000.0;

    void validate() const;
};

struct EvalReport {
    double chamfer_sym = 0.0;
    double chamfer_pred_to_gt = 0.0;
    double chamfer_gt_to_pred = 0.0;
    double fscore_tau = 0.0;  // percent
    double fscore_2tau = 0.0; // percent
    double cosine_similarity = 0.0;
};

// Asymmetric Chamfer distance with squared distances:
//   CD(X, Y) = mean_x min_y |x - y|^2
double eval_chamfer(const PointCloud& x, const PointCloud& y);

// (CD(X, Y) + CD(Y, X)) / 2
double eval_chamfer_symmetric(const PointCloud& x, const PointCloud& y);

struct FScore {
    double precision = 0.0; // fraction
    double recall = 0.0;    // fraction
    double fscore = 0.0;    // percent, 0 when precision + recall == 0
};

FScore eval_fscore_detail(const PointCloud& pred, const PointCloud& gt, double tau,
                          TauMode mode = TauMode::Squared);
double eval_fscore(const PointCloud& pred, const PointCloud& gt, double tau,
                   TauMode mode = TauMode::Squared);

// mean over gt of |n_gt . n_nearest_pred|, nearest by squared distance with
// lowest-index ties.
double eval_cosine_similarity(const OrientedPointCloud& gt, const OrientedPointCloud& pred);

// Samples the ground truth from `gt_mesh` (n_gt_samples with `seed`) and
// computes every metric. Stored values are unscaled.
EvalReport evaluate(const OrientedPointCloud& pred, const TriangleMesh& gt_mesh,
                    const EvalConfig& cfg, std::uint64_t seed);

// Same as evaluate() against an already sampled ground truth.
EvalReport evaluate_against(const OrientedPointCloud& pred, const OrientedPointCloud& gt,
                            const EvalConfig& cfg);

// --- report emission --------------------------------------------------------

struct EvalRow {
    std::string id;
    std::string category;
    EvalReport report;
};

// One row per object plus aggregate rows: "mean/instance" over all rows and
// "mean/<category>" per category followed by "mean/category" (mean of
// category means) when categories are present. Chamfer columns are scaled.
std::string format_eval_csv(const std::vector<EvalRow>& rows, const EvalConfig& cfg);
std::string format_eval_json(const std::vector<EvalRow>& rows, const EvalConfig& cfg);

} // namespace hofsurf
