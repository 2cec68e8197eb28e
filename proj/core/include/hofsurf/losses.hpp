#pragma once

#include "hofsurf/autodiff.hpp"
#include "hofsurf/geometry.hpp"
#include "hofsurf/kdtree.hpp"
#include "hofsurf/model.hpp"

#include <cstddef>

namespace hofsurf {

struct LossWeights {
    double lambda_cd = 1.0;
    double lambda_cos = 0.1;

    void validate() const;
};

struct LossReport {
    double chamfer = 0.0;
    double cosine = 0.0;
    // lambda_cd * chamfer + lambda_cos * cosine, evaluated in that order.
    double total = 0.0;
    // Predicted planes left out of the cosine term for having ||v|| < 1e-12.
    std::size_t degenerate_count = 0;
};

// Symmetric Chamfer loss with plain (not squared) Euclidean distances:
//
//   L = mean_x min_y |x - y| + mean_y min_x |x - y|
//
// Both operands are [n x 3] nodes on the same tape; either may be a constant.
// Nearest pairs are selected by squared distance and held fixed for the
// gradient, which is zero for pairs closer than 1e-12. Optional prebuilt
// indices over the values of `x` / `y` skip rebuilding a tree.
ad::Var chamfer_loss(ad::Var x, ad::Var y, const KdTree* x_index = nullptr,
                     const KdTree* y_index = nullptr);

struct CosineLoss {
    ad::Var value;
    std::size_t degenerate_count = 0;
};

// One-way cosine surface loss from ground truth to prediction:
//
//   L = 1 - mean_{x in gt} | n_x . unit(v_{nn(x)}) |
//
// nn(x) is the non-degenerate predicted position closest to x in squared
// distance; matching is constant for the gradient, which reaches `direction`
// through the normalization. Throws DomainError when every predicted
// direction is degenerate.
CosineLoss cosine_surface_loss(const OrientedPointCloud& gt, ad::Var position, ad::Var direction);

struct TotalLoss {
    ad::Var value;
    LossReport report;
};

// lambda_cd * chamfer(position, gt points) + lambda_cos * cosine(gt, pred).
// A zero lambda_cos skips the cosine term entirely. `gt_index` is an optional
// prebuilt tree over gt.points.
TotalLoss total_loss(const OrientedPointCloud& gt, const MappingOutput& pred,
                     const LossWeights& weights, const KdTree* gt_index = nullptr);

} // namespace hofsurf
