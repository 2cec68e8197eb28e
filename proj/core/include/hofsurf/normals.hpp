#pragma once

#include "hofsurf/geometry.hpp"

#include <Eigen/Core>

#include <cstddef>

namespace hofsurf {

inline constexpr std::size_t kDefaultPcaNeighbors = 30;

struct SymmetricEigen3 {
    Eigen::Vector3d values;  // ascending
    Eigen::Matrix3d vectors; // column i pairs with values[i]
};

// Eigendecomposition of a symmetric 3x3 matrix.
SymmetricEigen3 symmetric_eigen3(const Eigen::Matrix3d& m);

// PCA normal estimation: for each point, the eigenvector of the smallest
// eigenvalue of the covariance of its k nearest neighbours (the point itself
// included). Normal orientation is arbitrary. Requires k >= 3 and N > k.
OrientedPointCloud estimate_normals_pca(const PointCloud& cloud,
                                        std::size_t k = kDefaultPcaNeighbors);

} // namespace hofsurf
