#include "hofsurf/normals.hpp"

#include "hofsurf/error.hpp"
#include "hofsurf/kdtree.hpp"
#include "hofsurf/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <string>

namespace hofsurf {

SymmetricEigen3 symmetric_eigen3(const Eigen::Matrix3d& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(m);
    if (solver.info() != Eigen::Success) throw NumericalError("3x3 eigensolver did not converge");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

OrientedPointCloud estimate_normals_pca(const PointCloud& cloud, std::size_t k) {
    if (k < 3) throw DomainError("PCA normals need k >= 3");
    if (cloud.size() <= k) {
        throw DomainError("PCA normals need more than k = " + std::to_string(k) +
                          " points, got " + std::to_string(cloud.size()));
    }
    const KdTree tree(cloud.points);
    OrientedPointCloud out;
    out.points = cloud.points;
    out.normals.resize(cloud.size());
    parallel_for(cloud.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto neighbors = tree.k_nearest(cloud.points[i], k);
            Vec3 mean = Vec3::Zero();
            for (const Neighbor& nb : neighbors) mean += cloud.points[nb.index];
            mean /= static_cast<double>(neighbors.size());
            Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
            for (const Neighbor& nb : neighbors) {
                const Vec3 d = cloud.points[nb.index] - mean;
                cov += d * d.transpose();
            }
            cov /= static_cast<double>(neighbors.size());
            out.normals[i] = symmetric_eigen3(cov).vectors.col(0).normalized();
        }
    });
    return out;
}

} // namespace hofsurf
