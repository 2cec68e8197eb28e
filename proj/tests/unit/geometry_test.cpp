#include "support.hpp"

#include "hofsurf/error.hpp"
#include "hofsurf/geometry.hpp"
#include "hofsurf/kdtree.hpp"
#include "hofsurf/normals.hpp"
#include "hofsurf/sampling.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>

using namespace hofsurf;
using namespace testsupport;

namespace {

TriangleMesh single_triangle(double s = 1.0) {
    return TriangleMesh::build({Vec3(0, 0, 0), Vec3(s, 0, 0), Vec3(0, s, 0)}, {Face{0, 1, 2}});
}

} // namespace

TEST(SphereSampler, PointsAreUnitLength) {
    for (const Vec3& p : sample_sphere_uniform(5000, 1)) EXPECT_NEAR(p.norm(), 1.0, 1e-12);
}

TEST(SphereSampler, PrefixStableAndSeeded) {
    const auto a = sample_sphere_uniform(100, 7);
    const auto b = sample_sphere_uniform(1000, 7);
    const auto c = sample_sphere_uniform(100, 8);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
    EXPECT_NE(a[0], c[0]);
}

TEST(SphereSampler, MomentsAndHemisphere) {
    const auto pts = sample_sphere_uniform(100000, 2);
    Vec3 mean = Vec3::Zero();
    std::size_t upper = 0;
    for (const Vec3& p : pts) {
        mean += p;
        upper += p.z() > 0.0 ? 1 : 0;
    }
    mean /= static_cast<double>(pts.size());
    for (int k = 0; k < 3; ++k) EXPECT_LT(std::fabs(mean[k]), 0.02);
    EXPECT_NEAR(static_cast<double>(upper) / pts.size(), 0.5, 0.01);
}

TEST(MeshSampler, CubeSidesEquallyLikely) {
    const TriangleMesh cube = make_cube(0.5);
    const auto cloud = sample_mesh_uniform(cube, 60000, 3);
    std::array<std::size_t, 6> counts{};
    for (const Vec3& n : cloud.normals) {
        int axis = 0;
        n.cwiseAbs().maxCoeff(&axis);
        counts[2 * axis + (n[axis] > 0 ? 1 : 0)]++;
    }
    for (std::size_t c : counts) EXPECT_NEAR(static_cast<double>(c) / 60000.0, 1.0 / 6.0, 0.01);
}

TEST(MeshSampler, SingleTrianglePlanar) {
    const auto cloud = sample_mesh_uniform(single_triangle(), 2000, 4);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        EXPECT_NEAR(cloud.points[i].z(), 0.0, 1e-9);
        EXPECT_GE(cloud.points[i].x(), -1e-12);
        EXPECT_GE(cloud.points[i].y(), -1e-12);
        EXPECT_LE(cloud.points[i].x() + cloud.points[i].y(), 1.0 + 1e-12);
    }
}

TEST(MeshSampler, NormalsAreFaceNormals) {
    const TriangleMesh sphere = make_icosphere(2);
    std::vector<std::size_t> faces;
    const auto cloud = sample_mesh_uniform(sphere, 3000, 5, &faces);
    ASSERT_EQ(faces.size(), cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        EXPECT_EQ(cloud.normals[i], face_normal(sphere, faces[i]));
    }
}

TEST(MeshSampler, PrefixStable) {
    const TriangleMesh cube = make_cube();
    const auto a = sample_mesh_uniform(cube, 50, 6);
    const auto b = sample_mesh_uniform(cube, 500, 6);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.points[i], b.points[i]);
}

TEST(FaceNormal, WindingAndScale) {
    EXPECT_EQ(face_normal(single_triangle(), 0), Vec3(0, 0, 1));
    const TriangleMesh rev = TriangleMesh::build({Vec3(0, 0, 0), Vec3(0, 1, 0), Vec3(1, 0, 0)}, {Face{0, 1, 2}});
    EXPECT_EQ(face_normal(rev, 0), Vec3(0, 0, -1));
    EXPECT_EQ(face_normal(single_triangle(7.0), 0), Vec3(0, 0, 1));
    EXPECT_THROW(face_normal(single_triangle(), 1), DomainError);
}

TEST(Mesh, BuildDropsDegenerateFacesAndChecksIndices) {
    std::size_t dropped = 0;
    const TriangleMesh m = TriangleMesh::build({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(2, 0, 0)},
                                               {Face{0, 1, 2}, Face{0, 1, 3}}, &dropped);
    EXPECT_EQ(m.face_count(), 1u);
    EXPECT_EQ(dropped, 1u);
    EXPECT_THROW(TriangleMesh::build({Vec3(0, 0, 0)}, {Face{0, 1, 2}}), DomainError);
}

TEST(Mesh, PrimitivesAreClosedAndOutward) {
    const TriangleMesh cube = make_cube(0.5);
    EXPECT_EQ(cube.vertex_count(), 8u);
    EXPECT_EQ(cube.face_count(), 12u);
    EXPECT_NEAR(cube.surface_area(), 6.0, 1e-12);
    // Both are convex, so outward normals point away from the centroid.
    for (const TriangleMesh& m : {cube, make_icosphere(1)}) {
        const Vec3 c = m.centroid();
        for (std::size_t f = 0; f < m.face_count(); ++f) {
            const auto& tri = m.faces()[f];
            const Vec3 mid = (m.vertices()[tri[0]] + m.vertices()[tri[1]] + m.vertices()[tri[2]]) / 3.0;
            EXPECT_GT(face_normal(m, f).dot(mid - c), 0.0);
        }
    }
    EXPECT_NEAR(make_torus(0.3, 0.1, 64, 32).surface_area(), 4 * M_PI * M_PI * 0.3 * 0.1, 0.01);
}

TEST(KdTree, StoredPointIsItsOwnNeighbour) {
    std::mt19937_64 rng(20);
    const auto pts = random_points(100, rng);
    const KdTree tree(pts);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Neighbor n = tree.nearest(pts[i]);
        EXPECT_EQ(n.index, i);
        EXPECT_EQ(n.squared_distance, 0.0);
    }
}

TEST(KdTree, MatchesExhaustiveScan) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 5; ++trial) {
        const auto pts = random_points(500, rng);
        const auto queries = random_points(200, rng, 1.5);
        const KdTree tree(pts);
        for (const Vec3& q : queries) {
            const Nearest want = brute_nearest(pts, q);
            const Neighbor got = tree.nearest(q);
            EXPECT_EQ(got.index, want.index);
            EXPECT_EQ(got.squared_distance, want.d2);
        }
    }
}

TEST(KdTree, TiesGoToLowerIndex) {
    const std::vector<Vec3> pts{Vec3(1, 0, 0), Vec3(-1, 0, 0), Vec3(0, 1, 0), Vec3(1, 0, 0)};
    const KdTree tree(pts);
    EXPECT_EQ(tree.nearest(Vec3(0, 0, 0)).index, 0u);
    EXPECT_EQ(tree.nearest(Vec3(2, 0, 0)).index, 0u);
    // Lattice points produce many exact ties.
    std::vector<Vec3> grid;
    for (int x = 0; x < 6; ++x)
        for (int y = 0; y < 6; ++y)
            for (int z = 0; z < 6; ++z) grid.emplace_back(x, y, z);
    const KdTree g(grid);
    for (double qx = -0.5; qx < 6; qx += 0.5) {
        const Vec3 q(qx, 2.5, 1.5);
        EXPECT_EQ(g.nearest(q).index, brute_nearest(grid, q).index);
    }
}

TEST(KdTree, KNearestMatchesSortedScan) {
    std::mt19937_64 rng(22);
    const auto pts = random_points(300, rng);
    const KdTree tree(pts);
    for (const Vec3& q : random_points(30, rng)) {
        std::vector<std::pair<double, std::size_t>> all;
        for (std::size_t i = 0; i < pts.size(); ++i) all.emplace_back(squared_distance(pts[i], q), i);
        std::sort(all.begin(), all.end());
        const auto got = tree.k_nearest(q, 12);
        ASSERT_EQ(got.size(), 12u);
        for (std::size_t k = 0; k < got.size(); ++k) EXPECT_EQ(got[k].index, all[k].second);
    }
}

TEST(PcaNormals, SphereNormalsAreRadial) {
    const auto pts = sample_sphere_uniform(5000, 23);
    const auto est = estimate_normals_pca(PointCloud{pts}, 30);
    std::size_t good = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) good += std::fabs(est.normals[i].dot(pts[i])) > 0.99 ? 1 : 0;
    EXPECT_GE(static_cast<double>(good) / pts.size(), 0.99);
}

TEST(PcaNormals, CoplanarPoints) {
    std::mt19937_64 rng(24);
    std::uniform_real_distribution<double> u(-1, 1);
    const Vec3 a = Vec3(1, 2, -1).normalized();
    const Vec3 b = a.cross(Vec3(0, 0, 1)).normalized();
    const Vec3 n = a.cross(b);
    std::vector<Vec3> pts;
    for (int i = 0; i < 200; ++i) pts.push_back(u(rng) * a + u(rng) * b);
    const auto est = estimate_normals_pca(PointCloud{pts}, 10);
    for (const Vec3& e : est.normals) EXPECT_NEAR(std::fabs(e.dot(n)), 1.0, 1e-6);
}

TEST(PcaNormals, ThreeNeighboursGiveCrossProduct) {
    const std::vector<Vec3> pts{Vec3(0, 0, 0), Vec3(1, 0, 0.2), Vec3(0, 1, 0.5), Vec3(9, 9, 9)};
    const auto est = estimate_normals_pca(PointCloud{pts}, 3);
    const Vec3 want = (pts[1] - pts[0]).cross(pts[2] - pts[0]).normalized();
    EXPECT_NEAR(std::fabs(est.normals[0].dot(want)), 1.0, 1e-12);
}

TEST(PcaNormals, RejectsTooFewPoints) {
    EXPECT_THROW(estimate_normals_pca(PointCloud{{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)}}, 3),
                 DomainError);
}

TEST(OrientedCloud, ValidateChecksUnitNormals) {
    OrientedPointCloud c;
    c.points = {Vec3(0, 0, 0)};
    c.normals = {Vec3(0, 0, 2)};
    EXPECT_THROW(c.validate(), DomainError);
    c.normals = {Vec3(0, 0, 1)};
    EXPECT_NO_THROW(c.validate());
    c.points.push_back(Vec3(1, 1, 1));
    EXPECT_THROW(c.validate(), DomainError);
}
