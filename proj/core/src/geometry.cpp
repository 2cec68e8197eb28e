#include "hofsurf/geometry.hpp"

#include "hofsurf/error.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <utility>

namespace hofsurf {

Tensor PointCloud::to_tensor() const {
    if (points.empty()) throw DomainError("cannot convert an empty point cloud to a tensor");
    std::vector<double> data;
    data.reserve(points.size() * 3);
    for (const Vec3& p : points) {
        data.push_back(p.x());
        data.push_back(p.y());
        data.push_back(p.z());
    }
    return Tensor({points.size(), 3}, std::move(data));
}

PointCloud PointCloud::from_tensor(const Tensor& t) {
    if (t.rank() != 2 || t.dim(1) != 3) {
        throw DimensionError("point cloud tensor must be [n x 3], got " + to_string(t.shape()));
    }
    PointCloud cloud;
    cloud.points.reserve(t.dim(0));
    for (std::size_t i = 0; i < t.dim(0); ++i) {
        cloud.points.emplace_back(t.at(i, 0), t.at(i, 1), t.at(i, 2));
    }
    return cloud;
}

void OrientedPointCloud::validate() const {
    if (points.size() != normals.size()) {
        throw DomainError("oriented cloud has " + std::to_string(points.size()) + " points but " +
                          std::to_string(normals.size()) + " normals");
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!points[i].allFinite() || !normals[i].allFinite()) {
            throw DomainError("non-finite entry at point " + std::to_string(i));
        }
        if (std::fabs(normals[i].norm() - 1.0) > 1e-9) {
            throw DomainError("normal " + std::to_string(i) + " is not unit length");
        }
    }
}

namespace {

Vec3 raw_cross(const std::vector<Vec3>& v, const Face& f) {
    return (v[f[1]] - v[f[0]]).cross(v[f[2]] - v[f[0]]);
}

} // namespace

TriangleMesh TriangleMesh::build(std::vector<Vec3> vertices, std::vector<Face> faces,
                                 std::size_t* dropped) {
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        if (!vertices[i].allFinite()) {
            throw DomainError("vertex " + std::to_string(i) + " has a non-finite coordinate");
        }
    }
    TriangleMesh mesh;
    mesh.vertices_ = std::move(vertices);
    mesh.faces_.reserve(faces.size());
    std::size_t skipped = 0;
    for (std::size_t i = 0; i < faces.size(); ++i) {
        for (std::uint32_t idx : faces[i]) {
            if (idx >= mesh.vertices_.size()) {
                throw DomainError("face " + std::to_string(i) + " references vertex " +
                                  std::to_string(idx) + " of " +
                                  std::to_string(mesh.vertices_.size()));
            }
        }
        if (0.5 * raw_cross(mesh.vertices_, faces[i]).norm() < kDegenerateAreaTolerance) {
            ++skipped;
            continue;
        }
        mesh.faces_.push_back(faces[i]);
    }
    if (dropped) *dropped = skipped;
    return mesh;
}

double TriangleMesh::face_area(std::size_t face) const {
    return 0.5 * raw_cross(vertices_, faces_.at(face)).norm();
}

double TriangleMesh::surface_area() const {
    double total = 0.0;
    for (std::size_t f = 0; f < faces_.size(); ++f) total += face_area(f);
    return total;
}

Vec3 TriangleMesh::centroid() const {
    if (vertices_.empty()) throw DomainError("centroid of an empty mesh");
    Vec3 sum = Vec3::Zero();
    for (const Vec3& v : vertices_) sum += v;
    return sum / static_cast<double>(vertices_.size());
}

Vec3 face_normal(const TriangleMesh& mesh, std::size_t face) {
    if (face >= mesh.face_count()) {
        throw DomainError("face index " + std::to_string(face) + " out of range");
    }
    const Vec3 n = raw_cross(mesh.vertices(), mesh.faces()[face]);
    const double len = n.norm();
    if (0.5 * len < kDegenerateAreaTolerance) {
        throw DomainError("face " + std::to_string(face) + " is degenerate");
    }
    return n / len;
}

TriangleMesh rotated(const TriangleMesh& mesh, const Eigen::Matrix3d& rotation,
                     const Vec3& center) {
    std::vector<Vec3> vertices;
    vertices.reserve(mesh.vertex_count());
    for (const Vec3& v : mesh.vertices()) vertices.push_back(rotation * (v - center) + center);
    return TriangleMesh::build(std::move(vertices), mesh.faces());
}

TriangleMesh make_cube(double half_extent) {
    const double h = half_extent;
    std::vector<Vec3> v = {{-h, -h, -h}, {h, -h, -h}, {h, h, -h}, {-h, h, -h},
                           {-h, -h, h},  {h, -h, h},  {h, h, h},  {-h, h, h}};
    // Two triangles per side, counter-clockwise seen from outside.
    std::vector<Face> f = {{0, 2, 1}, {0, 3, 2},  // -z
                           {4, 5, 6}, {4, 6, 7},  // +z
                           {0, 1, 5}, {0, 5, 4},  // -y
                           {3, 7, 6}, {3, 6, 2},  // +y
                           {0, 4, 7}, {0, 7, 3},  // -x
                           {1, 2, 6}, {1, 6, 5}}; // +x
    return TriangleMesh::build(std::move(v), std::move(f));
}

TriangleMesh make_icosphere(std::size_t subdivisions, double radius) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
                           {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
                           {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (Vec3& p : v) p.normalize();
    std::vector<Face> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                           {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                           {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                           {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    for (std::size_t s = 0; s < subdivisions; ++s) {
        std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoints;
        auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
            const auto key = std::minmax(a, b);
            auto it = midpoints.find(key);
            if (it != midpoints.end()) return it->second;
            v.push_back(((v[a] + v[b]) * 0.5).normalized());
            const auto idx = static_cast<std::uint32_t>(v.size() - 1);
            midpoints.emplace(key, idx);
            return idx;
        };
        std::vector<Face> next;
        next.reserve(f.size() * 4);
        for (const Face& tri : f) {
            const std::uint32_t a = midpoint(tri[0], tri[1]);
            const std::uint32_t b = midpoint(tri[1], tri[2]);
            const std::uint32_t c = midpoint(tri[2], tri[0]);
            next.push_back({tri[0], a, c});
            next.push_back({tri[1], b, a});
            next.push_back({tri[2], c, b});
            next.push_back({a, b, c});
        }
        f = std::move(next);
    }
    for (Vec3& p : v) p *= radius;
    return TriangleMesh::build(std::move(v), std::move(f));
}

TriangleMesh make_torus(double major, double minor, std::size_t ring_segments,
                        std::size_t tube_segments) {
    if (ring_segments < 3 || tube_segments < 3 || minor <= 0.0 || major <= minor) {
        throw DomainError("torus needs >= 3 segments and major > minor > 0");
    }
    const double two_pi = 2.0 * std::numbers::pi;
    std::vector<Vec3> v;
    v.reserve(ring_segments * tube_segments);
    for (std::size_t i = 0; i < ring_segments; ++i) {
        const double u = two_pi * static_cast<double>(i) / static_cast<double>(ring_segments);
        for (std::size_t j = 0; j < tube_segments; ++j) {
            const double w = two_pi * static_cast<double>(j) / static_cast<double>(tube_segments);
            const double r = major + minor * std::cos(w);
            v.emplace_back(r * std::cos(u), r * std::sin(u), minor * std::sin(w));
        }
    }
    auto at = [&](std::size_t i, std::size_t j) {
        return static_cast<std::uint32_t>((i % ring_segments) * tube_segments + (j % tube_segments));
    };
    std::vector<Face> f;
    f.reserve(2 * ring_segments * tube_segments);
    for (std::size_t i = 0; i < ring_segments; ++i) {
        for (std::size_t j = 0; j < tube_segments; ++j) {
            f.push_back({at(i, j), at(i + 1, j), at(i + 1, j + 1)});
            f.push_back({at(i, j), at(i + 1, j + 1), at(i, j + 1)});
        }
    }
    return TriangleMesh::build(std::move(v), std::move(f));
}

} // namespace hofsurf
