#pragma once

#include "hofsurf/tensor.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hofsurf {

using Vec3 = Eigen::Vector3d;

// Squared Euclidean distance with a fixed summation order. Every nearest
// neighbour search and every metric goes through this so that accelerated
// and exhaustive paths agree bit for bit.
inline double squared_distance(const Vec3& a, const Vec3& b) noexcept {
    const double dx = a.x() - b.x();
    const double dy = a.y() - b.y();
    const double dz = a.z() - b.z();
    return dx * dx + dy * dy + dz * dz;
}

// Unordered set of 3-D points in normalized model space.
struct PointCloud {
    std::vector<Vec3> points;

    std::size_t size() const noexcept { return points.size(); }
    bool empty() const noexcept { return points.empty(); }

    // [n x 3] tensor, one row per point.
    Tensor to_tensor() const;
    static PointCloud from_tensor(const Tensor& t);
};

// Points paired with unit normals.
struct OrientedPointCloud {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;

    std::size_t size() const noexcept { return points.size(); }
    bool empty() const noexcept { return points.empty(); }

    PointCloud positions() const { return PointCloud{points}; }

    // Throws DomainError unless sizes match, coordinates are finite and every
    // normal has unit length within 1e-9.
    void validate() const;
};

using Face = std::array<std::uint32_t, 3>;

inline constexpr double kDegenerateAreaTolerance = 1e-12;

// Indexed triangle mesh. Faces index into `vertices`; construction through
// build() guarantees valid indices and no face with area below 1e-12.
class TriangleMesh {
public:
    TriangleMesh() = default;

    // Validates indices and drops degenerate faces. The number of dropped
    // faces is written to `dropped` when given.
    static TriangleMesh build(std::vector<Vec3> vertices, std::vector<Face> faces,
                              std::size_t* dropped = nullptr);

    const std::vector<Vec3>& vertices() const noexcept { return vertices_; }
    const std::vector<Face>& faces() const noexcept { return faces_; }
    std::size_t vertex_count() const noexcept { return vertices_.size(); }
    std::size_t face_count() const noexcept { return faces_.size(); }

    double face_area(std::size_t face) const;
    double surface_area() const;
    Vec3 centroid() const;

private:
    std::vector<Vec3> vertices_;
    std::vector<Face> faces_;
};

// Unit normal of (v1 - v0) x (v2 - v0); the file's winding defines the sign.
// Throws DomainError for an out-of-range or degenerate face.
Vec3 face_normal(const TriangleMesh& mesh, std::size_t face);

// Applies p -> rotation * (p - center) + center to every vertex.
TriangleMesh rotated(const TriangleMesh& mesh, const Eigen::Matrix3d& rotation,
                     const Vec3& center);

// --- primitive meshes -------------------------------------------------------

// Axis-aligned cube [-h, h]^3 with 8 vertices and 12 outward-facing triangles.
TriangleMesh make_cube(double half_extent = 0.5);
// Subdivided icosahedron projected onto a sphere of the given radius.
TriangleMesh make_icosphere(std::size_t subdivisions, double radius = 1.0);
// Torus around the z axis: ring radius `major`, tube radius `minor`.
TriangleMesh make_torus(double major, double minor, std::size_t ring_segments,
                        std::size_t tube_segments);

} // namespace hofsurf
