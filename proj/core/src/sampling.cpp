#include "hofsurf/sampling.hpp"

#include "hofsurf/error.hpp"

#include <algorithm>
#include <random>

namespace hofsurf {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::vector<Vec3> sample_sphere_uniform(std::size_t n, std::uint64_t seed) {
    if (n == 0) throw DomainError("sphere sampling needs n >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Vec3> out;
    out.reserve(n);
    while (out.size() < n) {
        Vec3 g;
        g.x() = gauss(rng);
        g.y() = gauss(rng);
        g.z() = gauss(rng);
        const double len = g.norm();
        // Probability ~1e-300; redraw rather than divide by zero.
        if (len < 1e-150) continue;
        out.push_back(g / len);
    }
    return out;
}

Tensor sphere_samples_tensor(const std::vector<Vec3>& samples) {
    return PointCloud{samples}.to_tensor();
}

OrientedPointCloud sample_mesh_uniform(const TriangleMesh& mesh, std::size_t n,
                                       std::uint64_t seed, std::vector<std::size_t>* face_ids) {
    if (mesh.face_count() == 0) throw DomainError("mesh has no non-degenerate face to sample");
    if (n == 0) throw DomainError("mesh sampling needs n >= 1");

    std::vector<double> cumulative(mesh.face_count());
    std::vector<Vec3> normals(mesh.face_count());
    double total = 0.0;
    for (std::size_t f = 0; f < mesh.face_count(); ++f) {
        total += mesh.face_area(f);
        cumulative[f] = total;
        normals[f] = face_normal(mesh, f);
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    OrientedPointCloud out;
    out.points.reserve(n);
    out.normals.reserve(n);
    if (face_ids) face_ids->assign(n, 0);
    const auto& verts = mesh.vertices();
    for (std::size_t i = 0; i < n; ++i) {
        const double pick = unit(rng) * total;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
        const std::size_t f = std::min<std::size_t>(
            static_cast<std::size_t>(it - cumulative.begin()), mesh.face_count() - 1);
        double u = unit(rng);
        double v = unit(rng);
        if (u + v > 1.0) {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        const Face& tri = mesh.faces()[f];
        const Vec3& a = verts[tri[0]];
        out.points.push_back(a + u * (verts[tri[1]] - a) + v * (verts[tri[2]] - a));
        out.normals.push_back(normals[f]);
        if (face_ids) (*face_ids)[i] = f;
    }
    return out;
}

} // namespace hofsurf
