#include "hofsurf/render.hpp"

#include "hofsurf/error.hpp"

#include <cmath>
#include <limits>
#include <optional>

namespace hofsurf {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Möller-Trumbore; returns the ray parameter of a hit in front of the origin.
std::optional<double> intersect(const Vec3& origin, const Vec3& dir, const Vec3& a, const Vec3& b,
                                const Vec3& c) {
    const Vec3 e1 = b - a;
    const Vec3 e2 = c - a;
    const Vec3 p = dir.cross(e2);
    const double det = e1.dot(p);
    if (std::fabs(det) < 1e-14) return std::nullopt;
    const double inv = 1.0 / det;
    const Vec3 s = origin - a;
    const double u = s.dot(p) * inv;
    if (u < 0.0 || u > 1.0) return std::nullopt;
    const Vec3 q = s.cross(e1);
    const double v = dir.dot(q) * inv;
    if (v < 0.0 || u + v > 1.0) return std::nullopt;
    const double t = e2.dot(q) * inv;
    if (t <= 1e-12) return std::nullopt;
    return t;
}

} // namespace

Eigen::Matrix3d Camera::view_rotation() const {
    const Vec3 forward = target - eye;
    if (forward.norm() < 1e-12) throw DomainError("camera eye coincides with its target");
    const Vec3 back = -forward.normalized();
    const Vec3 right = up.cross(back);
    if (right.norm() < 1e-12) throw DomainError("camera up vector is parallel to the view direction");
    const Vec3 r = right.normalized();
    const Vec3 u = back.cross(r);
    Eigen::Matrix3d m;
    m.row(0) = r.transpose();
    m.row(1) = u.transpose();
    m.row(2) = back.transpose();
    return m;
}

Camera orbit_camera(const TriangleMesh& mesh, double distance, double azimuth_deg,
                    double elevation_deg) {
    if (!(distance > 0.0)) throw DomainError("camera distance must be positive");
    const double az = azimuth_deg * kPi / 180.0;
    const double el = elevation_deg * kPi / 180.0;
    Camera cam;
    cam.target = mesh.centroid();
    cam.eye = cam.target + distance * Vec3(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
                                           std::sin(el));
    cam.up = std::fabs(std::sin(el)) > 0.999 ? Vec3(0.0, 1.0, 0.0) : Vec3(0.0, 0.0, 1.0);
    return cam;
}

InputImage render_synthetic(const TriangleMesh& mesh, const Camera& camera, std::size_t size,
                            std::size_t channels) {
    if (size == 0 || channels == 0) throw DomainError("image size and channels must be >= 1");
    if (mesh.face_count() == 0) throw DomainError("cannot render a mesh without faces");
    if ((camera.eye - mesh.centroid()).norm() < 1e-12) {
        throw DomainError("camera eye is at the mesh centroid");
    }
    if (!(camera.fov_degrees > 0.0 && camera.fov_degrees < 180.0)) {
        throw DomainError("field of view must lie in (0, 180) degrees");
    }
    const Eigen::Matrix3d view = camera.view_rotation();
    const Vec3 right = view.row(0).transpose();
    const Vec3 up = view.row(1).transpose();
    const Vec3 forward = -view.row(2).transpose();
    const double half = std::tan(camera.fov_degrees * kPi / 360.0);

    InputImage img = InputImage::blank(size, size, channels);
    const auto& verts = mesh.vertices();
    for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
            const double sx = (2.0 * (static_cast<double>(x) + 0.5) / static_cast<double>(size) - 1.0) * half;
            const double sy = (1.0 - 2.0 * (static_cast<double>(y) + 0.5) / static_cast<double>(size)) * half;
            const Vec3 dir = (forward + sx * right + sy * up).normalized();
            double best = std::numeric_limits<double>::infinity();
            for (const Face& f : mesh.faces()) {
                if (auto t = intersect(camera.eye, dir, verts[f[0]], verts[f[1]], verts[f[2]])) {
                    best = std::min(best, *t);
                }
            }
            if (std::isfinite(best)) {
                for (std::size_t c = 0; c < channels; ++c) img.at(y, x, c) = 1.0 / (1.0 + best);
            }
        }
    }
    return img;
}

TriangleMesh to_camera_frame(const TriangleMesh& mesh, const Camera& camera) {
    return rotated(mesh, camera.view_rotation(), mesh.centroid());
}

} // namespace hofsurf
