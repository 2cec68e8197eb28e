#pragma once

#include "hofsurf/geometry.hpp"
#include "hofsurf/model.hpp"

#include <cstddef>

namespace hofsurf {

// Pinhole camera. `fov_degrees` is the full vertical field of view.
struct Camera {
    Vec3 eye{0.0, 0.0, 3.0};
    Vec3 target{0.0, 0.0, 0.0};
    Vec3 up{0.0, 1.0, 0.0};
    double fov_degrees = 45.0;

    // Orthonormal view basis: rows are right, up, backward (camera looks
    // along -z). Throws DomainError when eye == target or up is parallel to
    // the view direction.
    Eigen::Matrix3d view_rotation() const;
};

// Camera aimed at the mesh centroid from `distance` along direction
// (azimuth, elevation) in degrees, world +z up.
Camera orbit_camera(const TriangleMesh& mesh, double distance, double azimuth_deg,
                    double elevation_deg);

// Depth image by ray casting one ray through every pixel centre. A hit at ray
// distance t gives 1 / (1 + t) in all channels; misses are 0. Throws
// DomainError when the eye sits on the mesh centroid.
InputImage render_synthetic(const TriangleMesh& mesh, const Camera& camera,
                            std::size_t size = 64, std::size_t channels = 3);

// The mesh rotated about its centroid into the camera's view frame, so the
// ground truth is expressed in view-centric coordinates.
TriangleMesh to_camera_frame(const TriangleMesh& mesh, const Camera& camera);

} // namespace hofsurf
