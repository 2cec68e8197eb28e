#pragma once

#include "hofsurf/geometry.hpp"
#include "hofsurf/model.hpp"

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace hofsurf {

// --- files ------------------------------------------------------------------

std::string read_file(const std::string& path);
// Writes to "<path>.tmp" and renames over `path`, so readers never observe a
// partially written file.
void write_file_atomic(const std::string& path, std::string_view bytes);

// --- meshes -----------------------------------------------------------------

enum class MeshFormat { Obj, PlyAscii, PlyBinary };

struct MeshLoadStats {
    std::size_t polygons_split = 0;     // faces with more than three corners
    std::size_t degenerate_dropped = 0; // faces removed for area < 1e-12
};

// OBJ (v / f records, polygons fan-triangulated) or PLY (ascii or binary
// little-endian; vertex x/y/z plus an optional face list). The format is taken
// from the extension for OBJ and from the header for PLY. Degenerate faces are
// dropped and counted, with a warning on stderr.
TriangleMesh load_mesh(const std::string& path, MeshLoadStats* stats = nullptr);
void save_mesh(const TriangleMesh& mesh, const std::string& path, MeshFormat format);

// In-memory variants; `source` names the buffer in error messages.
TriangleMesh parse_obj(std::string_view text, const std::string& source,
                       MeshLoadStats* stats = nullptr);
TriangleMesh parse_ply_mesh(std::string_view bytes, const std::string& source,
                            MeshLoadStats* stats = nullptr);
std::string encode_obj(const TriangleMesh& mesh);
std::string encode_ply_mesh(const TriangleMesh& mesh, bool binary);

// --- oriented point clouds ----------------------------------------------------

// PLY with per-vertex double properties x y z nx ny nz.
std::string encode_oriented_cloud(const OrientedPointCloud& cloud, bool binary = true);
OrientedPointCloud parse_oriented_cloud(std::string_view bytes, const std::string& source);
void save_oriented_cloud(const OrientedPointCloud& cloud, const std::string& path,
                         bool binary = true);
OrientedPointCloud load_oriented_cloud(const std::string& path);

// --- tangent-plane patches --------------------------------------------------

struct PatchExport {
    std::string obj;         // triangle-soup OBJ text
    std::size_t written = 0; // one triangle per non-degenerate plane
    std::size_t skipped = 0; // degenerate planes
};

// One equilateral triangle per plane, centred on p, lying in the plane
// orthogonal to n and wound so its face normal is +n. `edge` is the side
// length. The in-plane basis starts from the coordinate axis least aligned
// with n (lowest axis on ties), Gram-Schmidt against n, then n x e1.
PatchExport build_patches(const std::vector<TangentPlane>& planes, double edge);
PatchExport export_patches(const std::vector<TangentPlane>& planes, double edge,
                           const std::string& path);

// --- images -----------------------------------------------------------------

// Raw image grid: "HOFI", u32 height, u32 width, u32 channels, then
// height*width*channels little-endian f64 pixels (row-major, channels last).
std::string encode_image_grid(const InputImage& image);
InputImage parse_image_grid(std::string_view bytes, const std::string& source);
void save_image_grid(const InputImage& image, const std::string& path);
InputImage load_image_grid(const std::string& path);

} // namespace hofsurf
