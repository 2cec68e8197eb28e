#include "support.hpp"

#include "hofsurf/error.hpp"
#include "hofsurf/io.hpp"
#include "hofsurf/model.hpp"
#include "hofsurf/render.hpp"
#include "hofsurf/sampling.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>
#include <sstream>

using namespace hofsurf;
using namespace testsupport;

namespace {

const char* kCubeObj = R"(# golden cube
o cube
v -0.5 -0.5 -0.5
v  0.5 -0.5 -0.5
v  0.5  0.5 -0.5
v -0.5  0.5 -0.5
v -0.5 -0.5  0.5
v  0.5 -0.5  0.5
v  0.5  0.5  0.5
v -0.5  0.5  0.5
vn 0 0 1
s off
f 1 4 3 2
f 5 6 7 8
f 1 2 6 5
f 2 3 7 6
f 3 4 8 7
f 4 1 5 8
)";

std::string expect_parse_error(const std::string& text) {
    try {
        parse_obj(text, "fixture.obj");
    } catch (const ParseError& e) {
        return e.what();
    }
    ADD_FAILURE() << "no ParseError for:\n" << text;
    return {};
}

std::string expect_ply_error(const std::string& bytes) {
    try {
        parse_ply_mesh(bytes, "fixture.ply");
    } catch (const ParseError& e) {
        return e.what();
    }
    ADD_FAILURE() << "no ParseError";
    return {};
}

// Checks the header of a cloud written by encode_oriented_cloud against the
// PLY grammar and returns the declared vertex count, or -1 on a violation.
long check_cloud_header(const std::string& bytes, bool binary) {
    std::istringstream in(bytes);
    std::string line;
    if (!std::getline(in, line) || line != "ply") return -1;
    if (!std::getline(in, line)) return -1;
    if (line != (binary ? "format binary_little_endian 1.0" : "format ascii 1.0")) return -1;
    long count = -1;
    std::vector<std::string> props;
    while (std::getline(in, line)) {
        if (line == "end_header") break;
        std::istringstream ls(line);
        std::string kw;
        ls >> kw;
        if (kw == "comment" || kw == "obj_info") continue;
        if (kw == "element") {
            std::string name;
            ls >> name >> count;
            if (name != "vertex" || count < 0 || !props.empty()) return -1;
        } else if (kw == "property") {
            std::string type, name, rest;
            ls >> type >> name;
            if (type != "double" || count < 0 || (ls >> rest)) return -1;
            props.push_back(name);
        } else {
            return -1;
        }
    }
    if (line != "end_header") return -1;
    if (props != std::vector<std::string>{"x", "y", "z", "nx", "ny", "nz"}) return -1;
    const std::size_t body = bytes.size() - static_cast<std::size_t>(in.tellg());
    if (binary && body != static_cast<std::size_t>(count) * 6 * sizeof(double)) return -1;
    return count;
}

OrientedPointCloud random_cloud(std::size_t n, std::mt19937_64& rng) {
    OrientedPointCloud c;
    c.points = random_points(n, rng);
    for (const Vec3& p : random_points(n, rng)) c.normals.push_back(p.normalized());
    return c;
}

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("hofsurf_io_" + name);
}

std::size_t lit_pixels(const InputImage& img) {
    std::size_t n = 0;
    for (std::size_t y = 0; y < img.height; ++y)
        for (std::size_t x = 0; x < img.width; ++x) n += img.at(y, x, 0) > 0.0 ? 1 : 0;
    return n;
}

double pixel_mass(const InputImage& img) {
    double s = 0.0;
    for (double p : img.pixels) s += p;
    return s;
}

} // namespace

TEST(Obj, GoldenCube) {
    MeshLoadStats stats;
    const TriangleMesh m = parse_obj(kCubeObj, "cube.obj", &stats);
    EXPECT_EQ(m.vertex_count(), 8u);
    EXPECT_EQ(m.face_count(), 12u);
    EXPECT_EQ(stats.polygons_split, 6u);
    EXPECT_NEAR(m.surface_area(), 6.0, 1e-12);
}

TEST(Obj, SlashTokensAndNegativeIndices) {
    const TriangleMesh m = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nf 1/1/1 2//1 3/1\nf -3 -2 -1\n", "t.obj");
    EXPECT_EQ(m.face_count(), 2u);
    EXPECT_EQ(m.faces()[0], m.faces()[1]);
}

TEST(Obj, QuadBecomesTwoTriangles) {
    const TriangleMesh tri = parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3\n", "a.obj");
    const TriangleMesh quad = parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n", "b.obj");
    EXPECT_EQ(quad.face_count(), 2 * tri.face_count());
    EXPECT_EQ(face_normal(quad, 1), Vec3(0, 0, 1));
}

TEST(Obj, RejectionFixtures) {
    EXPECT_NE(expect_parse_error("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 4\n").find("fixture.obj:4"), std::string::npos);
    EXPECT_NE(expect_parse_error("v 0 0\n").find(":1"), std::string::npos);
    EXPECT_NE(expect_parse_error("v 0 0 zero\n").find("zero"), std::string::npos);
    EXPECT_NE(expect_parse_error("v 0 0 0\nv 1 0 0\nf 1 2\n").find(":3"), std::string::npos);
    EXPECT_NE(expect_parse_error("v 0 0 0\ncurv 1 2\n").find("curv"), std::string::npos);
    expect_parse_error("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n");
    expect_parse_error("v 0 0 nan\n");
    expect_parse_error("# nothing here\n");
}

TEST(Obj, DegenerateFacesAreCounted) {
    MeshLoadStats stats;
    const TriangleMesh m = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 2 0 0\nf 1 2 3\nf 1 2 4\n", "d.obj", &stats);
    EXPECT_EQ(m.face_count(), 1u);
    EXPECT_EQ(stats.degenerate_dropped, 1u);
}

TEST(Ply, BinaryRoundTripKeepsVertexBytes) {
    const TriangleMesh src = make_torus(0.3, 0.1, 12, 6);
    const TriangleMesh back = parse_ply_mesh(encode_ply_mesh(src, true), "mem.ply");
    ASSERT_EQ(back.vertex_count(), src.vertex_count());
    EXPECT_EQ(std::memcmp(back.vertices().data(), src.vertices().data(), src.vertex_count() * sizeof(Vec3)), 0);
    EXPECT_EQ(back.faces(), src.faces());
}

TEST(Ply, AsciiRoundTripIsExact) {
    std::mt19937_64 rng(60);
    const TriangleMesh src = TriangleMesh::build(random_points(30, rng), {Face{0, 1, 2}, Face{3, 4, 5}, Face{29, 7, 8}});
    const TriangleMesh back = parse_ply_mesh(encode_ply_mesh(src, false), "mem.ply");
    EXPECT_EQ(back.vertices(), src.vertices());
    EXPECT_EQ(back.faces(), src.faces());
}

TEST(Ply, ForeignHeaderVariants) {
    std::string ply = "ply\nformat ascii 1.0\ncomment made elsewhere\nelement vertex 4\n"
                      "property float x\nproperty float y\nproperty float z\nproperty uchar red\n"
                      "element face 1\nproperty list uchar int vertex_index\nend_header\n"
                      "0 0 0 255\n1 0 0 0\n1 1 0 0\n0 1 0 9\n4 0 1 2 3\n";
    MeshLoadStats stats;
    const TriangleMesh m = parse_ply_mesh(ply, "foreign.ply", &stats);
    EXPECT_EQ(m.face_count(), 2u);
    EXPECT_EQ(stats.polygons_split, 1u);
}

TEST(Ply, RejectionFixtures) {
    const std::string head = "ply\nformat binary_little_endian 1.0\nelement vertex 2\nproperty double x\n"
                             "property double y\nproperty double z\nend_header\n";
    EXPECT_NE(expect_ply_error("plx\n").find("magic"), std::string::npos);
    EXPECT_NE(expect_ply_error("ply\nformat binary_big_endian 1.0\nend_header\n").find("binary_big_endian"),
              std::string::npos);
    EXPECT_NE(expect_ply_error(head + std::string(40, '\0')).find("byte"), std::string::npos);
    expect_ply_error(head + std::string(56, '\0'));
    expect_ply_error("ply\nformat ascii 1.0\nelement vertex 1\nproperty double x\nend_header\n1\n");
    expect_ply_error("ply\nformat ascii 1.0\nelement edge 1\nend_header\n");
    expect_ply_error("ply\nformat ascii 1.0\nelement vertex 1\nproperty quad x\nend_header\n");
    expect_ply_error("ply\nformat ascii 1.0\nelement vertex 1\n");
}

TEST(OrientedCloudFile, RoundTripsBothEncodings) {
    std::mt19937_64 rng(61);
    const OrientedPointCloud c = random_cloud(200, rng);
    for (bool binary : {true, false}) {
        const OrientedPointCloud back = parse_oriented_cloud(encode_oriented_cloud(c, binary), "mem");
        ASSERT_EQ(back.size(), c.size());
        for (std::size_t i = 0; i < c.size(); ++i) {
            EXPECT_LT((back.points[i] - c.points[i]).norm(), 1e-9);
            EXPECT_LT((back.normals[i] - c.normals[i]).norm(), 1e-9);
        }
    }
}

TEST(OrientedCloudFile, EmptyCloudIsRejected) {
    EXPECT_THROW(encode_oriented_cloud(OrientedPointCloud{}), DomainError);
}

TEST(OrientedCloudFile, ReconstructionHeaderGrammar) {
    std::mt19937_64 rng(62);
    const MappingNetSpec spec;
    WeightVector theta;
    std::normal_distribution<double> g(0.0, 0.1);
    for (std::size_t i = 0; i < spec.param_count(); ++i) theta.values.push_back(g(rng));
    const Reconstruction r = reconstruct_surface(spec, theta, 2500, 3);
    for (bool binary : {true, false}) {
        const std::string bytes = encode_oriented_cloud(r.cloud, binary);
        EXPECT_EQ(check_cloud_header(bytes, binary), static_cast<long>(2500 - r.degenerate));
    }
}

TEST(Patches, SinglePlaneAtOrigin) {
    const PatchExport ex = build_patches({TangentPlane{Vec3(0, 0, 0), Vec3(0, 0, 1)}}, 0.1);
    EXPECT_EQ(ex.written, 1u);
    const TriangleMesh m = parse_obj(ex.obj, "patch.obj");
    ASSERT_EQ(m.vertex_count(), 3u);
    Vec3 centroid = Vec3::Zero();
    for (const Vec3& v : m.vertices()) {
        EXPECT_EQ(v.z(), 0.0);
        centroid += v / 3.0;
    }
    EXPECT_LT(centroid.norm(), 1e-12);
    EXPECT_NEAR((m.vertices()[0] - m.vertices()[1]).norm(), 0.1, 1e-12);
}

TEST(Patches, FacesFollowPlaneNormals) {
    std::mt19937_64 rng(63);
    std::vector<TangentPlane> planes;
    for (std::size_t i = 0; i < 1000; ++i) {
        const auto pv = random_points(2, rng);
        planes.push_back({pv[0], 2.0 * pv[1]});
    }
    planes[10].v = Vec3::Zero();
    const PatchExport ex = build_patches(planes, 0.05);
    EXPECT_EQ(ex.written, 999u);
    EXPECT_EQ(ex.skipped, 1u);
    const TriangleMesh m = parse_obj(ex.obj, "soup.obj");
    EXPECT_EQ(m.vertex_count(), 3u * 999u);
    EXPECT_EQ(m.face_count(), 999u);
    std::size_t f = 0;
    for (std::size_t i = 0; i < planes.size(); ++i) {
        if (planes[i].degenerate()) continue;
        EXPECT_NEAR(face_normal(m, f).dot(planes[i].normal()), 1.0, 1e-12);
        ++f;
    }
}

TEST(Patches, AllPlanesCounted) {
    std::vector<TangentPlane> planes(1000, TangentPlane{Vec3(1, 2, 3), Vec3(0, 1, 0)});
    const PatchExport ex = build_patches(planes, 0.02);
    const TriangleMesh m = parse_obj(ex.obj, "soup.obj");
    EXPECT_EQ(m.face_count(), 1000u);
    EXPECT_EQ(m.vertex_count(), 3000u);
}

TEST(Files, AtomicWriteLeavesNoTemporary) {
    const auto path = temp_path("atomic.txt");
    write_file_atomic(path.string(), "hello");
    EXPECT_EQ(read_file(path.string()), "hello");
    EXPECT_FALSE(std::filesystem::exists(path.string() + ".tmp"));
    std::filesystem::remove(path);
    EXPECT_THROW(read_file(path.string()), IoError);
    EXPECT_THROW(write_file_atomic("/nonexistent-dir/x/y.txt", "z"), IoError);
}

TEST(Files, MeshSaveLoadByExtension) {
    const TriangleMesh cube = make_cube(0.5);
    for (auto [fmt, ext] : {std::pair{MeshFormat::Obj, ".obj"}, std::pair{MeshFormat::PlyBinary, ".ply"},
                            std::pair{MeshFormat::PlyAscii, ".ply"}}) {
        const auto path = temp_path(std::string("mesh") + ext);
        save_mesh(cube, path.string(), fmt);
        const TriangleMesh back = load_mesh(path.string());
        EXPECT_EQ(back.vertices(), cube.vertices());
        EXPECT_EQ(back.faces(), cube.faces());
        std::filesystem::remove(path);
    }
}

TEST(ImageGrid, RoundTripAndValidation) {
    InputImage img = InputImage::blank(5, 7, 2);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<double>(i) / img.pixels.size();
    const InputImage back = parse_image_grid(encode_image_grid(img), "mem");
    EXPECT_EQ(back.height, 5u);
    EXPECT_EQ(back.width, 7u);
    EXPECT_EQ(back.channels, 2u);
    EXPECT_EQ(back.pixels, img.pixels);
    std::string bad = encode_image_grid(img);
    bad[0] = 'X';
    EXPECT_THROW(parse_image_grid(bad, "bad"), ParseError);
    EXPECT_THROW(parse_image_grid(encode_image_grid(img).substr(0, 30), "cut"), ParseError);
}

TEST(Render, CameraFacingAwayGivesBlankImage) {
    Camera cam;
    cam.eye = Vec3(0, 0, 3);
    cam.target = Vec3(0, 0, 6);
    const InputImage img = render_synthetic(make_icosphere(2), cam, 32);
    for (double p : img.pixels) EXPECT_EQ(p, 0.0);
}

TEST(Render, SphereSilhouetteSurvivesRoll) {
    const TriangleMesh sphere = make_icosphere(4);
    Camera cam;
    const std::size_t upright = lit_pixels(render_synthetic(sphere, cam, 64));
    cam.up = Vec3(1, 0, 0);
    const std::size_t rolled = lit_pixels(render_synthetic(sphere, cam, 64));
    EXPECT_GT(upright, 0u);
    EXPECT_NEAR(static_cast<double>(rolled), static_cast<double>(upright), 0.02 * upright);
}

TEST(Render, NearerObjectLooksBigger) {
    const TriangleMesh sphere = make_icosphere(3, 0.5);
    Camera near_cam, far_cam;
    near_cam.eye = Vec3(0, 0, 2);
    far_cam.eye = Vec3(0, 0, 4);
    const InputImage near_img = render_synthetic(sphere, near_cam, 48);
    const InputImage far_img = render_synthetic(sphere, far_cam, 48);
    EXPECT_GT(lit_pixels(near_img), lit_pixels(far_img));
    EXPECT_GT(pixel_mass(near_img), pixel_mass(far_img));
    for (double p : near_img.pixels) {
        EXPECT_GE(p, 0.0);
        EXPECT_LE(p, 1.0);
    }
}

TEST(Render, CameraFrameAndErrors) {
    const TriangleMesh cube = make_cube(0.5);
    Camera cam;
    EXPECT_EQ(cam.view_rotation(), Eigen::Matrix3d::Identity());
    cam.eye = Vec3(0, 0, 0);
    EXPECT_THROW(cam.view_rotation(), DomainError);
    cam.eye = Vec3(0, 3, 0);
    EXPECT_THROW(cam.view_rotation(), DomainError);
    const Camera orbit = orbit_camera(cube, 3.0, 90.0, 0.0);
    EXPECT_NEAR((orbit.eye - cube.centroid()).norm(), 3.0, 1e-12);
    const TriangleMesh view = to_camera_frame(cube, orbit);
    EXPECT_NEAR(view.surface_area(), cube.surface_area(), 1e-12);
    EXPECT_LT((view.centroid() - cube.centroid()).norm(), 1e-12);
}
