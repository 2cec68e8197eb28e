#include "hofsurf/io.hpp"

#include "byte_io.hpp"
#include "hofsurf/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

namespace hofsurf {

// --- files ------------------------------------------------------------------

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path, "cannot open for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError(path, "read failed");
    return buf.str();
}

void write_file_atomic(const std::string& path, std::string_view bytes) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(tmp, "cannot open for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            out.close();
            std::error_code ignored;
            std::filesystem::remove(tmp, ignored);
            throw IoError(tmp, "write failed");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::error_code ignored;
        std::filesystem::remove(tmp, ignored);
        throw IoError(path, "cannot move temporary file into place: " + ec.message());
    }
}

namespace {

std::string number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string lower_extension(const std::string& path) {
    std::string ext = std::filesystem::path(path).extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

// Splits on spaces/tabs, dropping empties.
std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

bool parse_double(std::string_view s, double& out) {
    // from_chars for double is missing on some toolchains; strtod on a copy.
    std::string tmp(s);
    char* end = nullptr;
    out = std::strtod(tmp.c_str(), &end);
    return end == tmp.c_str() + tmp.size() && !tmp.empty() && std::isfinite(out);
}

bool parse_long(std::string_view s, long long& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

void report_dropped(const std::string& source, std::size_t dropped) {
    if (dropped > 0) {
        std::cerr << "warning: " << source << ": dropped " << dropped
                  << " degenerate face(s) with area < 1e-12\n";
    }
}

// Splits a polygon into a fan around its first corner.
void fan(const std::vector<std::uint32_t>& poly, std::vector<Face>& faces) {
    for (std::size_t i = 1; i + 1 < poly.size(); ++i) faces.push_back({poly[0], poly[i], poly[i + 1]});
}

} // namespace

// --- OBJ --------------------------------------------------------------------

TriangleMesh parse_obj(std::string_view text, const std::string& source, MeshLoadStats* stats) {
    std::vector<Vec3> vertices;
    std::vector<Face> faces;
    MeshLoadStats local;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const auto tok = split_ws(line);
        if (tok.empty()) continue;
        const std::string_view kw = tok[0];
        if (kw == "v") {
            if (tok.size() < 4 || tok.size() > 7) {
                throw ParseError(source, line_no, "vertex needs 3 coordinates");
            }
            Vec3 v;
            for (int k = 0; k < 3; ++k) {
                if (!parse_double(tok[k + 1], v[k])) {
                    throw ParseError(source, line_no, "bad vertex coordinate '" + std::string(tok[k + 1]) + "'");
                }
            }
            vertices.push_back(v);
        } else if (kw == "f") {
            if (tok.size() < 4) throw ParseError(source, line_no, "face needs at least 3 vertices");
            std::vector<std::uint32_t> poly;
            for (std::size_t k = 1; k < tok.size(); ++k) {
                const std::string_view ref = tok[k].substr(0, tok[k].find('/'));
                long long idx = 0;
                if (!parse_long(ref, idx) || idx == 0) {
                    throw ParseError(source, line_no, "bad face index '" + std::string(tok[k]) + "'");
                }
                const long long n = static_cast<long long>(vertices.size());
                const long long resolved = idx > 0 ? idx - 1 : n + idx;
                if (resolved < 0 || resolved >= n) {
                    throw ParseError(source, line_no, "face index " + std::to_string(idx) +
                                                          " out of range (" + std::to_string(n) +
                                                          " vertices so far)");
                }
                poly.push_back(static_cast<std::uint32_t>(resolved));
            }
            if (poly.size() > 3) ++local.polygons_split;
            fan(poly, faces);
        } else if (kw == "vn" || kw == "vt" || kw == "vp" || kw == "o" || kw == "g" || kw == "s" ||
                   kw == "usemtl" || kw == "mtllib") {
            // Attributes and grouping carry no geometry.
        } else {
            throw ParseError(source, line_no, "unsupported OBJ element '" + std::string(kw) + "'");
        }
    }
    if (vertices.empty()) throw ParseError(source, line_no, "no vertices");
    TriangleMesh mesh = TriangleMesh::build(std::move(vertices), std::move(faces), &local.degenerate_dropped);
    report_dropped(source, local.degenerate_dropped);
    if (stats) *stats = local;
    return mesh;
}

std::string encode_obj(const TriangleMesh& mesh) {
    std::string out;
    for (const Vec3& v : mesh.vertices()) {
        out += "v " + number(v.x()) + ' ' + number(v.y()) + ' ' + number(v.z()) + '\n';
    }
    for (const Face& f : mesh.faces()) {
        out += "f " + std::to_string(f[0] + 1) + ' ' + std::to_string(f[1] + 1) + ' ' +
               std::to_string(f[2] + 1) + '\n';
    }
    return out;
}

// --- PLY --------------------------------------------------------------------

namespace {

enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

bool ply_type(std::string_view name, PlyType& out) {
    static const std::pair<std::string_view, PlyType> table[] = {
        {"char", PlyType::Int8},      {"int8", PlyType::Int8},       {"uchar", PlyType::UInt8},
        {"uint8", PlyType::UInt8},    {"short", PlyType::Int16},     {"int16", PlyType::Int16},
        {"ushort", PlyType::UInt16},  {"uint16", PlyType::UInt16},   {"int", PlyType::Int32},
        {"int32", PlyType::Int32},    {"uint", PlyType::UInt32},     {"uint32", PlyType::UInt32},
        {"float", PlyType::Float32},  {"float32", PlyType::Float32}, {"double", PlyType::Float64},
        {"float64", PlyType::Float64}};
    for (const auto& [n, t] : table) {
        if (n == name) {
            out = t;
            return true;
        }
    }
    return false;
}

bool is_integral(PlyType t) { return t != PlyType::Float32 && t != PlyType::Float64; }

struct PlyProperty {
    std::string name;
    PlyType type = PlyType::Float64;
    bool is_list = false;
    PlyType count_type = PlyType::UInt8;
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> properties;
};

struct PlyData {
    std::vector<std::string> vertex_names;
    std::vector<double> vertex_values; // row-major, vertex_names.size() per vertex
    std::vector<std::vector<std::int64_t>> polygons;
    bool has_faces = false;
};

// Pulls values from either the ascii token stream or the binary body.
class PlySource {
public:
    PlySource(std::string_view body, std::size_t body_offset, std::size_t header_lines, bool binary,
              const std::string& source)
        : binary_(binary), source_(source), bytes_(body, source, 0), body_(body),
          body_offset_(body_offset), line_(header_lines) {}

    double read(PlyType type) {
        if (binary_) return read_binary(type);
        const std::string_view tok = next_token();
        if (is_integral(type)) {
            long long v = 0;
            if (!parse_long(tok, v)) fail_line("bad integer '" + std::string(tok) + "'");
            return static_cast<double>(v);
        }
        double v = 0.0;
        if (!parse_double(tok, v)) fail_line("bad number '" + std::string(tok) + "'");
        return v;
    }

    void finish() {
        if (binary_) {
            if (!bytes_.done()) {
                throw ParseError(source_, body_offset_ + bytes_.offset(), "trailing bytes after PLY data", true);
            }
            return;
        }
        skip_space();
        if (cursor_ < body_.size()) fail_line("unexpected data after the last element");
    }

private:
    double read_binary(PlyType type) {
        switch (type) {
        case PlyType::Int8: return bytes_.get<std::int8_t>("int8");
        case PlyType::UInt8: return bytes_.get<std::uint8_t>("uint8");
        case PlyType::Int16: return bytes_.get<std::int16_t>("int16");
        case PlyType::UInt16: return bytes_.get<std::uint16_t>("uint16");
        case PlyType::Int32: return bytes_.get<std::int32_t>("int32");
        case PlyType::UInt32: return bytes_.get<std::uint32_t>("uint32");
        case PlyType::Float32: return bytes_.get<float>("float32");
        case PlyType::Float64: return bytes_.get<double>("float64");
        }
        return 0.0;
    }

    void skip_space() {
        while (cursor_ < body_.size() &&
               (body_[cursor_] == ' ' || body_[cursor_] == '\t' || body_[cursor_] == '\r' ||
                body_[cursor_] == '\n')) {
            if (body_[cursor_] == '\n') ++line_;
            ++cursor_;
        }
    }

    std::string_view next_token() {
        skip_space();
        if (cursor_ >= body_.size()) fail_line("unexpected end of data");
        const std::size_t start = cursor_;
        while (cursor_ < body_.size() && body_[cursor_] != ' ' && body_[cursor_] != '\t' &&
               body_[cursor_] != '\r' && body_[cursor_] != '\n') {
            ++cursor_;
        }
        return body_.substr(start, cursor_ - start);
    }

    [[noreturn]] void fail_line(const std::string& what) const {
        throw ParseError(source_, line_ + 1, what);
    }

    bool binary_;
    const std::string& source_;
    detail::ByteReader bytes_;
    std::string_view body_;
    std::size_t body_offset_;
    std::size_t line_;
    std::size_t cursor_ = 0;
};

PlyData parse_ply(std::string_view bytes, const std::string& source) {
    // Header: newline-terminated ascii lines up to "end_header".
    std::size_t pos = 0;
    std::size_t line_no = 0;
    auto next_line = [&]() -> std::string_view {
        if (pos >= bytes.size()) throw ParseError(source, line_no + 1, "missing end_header");
        std::size_t eol = bytes.find('\n', pos);
        if (eol == std::string_view::npos) throw ParseError(source, line_no + 1, "missing end_header");
        std::string_view line = bytes.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        return line;
    };

    if (next_line() != "ply") throw ParseError(source, 1, "not a PLY file (missing 'ply' magic)");
    bool binary = false;
    bool have_format = false;
    std::vector<PlyElement> elements;
    for (;;) {
        const std::string_view line = next_line();
        const auto tok = split_ws(line);
        if (tok.empty()) continue;
        if (tok[0] == "end_header") break;
        if (tok[0] == "comment" || tok[0] == "obj_info") continue;
        if (tok[0] == "format") {
            if (tok.size() != 3 || tok[2] != "1.0") throw ParseError(source, line_no, "bad format line");
            if (tok[1] == "ascii") {
                binary = false;
            } else if (tok[1] == "binary_little_endian") {
                binary = true;
            } else {
                throw ParseError(source, line_no, "unsupported PLY format '" + std::string(tok[1]) + "'");
            }
            have_format = true;
        } else if (tok[0] == "element") {
            long long count = 0;
            if (tok.size() != 3 || !parse_long(tok[2], count) || count < 0) {
                throw ParseError(source, line_no, "bad element line");
            }
            if (tok[1] != "vertex" && tok[1] != "face") {
                throw ParseError(source, line_no, "unsupported PLY element '" + std::string(tok[1]) + "'");
            }
            elements.push_back({std::string(tok[1]), static_cast<std::size_t>(count), {}});
        } else if (tok[0] == "property") {
            if (elements.empty()) throw ParseError(source, line_no, "property before any element");
            PlyProperty prop;
            if (tok.size() == 5 && tok[1] == "list") {
                prop.is_list = true;
                if (!ply_type(tok[2], prop.count_type) || !ply_type(tok[3], prop.type) ||
                    !is_integral(prop.count_type)) {
                    throw ParseError(source, line_no, "bad list property types");
                }
                prop.name = std::string(tok[4]);
            } else if (tok.size() == 3) {
                if (!ply_type(tok[1], prop.type)) {
                    throw ParseError(source, line_no, "unknown property type '" + std::string(tok[1]) + "'");
                }
                prop.name = std::string(tok[2]);
            } else {
                throw ParseError(source, line_no, "bad property line");
            }
            elements.back().properties.push_back(std::move(prop));
        } else {
            throw ParseError(source, line_no, "unknown header keyword '" + std::string(tok[0]) + "'");
        }
    }
    if (!have_format) throw ParseError(source, line_no, "missing format line");

    PlyData data;
    PlySource src(bytes.substr(pos), pos, line_no, binary, source);
    bool seen_vertex = false;
    for (const PlyElement& el : elements) {
        if (el.name == "vertex") {
            if (seen_vertex) throw ParseError(source, line_no, "duplicate vertex element");
            seen_vertex = true;
            for (const PlyProperty& p : el.properties) {
                if (p.is_list) throw ParseError(source, line_no, "list property on vertex element");
                data.vertex_names.push_back(p.name);
            }
            data.vertex_values.reserve(el.count * el.properties.size());
            for (std::size_t i = 0; i < el.count; ++i) {
                for (const PlyProperty& p : el.properties) data.vertex_values.push_back(src.read(p.type));
            }
        } else {
            if (data.has_faces) throw ParseError(source, line_no, "duplicate face element");
            data.has_faces = true;
            std::size_t lists = 0;
            for (const PlyProperty& p : el.properties) {
                if (p.is_list) {
                    ++lists;
                    if (p.name != "vertex_indices" && p.name != "vertex_index") {
                        throw ParseError(source, line_no, "unsupported face list '" + p.name + "'");
                    }
                }
            }
            if (lists != 1) throw ParseError(source, line_no, "face element needs one vertex index list");
            data.polygons.reserve(el.count);
            for (std::size_t i = 0; i < el.count; ++i) {
                for (const PlyProperty& p : el.properties) {
                    if (!p.is_list) {
                        src.read(p.type);
                        continue;
                    }
                    const double n = src.read(p.count_type);
                    if (n < 3) throw ParseError(source, line_no, "face " + std::to_string(i) + " has fewer than 3 corners");
                    std::vector<std::int64_t> poly(static_cast<std::size_t>(n));
                    for (auto& idx : poly) idx = static_cast<std::int64_t>(src.read(p.type));
                    data.polygons.push_back(std::move(poly));
                }
            }
        }
    }
    if (!seen_vertex) throw ParseError(source, line_no, "no vertex element");
    src.finish();
    return data;
}

std::size_t column(const PlyData& d, std::string_view name, const std::string& source) {
    auto it = std::find(d.vertex_names.begin(), d.vertex_names.end(), name);
    if (it == d.vertex_names.end()) {
        throw ParseError(source, 0, "vertex property '" + std::string(name) + "' missing");
    }
    return static_cast<std::size_t>(it - d.vertex_names.begin());
}

std::vector<Vec3> read_triples(const PlyData& d, const char* a, const char* b, const char* c,
                               const std::string& source) {
    const std::size_t stride = d.vertex_names.size();
    const std::size_t ia = column(d, a, source), ib = column(d, b, source), ic = column(d, c, source);
    const std::size_t n = stride ? d.vertex_values.size() / stride : 0;
    std::vector<Vec3> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = Vec3(d.vertex_values[i * stride + ia], d.vertex_values[i * stride + ib],
                      d.vertex_values[i * stride + ic]);
        if (!out[i].allFinite()) throw ParseError(source, 0, "non-finite value in vertex " + std::to_string(i));
    }
    return out;
}

std::string ply_header(bool binary, std::size_t vertices, const std::vector<std::string>& props,
                       std::size_t faces) {
    std::string h = "ply\n";
    h += binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n";
    h += "comment hofsurf\n";
    h += "element vertex " + std::to_string(vertices) + "\n";
    for (const std::string& p : props) h += "property double " + p + "\n";
    if (faces > 0) {
        h += "element face " + std::to_string(faces) + "\n";
        h += "property list uchar int vertex_indices\n";
    }
    h += "end_header\n";
    return h;
}

} // namespace

TriangleMesh parse_ply_mesh(std::string_view bytes, const std::string& source, MeshLoadStats* stats) {
    const PlyData d = parse_ply(bytes, source);
    std::vector<Vec3> vertices = read_triples(d, "x", "y", "z", source);
    MeshLoadStats local;
    std::vector<Face> faces;
    for (std::size_t i = 0; i < d.polygons.size(); ++i) {
        std::vector<std::uint32_t> poly;
        for (std::int64_t idx : d.polygons[i]) {
            if (idx < 0 || static_cast<std::size_t>(idx) >= vertices.size()) {
                throw ParseError(source, 0, "face " + std::to_string(i) + " index " + std::to_string(idx) + " out of range");
            }
            poly.push_back(static_cast<std::uint32_t>(idx));
        }
        if (poly.size() > 3) ++local.polygons_split;
        fan(poly, faces);
    }
    TriangleMesh mesh = TriangleMesh::build(std::move(vertices), std::move(faces), &local.degenerate_dropped);
    report_dropped(source, local.degenerate_dropped);
    if (stats) *stats = local;
    return mesh;
}

std::string encode_ply_mesh(const TriangleMesh& mesh, bool binary) {
    detail::ByteWriter w;
    w.bytes(ply_header(binary, mesh.vertex_count(), {"x", "y", "z"}, mesh.face_count()));
    if (binary) {
        for (const Vec3& v : mesh.vertices()) {
            w.f64(v.x());
            w.f64(v.y());
            w.f64(v.z());
        }
        for (const Face& f : mesh.faces()) {
            w.put<std::uint8_t>(3);
            for (std::uint32_t idx : f) w.put<std::int32_t>(static_cast<std::int32_t>(idx));
        }
    } else {
        for (const Vec3& v : mesh.vertices()) {
            w.bytes(number(v.x()) + ' ' + number(v.y()) + ' ' + number(v.z()) + '\n');
        }
        for (const Face& f : mesh.faces()) {
            w.bytes("3 " + std::to_string(f[0]) + ' ' + std::to_string(f[1]) + ' ' + std::to_string(f[2]) + '\n');
        }
    }
    return std::move(w.str());
}

TriangleMesh load_mesh(const std::string& path, MeshLoadStats* stats) {
    const std::string ext = lower_extension(path);
    const std::string bytes = read_file(path);
    if (ext == ".obj") return parse_obj(bytes, path, stats);
    if (ext == ".ply") return parse_ply_mesh(bytes, path, stats);
    throw IoError(path, "unsupported mesh extension '" + ext + "' (expected .obj or .ply)");
}

void save_mesh(const TriangleMesh& mesh, const std::string& path, MeshFormat format) {
    switch (format) {
    case MeshFormat::Obj: write_file_atomic(path, encode_obj(mesh)); break;
    case MeshFormat::PlyAscii: write_file_atomic(path, encode_ply_mesh(mesh, false)); break;
    case MeshFormat::PlyBinary: write_file_atomic(path, encode_ply_mesh(mesh, true)); break;
    }
}

// --- oriented clouds --------------------------------------------------------

std::string encode_oriented_cloud(const OrientedPointCloud& cloud, bool binary) {
    if (cloud.empty()) throw DomainError("cannot write an empty oriented point cloud");
    cloud.validate();
    detail::ByteWriter w;
    w.bytes(ply_header(binary, cloud.size(), {"x", "y", "z", "nx", "ny", "nz"}, 0));
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& p = cloud.points[i];
        const Vec3& n = cloud.normals[i];
        if (binary) {
            for (double v : {p.x(), p.y(), p.z(), n.x(), n.y(), n.z()}) w.f64(v);
        } else {
            w.bytes(number(p.x()) + ' ' + number(p.y()) + ' ' + number(p.z()) + ' ' + number(n.x()) +
                    ' ' + number(n.y()) + ' ' + number(n.z()) + '\n');
        }
    }
    return std::move(w.str());
}

OrientedPointCloud parse_oriented_cloud(std::string_view bytes, const std::string& source) {
    const PlyData d = parse_ply(bytes, source);
    OrientedPointCloud cloud;
    cloud.points = read_triples(d, "x", "y", "z", source);
    cloud.normals = read_triples(d, "nx", "ny", "nz", source);
    if (cloud.empty()) throw ParseError(source, 0, "point cloud has no vertices");
    try {
        cloud.validate();
    } catch (const DomainError& e) {
        throw ParseError(source, 0, e.what());
    }
    return cloud;
}

void save_oriented_cloud(const OrientedPointCloud& cloud, const std::string& path, bool binary) {
    write_file_atomic(path, encode_oriented_cloud(cloud, binary));
}

OrientedPointCloud load_oriented_cloud(const std::string& path) {
    return parse_oriented_cloud(read_file(path), path);
}

// --- patches ----------------------------------------------------------------

PatchExport build_patches(const std::vector<TangentPlane>& planes, double edge) {
    if (!(edge > 0.0)) throw DomainError("patch edge length must be positive");
    PatchExport out;
    std::string verts;
    std::string faces;
    const double radius = edge / std::sqrt(3.0);
    for (const TangentPlane& plane : planes) {
        if (plane.degenerate()) {
            ++out.skipped;
            continue;
        }
        const Vec3 n = plane.normal();
        int axis = 0;
        for (int k = 1; k < 3; ++k) {
            if (std::fabs(n[k]) < std::fabs(n[axis])) axis = k;
        }
        Vec3 a = Vec3::Zero();
        a[axis] = 1.0;
        const Vec3 e1 = (a - a.dot(n) * n).normalized();
        const Vec3 e2 = n.cross(e1);
        constexpr double angles[3] = {0.5, 0.5 + 2.0 / 3.0, 0.5 + 4.0 / 3.0};
        for (double turns : angles) {
            const double t = turns * 3.14159265358979323846;
            const Vec3 v = plane.p + radius * (std::cos(t) * e1 + std::sin(t) * e2);
            verts += "v " + number(v.x()) + ' ' + number(v.y()) + ' ' + number(v.z()) + '\n';
        }
        const std::size_t base = 3 * out.written + 1;
        faces += "f " + std::to_string(base) + ' ' + std::to_string(base + 1) + ' ' +
                 std::to_string(base + 2) + '\n';
        ++out.written;
    }
    out.obj = "# tangent-plane patches: " + std::to_string(out.written) + " triangles\n" + verts + faces;
    return out;
}

PatchExport export_patches(const std::vector<TangentPlane>& planes, double edge, const std::string& path) {
    PatchExport out = build_patches(planes, edge);
    write_file_atomic(path, out.obj);
    return out;
}

// --- image grids ------------------------------------------------------------

std::string encode_image_grid(const InputImage& image) {
    image.validate();
    detail::ByteWriter w;
    w.bytes("HOFI");
    w.u32(static_cast<std::uint32_t>(image.height));
    w.u32(static_cast<std::uint32_t>(image.width));
    w.u32(static_cast<std::uint32_t>(image.channels));
    for (double p : image.pixels) w.f64(p);
    return std::move(w.str());
}

InputImage parse_image_grid(std::string_view bytes, const std::string& source) {
    detail::ByteReader r(bytes, source);
    if (r.take(4, "magic") != "HOFI") r.fail("not an image grid (bad magic)");
    InputImage img;
    img.height = r.u32("height");
    img.width = r.u32("width");
    img.channels = r.u32("channels");
    const std::size_t n = img.height * img.width * img.channels;
    if (n == 0) r.fail("image has a zero extent");
    if (r.remaining() != n * sizeof(double)) r.fail("pixel payload size does not match the header");
    img.pixels.resize(n);
    for (double& p : img.pixels) p = r.f64("pixel");
    try {
        img.validate();
    } catch (const DomainError& e) {
        throw ParseError(source, 0, e.what(), true);
    }
    return img;
}

void save_image_grid(const InputImage& image, const std::string& path) {
    write_file_atomic(path, encode_image_grid(image));
}

InputImage load_image_grid(const std::string& path) { return parse_image_grid(read_file(path), path); }

} // namespace hofsurf
