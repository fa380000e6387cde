#pragma once

#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "structmat/surface_mesh.hpp"

namespace structmat {

struct MeshParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LoadedMesh {
    SurfaceMesh mesh;
    UnitCubeTransform transform;
    bool watertight = false;
    std::vector<std::string> warnings;
};

namespace detail {

inline void parse_obj(std::istream& in, SurfaceMesh& mesh, std::vector<std::string>& warnings) {
    std::string line;
    int line_no = 0;
    bool warned_polygon = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "v") {
            double x, y, z;
            if (!(ls >> x >> y >> z))
                throw MeshParseError("OBJ parse error at line " + std::to_string(line_no) + ": bad vertex");
            mesh.vertices.emplace_back(x, y, z);
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string tok;
            while (ls >> tok) {
                // "v", "v/vt", "v//vn", "v/vt/vn"
                size_t slash = tok.find('/');
                std::string head = slash == std::string::npos ? tok : tok.substr(0, slash);
                int v = 0;
                try {
                    v = std::stoi(head);
                } catch (...) {
                    throw MeshParseError("OBJ parse error at line " + std::to_string(line_no) +
                                         ": bad face index '" + tok + "'");
                }
                int n = static_cast<int>(mesh.vertices.size());
                v = v > 0 ? v - 1 : n + v;  // negative indices are relative
                if (v < 0 || v >= n)
                    throw MeshParseError("OBJ parse error at line " + std::to_string(line_no) +
                                         ": face index out of range");
                idx.push_back(v);
            }
            if (idx.size() < 3)
                throw MeshParseError("OBJ parse error at line " + std::to_string(line_no) +
                                     ": face with fewer than 3 vertices");
            if (idx.size() > 3 && !warned_polygon) {
                warnings.push_back("non-triangle faces triangulated as fans");
                warned_polygon = true;
            }
            for (size_t k = 1; k + 1 < idx.size(); ++k)
                mesh.triangles.push_back({idx[0], idx[k], idx[k + 1]});
        }
    }
}

inline void parse_ply(std::istream& in, SurfaceMesh& mesh, std::vector<std::string>& warnings) {
    std::string line;
    std::getline(in, line);
    if (line.rfind("ply", 0) != 0) throw MeshParseError("not a PLY file");

    struct Prop {
        std::string type;
        std::string name;
        bool is_list = false;
        std::string count_type, item_type;
    };
    size_t n_verts = 0, n_faces = 0;
    std::vector<Prop> vert_props, face_props;
    std::vector<Prop>* cur = nullptr;
    bool binary_le = false;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt == "binary_little_endian") binary_le = true;
            else throw MeshParseError("PLY parse error at line " + std::to_string(line_no) +
                                      ": only binary_little_endian is supported");
        } else if (tag == "element") {
            std::string name;
            size_t count;
            ls >> name >> count;
            if (name == "vertex") {
                n_verts = count;
                cur = &vert_props;
            } else if (name == "face") {
                n_faces = count;
                cur = &face_props;
            } else {
                cur = nullptr;
                if (count > 0)
                    throw MeshParseError("PLY parse error: unsupported element '" + name + "'");
            }
        } else if (tag == "property" && cur) {
            Prop p;
            std::string t;
            ls >> t;
            if (t == "list") {
                p.is_list = true;
                ls >> p.count_type >> p.item_type >> p.name;
            } else {
                p.type = t;
                ls >> p.name;
            }
            cur->push_back(p);
        } else if (tag == "end_header") {
            break;
        }
    }
    if (!binary_le) throw MeshParseError("PLY header missing format line");

    auto scalar_size = [](const std::string& t) -> size_t {
        if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
        if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
        if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" || t == "float32") return 4;
        if (t == "double" || t == "float64") return 8;
        throw MeshParseError("PLY parse error: unknown property type '" + t + "'");
    };
    auto read_scalar = [&](const std::string& t) -> double {
        char buf[8];
        in.read(buf, static_cast<std::streamsize>(scalar_size(t)));
        if (!in) throw MeshParseError("PLY parse error: unexpected end of data");
        if (t == "float" || t == "float32") {
            float f;
            std::memcpy(&f, buf, 4);
            return f;
        }
        if (t == "double" || t == "float64") {
            double d;
            std::memcpy(&d, buf, 8);
            return d;
        }
        if (t == "char" || t == "int8") return static_cast<int8_t>(buf[0]);
        if (t == "uchar" || t == "uint8") return static_cast<uint8_t>(buf[0]);
        if (t == "short" || t == "int16") {
            int16_t v;
            std::memcpy(&v, buf, 2);
            return v;
        }
        if (t == "ushort" || t == "uint16") {
            uint16_t v;
            std::memcpy(&v, buf, 2);
            return v;
        }
        if (t == "int" || t == "int32") {
            int32_t v;
            std::memcpy(&v, buf, 4);
            return v;
        }
        uint32_t v;
        std::memcpy(&v, buf, 4);
        return v;
    };

    mesh.vertices.reserve(n_verts);
    for (size_t i = 0; i < n_verts; ++i) {
        Vec3 p = Vec3::Zero();
        for (const auto& prop : vert_props) {
            double val = read_scalar(prop.type);
            if (prop.name == "x") p.x() = val;
            else if (prop.name == "y") p.y() = val;
            else if (prop.name == "z") p.z() = val;
        }
        mesh.vertices.push_back(p);
    }
    bool warned_polygon = false;
    for (size_t i = 0; i < n_faces; ++i) {
        for (const auto& prop : face_props) {
            if (!prop.is_list) {
                read_scalar(prop.type);
                continue;
            }
            size_t count = static_cast<size_t>(read_scalar(prop.count_type));
            std::vector<int> idx(count);
            for (size_t k = 0; k < count; ++k) {
                idx[k] = static_cast<int>(read_scalar(prop.item_type));
                if (idx[k] < 0 || idx[k] >= static_cast<int>(n_verts))
                    throw MeshParseError("PLY parse error: face index out of range");
            }
            if (prop.name != "vertex_indices" && prop.name != "vertex_index") continue;
            if (count < 3) throw MeshParseError("PLY parse error: degenerate face record");
            if (count > 3 && !warned_polygon) {
                warnings.push_back("non-triangle faces triangulated as fans");
                warned_polygon = true;
            }
            for (size_t k = 1; k + 1 < count; ++k)
                mesh.triangles.push_back({idx[0], idx[k], idx[k + 1]});
        }
    }
}

}  // namespace detail

// Load ASCII OBJ or binary little-endian PLY, normalize to the unit cube,
// weld duplicate vertices, and build query structures.
inline LoadedMesh load_mesh(const std::string& path) {
    LoadedMesh out;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MeshParseError("cannot open '" + path + "'");
    bool ply = path.size() >= 4 && path.substr(path.size() - 4) == ".ply";
    if (ply) detail::parse_ply(in, out.mesh, out.warnings);
    else detail::parse_obj(in, out.mesh, out.warnings);
    if (out.mesh.vertices.empty() || out.mesh.triangles.empty())
        throw MeshParseError("empty mesh: '" + path + "'");
    out.transform = out.mesh.normalize_unit_cube();
    out.mesh.finalize();
    out.watertight = out.mesh.watertight();
    if (!out.watertight) out.warnings.push_back("mesh is not watertight");
    return out;
}

inline void write_obj(const std::string& path, const SurfaceMesh& mesh) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write '" + path + "'");
    os.precision(9);
    for (const auto& v : mesh.vertices)
        os << "v " << v.x() << " " << v.y() << " " << v.z() << "\n";
    for (const auto& t : mesh.triangles)
        os << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
}

}  // namespace structmat
