#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "structmat/medial_complex.hpp"

namespace structmat {

// Line-based medial mesh interchange: header "<#v> <#e> <#f>", then
// "v x y z r", "e i j", "f i j k" records with 0-based indices.
struct MedialMa {
    struct V {
        double x, y, z, r;
    };
    std::vector<V> verts;
    std::vector<std::array<int, 2>> edges;
    std::vector<std::array<int, 3>> faces;
};

// Compacts the alive part of a complex, in stable index order. Optionally
// returns per-output-vertex atlases for the sidecar.
inline MedialMa to_ma(const MedialComplex& mc, std::vector<Atlas>* atlases = nullptr) {
    MedialMa ma;
    std::vector<int> remap(mc.verts.size(), -1);
    if (atlases) atlases->clear();
    for (size_t i = 0; i < mc.verts.size(); ++i) {
        const auto& v = mc.verts[i];
        if (!v.alive) continue;
        remap[i] = static_cast<int>(ma.verts.size());
        ma.verts.push_back({v.center.x(), v.center.y(), v.center.z(), std::max(v.radius, 0.0)});
        if (atlases) atlases->push_back(v.atlas);
    }
    for (const auto& e : mc.edges) {
        if (!e.alive) continue;
        int a = remap[e.a], b = remap[e.b];
        if (a < 0 || b < 0) continue;
        ma.edges.push_back({std::min(a, b), std::max(a, b)});
    }
    for (const auto& f : mc.faces) {
        if (!f.alive) continue;
        int a = remap[f.v[0]], b = remap[f.v[1]], c = remap[f.v[2]];
        if (a < 0 || b < 0 || c < 0) continue;
        ma.faces.push_back({a, b, c});
    }
    return ma;
}

inline std::string serialize_ma(const MedialMa& ma) {
    std::string out;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%zu %zu %zu\n", ma.verts.size(), ma.edges.size(),
                  ma.faces.size());
    out += buf;
    for (const auto& v : ma.verts) {
        std::snprintf(buf, sizeof(buf), "v %.9g %.9g %.9g %.9g\n", v.x, v.y, v.z, v.r);
        out += buf;
    }
    for (const auto& e : ma.edges) {
        std::snprintf(buf, sizeof(buf), "e %d %d\n", e[0], e[1]);
        out += buf;
    }
    for (const auto& f : ma.faces) {
        std::snprintf(buf, sizeof(buf), "f %d %d %d\n", f[0], f[1], f[2]);
        out += buf;
    }
    return out;
}

inline MedialMa parse_ma(std::istream& in) {
    MedialMa ma;
    size_t nv = 0, ne = 0, nf = 0;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("ma: empty file");
    {
        std::istringstream hs(line);
        if (!(hs >> nv >> ne >> nf)) throw std::runtime_error("ma: bad header");
    }
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        char tag;
        ls >> tag;
        if (tag == 'v') {
            MedialMa::V v;
            if (!(ls >> v.x >> v.y >> v.z >> v.r))
                throw std::runtime_error("ma: bad vertex at line " + std::to_string(lineno));
            if (v.r < 0.0) throw std::runtime_error("ma: negative radius at line " + std::to_string(lineno));
            ma.verts.push_back(v);
        } else if (tag == 'e') {
            std::array<int, 2> e;
            if (!(ls >> e[0] >> e[1]))
                throw std::runtime_error("ma: bad edge at line " + std::to_string(lineno));
            ma.edges.push_back(e);
        } else if (tag == 'f') {
            std::array<int, 3> f;
            if (!(ls >> f[0] >> f[1] >> f[2]))
                throw std::runtime_error("ma: bad face at line " + std::to_string(lineno));
            ma.faces.push_back(f);
        } else {
            throw std::runtime_error("ma: unknown record at line " + std::to_string(lineno));
        }
    }
    if (ma.verts.size() != nv || ma.edges.size() != ne || ma.faces.size() != nf)
        throw std::runtime_error("ma: header counts do not match body");
    int n = static_cast<int>(nv);
    for (const auto& e : ma.edges)
        if (e[0] < 0 || e[0] >= n || e[1] < 0 || e[1] >= n)
            throw std::runtime_error("ma: edge index out of range");
    for (const auto& f : ma.faces)
        for (int i : f)
            if (i < 0 || i >= n) throw std::runtime_error("ma: face index out of range");
    return ma;
}

inline MedialMa load_ma(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return parse_ma(in);
}

inline void save_ma(const MedialMa& ma, const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // binary: no newline translation
    if (!out) throw std::runtime_error("cannot write " + path);
    out << serialize_ma(ma);
}

// Rebuilds a complex from the interchange form (all simplices alive; no
// atlases unless a sidecar supplies them).
inline MedialComplex from_ma(const MedialMa& ma, const std::vector<Atlas>* atlases = nullptr) {
    MedialComplex mc;
    for (size_t i = 0; i < ma.verts.size(); ++i) {
        Atlas a = atlases && i < atlases->size() ? (*atlases)[i] : Atlas{};
        mc.add_vertex(Vec3(ma.verts[i].x, ma.verts[i].y, ma.verts[i].z), ma.verts[i].r, std::move(a));
    }
    for (const auto& e : ma.edges)
        if (e[0] != e[1]) mc.add_edge(e[0], e[1]);
    for (const auto& f : ma.faces) mc.add_face(f[0], f[1], f[2]);
    return mc;
}

// Atlas sidecar: little-endian binary, uint32 vertex count, then per vertex a
// uint32 cell count followed by that many uint32 cell ids.
inline void save_atlas_sidecar(const std::vector<Atlas>& atlases, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    auto put32 = [&out](uint32_t x) { out.write(reinterpret_cast<const char*>(&x), 4); };
    put32(static_cast<uint32_t>(atlases.size()));
    for (const auto& a : atlases) {
        put32(static_cast<uint32_t>(a.size()));
        for (int c : a) put32(static_cast<uint32_t>(c));
    }
}

inline std::vector<Atlas> load_atlas_sidecar(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    auto get32 = [&in]() {
        uint32_t x = 0;
        in.read(reinterpret_cast<char*>(&x), 4);
        if (!in) throw std::runtime_error("atlas sidecar truncated");
        return x;
    };
    std::vector<Atlas> out(get32());
    for (auto& a : out) {
        a.resize(get32());
        for (auto& c : a) c = static_cast<int>(get32());
    }
    return out;
}

// Lossless OBJ export: faces in one file, bare edges as line records in a
// second; radii preserved as comments.
inline void export_obj(const MedialMa& ma, const std::string& face_path,
                       const std::string& edge_path) {
    std::ofstream fo(face_path, std::ios::binary);
    if (!fo) throw std::runtime_error("cannot write " + face_path);
    char buf[160];
    for (const auto& v : ma.verts) {
        std::snprintf(buf, sizeof(buf), "# r %.9g\nv %.9g %.9g %.9g\n", v.r, v.x, v.y, v.z);
        fo << buf;
    }
    for (const auto& f : ma.faces) {
        std::snprintf(buf, sizeof(buf), "f %d %d %d\n", f[0] + 1, f[1] + 1, f[2] + 1);
        fo << buf;
    }
    std::ofstream eo(edge_path, std::ios::binary);
    if (!eo) throw std::runtime_error("cannot write " + edge_path);
    for (const auto& v : ma.verts) {
        std::snprintf(buf, sizeof(buf), "v %.9g %.9g %.9g\n", v.x, v.y, v.z);
        eo << buf;
    }
    for (const auto& e : ma.edges) {
        std::snprintf(buf, sizeof(buf), "l %d %d\n", e[0] + 1, e[1] + 1);
        eo << buf;
    }
}

}  // namespace structmat
