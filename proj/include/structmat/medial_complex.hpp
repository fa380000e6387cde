#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "structmat/bvh.hpp"

namespace structmat {

// Sorted set of RVD cell ids owned by a medial vertex.
using Atlas = std::vector<int>;

inline Atlas atlas_union(const Atlas& a, const Atlas& b) {
    Atlas out;
    out.reserve(a.size() + b.size());
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

struct MedialVertex {
    Vec3 center = Vec3::Zero();
    double radius = 0.0;
    Atlas atlas;
    bool is_feature = false;
    bool alive = true;
    uint32_t version = 0;           // bumped whenever the vertex or its star changes
    std::vector<int> edges;         // incident edge ids (alive and dead mixed; filter on use)
};

struct MedialEdge {
    int a = -1, b = -1;
    bool alive = true;
    std::vector<int> faces;  // incident face ids
};

struct MedialFace {
    std::array<int, 3> v{-1, -1, -1};
    bool alive = true;
    std::array<int, 2> dual_sites{-1, -1};  // generating Delaunay edge, -1 after merges
};

// Non-manifold 2-complex of medial spheres. Edges are first-class: they stay
// alive when all their faces die, so simplification can run a complex down to
// a single vertex.
class MedialComplex {
public:
    std::vector<MedialVertex> verts;
    std::vector<MedialEdge> edges;
    std::vector<MedialFace> faces;
    std::vector<std::array<int, 4>> generator_sites;  // per initial vertex, -1s for derived

    int add_vertex(const Vec3& center, double radius, Atlas atlas,
                   std::array<int, 4> gens = {-1, -1, -1, -1}) {
        MedialVertex v;
        v.center = center;
        v.radius = radius;
        v.atlas = std::move(atlas);
        verts.push_back(std::move(v));
        generator_sites.push_back(gens);
        return static_cast<int>(verts.size()) - 1;
    }

    // Returns the existing edge when (a, b) is already present.
    int add_edge(int a, int b) {
        if (a == b) throw std::invalid_argument("self-loop edge");
        auto key = edge_key(std::min(a, b), std::max(a, b));
        auto it = edge_index_.find(key);
        if (it != edge_index_.end()) return it->second;
        int id = static_cast<int>(edges.size());
        edges.push_back({a, b, true, {}});
        verts[a].edges.push_back(id);
        verts[b].edges.push_back(id);
        edge_index_.emplace(key, id);
        return id;
    }

    int add_face(int a, int b, int c, std::array<int, 2> dual = {-1, -1}) {
        std::array<int, 3> key{a, b, c};
        std::sort(key.begin(), key.end());
        if (key[0] == key[1] || key[1] == key[2]) throw std::invalid_argument("degenerate face");
        auto it = face_index_.find(key);
        if (it != face_index_.end()) return it->second;
        int id = static_cast<int>(faces.size());
        faces.push_back({{a, b, c}, true, dual});
        face_index_.emplace(key, id);
        for (int k = 0; k < 3; ++k) {
            int e = add_edge(key[k], key[(k + 1) % 3]);
            edges[e].faces.push_back(id);
        }
        return id;
    }

    int alive_vertex_count() const {
        int n = 0;
        for (const auto& v : verts) n += v.alive ? 1 : 0;
        return n;
    }
    int alive_edge_count() const {
        int n = 0;
        for (const auto& e : edges) n += e.alive ? 1 : 0;
        return n;
    }
    int alive_face_count() const {
        int n = 0;
        for (const auto& f : faces) n += f.alive ? 1 : 0;
        return n;
    }

    int alive_faces_of_edge(int e) const {
        int n = 0;
        for (int f : edges[e].faces) n += faces[f].alive ? 1 : 0;
        return n;
    }

    // Alive neighbor vertex ids of v, deduplicated, ascending.
    std::vector<int> vertex_neighbors(int v) const {
        std::vector<int> out;
        for (int e : verts[v].edges) {
            if (!edges[e].alive) continue;
            int o = other_end(e, v);
            if (verts[o].alive) out.push_back(o);
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    int other_end(int e, int v) const { return edges[e].a == v ? edges[e].b : edges[e].a; }

    void kill_face(int f) { faces[f].alive = false; }

    // Drops edges with no alive faces that came from faces, then vertices
    // with no alive edges. Used after the concave-face filter; the collapse
    // stage keeps bare edges alive on purpose.
    void prune_orphans() {
        for (auto& e : edges) {
            if (!e.alive || e.faces.empty()) continue;
            bool any = false;
            for (int f : e.faces) any = any || faces[f].alive;
            if (!any) e.alive = false;
        }
        for (size_t v = 0; v < verts.size(); ++v) {
            if (!verts[v].alive) continue;
            bool any = false;
            for (int e : verts[v].edges) any = any || edges[e].alive;
            if (!any) verts[v].alive = false;
        }
    }

    int find_edge(int a, int b) const {
        auto it = edge_index_.find(edge_key(std::min(a, b), std::max(a, b)));
        return it == edge_index_.end() ? -1 : it->second;
    }

    // Redirects an edge endpoint during collapse, keeping the index in sync.
    // Returns -1 on success, or the id of an existing alive duplicate edge
    // (in which case `e` was not re-indexed and should be merged into it).
    int rebind_edge(int e, int from, int to) {
        int a = edges[e].a, b = edges[e].b;
        auto old_key = edge_key(std::min(a, b), std::max(a, b));
        auto old_it = edge_index_.find(old_key);
        if (old_it != edge_index_.end() && old_it->second == e) edge_index_.erase(old_it);
        if (edges[e].a == from) edges[e].a = to;
        if (edges[e].b == from) edges[e].b = to;
        a = edges[e].a;
        b = edges[e].b;
        auto key = edge_key(std::min(a, b), std::max(a, b));
        auto it = edge_index_.find(key);
        if (it != edge_index_.end() && it->second != e && edges[it->second].alive) return it->second;
        edge_index_[key] = e;
        return -1;
    }

    void forget_edge(int e) {
        int a = edges[e].a, b = edges[e].b;
        auto key = edge_key(std::min(a, b), std::max(a, b));
        auto it = edge_index_.find(key);
        if (it != edge_index_.end() && it->second == e) edge_index_.erase(it);
    }

    // Face identity bookkeeping for duplicate detection after collapses.
    bool face_exists(std::array<int, 3> key) const {
        std::sort(key.begin(), key.end());
        auto it = face_index_.find(key);
        return it != face_index_.end() && faces[it->second].alive;
    }
    void reindex_face(int f, std::array<int, 3> old_key) {
        std::sort(old_key.begin(), old_key.end());
        auto it = face_index_.find(old_key);
        if (it != face_index_.end() && it->second == f) face_index_.erase(it);
        auto key = faces[f].v;
        std::sort(key.begin(), key.end());
        face_index_[key] = f;
    }
    void forget_face(int f) {
        auto key = faces[f].v;
        std::sort(key.begin(), key.end());
        auto it = face_index_.find(key);
        if (it != face_index_.end() && it->second == f) face_index_.erase(it);
    }

private:
    static uint64_t edge_key(int a, int b) {
        return (static_cast<uint64_t>(static_cast<uint32_t>(a)) << 32) | static_cast<uint32_t>(b);
    }
    struct FaceKeyHash {
        size_t operator()(const std::array<int, 3>& k) const {
            size_t h = std::hash<int>()(k[0]);
            h = h * 1000003u ^ std::hash<int>()(k[1]);
            h = h * 1000003u ^ std::hash<int>()(k[2]);
            return h;
        }
    };

    std::unordered_map<uint64_t, int> edge_index_;
    std::unordered_map<std::array<int, 3>, int, FaceKeyHash> face_index_;
};

}  // namespace structmat
