#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "structmat/bvh.hpp"

namespace structmat {

enum class EdgeLabel : uint8_t { interior, convex_sharp, concave, boundary };

// Uniform scale + translation applied at load time: x' = scale * (x - origin).
struct UnitCubeTransform {
    double scale = 1.0;
    Vec3 origin = Vec3::Zero();
    Vec3 apply(const Vec3& p) const { return scale * (p - origin); }
    Vec3 invert(const Vec3& p) const { return p / scale + origin; }
};

struct FeatureGraph {
    std::vector<int> convex_edges;
    std::vector<int> concave_edges;
    double tolerance = 0.0;  // phi, radians
};

// Indexed triangle mesh with per-edge adjacency, feature labels, and a BVH
// for distance / winding queries. Immutable once finalize() has run.
class SurfaceMesh {
public:
    SurfaceMesh() = default;
    // The BVH holds pointers into our own vectors; copies and moves must
    // re-point it at the destination's storage.
    SurfaceMesh(const SurfaceMesh& o) { assign(o); }
    SurfaceMesh(SurfaceMesh&& o) noexcept { assign(std::move(o)); }
    SurfaceMesh& operator=(const SurfaceMesh& o) {
        if (this != &o) assign(o);
        return *this;
    }
    SurfaceMesh& operator=(SurfaceMesh&& o) noexcept {
        if (this != &o) assign(std::move(o));
        return *this;
    }

    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;

    // Edge i joins edges[i][0] < edges[i][1]; edge_triangles[i] lists incident faces.
    std::vector<std::array<int, 2>> edges;
    std::vector<std::vector<int>> edge_triangles;
    std::vector<EdgeLabel> edge_labels;

    // Welds duplicate vertices, drops degenerate triangles, builds adjacency,
    // per-triangle data, and the BVH. Call after filling vertices/triangles.
    void finalize(double weld_tol = 1e-9) {
        weld_vertices(weld_tol);
        drop_degenerate_triangles();
        if (triangles.empty()) throw std::runtime_error("mesh has no valid triangles");
        build_edges();
        build_triangle_data();
        bvh_.build(vertices, triangles);
        finalized_ = true;
    }

    bool finalized() const { return finalized_; }

    // Isotropic rescale so the longest bbox side is 1 and coordinates lie in [0,1]^3.
    UnitCubeTransform normalize_unit_cube() {
        Aabb box;
        for (const auto& v : vertices) box.expand(v);
        Vec3 ext = box.hi - box.lo;
        double longest = ext.maxCoeff();
        if (longest <= 0.0) throw std::runtime_error("degenerate bounding box");
        UnitCubeTransform tf;
        tf.scale = 1.0 / longest;
        tf.origin = box.lo;
        for (auto& v : vertices) v = tf.apply(v);
        if (finalized_) {
            build_triangle_data();
            bvh_.build(vertices, triangles);
        }
        return tf;
    }

    double total_area() const { return total_area_; }
    const Vec3& triangle_normal(int t) const { return tri_normals_[t]; }
    double triangle_area(int t) const { return tri_areas_[t]; }
    Aabb bounding_box() const {
        Aabb box;
        for (const auto& v : vertices) box.expand(v);
        return box;
    }
    double bbox_diagonal() const { return bounding_box().diagonal(); }

    std::pair<double, Vec3> distance_to_surface(const Vec3& q) const {
        Vec3 cp;
        double d = bvh_.distance(q, &cp);
        return {d, cp};
    }

    double winding_number(const Vec3& q) const { return bvh_.winding_number(q); }
    bool is_inside(const Vec3& q) const { return winding_number(q) >= 0.5; }

    const TriangleBvh& bvh() const { return bvh_; }

    // Interior dihedral angle across a 2-manifold edge, in (0, 2*pi).
    // pi/2 for a cube edge, pi for planar, 3*pi/2 for an inner corner.
    double dihedral_angle(int edge_id) const {
        const auto& inc = edge_triangles[edge_id];
        if (inc.size() != 2) throw std::runtime_error("dihedral on non-manifold edge");
        int t0 = inc[0], t1 = inc[1];
        const Vec3 &n0 = tri_normals_[t0], &n1 = tri_normals_[t1];
        int apex1 = opposite_vertex(t1, edge_id);
        Vec3 ref = vertices[edges[edge_id][0]];
        double alpha = std::atan2(n0.cross(n1).norm(), n0.dot(n1));
        bool concave = n0.dot(vertices[apex1] - ref) > 0.0;
        return concave ? std::numbers::pi + alpha : std::numbers::pi - alpha;
    }

    int edge_between(int a, int b) const {
        auto it = edge_index_.find(edge_key(std::min(a, b), std::max(a, b)));
        return it == edge_index_.end() ? -1 : it->second;
    }

    bool watertight() const { return watertight_; }

private:
    static uint64_t edge_key(int a, int b) {
        return (static_cast<uint64_t>(static_cast<uint32_t>(a)) << 32) | static_cast<uint32_t>(b);
    }

    int opposite_vertex(int t, int edge_id) const {
        const auto& tr = triangles[t];
        int a = edges[edge_id][0], b = edges[edge_id][1];
        for (int k = 0; k < 3; ++k)
            if (tr[k] != a && tr[k] != b) return tr[k];
        return tr[0];
    }

    void weld_vertices(double tol) {
        std::unordered_map<uint64_t, std::vector<int>> grid;
        auto cell_key = [tol](int64_t ix, int64_t iy, int64_t iz) {
            uint64_t h = static_cast<uint64_t>(ix) * 73856093ull;
            h ^= static_cast<uint64_t>(iy) * 19349663ull;
            h ^= static_cast<uint64_t>(iz) * 83492791ull;
            return h;
        };
        std::vector<int> remap(vertices.size(), -1);
        std::vector<Vec3> kept;
        kept.reserve(vertices.size());
        double tol2 = tol * tol;
        for (size_t i = 0; i < vertices.size(); ++i) {
            const Vec3& p = vertices[i];
            int64_t ix = static_cast<int64_t>(std::floor(p.x() / tol));
            int64_t iy = static_cast<int64_t>(std::floor(p.y() / tol));
            int64_t iz = static_cast<int64_t>(std::floor(p.z() / tol));
            int found = -1;
            for (int64_t dx = -1; dx <= 1 && found < 0; ++dx)
                for (int64_t dy = -1; dy <= 1 && found < 0; ++dy)
                    for (int64_t dz = -1; dz <= 1 && found < 0; ++dz) {
                        auto it = grid.find(cell_key(ix + dx, iy + dy, iz + dz));
                        if (it == grid.end()) continue;
                        for (int j : it->second)
                            if ((kept[j] - p).squaredNorm() <= tol2) {
                                found = j;
                                break;
                            }
                    }
            if (found < 0) {
                found = static_cast<int>(kept.size());
                kept.push_back(p);
                grid[cell_key(ix, iy, iz)].push_back(found);
            }
            remap[i] = found;
        }
        vertices = std::move(kept);
        for (auto& t : triangles)
            for (int& v : t) v = remap[v];
    }

    void drop_degenerate_triangles() {
        std::vector<std::array<int, 3>> kept;
        kept.reserve(triangles.size());
        for (const auto& t : triangles) {
            if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) continue;
            Vec3 n = (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]);
            if (n.norm() <= 0.0) continue;
            kept.push_back(t);
        }
        triangles = std::move(kept);
    }

    void build_edges() {
        edges.clear();
        edge_triangles.clear();
        edge_index_.clear();
        for (size_t t = 0; t < triangles.size(); ++t) {
            const auto& tr = triangles[t];
            for (int k = 0; k < 3; ++k) {
                int a = tr[k], b = tr[(k + 1) % 3];
                if (a > b) std::swap(a, b);
                uint64_t key = edge_key(a, b);
                auto it = edge_index_.find(key);
                int eid;
                if (it == edge_index_.end()) {
                    eid = static_cast<int>(edges.size());
                    edge_index_.emplace(key, eid);
                    edges.push_back({a, b});
                    edge_triangles.emplace_back();
                } else {
                    eid = it->second;
                }
                edge_triangles[eid].push_back(static_cast<int>(t));
            }
        }
        edge_labels.assign(edges.size(), EdgeLabel::interior);
        watertight_ = true;
        for (size_t e = 0; e < edges.size(); ++e) {
            if (edge_triangles[e].size() == 1) {
                edge_labels[e] = EdgeLabel::boundary;
                watertight_ = false;
            } else if (edge_triangles[e].size() != 2) {
                watertight_ = false;
            }
        }
    }

    void build_triangle_data() {
        tri_normals_.resize(triangles.size());
        tri_areas_.resize(triangles.size());
        total_area_ = 0.0;
        for (size_t t = 0; t < triangles.size(); ++t) {
            const auto& tr = triangles[t];
            Vec3 n = (vertices[tr[1]] - vertices[tr[0]]).cross(vertices[tr[2]] - vertices[tr[0]]);
            double a2 = n.norm();
            tri_areas_[t] = 0.5 * a2;
            tri_normals_[t] = a2 > 0.0 ? Vec3(n / a2) : Vec3(0, 0, 1);
            total_area_ += tri_areas_[t];
        }
    }

    template <typename M>
    void assign(M&& o) {
        vertices = std::forward<M>(o).vertices;
        triangles = std::forward<M>(o).triangles;
        edges = std::forward<M>(o).edges;
        edge_triangles = std::forward<M>(o).edge_triangles;
        edge_labels = std::forward<M>(o).edge_labels;
        bvh_ = std::forward<M>(o).bvh_;
        tri_normals_ = std::forward<M>(o).tri_normals_;
        tri_areas_ = std::forward<M>(o).tri_areas_;
        edge_index_ = std::forward<M>(o).edge_index_;
        total_area_ = o.total_area_;
        watertight_ = o.watertight_;
        finalized_ = o.finalized_;
        bvh_.rebind(vertices, triangles);
    }

    TriangleBvh bvh_;
    std::vector<Vec3> tri_normals_;
    std::vector<double> tri_areas_;
    std::unordered_map<uint64_t, int> edge_index_;
    double total_area_ = 0.0;
    bool watertight_ = true;
    bool finalized_ = false;
};

// Partition edges by the dihedral thresholds: convex-sharp below pi - phi,
// concave above pi + phi. Boundary edges are excluded from both sets.
inline FeatureGraph classify_features(SurfaceMesh& mesh, double phi) {
    if (!(phi > 0.0 && phi < std::numbers::pi / 2.0))
        throw std::invalid_argument("phi must lie in (0, pi/2)");
    FeatureGraph fg;
    fg.tolerance = phi;
    for (size_t e = 0; e < mesh.edges.size(); ++e) {
        if (mesh.edge_triangles[e].size() != 2) {
            if (mesh.edge_triangles[e].size() == 1) mesh.edge_labels[e] = EdgeLabel::boundary;
            continue;
        }
        double angle = mesh.dihedral_angle(static_cast<int>(e));
        if (angle < std::numbers::pi - phi) {
            mesh.edge_labels[e] = EdgeLabel::convex_sharp;
            fg.convex_edges.push_back(static_cast<int>(e));
        } else if (angle > std::numbers::pi + phi) {
            mesh.edge_labels[e] = EdgeLabel::concave;
            fg.concave_edges.push_back(static_cast<int>(e));
        } else {
            mesh.edge_labels[e] = EdgeLabel::interior;
        }
    }
    return fg;
}

// Displace each vertex by a uniformly random vector with magnitude in
// [0, eta * bbox_diagonal]. Deterministic per seed.
inline SurfaceMesh perturb_vertices(const SurfaceMesh& mesh, double eta, uint64_t seed) {
    SurfaceMesh out;
    out.vertices = mesh.vertices;
    out.triangles = mesh.triangles;
    if (eta > 0.0) {
        double d = mesh.bbox_diagonal();
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        for (auto& v : out.vertices) {
            // Direction from a Gaussian triple, magnitude uniform in [0, eta*d].
            std::normal_distribution<double> gauss(0.0, 1.0);
            Vec3 dir(gauss(rng), gauss(rng), gauss(rng));
            double len = dir.norm();
            if (len < 1e-300) dir = Vec3(1, 0, 0);
            else dir /= len;
            v += dir * (uni(rng) * eta * d);
        }
    }
    out.finalize();
    return out;
}

}  // namespace structmat
