#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "structmat/parallel.hpp"
#include "structmat/sampling.hpp"
#include "structmat/surface_mesh.hpp"

namespace structmat {

using Mat4 = Eigen::Matrix4d;
using Vec4 = Eigen::Vector4d;

// Quadratic form of the integrated squared sphere-to-plane distance over a
// facet: E(v, r) = x'Ax + b'x + c with x = (v, r).
struct FacetQuadric {
    Mat4 A = Mat4::Zero();
    Vec4 b = Vec4::Zero();
    double c = 0.0;

    FacetQuadric& operator+=(const FacetQuadric& o) {
        A += o.A;
        b += o.b;
        c += o.c;
        return *this;
    }
    double eval(const Vec4& x) const { return x.dot(A * x) + b.dot(x) + c; }
};

// Integrates (n'(p - v) - r)^2 over the triangle. The constant term uses the
// 3-point mid-edge rule, which is exact for quadratics.
inline FacetQuadric facet_quadric(const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec3& n) {
    FacetQuadric q;
    double area = 0.5 * (p1 - p0).cross(p2 - p0).norm();
    if (area <= 0.0) return q;
    Vec4 n4(n.x(), n.y(), n.z(), 1.0);
    q.A = area * (n4 * n4.transpose());
    Vec3 bary = (p0 + p1 + p2) / 3.0;
    q.b = -2.0 * area * n.dot(bary) * n4;
    double m01 = n.dot(0.5 * (p0 + p1));
    double m12 = n.dot(0.5 * (p1 + p2));
    double m20 = n.dot(0.5 * (p2 + p0));
    q.c = area / 3.0 * (m01 * m01 + m12 * m12 + m20 * m20);
    return q;
}

enum class CellClass : uint8_t { regular, invaginated, feature };

struct RvdCell {
    Vec3 site = Vec3::Zero();
    Vec3 normal = Vec3::Zero();
    double area = 0.0;
    FacetQuadric quadric;
    CellClass cls = CellClass::regular;
    bool touched_convex = false;
    bool touched_concave = false;
};

struct RvdFragment {
    std::array<Vec3, 3> corners;
    Vec3 centroid;
    double area = 0.0;
    int triangle = -1;  // source surface triangle
    int site = -1;      // owning site
};

struct RvdPartition {
    std::vector<RvdCell> cells;
    std::vector<RvdFragment> fragment_map;
    std::vector<std::vector<int>> cell_fragments;  // fragment ids per site
};

namespace detail {

// Uniform grid over the sample sites for exact nearest-site queries.
class SiteGrid {
public:
    SiteGrid(const std::vector<SampleSite>& sites, double cell) : sites_(sites), cell_(cell) {
        for (size_t i = 0; i < sites.size(); ++i)
            grid_[key(coords(sites[i].position))].push_back(static_cast<int>(i));
    }

    // Nearest site by distance, ties broken by lower id (deterministic).
    int nearest(const Vec3& q) const {
        auto c = coords(q);
        int best = -1;
        double best_d2 = std::numeric_limits<double>::max();
        for (int ring = 0;; ++ring) {
            scan_ring(q, c, ring, best, best_d2);
            if (best >= 0) {
                // Sites in ring R sit at distance >= (R-1)*cell from q, so the
                // winner is final once that bound exceeds it.
                double safe = ring * cell_;
                if (best_d2 <= safe * safe) break;
            }
            if (ring > 4096) break;  // defensive; sites are never this sparse
        }
        return best;
    }

private:
    std::array<int64_t, 3> coords(const Vec3& p) const {
        return {static_cast<int64_t>(std::floor(p.x() / cell_)),
                static_cast<int64_t>(std::floor(p.y() / cell_)),
                static_cast<int64_t>(std::floor(p.z() / cell_))};
    }
    static uint64_t key(const std::array<int64_t, 3>& c) {
        return (static_cast<uint64_t>(c[0]) * 73856093ull) ^ (static_cast<uint64_t>(c[1]) * 19349663ull) ^
               (static_cast<uint64_t>(c[2]) * 83492791ull);
    }

    bool scan_ring(const Vec3& q, const std::array<int64_t, 3>& c, int ring, int& best,
                   double& best_d2) const {
        bool any = false;
        for (int64_t dx = -ring; dx <= ring; ++dx)
            for (int64_t dy = -ring; dy <= ring; ++dy)
                for (int64_t dz = -ring; dz <= ring; ++dz) {
                    if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != ring) continue;
                    auto it = grid_.find(key({c[0] + dx, c[1] + dy, c[2] + dz}));
                    if (it == grid_.end()) continue;
                    any = true;
                    for (int i : it->second) {
                        double d2 = (sites_[i].position - q).squaredNorm();
                        if (d2 < best_d2 || (d2 == best_d2 && i < best)) {
                            best_d2 = d2;
                            best = i;
                        }
                    }
                }
        return any;
    }

    const std::vector<SampleSite>& sites_;
    double cell_;
    std::unordered_map<uint64_t, std::vector<int>> grid_;
};

}  // namespace detail

// Restricted Voronoi diagram by uniform subdivision: every surface triangle
// is split into 4^depth fragments on the barycentric lattice and each
// fragment is assigned to the site nearest its centroid. Feature contact is
// combinatorial: a fragment touches a feature edge of the original triangle
// iff it has a lattice vertex on that border.
inline RvdPartition build_rvd(const SurfaceMesh& mesh, const SampleSet& sites,
                              const FeatureGraph& features, int depth = 2) {
    if (sites.sites.empty()) throw std::invalid_argument("no sites");
    const int m = 1 << depth;  // lattice resolution per triangle edge

    RvdPartition part;
    part.cells.resize(sites.sites.size());
    for (size_t i = 0; i < sites.sites.size(); ++i) {
        part.cells[i].site = sites.sites[i].position;
        part.cells[i].normal = sites.sites[i].normal;
    }

    // Per-original-edge feature labels, looked up by triangle corner pair.
    auto edge_label = [&mesh](int a, int b) {
        int e = mesh.edge_between(a, b);
        return e >= 0 ? mesh.edge_labels[e] : EdgeLabel::interior;
    };

    struct Frag {
        std::array<Vec3, 3> corners;
        bool convex = false, concave = false;
    };

    // Enumerate fragments serially (cheap), assign owners in parallel, then
    // accumulate serially in fragment order so results are thread-invariant.
    std::vector<Frag> frags;
    std::vector<int> frag_tri;
    frags.reserve(mesh.triangles.size() * static_cast<size_t>(m) * m);
    for (size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tr = mesh.triangles[t];
        const Vec3 &v0 = mesh.vertices[tr[0]], &v1 = mesh.vertices[tr[1]], &v2 = mesh.vertices[tr[2]];
        EdgeLabel l01 = edge_label(tr[0], tr[1]);
        EdgeLabel l12 = edge_label(tr[1], tr[2]);
        EdgeLabel l20 = edge_label(tr[2], tr[0]);
        auto lat = [&](int i, int j) {
            double bi = static_cast<double>(i) / m, bj = static_cast<double>(j) / m;
            return Vec3((1.0 - bi - bj) * v0 + bi * v1 + bj * v2);
        };
        // Lattice vertex (i, j) lies on border v0-v1 iff j == 0, on v1-v2 iff
        // i + j == m, on v2-v0 iff i == 0.
        auto mark = [&](Frag& f, int i, int j) {
            auto touch = [&f](EdgeLabel l) {
                if (l == EdgeLabel::convex_sharp) f.convex = true;
                if (l == EdgeLabel::concave) f.concave = true;
            };
            if (j == 0) touch(l01);
            if (i + j == m) touch(l12);
            if (i == 0) touch(l20);
        };
        for (int j = 0; j < m; ++j)
            for (int i = 0; i + j < m; ++i) {
                Frag up{{lat(i, j), lat(i + 1, j), lat(i, j + 1)}};
                mark(up, i, j);
                mark(up, i + 1, j);
                mark(up, i, j + 1);
                frags.push_back(up);
                frag_tri.push_back(static_cast<int>(t));
                if (i + j + 1 < m) {
                    Frag dn{{lat(i + 1, j), lat(i + 1, j + 1), lat(i, j + 1)}};
                    mark(dn, i + 1, j);
                    mark(dn, i + 1, j + 1);
                    mark(dn, i, j + 1);
                    frags.push_back(dn);
                    frag_tri.push_back(static_cast<int>(t));
                }
            }
    }

    double grid_cell = sites.poisson_radius > 0.0 ? sites.poisson_radius
                                                  : mesh.bbox_diagonal() / 32.0;
    detail::SiteGrid site_grid(sites.sites, grid_cell);
    std::vector<int> owner(frags.size());
    parallel_for_ranges(frags.size(), [&](size_t b, size_t e) {
        for (size_t f = b; f < e; ++f) {
            Vec3 c = (frags[f].corners[0] + frags[f].corners[1] + frags[f].corners[2]) / 3.0;
            owner[f] = site_grid.nearest(c);
        }
    });

    part.fragment_map.reserve(frags.size());
    part.cell_fragments.resize(sites.sites.size());
    for (size_t f = 0; f < frags.size(); ++f) {
        const Frag& fr = frags[f];
        int s = owner[f];
        int t = frag_tri[f];
        Vec3 n = mesh.triangle_normal(t);
        RvdFragment out;
        out.corners = fr.corners;
        out.centroid = (fr.corners[0] + fr.corners[1] + fr.corners[2]) / 3.0;
        out.area = 0.5 * (fr.corners[1] - fr.corners[0]).cross(fr.corners[2] - fr.corners[0]).norm();
        out.triangle = t;
        out.site = s;
        RvdCell& cell = part.cells[s];
        cell.area += out.area;
        cell.quadric += facet_quadric(fr.corners[0], fr.corners[1], fr.corners[2], n);
        cell.touched_convex = cell.touched_convex || fr.convex;
        cell.touched_concave = cell.touched_concave || fr.concave;
        part.cell_fragments[s].push_back(static_cast<int>(part.fragment_map.size()));
        part.fragment_map.push_back(out);
    }
    (void)features;  // labels are read off the mesh, which classify_features updated
    return part;
}

// Concave contact dominates: invaginated beats feature.
inline void classify_cells(RvdPartition& part) {
    for (auto& c : part.cells) {
        if (c.touched_concave)
            c.cls = CellClass::invaginated;
        else if (c.touched_convex)
            c.cls = CellClass::feature;
        else
            c.cls = CellClass::regular;
    }
}

}  // namespace structmat
