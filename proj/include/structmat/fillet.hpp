#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "structmat/medial_complex.hpp"
#include "structmat/parallel.hpp"
#include "structmat/rvd.hpp"
#include "structmat/surface_mesh.hpp"

namespace structmat {

struct FilletCurve {
    std::vector<int> chain;          // ordered medial edge ids
    std::vector<int> vertices;       // ordered vertex ids along the chain (chain.size() + 1, or cycle)
    std::vector<double> radii;       // per chain vertex
    std::vector<int> support_cells;  // atlas cells whose fragments matched
};

namespace detail {

// Does the radius-interpolated capsule around the medial edge explain the
// surface fragments of the endpoint atlases? A fragment centroid p matches
// when |dist(p, segment) - r(beta)| <= tol * r(beta) at its closest beta.
inline bool radius_consistent(const Vec3& c1, double r1, const Vec3& c2, double r2,
                              const std::vector<int>& frag_ids, const RvdPartition& rvd, double tol) {
    if (frag_ids.empty()) return false;
    Vec3 e = c2 - c1;
    double ee = e.squaredNorm();
    int good = 0;
    for (int fid : frag_ids) {
        const Vec3& p = rvd.fragment_map[fid].centroid;
        double beta = ee > 0.0 ? std::clamp((p - c1).dot(e) / ee, 0.0, 1.0) : 0.0;
        double r = r1 + beta * (r2 - r1);
        double d = (p - (c1 + beta * e)).norm();
        if (r > 0.0 && std::abs(d - r) <= tol * r) ++good;
    }
    return good * 10 >= static_cast<int>(frag_ids.size()) * 9;  // >= 90%
}

}  // namespace detail

// Finds fillet centerlines: medial boundary edges (exactly one alive face)
// whose interpolated radius consistently matches the distance to their
// atlas fragments, chained into maximal curves. Feature edges (r = 0) are
// excluded. Chains terminate at vertices of qualifying-degree != 2.
inline std::vector<FilletCurve> detect_fillets(const MedialComplex& mc, const SurfaceMesh& mesh,
                                               const RvdPartition& rvd, double tol = 0.1) {
    (void)mesh;
    std::vector<int> boundary;
    for (size_t e = 0; e < mc.edges.size(); ++e) {
        const MedialEdge& edge = mc.edges[e];
        if (!edge.alive) continue;
        if (mc.alive_faces_of_edge(static_cast<int>(e)) != 1) continue;
        if (mc.verts[edge.a].radius <= 0.0 || mc.verts[edge.b].radius <= 0.0) continue;
        boundary.push_back(static_cast<int>(e));
    }

    std::vector<char> qualifies(boundary.size(), 0);
    std::vector<std::vector<int>> support(boundary.size());
    parallel_for_ranges(boundary.size(), [&](size_t lo, size_t hi) {
        for (size_t i = lo; i < hi; ++i) {
            const MedialEdge& edge = mc.edges[boundary[i]];
            Atlas cells = atlas_union(mc.verts[edge.a].atlas, mc.verts[edge.b].atlas);
            std::vector<int> frags;
            for (int c : cells)
                frags.insert(frags.end(), rvd.cell_fragments[c].begin(), rvd.cell_fragments[c].end());
            if (detail::radius_consistent(mc.verts[edge.a].center, mc.verts[edge.a].radius,
                                          mc.verts[edge.b].center, mc.verts[edge.b].radius, frags,
                                          rvd, tol)) {
                qualifies[i] = 1;
                support[i] = std::move(cells);
            }
        }
    });

    // Chain qualifying edges by shared vertices; break at degree != 2.
    std::map<int, std::vector<size_t>> vertex_edges;  // vertex -> indices into `boundary`
    for (size_t i = 0; i < boundary.size(); ++i) {
        if (!qualifies[i]) continue;
        vertex_edges[mc.edges[boundary[i]].a].push_back(i);
        vertex_edges[mc.edges[boundary[i]].b].push_back(i);
    }
    std::vector<char> used(boundary.size(), 0);
    std::vector<FilletCurve> curves;

    auto walk = [&](size_t start, int from_vertex) {
        FilletCurve curve;
        size_t cur = start;
        int v = from_vertex;
        curve.vertices.push_back(v);
        curve.radii.push_back(mc.verts[v].radius);
        while (true) {
            used[cur] = 1;
            curve.chain.push_back(boundary[cur]);
            for (int c : support[cur]) curve.support_cells.push_back(c);
            const MedialEdge& edge = mc.edges[boundary[cur]];
            v = edge.a == v ? edge.b : edge.a;
            curve.vertices.push_back(v);
            curve.radii.push_back(mc.verts[v].radius);
            const auto& inc = vertex_edges[v];
            if (inc.size() != 2) break;
            size_t next = inc[0] == cur ? inc[1] : inc[0];
            if (used[next]) break;
            cur = next;
        }
        std::sort(curve.support_cells.begin(), curve.support_cells.end());
        curve.support_cells.erase(std::unique(curve.support_cells.begin(), curve.support_cells.end()),
                                  curve.support_cells.end());
        curves.push_back(std::move(curve));
    };

    // Open chains first (start at endpoints of degree != 2), then leftover cycles.
    for (const auto& [v, inc] : vertex_edges) {
        if (inc.size() == 2) continue;
        for (size_t i : inc)
            if (!used[i]) walk(i, v);
    }
    for (size_t i = 0; i < boundary.size(); ++i)
        if (qualifies[i] && !used[i]) walk(i, mc.edges[boundary[i]].a);

    return curves;
}

}  // namespace structmat
