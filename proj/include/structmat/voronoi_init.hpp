#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "structmat/delaunay.hpp"
#include "structmat/medial_complex.hpp"
#include "structmat/parallel.hpp"
#include "structmat/rvd.hpp"
#include "structmat/surface_mesh.hpp"

namespace structmat {

// Extracts the inner part of the Voronoi diagram dual to `del`. Each Delaunay
// edge whose incident tets form a closed ring of strictly-inside circumcenters
// becomes a medial face fan around the ring barycenter; partially-inner and
// hull-broken rings are discarded, with one exception: when both sites of the
// dual edge lie near a concave feature line, the inner sub-chains of a
// partially-inner ring are kept. Faces there straddle the surface by
// construction (the sheet dives into the concave corner), and dropping them
// wholesale would silently hide exactly the spurious structures the concave
// midpoint filter is meant to expose and remove. Throws when no circumcenter
// is inside (thin-sheet degenerate input).
inline MedialComplex build_inner_medial(const DelaunayMesh& del, const SurfaceMesh& mesh,
                                        const SampleSet& sites) {
    size_t nt = del.tets.size();
    std::vector<char> inner(nt, 0);
    parallel_for_ranges(nt, [&](size_t b, size_t e) {
        for (size_t t = b; t < e; ++t) inner[t] = mesh.is_inside(del.circumcenters[t]) ? 1 : 0;
    });

    MedialComplex mc;
    std::vector<int> tet_vertex(nt, -1);
    int inner_count = 0;
    for (size_t t = 0; t < nt; ++t) {
        if (!inner[t]) continue;
        ++inner_count;
        const auto& tet = del.tets[t];
        Atlas atlas(tet.begin(), tet.end());
        std::sort(atlas.begin(), atlas.end());
        double r = (del.circumcenters[t] - sites.sites[tet[0]].position).norm();
        tet_vertex[t] = mc.add_vertex(del.circumcenters[t], r, std::move(atlas),
                                      {tet[0], tet[1], tet[2], tet[3]});
    }
    if (inner_count == 0) throw std::runtime_error("no interior Voronoi vertices");

    // Sites close to a concave feature line (within two mean spacings) keep
    // the inner portions of their partially-inner rings; see the header note.
    std::vector<std::pair<Vec3, Vec3>> concave_segs;
    for (size_t e = 0; e < mesh.edges.size(); ++e)
        if (mesh.edge_labels[e] == EdgeLabel::concave)
            concave_segs.emplace_back(mesh.vertices[mesh.edges[e][0]],
                                      mesh.vertices[mesh.edges[e][1]]);
    std::vector<char> near_concave(sites.sites.size(), 0);
    if (!concave_segs.empty()) {
        double spacing = std::sqrt(mesh.total_area() / static_cast<double>(sites.sites.size()));
        parallel_for_ranges(sites.sites.size(), [&](size_t b, size_t e) {
            for (size_t i = b; i < e; ++i) {
                const Vec3& p = sites.sites[i].position;
                for (const auto& [a, bseg] : concave_segs) {
                    Vec3 d = bseg - a;
                    double t = d.squaredNorm() > 0.0
                                   ? std::clamp((p - a).dot(d) / d.squaredNorm(), 0.0, 1.0)
                                   : 0.0;
                    if ((p - (a + t * d)).norm() < 2.0 * spacing) {
                        near_concave[i] = 1;
                        break;
                    }
                }
            }
        });
    }

    // Tets around each Delaunay edge.
    std::map<std::pair<int, int>, std::vector<int>> edge_tets;
    for (size_t t = 0; t < nt; ++t) {
        const auto& tet = del.tets[t];
        for (int i = 0; i < 4; ++i)
            for (int j = i + 1; j < 4; ++j) {
                auto key = std::minmax(tet[i], tet[j]);
                edge_tets[key].push_back(static_cast<int>(t));
            }
    }

    for (const auto& [edge, tets] : edge_tets) {
        if (tets.size() < 3) continue;
        bool all_inner = true;
        for (int t : tets) all_inner = all_inner && inner[t];
        bool concave_pair = near_concave[edge.first] && near_concave[edge.second];
        if (!all_inner && !concave_pair) continue;

        // Ring order: tets around the edge are adjacent iff they share one of
        // their two remaining vertices. A closed ring has every such vertex
        // shared by exactly two tets of the set.
        std::unordered_map<int, std::vector<int>> by_other;
        bool ok = true;
        for (int t : tets) {
            for (int k = 0; k < 4; ++k) {
                int v = del.tets[t][k];
                if (v != edge.first && v != edge.second) by_other[v].push_back(t);
            }
        }
        for (const auto& [v, ts] : by_other)
            if (ts.size() != 2) ok = false;
        if (!ok) continue;

        std::vector<int> ring;
        ring.reserve(tets.size());
        std::vector<char> used_tet(tets.size(), 0);
        std::unordered_map<int, int> tet_slot;
        for (size_t i = 0; i < tets.size(); ++i) tet_slot[tets[i]] = static_cast<int>(i);
        int cur = tets[0];
        int prev_other = -1;
        while (true) {
            ring.push_back(cur);
            used_tet[tet_slot[cur]] = 1;
            int next = -1, via = -1;
            for (int k = 0; k < 4 && next < 0; ++k) {
                int v = del.tets[cur][k];
                if (v == edge.first || v == edge.second || v == prev_other) continue;
                for (int t : by_other[v])
                    if (t != cur && !used_tet[tet_slot[t]]) {
                        next = t;
                        via = v;
                        break;
                    }
            }
            if (next < 0) break;
            prev_other = via;
            cur = next;
        }
        if (ring.size() != tets.size()) continue;  // disconnected or pinched ring
        // Closure: last and first must also share an other-vertex.
        {
            bool closed = false;
            for (int k = 0; k < 4; ++k) {
                int v = del.tets[ring.back()][k];
                if (v == edge.first || v == edge.second) continue;
                const auto& ts = by_other[v];
                if ((ts[0] == ring.back() && ts[1] == ring.front()) ||
                    (ts[1] == ring.back() && ts[0] == ring.front()))
                    closed = true;
            }
            if (!closed) continue;
        }

        // Barycenter fan over each closed ring or inner sub-chain: the hub
        // inherits the union of the run's atlases and its minimum radius.
        std::array<int, 2> dual{edge.first, edge.second};
        auto fan = [&](const std::vector<int>& run, bool closed) {
            Vec3 bary = Vec3::Zero();
            double min_r = std::numeric_limits<double>::max();
            Atlas hub_atlas;
            for (int t : run) {
                int v = tet_vertex[t];
                bary += mc.verts[v].center;
                min_r = std::min(min_r, mc.verts[v].radius);
                hub_atlas = atlas_union(hub_atlas, mc.verts[v].atlas);
            }
            bary /= static_cast<double>(run.size());
            int hub = mc.add_vertex(bary, min_r, std::move(hub_atlas));
            size_t n_seg = closed ? run.size() : run.size() - 1;
            for (size_t k = 0; k < n_seg; ++k) {
                int a = tet_vertex[run[k]];
                int b = tet_vertex[run[(k + 1) % run.size()]];
                if (hub == a || hub == b || a == b) continue;
                mc.add_face(hub, a, b, dual);
            }
        };
        if (all_inner) {
            fan(ring, true);
        } else {
            // Rotate so the scan starts at an outer tet, then fan every
            // maximal run of inner tets (two or more, so the run has a
            // segment to fan against).
            size_t start = 0;
            while (inner[ring[start]]) ++start;
            std::vector<int> run;
            for (size_t k = 1; k <= ring.size(); ++k) {
                int t = ring[(start + k) % ring.size()];
                if (inner[t]) {
                    run.push_back(t);
                } else {
                    if (run.size() >= 2) fan(run, false);
                    run.clear();
                }
            }
            if (run.size() >= 2) fan(run, false);
        }
    }

    // Inner circumcenters whose rings were all discarded carry no simplices;
    // drop them so every alive vertex is connected.
    for (auto& v : mc.verts) {
        if (v.edges.empty()) v.alive = false;
    }
    if (mc.alive_vertex_count() == 0) throw std::runtime_error("no interior Voronoi vertices");
    return mc;
}

// Deletes medial faces near concave features: a face whose dual sites both
// own invaginated cells dies iff the surface is closer to the dual midpoint
// than alpha times the half site distance. Returns the number removed.
inline int filter_concave_faces(MedialComplex& mc, const SurfaceMesh& mesh, const RvdPartition& rvd,
                                double alpha) {
    // Deciding per dual edge (not per fan triangle) keeps whole Voronoi faces
    // together; all triangles of one fan share the same dual pair.
    size_t nf = mc.faces.size();
    std::vector<char> doomed(nf, 0);
    parallel_for_ranges(nf, [&](size_t b, size_t e) {
        for (size_t f = b; f < e; ++f) {
            const auto& face = mc.faces[f];
            if (!face.alive || face.dual_sites[0] < 0) continue;
            const RvdCell& c1 = rvd.cells[face.dual_sites[0]];
            const RvdCell& c2 = rvd.cells[face.dual_sites[1]];
            if (c1.cls != CellClass::invaginated || c2.cls != CellClass::invaginated) continue;
            Vec3 m = 0.5 * (c1.site + c2.site);
            double d = mesh.distance_to_surface(m).first;
            if (d < alpha * 0.5 * (c1.site - c2.site).norm()) doomed[f] = 1;
        }
    });
    int removed = 0;
    for (size_t f = 0; f < nf; ++f)
        if (doomed[f]) {
            mc.kill_face(static_cast<int>(f));
            ++removed;
        }
    if (removed > 0) mc.prune_orphans();
    return removed;
}

}  // namespace structmat
