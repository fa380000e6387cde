#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <queue>
#include <vector>

#include "structmat/energy.hpp"
#include "structmat/medial_complex.hpp"
#include "structmat/parallel.hpp"
#include "structmat/rvd.hpp"

namespace structmat {

// Stability of a medial edge: 0 when the edge is a pure spike (its length is
// explained entirely by the radius difference), 1 when fully stable.
// Coincident centers collapse for free and count as stable.
inline double spike_metric(const Vec3& v1, double r1, const Vec3& v2, double r2) {
    double len = (v1 - v2).norm();
    if (len <= 0.0) return 1.0;
    return std::max(0.0, len - std::abs(r1 - r2)) / len;
}

inline double sigmoid_weight(double x, double k, double tau) {
    return 1.0 / (1.0 + std::exp(-k * (x - tau)));
}

struct SimplifyConfig {
    int target_vertices = 1000;
    double lambda = 6e-6;
    double tau = 0.025;
    double k = 100.0;
    int topo_threshold = 200;
    bool verbose = false;
};

struct CollapseCandidate {
    int edge = -1;
    SphereState target;
    double energy = 0.0;
    double spike = 1.0;
    double cost = 0.0;
    bool feature_path = false;
    uint32_t stamp_a = 0, stamp_b = 0;  // endpoint versions at build time
};

namespace detail {

// Energy context for collapsing `edge`: regular/feature cells of the merged
// atlas feed the quadric, invaginated cells feed per-site terms, and the
// Laplacian neighborhood is the merged 1-ring minus the endpoints.
inline EnergyContext make_context(int v1, int v2, const MedialComplex& mc, const RvdPartition& rvd,
                                  const SimplifyConfig& cfg, Atlas* merged_out = nullptr,
                                  bool* has_invaginated = nullptr) {
    EnergyContext ctx;
    ctx.lambda = cfg.lambda;
    Atlas merged = atlas_union(mc.verts[v1].atlas, mc.verts[v2].atlas);
    bool inv = false;
    for (int c : merged) {
        const RvdCell& cell = rvd.cells[c];
        if (cell.cls == CellClass::invaginated) {
            ctx.inv_terms.emplace_back(cell.site, cell.area);
            inv = true;
        } else {
            ctx.A_reg += cell.quadric.A;
            ctx.b_reg += cell.quadric.b;
            ctx.c_reg += cell.quadric.c;
        }
    }
    std::vector<int> nbrs;
    if (v2 >= 0) {
        nbrs = mc.vertex_neighbors(v1);
        auto n2 = mc.vertex_neighbors(v2);
        nbrs.insert(nbrs.end(), n2.begin(), n2.end());
        std::sort(nbrs.begin(), nbrs.end());
        nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
    } else {
        nbrs = mc.vertex_neighbors(v1);
    }
    for (int u : nbrs) {
        if (u == v1 || u == v2) continue;
        ctx.neighbors.push_back(mc.verts[u].center);
    }
    if (merged_out) *merged_out = std::move(merged);
    if (has_invaginated) *has_invaginated = inv;
    return ctx;
}

}  // namespace detail

inline std::optional<CollapseCandidate> build_candidate(int edge, const MedialComplex& mc,
                                                        const RvdPartition& rvd,
                                                        const SimplifyConfig& cfg) {
    const MedialEdge& e = mc.edges[edge];
    int v1 = e.a, v2 = e.b;
    if (v1 == v2) return std::nullopt;
    if (!mc.verts[v1].alive || !mc.verts[v2].alive || !e.alive) return std::nullopt;

    Atlas merged;
    bool has_inv = false;
    EnergyContext ctx = detail::make_context(v1, v2, mc, rvd, cfg, &merged, &has_inv);

    CollapseCandidate cand;
    cand.edge = edge;
    cand.stamp_a = mc.verts[v1].version;
    cand.stamp_b = mc.verts[v2].version;

    bool any_feature = mc.verts[v1].is_feature || mc.verts[v2].is_feature;
    if (any_feature && !has_inv) {
        // Feature path: discrete candidates with the radius pinned to zero.
        std::vector<Vec3> xs;
        if (mc.verts[v1].is_feature && mc.verts[v2].is_feature) {
            xs = {mc.verts[v1].center, mc.verts[v2].center,
                  0.5 * (mc.verts[v1].center + mc.verts[v2].center)};
        } else {
            xs = {mc.verts[v1].is_feature ? mc.verts[v1].center : mc.verts[v2].center};
        }
        double best = std::numeric_limits<double>::max();
        for (const Vec3& x : xs) {
            double val = eval_energy(ctx, {x, 0.0});
            if (val < best) {
                best = val;
                cand.target = {x, 0.0};
            }
        }
        cand.energy = best;
        cand.feature_path = true;
    } else if (!has_inv) {
        cand.target = solve_closed_form(ctx);
        cand.energy = eval_energy(ctx, cand.target);
    } else {
        // Midpoint init; radius = min distance to the merged atlas' sites.
        SphereState x0;
        x0.v = 0.5 * (mc.verts[v1].center + mc.verts[v2].center);
        x0.r = std::numeric_limits<double>::max();
        for (int c : merged) x0.r = std::min(x0.r, (x0.v - rvd.cells[c].site).norm());
        cand.target = solve_lbfgs(ctx, x0);
        if (cand.target.r < 0.0) cand.target.r = 0.0;
        cand.energy = eval_energy(ctx, cand.target);
    }
    cand.spike = spike_metric(mc.verts[v1].center, mc.verts[v1].radius, mc.verts[v2].center,
                              mc.verts[v2].radius);
    cand.cost = cand.energy * sigmoid_weight(cand.spike, cfg.k, cfg.tau);
    return cand;
}

// Link Condition for a 2-complex: the shared link of the endpoints must be
// exactly the link of the edge (the apex vertices of its alive faces, and no
// shared link edges at all).
inline bool link_condition(int edge, const MedialComplex& mc) {
    const MedialEdge& e = mc.edges[edge];
    int v1 = e.a, v2 = e.b;

    std::vector<int> lk_e;
    for (int f : e.faces) {
        if (!mc.faces[f].alive) continue;
        for (int w : mc.faces[f].v)
            if (w != v1 && w != v2) lk_e.push_back(w);
    }
    std::sort(lk_e.begin(), lk_e.end());

    auto n1 = mc.vertex_neighbors(v1);
    auto n2 = mc.vertex_neighbors(v2);
    std::vector<int> shared;
    std::set_intersection(n1.begin(), n1.end(), n2.begin(), n2.end(), std::back_inserter(shared));
    shared.erase(std::remove_if(shared.begin(), shared.end(),
                                [&](int w) { return w == v1 || w == v2; }),
                 shared.end());
    for (int w : shared)
        if (!std::binary_search(lk_e.begin(), lk_e.end(), w)) return false;

    // Shared link edges: an opposite edge (a, b) appearing in faces of both
    // endpoints would survive the collapse as a pinched membrane.
    auto opposite_edges = [&mc](int v) {
        std::vector<std::pair<int, int>> out;
        for (int e2 : mc.verts[v].edges) {
            if (!mc.edges[e2].alive) continue;
            for (int f : mc.edges[e2].faces) {
                if (!mc.faces[f].alive) continue;
                std::array<int, 3> fv = mc.faces[f].v;
                if (fv[0] != v && fv[1] != v && fv[2] != v) continue;
                int a = -1, b = -1;
                for (int w : fv)
                    if (w != v) (a < 0 ? a : b) = w;
                out.emplace_back(std::min(a, b), std::max(a, b));
            }
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    };
    auto o1 = opposite_edges(v1);
    auto o2 = opposite_edges(v2);
    std::vector<std::pair<int, int>> shared_edges;
    std::set_intersection(o1.begin(), o1.end(), o2.begin(), o2.end(),
                          std::back_inserter(shared_edges));
    for (const auto& [a, b] : shared_edges)
        if (a != v1 && a != v2 && b != v1 && b != v2) return false;
    return true;
}

// v1 absorbs v2 at the candidate sphere. Faces with repeated vertices die,
// duplicate faces and edges merge. Caller handles version bumps / re-enqueue.
inline void collapse(int edge, const CollapseCandidate& cand, MedialComplex& mc) {
    MedialEdge& e = mc.edges[edge];
    int v1 = e.a, v2 = e.b;

    mc.verts[v1].center = cand.target.v;
    mc.verts[v1].radius = cand.target.r;
    mc.verts[v1].atlas = atlas_union(mc.verts[v1].atlas, mc.verts[v2].atlas);
    mc.verts[v1].is_feature = cand.feature_path;

    // Faces around v2: rewrite, killing degenerates and duplicates.
    std::vector<int> v2_faces;
    for (int e2 : mc.verts[v2].edges) {
        if (!mc.edges[e2].alive) continue;
        for (int f : mc.edges[e2].faces)
            if (mc.faces[f].alive) v2_faces.push_back(f);
    }
    std::sort(v2_faces.begin(), v2_faces.end());
    v2_faces.erase(std::unique(v2_faces.begin(), v2_faces.end()), v2_faces.end());
    for (int f : v2_faces) {
        MedialFace& face = mc.faces[f];
        std::array<int, 3> old_key = face.v;
        bool touches = false;
        for (int& w : face.v)
            if (w == v2) {
                w = v1;
                touches = true;
            }
        if (!touches) continue;
        face.dual_sites = {-1, -1};
        if (face.v[0] == face.v[1] || face.v[1] == face.v[2] || face.v[0] == face.v[2]) {
            face.alive = false;
        } else if (mc.face_exists(face.v)) {
            face.alive = false;
        } else {
            mc.reindex_face(f, old_key);
        }
    }

    // Edges around v2: the collapsed edge dies; others move to v1, merging
    // into existing edges when the rebind creates a duplicate.
    mc.forget_edge(edge);
    e.alive = false;
    std::vector<int> v2_edges = mc.verts[v2].edges;
    std::sort(v2_edges.begin(), v2_edges.end());
    v2_edges.erase(std::unique(v2_edges.begin(), v2_edges.end()), v2_edges.end());
    for (int e2 : v2_edges) {
        if (e2 == edge || !mc.edges[e2].alive) continue;
        int dup = mc.rebind_edge(e2, v2, v1);
        if (dup >= 0) {
            auto& dst = mc.edges[dup].faces;
            for (int f : mc.edges[e2].faces)
                if (std::find(dst.begin(), dst.end(), f) == dst.end()) dst.push_back(f);
            mc.edges[e2].alive = false;
        } else {
            mc.verts[v1].edges.push_back(e2);
        }
    }
    mc.verts[v2].alive = false;
}

// Pins every vertex whose atlas holds feature cells but no invaginated cells
// to the feature line: r = 0 and the center minimizes the r=0 quadric plus
// the Laplacian term. Runs once before the collapse loop.
inline int snap_features(MedialComplex& mc, const RvdPartition& rvd, const SimplifyConfig& cfg) {
    int snapped = 0;
    for (size_t vi = 0; vi < mc.verts.size(); ++vi) {
        MedialVertex& v = mc.verts[vi];
        if (!v.alive) continue;
        bool has_feature = false, has_inv = false;
        for (int c : v.atlas) {
            if (rvd.cells[c].cls == CellClass::feature) has_feature = true;
            if (rvd.cells[c].cls == CellClass::invaginated) has_inv = true;
        }
        if (!has_feature || has_inv) continue;

        Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
        Vec3 b = Vec3::Zero();
        for (int c : v.atlas) {
            A += rvd.cells[c].quadric.A.topLeftCorner<3, 3>();
            b += rvd.cells[c].quadric.b.head<3>();
        }
        auto nbrs = mc.vertex_neighbors(static_cast<int>(vi));
        if (!nbrs.empty()) {
            A += cfg.lambda * Eigen::Matrix3d::Identity();
            Vec3 sum = Vec3::Zero();
            for (int u : nbrs) sum += mc.verts[u].center;
            b += -2.0 * cfg.lambda / static_cast<double>(nbrs.size()) * sum;
        }
        v.center = detail::solve_regularized<3>(A, b);
        v.radius = 0.0;
        v.is_feature = true;
        ++v.version;
        ++snapped;
    }
    return snapped;
}

struct SimplifyStats {
    int collapses = 0;
    bool queue_exhausted = false;
    int line_search_failures = 0;
};

// Greedy least-cost collapse loop with a lazy-invalidation priority queue.
// Optional `checkpoint` fires whenever the alive count drops to a value the
// caller scheduled (invoked with the current count after each collapse).
inline SimplifyStats run(MedialComplex& mc, const RvdPartition& rvd, const SimplifyConfig& cfg,
                         const std::function<void(int)>& checkpoint = nullptr) {
    SimplifyStats stats;
    struct Entry {
        double cost;
        int edge;
        CollapseCandidate cand;
        bool operator>(const Entry& o) const {
            if (cost != o.cost) return cost > o.cost;
            return edge > o.edge;
        }
    };
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> queue;

    // Candidates are evaluated in parallel (pure), enqueued in order.
    auto seed_queue = [&] {
        std::vector<int> live_edges;
        for (size_t e = 0; e < mc.edges.size(); ++e)
            if (mc.edges[e].alive) live_edges.push_back(static_cast<int>(e));
        std::vector<std::optional<CollapseCandidate>> initial(live_edges.size());
        parallel_for_ranges(live_edges.size(), [&](size_t b, size_t e) {
            for (size_t i = b; i < e; ++i) initial[i] = build_candidate(live_edges[i], mc, rvd, cfg);
        });
        for (auto& c : initial)
            if (c) queue.push({c->cost, c->edge, *c});
    };
    seed_queue();

    int alive = mc.alive_vertex_count();
    // Phase 0 enforces the topology guard below the threshold. The guard is
    // a heuristic, and on dense non-manifold clusters it can reject every
    // remaining edge; phase 1 reseeds the queue and finishes without it so
    // aggressive targets stay reachable.
    for (int phase = 0; phase < 2 && alive > cfg.target_vertices; ++phase) {
        bool enforce_link = phase == 0;
        if (phase == 1) seed_queue();
        while (alive > cfg.target_vertices && !queue.empty()) {
            Entry top = queue.top();
            queue.pop();
            const CollapseCandidate& cand = top.cand;
            const MedialEdge& e = mc.edges[cand.edge];
            if (!e.alive || !mc.verts[e.a].alive || !mc.verts[e.b].alive) continue;
            if (cand.stamp_a != mc.verts[e.a].version || cand.stamp_b != mc.verts[e.b].version)
                continue;  // stale
            if (e.a == e.b) continue;
            if (enforce_link && alive < cfg.topo_threshold && !link_condition(cand.edge, mc))
                continue;

            int v1 = e.a;
            collapse(cand.edge, cand, mc);
            --alive;
            ++stats.collapses;
            if (cfg.verbose && stats.collapses % 1000 == 0)
                std::fprintf(stderr, "simplify: %d alive, cost %.6g\n", alive, cand.cost);
            if (checkpoint) checkpoint(alive);

            // Invalidate and refresh the neighborhood: the new vertex, its
            // 1-ring, and every edge any of them touches.
            std::vector<int> dirty = mc.vertex_neighbors(v1);
            dirty.push_back(v1);
            for (int v : dirty) ++mc.verts[v].version;
            std::vector<int> requeue;
            for (int v : dirty)
                for (int e2 : mc.verts[v].edges)
                    if (mc.edges[e2].alive) requeue.push_back(e2);
            std::sort(requeue.begin(), requeue.end());
            requeue.erase(std::unique(requeue.begin(), requeue.end()), requeue.end());
            for (int e2 : requeue)
                if (auto c = build_candidate(e2, mc, rvd, cfg)) queue.push({c->cost, c->edge, *c});
        }
    }
    stats.queue_exhausted = alive > cfg.target_vertices;
    return stats;
}

}  // namespace structmat
