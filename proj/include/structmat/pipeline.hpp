#pragma once

#include <algorithm>
#include <chrono>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "structmat/delaunay.hpp"
#include "structmat/ma_io.hpp"
#include "structmat/medial_complex.hpp"
#include "structmat/metrics.hpp"
#include "structmat/rvd.hpp"
#include "structmat/sampling.hpp"
#include "structmat/simplify.hpp"
#include "structmat/surface_mesh.hpp"
#include "structmat/voronoi_init.hpp"

namespace structmat {

struct RunConfig {
    int samples = 10000;
    int target_vertices = 1000;
    double lambda = 6e-6;
    double tau = 0.025;
    double k = 100.0;
    double phi_deg = 45.0;
    double alpha = 0.7;
    int depth = 2;
    int topo_threshold = 200;
    uint64_t seed = 0;
    double noise = 0.0;
    bool concave_filter = true;  // ablation switch
    std::vector<int> snapshot_schedule;  // descending alive-vertex counts
    int snapshot_recon_res = 128;
    bool verbose = false;
};

// Wall-clock per pipeline stage, milliseconds.
struct StageTimes {
    double sampling = 0.0;
    double rvd = 0.0;
    double voro3d = 0.0;
    double init = 0.0;
    double simp = 0.0;
};

struct Snapshot {
    int alive_count = 0;
    MedialMa dump;
    double hd = -1.0;  // % of bbox diagonal; -1 if not computed
    std::vector<int> atlas_sizes;
};

struct PipelineResult {
    MedialComplex mc;
    RvdPartition rvd;
    SampleSet sites;
    FeatureGraph features;
    StageTimes times;
    SimplifyStats simplify_stats;
    int snapped_features = 0;
    int filtered_faces = 0;
    std::vector<Snapshot> snapshots;
};

namespace detail {

inline double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

// Full pipeline on an already-normalized mesh: sampling, Delaunay, inner
// Voronoi, RVD + classification, concave filtering, feature snapping,
// simplification. Snapshots are captured at the scheduled alive counts.
inline PipelineResult run_pipeline(SurfaceMesh& mesh, const RunConfig& cfg) {
    using clock = std::chrono::steady_clock;
    PipelineResult res;

    if (cfg.noise > 0.0) mesh = perturb_vertices(mesh, cfg.noise, cfg.seed ^ 0x9e3779b97f4a7c15ull);

    double phi = cfg.phi_deg * std::numbers::pi / 180.0;
    res.features = classify_features(mesh, phi);

    auto t0 = clock::now();
    res.sites = sample_surface(mesh, cfg.samples, cfg.seed);
    res.times.sampling = detail::ms_since(t0);

    t0 = clock::now();
    res.rvd = build_rvd(mesh, res.sites, res.features, cfg.depth);
    classify_cells(res.rvd);
    res.times.rvd = detail::ms_since(t0);

    t0 = clock::now();
    DelaunayMesh del = delaunay3d(res.sites);
    res.times.voro3d = detail::ms_since(t0);

    t0 = clock::now();
    res.mc = build_inner_medial(del, mesh, res.sites);
    if (cfg.concave_filter)
        res.filtered_faces = filter_concave_faces(res.mc, mesh, res.rvd, cfg.alpha);
    res.times.init = detail::ms_since(t0);

    t0 = clock::now();
    SimplifyConfig scfg;
    scfg.target_vertices = cfg.target_vertices;
    scfg.lambda = cfg.lambda;
    scfg.tau = cfg.tau;
    scfg.k = cfg.k;
    scfg.topo_threshold = cfg.topo_threshold;
    scfg.verbose = cfg.verbose;
    res.snapped_features = snap_features(res.mc, res.rvd, scfg);

    std::vector<int> schedule = cfg.snapshot_schedule;
    std::sort(schedule.rbegin(), schedule.rend());
    int initial = res.mc.alive_vertex_count();
    auto snapshot_now = [&res](int count) {
        Snapshot snap;
        snap.alive_count = count;
        std::vector<Atlas> atlases;
        snap.dump = to_ma(res.mc, &atlases);
        for (const auto& a : atlases) snap.atlas_sizes.push_back(static_cast<int>(a.size()));
        res.snapshots.push_back(std::move(snap));
    };
    size_t next = 0;
    while (next < schedule.size() && schedule[next] > initial) {
        if (cfg.verbose)
            std::fprintf(stderr, "snapshot %d above initial count %d, skipped\n", schedule[next],
                         initial);
        ++next;  // scheduled above the starting count: skip with warning
    }
    if (next < schedule.size() && schedule[next] == initial) {
        snapshot_now(initial);
        ++next;
    }
    auto checkpoint = [&](int alive) {
        while (next < schedule.size() && alive <= schedule[next]) {
            snapshot_now(alive);
            ++next;
        }
    };
    res.simplify_stats = run(res.mc, res.rvd, scfg, checkpoint);
    res.times.simp = detail::ms_since(t0);
    return res;
}

// HD of each snapshot's reconstruction against the input surface. Kept apart
// from the run so monitoring cost never lands in the stage timings.
inline void evaluate_snapshots(PipelineResult& res, const SurfaceMesh& mesh, int recon_res = 128,
                               int hd_samples = 20000) {
    for (auto& snap : res.snapshots) {
        MedialComplex mc = from_ma(snap.dump);
        try {
            SurfaceMesh rec = reconstruct(mc, recon_res);
            snap.hd = hausdorff(mesh, rec, hd_samples).max;
        } catch (const std::exception&) {
            snap.hd = -1.0;  // empty level set (all radii zero)
        }
    }
}

}  // namespace structmat
