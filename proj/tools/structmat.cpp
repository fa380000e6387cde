// Medial axis toolkit driver: compute / metrics / fillet / export-obj.

#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "structmat/fillet.hpp"
#include "structmat/ma_io.hpp"
#include "structmat/mesh_io.hpp"
#include "structmat/metrics.hpp"
#include "structmat/pipeline.hpp"

using json = nlohmann::json;
using namespace structmat;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitParse = 2;
constexpr int kExitGeometry = 3;
constexpr int kExitIo = 4;

std::vector<int> parse_schedule(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stoi(tok));
    }
    return out;
}

void write_text(const std::string& path, const std::string& body) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << body;
}

int cmd_compute(const std::string& input, RunConfig cfg, const std::string& out_path,
                bool with_metrics, bool keep_atlas, int recon_res,
                const std::string& snapshot_spec) {
    LoadedMesh loaded;
    try {
        loaded = load_mesh(input);
    } catch (const MeshParseError& e) {
        std::fprintf(stderr, "parse: %s\n", e.what());
        return kExitParse;
    }
    for (const auto& w : loaded.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());

    if (!snapshot_spec.empty()) cfg.snapshot_schedule = parse_schedule(snapshot_spec);

    PipelineResult res;
    try {
        res = run_pipeline(loaded.mesh, cfg);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "geometry: %s\n", e.what());
        return kExitGeometry;
    }

    json manifest;
    manifest["input"] = input;
    manifest["config"] = {{"samples", cfg.samples},
                          {"target", cfg.target_vertices},
                          {"lambda", cfg.lambda},
                          {"tau", cfg.tau},
                          {"k", cfg.k},
                          {"phi_deg", cfg.phi_deg},
                          {"alpha", cfg.alpha},
                          {"depth", cfg.depth},
                          {"topo_threshold", cfg.topo_threshold},
                          {"seed", cfg.seed},
                          {"noise", cfg.noise},
                          {"concave_filter", cfg.concave_filter}};
    manifest["normalization"] = {{"scale", loaded.transform.scale},
                                 {"origin",
                                  {loaded.transform.origin.x(), loaded.transform.origin.y(),
                                   loaded.transform.origin.z()}}};
    manifest["watertight"] = loaded.watertight;
    manifest["times_ms"] = {{"sampling", res.times.sampling},
                            {"rvd", res.times.rvd},
                            {"voro3d", res.times.voro3d},
                            {"init", res.times.init},
                            {"simp", res.times.simp}};
    manifest["counts"] = {{"vertices", res.mc.alive_vertex_count()},
                          {"edges", res.mc.alive_edge_count()},
                          {"faces", res.mc.alive_face_count()},
                          {"snapped_features", res.snapped_features},
                          {"filtered_faces", res.filtered_faces},
                          {"collapses", res.simplify_stats.collapses}};

    try {
        std::vector<Atlas> atlases;
        MedialMa ma = to_ma(res.mc, &atlases);
        save_ma(ma, out_path);
        if (keep_atlas) save_atlas_sidecar(atlases, out_path + ".atlas");

        if (with_metrics) {
            SurfaceMesh rec = reconstruct(res.mc, recon_res);
            HausdorffReport hd = hausdorff(loaded.mesh, rec);
            manifest["hd_percent"] = {{"forward", hd.forward},
                                      {"backward", hd.backward},
                                      {"max", hd.max}};
        }
        if (!res.snapshots.empty()) {
            evaluate_snapshots(res, loaded.mesh, cfg.snapshot_recon_res);
            json series = json::array();
            for (size_t i = 0; i < res.snapshots.size(); ++i) {
                const auto& snap = res.snapshots[i];
                std::string snap_path = out_path + ".snap" + std::to_string(snap.alive_count) + ".ma";
                save_ma(snap.dump, snap_path);
                series.push_back({{"alive", snap.alive_count},
                                  {"hd_percent", snap.hd},
                                  {"path", snap_path},
                                  {"atlas_sizes", snap.atlas_sizes}});
            }
            manifest["snapshots"] = series;
            manifest["snapshot_recon_res"] = cfg.snapshot_recon_res;
        }
        write_text(out_path + ".manifest.json", manifest.dump(2) + "\n");
    } catch (const std::runtime_error& e) {
        std::fprintf(stderr, "io: %s\n", e.what());
        return kExitIo;
    }
    return kExitOk;
}

int cmd_metrics(const std::string& input, const std::string& ma_path, const std::string& report_path,
                int recon_res) {
    LoadedMesh loaded;
    MedialMa ma;
    try {
        loaded = load_mesh(input);
        ma = load_ma(ma_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "parse: %s\n", e.what());
        return kExitParse;
    }
    try {
        MedialComplex mc = from_ma(ma);
        SurfaceMesh rec = reconstruct(mc, recon_res);
        HausdorffReport hd = hausdorff(loaded.mesh, rec);
        TriangleQuality tq = triangle_quality(mc);
        auto quart = tq.ratio_quartiles();
        json report;
        report["hd_percent"] = {{"forward", hd.forward}, {"backward", hd.backward}, {"max", hd.max}};
        report["counts"] = {{"vertices", ma.verts.size()},
                            {"edges", ma.edges.size()},
                            {"faces", ma.faces.size()}};
        report["triangle_quality"] = {{"min_angle_histogram_5deg", tq.angle_histogram},
                                      {"radius_ratio_quartiles", quart},
                                      {"degenerate", tq.degenerate}};
        write_text(report_path, report.dump(2) + "\n");
    } catch (const std::runtime_error& e) {
        std::fprintf(stderr, "geometry: %s\n", e.what());
        return kExitGeometry;
    }
    return kExitOk;
}

int cmd_fillet(const std::string& input, const std::string& ma_path, const std::string& out_path,
               double tol, int samples, int depth, uint64_t seed, double phi_deg) {
    LoadedMesh loaded;
    MedialMa ma;
    std::vector<Atlas> atlases;
    try {
        loaded = load_mesh(input);
        ma = load_ma(ma_path);
        atlases = load_atlas_sidecar(ma_path + ".atlas");
    } catch (const std::exception& e) {
        std::fprintf(stderr, "parse: %s\n", e.what());
        return kExitParse;
    }
    try {
        // The atlas sidecar refers to the RVD of the producing run; rebuild it
        // with the same sampling parameters.
        FeatureGraph fg = classify_features(loaded.mesh, phi_deg * std::numbers::pi / 180.0);
        SampleSet sites = sample_surface(loaded.mesh, samples, seed);
        RvdPartition rvd = build_rvd(loaded.mesh, sites, fg, depth);
        classify_cells(rvd);
        MedialComplex mc = from_ma(ma, &atlases);
        auto curves = detect_fillets(mc, loaded.mesh, rvd, tol);
        json out = json::array();
        for (const auto& c : curves) {
            json polyline = json::array();
            for (size_t i = 0; i < c.vertices.size(); ++i) {
                const auto& v = ma.verts[c.vertices[i]];
                polyline.push_back({{"x", v.x}, {"y", v.y}, {"z", v.z}, {"r", c.radii[i]}});
            }
            out.push_back({{"polyline", polyline}, {"support_cells", c.support_cells}});
        }
        write_text(out_path, out.dump(2) + "\n");
    } catch (const std::runtime_error& e) {
        std::fprintf(stderr, "geometry: %s\n", e.what());
        return kExitGeometry;
    }
    return kExitOk;
}

int cmd_export_obj(const std::string& ma_path, const std::string& out_prefix) {
    MedialMa ma;
    try {
        ma = load_ma(ma_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "parse: %s\n", e.what());
        return kExitParse;
    }
    try {
        export_obj(ma, out_prefix + ".obj", out_prefix + "_edges.obj");
    } catch (const std::runtime_error& e) {
        std::fprintf(stderr, "io: %s\n", e.what());
        return kExitIo;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"structurally aligned medial axis toolkit"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string input, ma_path, out_path = "out.ma";
    std::string snapshots;
    bool with_metrics = false, keep_atlas = false, no_filter = false;
    int recon_res = 256;
    double fillet_tol = 0.1;

    auto* compute = app.add_subcommand("compute", "mesh -> simplified medial axis");
    compute->add_option("input", input, "OBJ or binary PLY mesh")->required();
    compute->add_option("--samples", cfg.samples, "surface sample count");
    compute->add_option("--target", cfg.target_vertices, "target medial vertex count");
    compute->add_option("--lambda", cfg.lambda, "Laplacian weight");
    compute->add_option("--tau", cfg.tau, "spike sigmoid threshold");
    compute->add_option("--k", cfg.k, "spike sigmoid sharpness");
    compute->add_option("--phi", cfg.phi_deg, "feature angle tolerance, degrees");
    compute->add_option("--alpha", cfg.alpha, "concave face filter ratio");
    compute->add_option("--depth", cfg.depth, "RVD subdivision depth");
    compute->add_option("--topo-threshold", cfg.topo_threshold, "link-condition vertex threshold");
    compute->add_option("--seed", cfg.seed, "random seed");
    compute->add_option("--noise", cfg.noise, "vertex perturbation fraction of bbox diagonal");
    compute->add_option("--out", out_path, "output .ma path");
    compute->add_option("--recon-res", recon_res, "reconstruction grid resolution for --metrics");
    compute->add_option("--snapshots", snapshots, "comma-separated alive-count checkpoints");
    compute->add_flag("--metrics", with_metrics, "compute Hausdorff distance of the result");
    compute->add_flag("--keep-atlas", keep_atlas, "write the atlas sidecar");
    compute->add_flag("--no-concave-filter", no_filter, "disable the concave face filter");
    compute->add_flag("--verbose", cfg.verbose, "progress logging");

    std::string report_path = "report.json";
    auto* metrics = app.add_subcommand("metrics", "evaluate a medial axis against a mesh");
    metrics->add_option("input", input, "OBJ or binary PLY mesh")->required();
    metrics->add_option("ma", ma_path, "medial axis .ma file")->required();
    metrics->add_option("--out", report_path, "report path");
    metrics->add_option("--recon-res", recon_res, "reconstruction grid resolution");

    std::string fillet_out = "fillets.json";
    auto* fillet = app.add_subcommand("fillet", "detect fillet centerlines");
    fillet->add_option("input", input, "OBJ or binary PLY mesh")->required();
    fillet->add_option("ma", ma_path, "medial axis .ma file (atlas sidecar required)")->required();
    fillet->add_option("--out", fillet_out, "fillet curves JSON path");
    fillet->add_option("--tol", fillet_tol, "radius consistency tolerance");
    fillet->add_option("--samples", cfg.samples, "sample count of the producing run");
    fillet->add_option("--depth", cfg.depth, "RVD depth of the producing run");
    fillet->add_option("--seed", cfg.seed, "seed of the producing run");
    fillet->add_option("--phi", cfg.phi_deg, "feature angle of the producing run");

    std::string obj_prefix = "medial";
    auto* export_cmd = app.add_subcommand("export-obj", "convert .ma to OBJ face + wire files");
    export_cmd->add_option("ma", ma_path, "medial axis .ma file")->required();
    export_cmd->add_option("--out", obj_prefix, "output path prefix");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitParse;
    }

    cfg.concave_filter = !no_filter;
    if (compute->parsed())
        return cmd_compute(input, cfg, out_path, with_metrics, keep_atlas, recon_res, snapshots);
    if (metrics->parsed()) return cmd_metrics(input, ma_path, report_path, recon_res);
    if (fillet->parsed())
        return cmd_fillet(input, ma_path, fillet_out, fillet_tol, cfg.samples, cfg.depth, cfg.seed,
                          cfg.phi_deg);
    if (export_cmd->parsed()) return cmd_export_obj(ma_path, obj_prefix);
    return kExitParse;
}
