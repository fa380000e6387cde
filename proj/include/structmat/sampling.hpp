#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "structmat/surface_mesh.hpp"

namespace structmat {

struct SampleSite {
    Vec3 position;
    Vec3 normal;   // geometric normal of the source triangle
    int triangle;  // source triangle id
};

struct SampleSet {
    std::vector<SampleSite> sites;
    int target_count = 0;
    double poisson_radius = 0.0;  // initial rejection radius r0
};

// Disk radius for n samples on total area A, assuming maximal Poisson-disk
// density (~0.68 coverage) saturates near n points.
inline double poisson_disk_radius(double area, int n) {
    return std::sqrt(0.68 * area / static_cast<double>(n));
}

// Blue-noise sampling by area-weighted dart throwing with grid-hash rejection.
// The rejection radius starts at r0 = poisson_disk_radius(area, n) and is
// relaxed down to 0.75*r0 if saturation is reached early, so the pairwise
// spacing floor 0.75*r0 always holds. Deterministic per seed.
inline SampleSet sample_surface(const SurfaceMesh& mesh, int n, uint64_t seed) {
    if (n < 16) throw std::invalid_argument("sample count must be >= 16");
    double area = mesh.total_area();
    if (area <= 0.0) throw std::runtime_error("mesh has zero surface area");

    SampleSet set;
    set.target_count = n;
    double r0 = poisson_disk_radius(area, n);
    set.poisson_radius = r0;

    // Cumulative area table for triangle selection.
    std::vector<double> cdf(mesh.triangles.size());
    double acc = 0.0;
    for (size_t t = 0; t < mesh.triangles.size(); ++t) {
        acc += mesh.triangle_area(static_cast<int>(t));
        cdf[t] = acc;
    }

    double cell = r0;
    auto int_key = [](int64_t ix, int64_t iy, int64_t iz) {
        return (static_cast<uint64_t>(ix) * 73856093ull) ^ (static_cast<uint64_t>(iy) * 19349663ull) ^
               (static_cast<uint64_t>(iz) * 83492791ull);
    };
    auto cell_coords = [cell](const Vec3& p) {
        return std::array<int64_t, 3>{static_cast<int64_t>(std::floor(p.x() / cell)),
                                      static_cast<int64_t>(std::floor(p.y() / cell)),
                                      static_cast<int64_t>(std::floor(p.z() / cell))};
    };
    std::unordered_map<uint64_t, std::vector<int>> grid;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    auto too_close = [&](const Vec3& p, double r) {
        double r2 = r * r;
        auto c = cell_coords(p);
        for (int64_t dx = -1; dx <= 1; ++dx)
            for (int64_t dy = -1; dy <= 1; ++dy)
                for (int64_t dz = -1; dz <= 1; ++dz) {
                    auto it = grid.find(int_key(c[0] + dx, c[1] + dy, c[2] + dz));
                    if (it == grid.end()) continue;
                    for (int j : it->second)
                        if ((set.sites[j].position - p).squaredNorm() < r2) return true;
                }
        return false;
    };

    // Relaxation schedule; the floor of 0.75*r0 is part of the contract.
    const double radii[3] = {r0, 0.85 * r0, 0.75 * r0};
    for (int phase = 0; phase < 3 && static_cast<int>(set.sites.size()) < n; ++phase) {
        double r = radii[phase];
        long budget = 30L * n;
        while (budget-- > 0 && static_cast<int>(set.sites.size()) < n) {
            double pick = uni(rng) * area;
            size_t t = std::lower_bound(cdf.begin(), cdf.end(), pick) - cdf.begin();
            if (t >= mesh.triangles.size()) t = mesh.triangles.size() - 1;
            const auto& tr = mesh.triangles[t];
            double su = std::sqrt(uni(rng));
            double v = uni(rng);
            double b0 = 1.0 - su, b1 = su * (1.0 - v), b2 = su * v;
            Vec3 p = b0 * mesh.vertices[tr[0]] + b1 * mesh.vertices[tr[1]] + b2 * mesh.vertices[tr[2]];
            if (too_close(p, r)) continue;
            int id = static_cast<int>(set.sites.size());
            set.sites.push_back({p, mesh.triangle_normal(static_cast<int>(t)), static_cast<int>(t)});
            auto c = cell_coords(p);
            grid[int_key(c[0], c[1], c[2])].push_back(id);
        }
    }

    if (static_cast<int>(set.sites.size()) < (9 * n) / 10)
        throw std::runtime_error("sampling failed to reach target density");
    return set;
}

}  // namespace structmat
