#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "structmat/marching_cubes.hpp"
#include "structmat/medial_complex.hpp"
#include "structmat/parallel.hpp"
#include "structmat/surface_mesh.hpp"

namespace structmat {

namespace detail {

// Signed distance from q to the ball swept linearly along a segment:
// min over t in [0,1] of ||q - c(t)|| - r(t). Stationary points of the
// difference satisfy a quadratic after squaring; endpoint candidates cover
// the rest.
inline double segment_envelope(const Vec3& q, const Vec3& p0, double r0, const Vec3& p1, double r1) {
    Vec3 e = p1 - p0;
    Vec3 w = q - p0;
    double rho = r1 - r0;
    double ee = e.squaredNorm();
    auto f = [&](double t) { return (w - t * e).norm() - (r0 + t * rho); };
    double best = std::min(f(0.0), f(1.0));
    if (ee > 0.0) {
        double we = w.dot(e);
        // Plain projection: the exact minimizer for constant radius (where the
        // quadratic below degenerates to a double root that rounding can lose)
        // and a valid upper bound in general.
        best = std::min(best, f(std::clamp(we / ee, 0.0, 1.0)));
        // (t*ee - w.e)^2 = rho^2 * ||w - t e||^2, with sign(t*ee - w.e) = sign(rho)
        double a = ee * ee - rho * rho * ee;
        double b = -2.0 * we * ee + 2.0 * rho * rho * we;
        double c = we * we - rho * rho * w.squaredNorm();
        double roots[2];
        int nr = 0;
        if (std::abs(a) > 1e-300) {
            double disc = b * b - 4.0 * a * c;
            if (disc >= 0.0) {
                double sq = std::sqrt(disc);
                roots[nr++] = (-b - sq) / (2.0 * a);
                roots[nr++] = (-b + sq) / (2.0 * a);
            }
        } else if (std::abs(b) > 1e-300) {
            roots[nr++] = -c / b;
        }
        for (int i = 0; i < nr; ++i) {
            double t = roots[i];
            if (t <= 0.0 || t >= 1.0) continue;
            if ((t * ee - we) * rho < 0.0) continue;  // squaring artifact
            best = std::min(best, f(t));
        }
    }
    return best;
}

// Same minimization over a triangle with linearly interpolated (c, r).
inline double triangle_envelope(const Vec3& q, const Vec3& p0, double r0, const Vec3& p1, double r1,
                                const Vec3& p2, double r2) {
    double best = std::min({segment_envelope(q, p0, r0, p1, r1), segment_envelope(q, p1, r1, p2, r2),
                            segment_envelope(q, p2, r2, p0, r0)});
    // Interior stationary point: parametrize c(y) = p0 + B y, r(y) = r0 + rho'y.
    Eigen::Matrix<double, 3, 2> B;
    B.col(0) = p1 - p0;
    B.col(1) = p2 - p0;
    Eigen::Vector2d rho(r1 - r0, r2 - r0);
    Eigen::Matrix2d G = B.transpose() * B;
    double det = G.determinant();
    if (std::abs(det) > 1e-300) {
        Eigen::Matrix2d Gi = G.inverse();
        Vec3 w0 = p0 - q;
        // Gradient condition: B'(c - q) = d * rho with d = ||c - q||.
        Eigen::Vector2d a = -Gi * (B.transpose() * w0);
        Eigen::Vector2d bb = Gi * rho;
        Vec3 u = w0 + B * a;
        Vec3 m = B * bb;
        double qa = m.squaredNorm() - 1.0;
        double qb = 2.0 * u.dot(m);
        double qc = u.squaredNorm();
        double roots[2];
        int nr = 0;
        if (std::abs(qa) > 1e-300) {
            double disc = qb * qb - 4.0 * qa * qc;
            if (disc >= 0.0) {
                double sq = std::sqrt(disc);
                roots[nr++] = (-qb - sq) / (2.0 * qa);
                roots[nr++] = (-qb + sq) / (2.0 * qa);
            }
        } else if (std::abs(qb) > 1e-300) {
            roots[nr++] = -qc / qb;
        }
        for (int i = 0; i < nr; ++i) {
            double d = roots[i];
            if (d < 0.0) continue;
            Eigen::Vector2d y = a + d * bb;
            if (y[0] < 0.0 || y[1] < 0.0 || y[0] + y[1] > 1.0) continue;
            best = std::min(best, d - (r0 + rho.dot(y)));
        }
    }
    return best;
}

}  // namespace detail

// Signed field of the union of balls interpolated over the alive simplices
// of a medial complex: d(q) = min over simplices of ||q - c|| - r.
class EnvelopeField {
public:
    explicit EnvelopeField(const MedialComplex& mc) {
        for (const auto& f : mc.faces) {
            if (!f.alive) continue;
            Simplex s;
            s.n = 3;
            for (int k = 0; k < 3; ++k) {
                s.p[k] = mc.verts[f.v[k]].center;
                s.r[k] = mc.verts[f.v[k]].radius;
            }
            simplices_.push_back(s);
        }
        for (const auto& e : mc.edges) {
            if (!e.alive) continue;
            Simplex s;
            s.n = 2;
            s.p[0] = mc.verts[e.a].center;
            s.r[0] = mc.verts[e.a].radius;
            s.p[1] = mc.verts[e.b].center;
            s.r[1] = mc.verts[e.b].radius;
            simplices_.push_back(s);
        }
        for (const auto& v : mc.verts) {
            if (!v.alive) continue;
            Simplex s;
            s.n = 1;
            s.p[0] = v.center;
            s.r[0] = v.radius;
            simplices_.push_back(s);
        }
        if (simplices_.empty()) throw std::invalid_argument("empty medial complex");
        build_bvh();
    }

    double operator()(const Vec3& q) const {
        return (*this)(q, std::numeric_limits<double>::max());
    }

    // Band-limited evaluation: exact whenever |result| < band, otherwise any
    // value of the correct sign with magnitude >= band. The field is
    // 1-Lipschitz, so level-set extraction stays exact as long as the band is
    // at least one grid edge length.
    double operator()(const Vec3& q, double band) const {
        double best = std::numeric_limits<double>::max();
        query(0, q, best, band);
        return best;
    }

    size_t simplex_count() const { return simplices_.size(); }

private:
    struct Simplex {
        std::array<Vec3, 3> p;
        std::array<double, 3> r{0, 0, 0};
        int n = 0;
        double eval(const Vec3& q) const {
            if (n == 1) return (q - p[0]).norm() - r[0];
            if (n == 2) return detail::segment_envelope(q, p[0], r[0], p[1], r[1]);
            return detail::triangle_envelope(q, p[0], r[0], p[1], r[1], p[2], r[2]);
        }
    };
    struct Node {
        Aabb box;
        double max_r = 0.0;
        int left = -1, right = -1;
        int begin = 0, end = 0;
    };

    void build_bvh() {
        order_.resize(simplices_.size());
        for (size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<int>(i);
        nodes_.reserve(2 * simplices_.size());
        build_node(0, order_.size());
    }

    int build_node(size_t begin, size_t end) {
        int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        Node node;
        for (size_t i = begin; i < end; ++i) {
            const Simplex& s = simplices_[order_[i]];
            for (int k = 0; k < s.n; ++k) {
                node.box.expand(s.p[k]);
                node.max_r = std::max(node.max_r, s.r[k]);
            }
        }
        if (end - begin <= 4) {
            node.begin = static_cast<int>(begin);
            node.end = static_cast<int>(end);
            nodes_[id] = node;
            return id;
        }
        Vec3 ext = node.box.hi - node.box.lo;
        int axis = 0;
        if (ext[1] > ext[axis]) axis = 1;
        if (ext[2] > ext[axis]) axis = 2;
        size_t mid = (begin + end) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](int l, int r) {
                             return simplex_center(l)[axis] < simplex_center(r)[axis];
                         });
        nodes_[id] = node;
        int l = build_node(begin, mid);
        int r = build_node(mid, end);
        nodes_[id].left = l;
        nodes_[id].right = r;
        return id;
    }

    Vec3 simplex_center(int i) const {
        const Simplex& s = simplices_[i];
        Vec3 c = Vec3::Zero();
        for (int k = 0; k < s.n; ++k) c += s.p[k];
        return c / s.n;
    }

    void query(int id, const Vec3& q, double& best, double band) const {
        if (best <= -band) return;  // sign settled, magnitude past the band
        const Node& node = nodes_[id];
        double lower = std::sqrt(node.box.sq_distance(q)) - node.max_r;
        if (lower >= best || lower >= band) return;
        if (node.left < 0) {
            for (int i = node.begin; i < node.end; ++i)
                best = std::min(best, simplices_[order_[i]].eval(q));
            return;
        }
        double dl = std::sqrt(nodes_[node.left].box.sq_distance(q)) - nodes_[node.left].max_r;
        double dr = std::sqrt(nodes_[node.right].box.sq_distance(q)) - nodes_[node.right].max_r;
        int first = node.left, second = node.right;
        if (dr < dl) std::swap(first, second);
        query(first, q, best, band);
        query(second, q, best, band);
    }

    std::vector<Simplex> simplices_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
};

inline double envelope_distance(const MedialComplex& mc, const Vec3& q) {
    return EnvelopeField(mc)(q);
}

// Zero level set of the envelope over the (slightly padded) unit cube.
inline SurfaceMesh reconstruct(const MedialComplex& mc, int resolution = 256) {
    if (resolution < 32) throw std::invalid_argument("resolution must be >= 32");
    EnvelopeField field(mc);
    // Pad by two cells so an envelope touching the unit cube is not clipped.
    double pad = 2.0 / resolution;
    Vec3 lo(-pad, -pad, -pad), hi(1.0 + pad, 1.0 + pad, 1.0 + pad);
    // One grid edge length of slack keeps band-limited evaluation exact on
    // every sign-crossing edge (the field is 1-Lipschitz).
    double band = (hi - lo).maxCoeff() / static_cast<double>(resolution - 1);
    McMesh grid =
        marching_cubes([&field, band](const Vec3& p) { return field(p, band); }, lo, hi, resolution);
    if (grid.triangles.empty()) throw std::runtime_error("empty level set");
    SurfaceMesh out;
    out.vertices = std::move(grid.vertices);
    out.triangles = std::move(grid.triangles);
    out.finalize();
    return out;
}

struct HausdorffReport {
    double forward = 0.0;   // a -> b, % of a's bbox diagonal
    double backward = 0.0;  // b -> a
    double max = 0.0;
};

namespace detail {

// Deterministic area-uniform point samples (plus the mesh vertices, which
// tighten the estimate for free).
inline std::vector<Vec3> spread_points(const SurfaceMesh& mesh, int n, uint64_t seed) {
    std::vector<double> cdf(mesh.triangles.size());
    double acc = 0.0;
    for (size_t t = 0; t < mesh.triangles.size(); ++t) {
        acc += mesh.triangle_area(static_cast<int>(t));
        cdf[t] = acc;
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<Vec3> pts = mesh.vertices;
    pts.reserve(pts.size() + n);
    for (int i = 0; i < n; ++i) {
        double pick = uni(rng) * acc;
        size_t t = std::lower_bound(cdf.begin(), cdf.end(), pick) - cdf.begin();
        if (t >= mesh.triangles.size()) t = mesh.triangles.size() - 1;
        const auto& tr = mesh.triangles[t];
        double su = std::sqrt(uni(rng));
        double v = uni(rng);
        pts.push_back((1.0 - su) * mesh.vertices[tr[0]] + su * (1.0 - v) * mesh.vertices[tr[1]] +
                      su * v * mesh.vertices[tr[2]]);
    }
    return pts;
}

inline double one_sided(const std::vector<Vec3>& pts, const SurfaceMesh& target) {
    std::vector<double> worst(pts.size());
    parallel_for_ranges(pts.size(), [&](size_t b, size_t e) {
        for (size_t i = b; i < e; ++i) worst[i] = target.distance_to_surface(pts[i]).first;
    });
    return *std::max_element(worst.begin(), worst.end());
}

}  // namespace detail

inline HausdorffReport hausdorff(const SurfaceMesh& a, const SurfaceMesh& b, int n_samples = 100000) {
    double diag = a.bbox_diagonal();
    HausdorffReport rep;
    rep.forward = detail::one_sided(detail::spread_points(a, n_samples, 0x5eed01), b) / diag * 100.0;
    rep.backward = detail::one_sided(detail::spread_points(b, n_samples, 0x5eed02), a) / diag * 100.0;
    rep.max = std::max(rep.forward, rep.backward);
    return rep;
}

struct TriangleQuality {
    std::vector<double> min_angle_deg;   // per alive face
    std::vector<double> radius_ratio;    // 2 * inradius / circumradius, in [0, 1]
    int degenerate = 0;
    std::array<int, 18> angle_histogram{};  // 5-degree bins, 0..90

    std::array<double, 3> ratio_quartiles() const {
        if (radius_ratio.empty()) return {0, 0, 0};
        std::vector<double> s = radius_ratio;
        std::sort(s.begin(), s.end());
        auto at = [&s](double f) { return s[static_cast<size_t>(f * (s.size() - 1))]; };
        return {at(0.25), at(0.5), at(0.75)};
    }
};

inline TriangleQuality triangle_quality(const MedialComplex& mc) {
    TriangleQuality q;
    for (const auto& f : mc.faces) {
        if (!f.alive) continue;
        Vec3 p0 = mc.verts[f.v[0]].center, p1 = mc.verts[f.v[1]].center, p2 = mc.verts[f.v[2]].center;
        double la = (p1 - p2).norm(), lb = (p2 - p0).norm(), lc = (p0 - p1).norm();
        double area = 0.5 * (p1 - p0).cross(p2 - p0).norm();
        if (area <= 0.0 || la <= 0.0 || lb <= 0.0 || lc <= 0.0) {
            ++q.degenerate;
            continue;
        }
        double s = 0.5 * (la + lb + lc);
        double inr = area / s;
        double circ = la * lb * lc / (4.0 * area);
        q.radius_ratio.push_back(2.0 * inr / circ);
        auto angle = [](double opp, double x, double y) {
            double c = std::clamp((x * x + y * y - opp * opp) / (2.0 * x * y), -1.0, 1.0);
            return std::acos(c) * 180.0 / std::numbers::pi;
        };
        double amin = std::min({angle(la, lb, lc), angle(lb, lc, la), angle(lc, la, lb)});
        q.min_angle_deg.push_back(amin);
        int bin = std::clamp(static_cast<int>(amin / 5.0), 0, 17);
        ++q.angle_histogram[bin];
    }
    return q;
}

}  // namespace structmat
