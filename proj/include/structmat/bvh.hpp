#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace structmat {

using Vec3 = Eigen::Vector3d;

struct Aabb {
    Vec3 lo{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
            std::numeric_limits<double>::max()};
    Vec3 hi{std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest(),
            std::numeric_limits<double>::lowest()};

    void expand(const Vec3& p) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    void expand(const Aabb& b) {
        lo = lo.cwiseMin(b.lo);
        hi = hi.cwiseMax(b.hi);
    }
    Vec3 center() const { return 0.5 * (lo + hi); }
    double diagonal() const { return (hi - lo).norm(); }
    double sq_distance(const Vec3& p) const {
        Vec3 d = (lo - p).cwiseMax(Vec3::Zero()).cwiseMax(p - hi);
        return d.squaredNorm();
    }
};

// Closest point on triangle abc to p (Ericson, Real-Time Collision Detection).
inline Vec3 closest_point_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    Vec3 ab = b - a, ac = c - a, ap = p - a;
    double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return a;

    Vec3 bp = p - b;
    double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return b;

    double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
        double v = d1 / (d1 - d3);
        return a + v * ab;
    }

    Vec3 cp = p - c;
    double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return c;

    double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
        double w = d2 / (d2 - d6);
        return a + w * ac;
    }

    double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + w * (c - b);
    }

    double denom = 1.0 / (va + vb + vc);
    double v = vb * denom, w = vc * denom;
    return a + ab * v + ac * w;
}

// Signed solid angle of triangle abc seen from q, divided by 4*pi
// (van Oosterom & Strackee).
inline double solid_angle_fraction(const Vec3& q, const Vec3& a, const Vec3& b, const Vec3& c) {
    Vec3 va = a - q, vb = b - q, vc = c - q;
    double la = va.norm(), lb = vb.norm(), lc = vc.norm();
    double num = va.dot(vb.cross(vc));
    double den = la * lb * lc + va.dot(vb) * lc + vb.dot(vc) * la + vc.dot(va) * lb;
    return std::atan2(num, den) / (2.0 * std::numbers::pi);
}

// Median-split AABB tree over triangles. Supports closest-point queries and
// generalized winding number with a first-order far-field approximation
// (Barill et al. 2018 style dipole).
class TriangleBvh {
public:
    TriangleBvh() = default;

    void build(const std::vector<Vec3>& vertices, const std::vector<std::array<int, 3>>& triangles) {
        verts_ = &vertices;
        tris_ = &triangles;
        size_t n = triangles.size();
        order_.resize(n);
        for (size_t i = 0; i < n; ++i) order_[i] = static_cast<int>(i);
        nodes_.clear();
        nodes_.reserve(n > 0 ? 2 * n : 1);
        if (n > 0) build_node(0, n);
    }

    bool empty() const { return nodes_.empty(); }

    // Re-points the tree at relocated (but identical) geometry arrays, e.g.
    // after the owning mesh was moved or copied.
    void rebind(const std::vector<Vec3>& vertices, const std::vector<std::array<int, 3>>& triangles) {
        verts_ = &vertices;
        tris_ = &triangles;
    }

    // Exact minimum distance to the triangle set.
    double distance(const Vec3& q, Vec3* closest = nullptr, int* tri_id = nullptr) const {
        double best = std::numeric_limits<double>::max();
        Vec3 best_p = Vec3::Zero();
        int best_t = -1;
        if (!nodes_.empty()) query_closest(0, q, best, best_p, best_t);
        if (closest) *closest = best_p;
        if (tri_id) *tri_id = best_t;
        return std::sqrt(best);
    }

    // Generalized winding number of q with respect to the triangle soup.
    double winding_number(const Vec3& q, double beta = 2.0) const {
        if (nodes_.empty()) return 0.0;
        return winding_rec(0, q, beta);
    }

private:
    struct Node {
        Aabb box;
        int left = -1, right = -1;  // children; leaf iff left < 0
        int begin = 0, end = 0;     // leaf range in order_
        Vec3 dipole = Vec3::Zero(); // sum of area-weighted normals
        Vec3 centroid = Vec3::Zero();
        double radius = 0.0;        // max distance from centroid to node geometry
    };

    static constexpr int kLeafSize = 8;

    int build_node(size_t begin, size_t end) {
        int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        Aabb box;
        Vec3 dipole = Vec3::Zero();
        Vec3 weighted = Vec3::Zero();
        double total_area = 0.0;
        for (size_t i = begin; i < end; ++i) {
            const auto& t = (*tris_)[order_[i]];
            const Vec3 &a = (*verts_)[t[0]], &b = (*verts_)[t[1]], &c = (*verts_)[t[2]];
            box.expand(a);
            box.expand(b);
            box.expand(c);
            Vec3 an = 0.5 * (b - a).cross(c - a);
            dipole += an;
            double area = an.norm();
            weighted += area * (a + b + c) / 3.0;
            total_area += area;
        }
        Node node;
        node.box = box;
        node.dipole = dipole;
        node.centroid = total_area > 0.0 ? Vec3(weighted / total_area) : box.center();
        node.radius = std::max((box.lo - node.centroid).norm(), (box.hi - node.centroid).norm());
        if (end - begin <= kLeafSize) {
            node.begin = static_cast<int>(begin);
            node.end = static_cast<int>(end);
            nodes_[id] = node;
            return id;
        }
        Vec3 ext = box.hi - box.lo;
        int axis = 0;
        if (ext[1] > ext[axis]) axis = 1;
        if (ext[2] > ext[axis]) axis = 2;
        size_t mid = (begin + end) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](int lhs, int rhs) {
                             return tri_center(lhs)[axis] < tri_center(rhs)[axis];
                         });
        nodes_[id] = node;  // children filled below; node data stays valid
        int l = build_node(begin, mid);
        int r = build_node(mid, end);
        nodes_[id].left = l;
        nodes_[id].right = r;
        return id;
    }

    Vec3 tri_center(int t) const {
        const auto& tr = (*tris_)[t];
        return ((*verts_)[tr[0]] + (*verts_)[tr[1]] + (*verts_)[tr[2]]) / 3.0;
    }

    void query_closest(int node_id, const Vec3& q, double& best, Vec3& best_p, int& best_t) const {
        const Node& node = nodes_[node_id];
        if (node.box.sq_distance(q) >= best) return;
        if (node.left < 0) {
            for (int i = node.begin; i < node.end; ++i) {
                int t = order_[i];
                const auto& tr = (*tris_)[t];
                Vec3 cp = closest_point_triangle(q, (*verts_)[tr[0]], (*verts_)[tr[1]], (*verts_)[tr[2]]);
                double d2 = (cp - q).squaredNorm();
                if (d2 < best) {
                    best = d2;
                    best_p = cp;
                    best_t = t;
                }
            }
            return;
        }
        double dl = nodes_[node.left].box.sq_distance(q);
        double dr = nodes_[node.right].box.sq_distance(q);
        int first = node.left, second = node.right;
        if (dr < dl) std::swap(first, second);
        query_closest(first, q, best, best_p, best_t);
        query_closest(second, q, best, best_p, best_t);
    }

    double winding_rec(int node_id, const Vec3& q, double beta) const {
        const Node& node = nodes_[node_id];
        Vec3 d = node.centroid - q;
        double dist = d.norm();
        if (dist > beta * node.radius && node.radius > 0.0) {
            // Far field: single dipole term.
            return node.dipole.dot(d) / (4.0 * std::numbers::pi * dist * dist * dist);
        }
        if (node.left < 0) {
            double w = 0.0;
            for (int i = node.begin; i < node.end; ++i) {
                const auto& tr = (*tris_)[order_[i]];
                w += solid_angle_fraction(q, (*verts_)[tr[0]], (*verts_)[tr[1]], (*verts_)[tr[2]]);
            }
            return w;
        }
        return winding_rec(node.left, q, beta) + winding_rec(node.right, q, beta);
    }

    const std::vector<Vec3>* verts_ = nullptr;
    const std::vector<std::array<int, 3>>* tris_ = nullptr;
    std::vector<int> order_;
    std::vector<Node> nodes_;
};

}  // namespace structmat
