#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "structmat/bvh.hpp"
#include "structmat/sampling.hpp"

namespace structmat {

// Finite part of the Delaunay tetrahedralization. neighbors[t][i] is the tet
// across the face opposite vertex i, or -1 when that neighbor touches the
// bounding super-tet (hull side).
struct DelaunayMesh {
    std::vector<std::array<int, 4>> tets;
    std::vector<std::array<int, 4>> neighbors;
    std::vector<Vec3> circumcenters;
    std::vector<double> circumradii;
};

namespace detail {

// Face opposite vertex i, ordered so orient(face, v[i]) > 0 for a
// positively oriented tet (orient(v0,v1,v2,v3) > 0).
inline constexpr int kTetFaces[4][3] = {{1, 3, 2}, {2, 3, 0}, {3, 1, 0}, {0, 1, 2}};

template <typename F>
F orient_det(const F* a, const F* b, const F* c, const F* d, F* permanent = nullptr) {
    F adx = a[0] - d[0], ady = a[1] - d[1], adz = a[2] - d[2];
    F bdx = b[0] - d[0], bdy = b[1] - d[1], bdz = b[2] - d[2];
    F cdx = c[0] - d[0], cdy = c[1] - d[1], cdz = c[2] - d[2];
    // (a-d).((b-d)x(c-d)) = -(b-a)x(c-a).(d-a); negate so the sign follows
    // the documented convention (positive when d is on the normal side).
    F det = -(adx * (bdy * cdz - bdz * cdy) + ady * (bdz * cdx - bdx * cdz) +
              adz * (bdx * cdy - bdy * cdx));
    if (permanent) {
        auto fa = [](F x) { return x < F(0) ? -x : x; };
        *permanent = fa(adx) * (fa(bdy * cdz) + fa(bdz * cdy)) + fa(ady) * (fa(bdz * cdx) + fa(bdx * cdz)) +
                     fa(adz) * (fa(bdx * cdy) + fa(bdy * cdx));
    }
    return det;
}

template <typename F>
F insphere_det(const F* a, const F* b, const F* c, const F* d, const F* e, F* permanent = nullptr) {
    F aex = a[0] - e[0], aey = a[1] - e[1], aez = a[2] - e[2];
    F bex = b[0] - e[0], bey = b[1] - e[1], bez = b[2] - e[2];
    F cex = c[0] - e[0], cey = c[1] - e[1], cez = c[2] - e[2];
    F dex = d[0] - e[0], dey = d[1] - e[1], dez = d[2] - e[2];

    F ab = aex * bey - bex * aey;
    F bc = bex * cey - cex * bey;
    F cd = cex * dey - dex * cey;
    F da = dex * aey - aex * dey;
    F ac = aex * cey - cex * aey;
    F bd = bex * dey - dex * bey;

    F abc = aez * bc - bez * ac + cez * ab;
    F bcd = bez * cd - cez * bd + dez * bc;
    F cda = cez * da + dez * ac + aez * cd;
    F dab = dez * ab + aez * bd + bez * da;

    F alift = aex * aex + aey * aey + aez * aez;
    F blift = bex * bex + bey * bey + bez * bez;
    F clift = cex * cex + cey * cey + cez * cez;
    F dlift = dex * dex + dey * dey + dez * dez;

    F det = (dlift * abc - clift * dab) + (blift * cda - alift * bcd);
    if (permanent) {
        auto fa = [](F x) { return x < F(0) ? -x : x; };
        F aezp = fa(aez), bezp = fa(bez), cezp = fa(cez), dezp = fa(dez);
        F abp = fa(aex * bey) + fa(bex * aey);
        F bcp = fa(bex * cey) + fa(cex * bey);
        F cdp = fa(cex * dey) + fa(dex * cey);
        F dap = fa(dex * aey) + fa(aex * dey);
        F acp = fa(aex * cey) + fa(cex * aey);
        F bdp = fa(bex * dey) + fa(dex * bey);
        *permanent = dlift * (aezp * bcp + bezp * acp + cezp * abp) +
                     clift * (dezp * abp + aezp * bdp + bezp * dap) +
                     blift * (cezp * dap + dezp * acp + aezp * cdp) +
                     alift * (bezp * cdp + cezp * bdp + dezp * bcp);
    }
    return det;
}

}  // namespace detail

// Incremental Bowyer-Watson tetrahedralizer. Predicates are evaluated with a
// static double-precision filter and escalated to quad precision when the
// filter cannot certify a sign; exact ties are resolved by a cavity fix-up
// that guarantees positive-volume tets (degenerate cospherical configurations
// yield some valid triangulation with on-sphere ties).
class Delaunay3 {
public:
    explicit Delaunay3(const std::vector<Vec3>& points) : points_(points) {
        if (points_.size() < 4) throw std::invalid_argument("need at least 4 points");
        make_super_tet();
        for (size_t i = 0; i < points.size(); ++i) insert(static_cast<int>(i));
    }

    DelaunayMesh extract() const {
        DelaunayMesh out;
        int n = static_cast<int>(points_.size());  // super vertices index from n
        std::vector<int> remap(tets_.size(), -1);
        for (size_t t = 0; t < tets_.size(); ++t) {
            if (!tets_[t].alive || !is_finite(static_cast<int>(t), n)) continue;
            remap[t] = static_cast<int>(out.tets.size());
            out.tets.push_back(tets_[t].v);
        }
        if (out.tets.empty()) throw std::runtime_error("all input points are coplanar");
        out.neighbors.resize(out.tets.size());
        out.circumcenters.resize(out.tets.size());
        out.circumradii.resize(out.tets.size());
        int k = 0;
        for (size_t t = 0; t < tets_.size(); ++t) {
            if (remap[t] < 0) continue;
            for (int i = 0; i < 4; ++i) {
                int nb = tets_[t].n[i];
                out.neighbors[k][i] = (nb >= 0 && remap[nb] >= 0) ? remap[nb] : -1;
            }
            auto [cc, r] = circumsphere(tets_[t].v);
            out.circumcenters[k] = cc;
            out.circumradii[k] = r;
            ++k;
        }
        return out;
    }

    // Sign of orient(a,b,c,d): positive when (b-a)x(c-a) points toward d.
    int orient_sign(int a, int b, int c, int d) const {
        double coords[4][3];
        load(a, coords[0]);
        load(b, coords[1]);
        load(c, coords[2]);
        load(d, coords[3]);
        double perm;
        double det = detail::orient_det(coords[0], coords[1], coords[2], coords[3], &perm);
        if (std::abs(det) > 1e-14 * perm) return det > 0 ? 1 : -1;
        __float128 q[4][3];
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 3; ++j) q[i][j] = coords[i][j];
        __float128 qperm;
        __float128 qdet = detail::orient_det(q[0], q[1], q[2], q[3], &qperm);
        if ((qdet < 0 ? -qdet : qdet) > __float128(1e-31) * qperm) return qdet > 0 ? 1 : -1;
        return 0;
    }

    // Positive when e is strictly inside the circumsphere of the positively
    // oriented tet (a,b,c,d); 0 on ties.
    int insphere_sign(int a, int b, int c, int d, int e) const {
        double coords[5][3];
        load(a, coords[0]);
        load(b, coords[1]);
        load(c, coords[2]);
        load(d, coords[3]);
        load(e, coords[4]);
        double perm;
        double det = detail::insphere_det(coords[0], coords[1], coords[2], coords[3], coords[4], &perm);
        // Sign flip: our orient convention is the mirror of the determinant's.
        if (std::abs(det) > 1e-13 * perm) return det > 0 ? -1 : 1;
        __float128 q[5][3];
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 3; ++j) q[i][j] = coords[i][j];
        __float128 qperm;
        __float128 qdet = detail::insphere_det(q[0], q[1], q[2], q[3], q[4], &qperm);
        if ((qdet < 0 ? -qdet : qdet) > __float128(1e-30) * qperm) return qdet > 0 ? -1 : 1;
        return 0;
    }

    std::pair<Vec3, double> circumsphere(const std::array<int, 4>& v) const {
        const Vec3& a = point(v[0]);
        Eigen::Matrix3d m;
        Eigen::Vector3d rhs;
        for (int i = 0; i < 3; ++i) {
            Vec3 d = point(v[i + 1]) - a;
            m.row(i) = 2.0 * d;
            rhs[i] = d.squaredNorm();
        }
        double det = m.determinant();
        double scale = m.row(0).norm() * m.row(1).norm() * m.row(2).norm();
        Vec3 x;
        if (std::abs(det) > 1e-10 * scale) {
            x = m.partialPivLu().solve(rhs);
        } else {
            // Near-flat tet: redo Cramer's rule in quad precision.
            __float128 q[3][3], b[3];
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) q[i][j] = m(i, j);
                b[i] = rhs[i];
            }
            auto det3 = [](const __float128 c0[3], const __float128 c1[3], const __float128 c2[3]) {
                return c0[0] * (c1[1] * c2[2] - c1[2] * c2[1]) - c1[0] * (c0[1] * c2[2] - c0[2] * c2[1]) +
                       c2[0] * (c0[1] * c1[2] - c0[2] * c1[1]);
            };
            __float128 col[3][3], bc[3];
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) col[j][i] = q[i][j];
            for (int i = 0; i < 3; ++i) bc[i] = b[i];
            __float128 d0 = det3(col[0], col[1], col[2]);
            if (d0 == 0) return {a, std::numeric_limits<double>::infinity()};
            x[0] = static_cast<double>(det3(bc, col[1], col[2]) / d0);
            x[1] = static_cast<double>(det3(col[0], bc, col[2]) / d0);
            x[2] = static_cast<double>(det3(col[0], col[1], bc) / d0);
        }
        return {a + x, x.norm()};
    }

private:
    struct Tet {
        std::array<int, 4> v;
        std::array<int, 4> n;  // n[i]: tet across face opposite v[i], -1 = hull
        bool alive = true;
        uint32_t mark = 0;
    };

    const Vec3& point(int i) const {
        int n = static_cast<int>(points_.size());
        return i < n ? points_[i] : super_[i - n];
    }
    void load(int i, double* out) const {
        const Vec3& p = point(i);
        out[0] = p.x();
        out[1] = p.y();
        out[2] = p.z();
    }
    bool is_finite(int t, int n) const {
        for (int v : tets_[t].v)
            if (v >= n) return false;
        return true;
    }

    void make_super_tet() {
        Aabb box;
        for (const auto& p : points_) box.expand(p);
        Vec3 c = box.center();
        double h = std::max(box.diagonal() * 0.5, 1e-6);
        double s = 350.0 * h;
        int n = static_cast<int>(points_.size());
        super_[0] = c + s * Vec3(1, 1, 1);
        super_[1] = c + s * Vec3(1, -1, -1);
        super_[2] = c + s * Vec3(-1, 1, -1);
        super_[3] = c + s * Vec3(-1, -1, 1);
        Tet t;
        t.v = {n, n + 1, n + 2, n + 3};
        if (orient_sign(t.v[0], t.v[1], t.v[2], t.v[3]) < 0) std::swap(t.v[2], t.v[3]);
        t.n = {-1, -1, -1, -1};
        tets_.push_back(t);
        last_tet_ = 0;
    }

    int locate(int p) const {
        int cur = last_tet_;
        if (cur < 0 || !tets_[cur].alive)
            for (size_t t = 0; t < tets_.size(); ++t)
                if (tets_[t].alive) {
                    cur = static_cast<int>(t);
                    break;
                }
        uint64_t rng = 0x9e3779b97f4a7c15ull ^ static_cast<uint64_t>(p);
        size_t steps = 0, limit = 16 * tets_.size() + 64;
        while (true) {
            if (++steps > limit) break;  // fall through to brute force
            const Tet& t = tets_[cur];
            int next = -1;
            rng = rng * 6364136223846793005ull + 1442695040888963407ull;
            int start = static_cast<int>(rng >> 62);
            for (int k = 0; k < 4; ++k) {
                int i = (start + k) & 3;
                const int* f = detail::kTetFaces[i];
                if (orient_sign(t.v[f[0]], t.v[f[1]], t.v[f[2]], p) < 0 && t.n[i] >= 0) {
                    next = t.n[i];
                    break;
                }
            }
            if (next == -1) return cur;  // no separating face: p is in this tet
            cur = next;
        }
        // Degenerate walk; scan everything.
        for (size_t t = 0; t < tets_.size(); ++t) {
            if (!tets_[t].alive) continue;
            bool inside = true;
            for (int i = 0; i < 4 && inside; ++i) {
                const int* f = detail::kTetFaces[i];
                if (orient_sign(tets_[t].v[f[0]], tets_[t].v[f[1]], tets_[t].v[f[2]], p) < 0) inside = false;
            }
            if (inside) return static_cast<int>(t);
        }
        throw std::runtime_error("point location failed");
    }

    void insert(int p) {
        int t0 = locate(p);
        ++epoch_;

        // Cavity: tets whose circumsphere strictly contains p.
        std::vector<int> cavity;
        std::vector<int> stack;
        std::vector<char> member(tets_.size(), 0);
        auto add_to_cavity = [&](int t) {
            if (member[t]) return;
            member[t] = 1;
            cavity.push_back(t);
            for (int nb : tets_[t].n)
                if (nb >= 0 && !member[nb] && tets_[nb].mark != epoch_) {
                    tets_[nb].mark = epoch_;
                    stack.push_back(nb);
                }
        };
        stack.push_back(t0);
        tets_[t0].mark = epoch_;
        while (!stack.empty()) {
            int t = stack.back();
            stack.pop_back();
            const Tet& tet = tets_[t];
            if (insphere_sign(tet.v[0], tet.v[1], tet.v[2], tet.v[3], p) > 0) add_to_cavity(t);
        }
        if (cavity.empty()) {
            // p on the circumsphere of its containing tet (cospherical tie).
            add_to_cavity(t0);
        }

        // Fix-up: grow the cavity until every boundary face sees p strictly
        // on its inner side, so all new tets have positive volume.
        bool changed = true;
        while (changed) {
            changed = false;
            for (size_t idx = 0; idx < cavity.size() && !changed; ++idx) {
                int t = cavity[idx];
                for (int i = 0; i < 4; ++i) {
                    int nb = tets_[t].n[i];
                    if (nb >= 0 && member[nb]) continue;
                    const int* f = detail::kTetFaces[i];
                    if (orient_sign(tets_[t].v[f[0]], tets_[t].v[f[1]], tets_[t].v[f[2]], p) <= 0) {
                        if (nb < 0) throw std::runtime_error("cavity reached the hull");
                        add_to_cavity(nb);
                        changed = true;
                        break;
                    }
                }
            }
        }

        // Boundary faces -> new tets (f0, f1, f2, p).
        struct Boundary {
            int verts[3];
            int outside;       // neighbor tet beyond the face, -1 at hull
            int outside_face;  // its face index pointing back
        };
        std::vector<Boundary> boundary;
        for (int t : cavity) {
            for (int i = 0; i < 4; ++i) {
                int nb = tets_[t].n[i];
                if (nb >= 0 && member[nb]) continue;
                const int* f = detail::kTetFaces[i];
                Boundary bf;
                bf.verts[0] = tets_[t].v[f[0]];
                bf.verts[1] = tets_[t].v[f[1]];
                bf.verts[2] = tets_[t].v[f[2]];
                bf.outside = nb;
                bf.outside_face = -1;
                if (nb >= 0)
                    for (int j = 0; j < 4; ++j)
                        if (tets_[nb].n[j] == t) bf.outside_face = j;
                boundary.push_back(bf);
            }
        }

        for (int t : cavity) {
            tets_[t].alive = false;
            free_.push_back(t);
        }

        // Link new tets: shared edges of the boundary polyhedron pair up.
        std::vector<int> fresh;
        fresh.reserve(boundary.size());
        std::unordered_map<uint64_t, std::pair<int, int>> edge_map;  // edge -> (tet, face)
        auto ekey = [](int a, int b) {
            if (a > b) std::swap(a, b);
            return (static_cast<uint64_t>(static_cast<uint32_t>(a)) << 32) | static_cast<uint32_t>(b);
        };
        for (const auto& bf : boundary) {
            Tet nt;
            nt.v = {bf.verts[0], bf.verts[1], bf.verts[2], p};
            nt.n = {-1, -1, -1, bf.outside};
            int id = alloc_tet(nt);
            fresh.push_back(id);
            if (bf.outside >= 0 && bf.outside_face >= 0) tets_[bf.outside].n[bf.outside_face] = id;
            // Face opposite local vertex k (k in 0..2) contains p and the two
            // other base vertices, i.e. it sits on base edge (other two).
            for (int k = 0; k < 3; ++k) {
                int a = bf.verts[(k + 1) % 3], b = bf.verts[(k + 2) % 3];
                uint64_t key = ekey(a, b);
                auto it = edge_map.find(key);
                if (it == edge_map.end()) {
                    edge_map.emplace(key, std::make_pair(id, k));
                } else {
                    tets_[id].n[k] = it->second.first;
                    tets_[it->second.first].n[it->second.second] = id;
                    edge_map.erase(it);
                }
            }
        }
        last_tet_ = fresh.empty() ? -1 : fresh.back();
    }

    int alloc_tet(const Tet& t) {
        if (!free_.empty()) {
            int id = free_.back();
            free_.pop_back();
            tets_[id] = t;
            return id;
        }
        tets_.push_back(t);
        return static_cast<int>(tets_.size()) - 1;
    }

    std::vector<Vec3> points_;
    std::array<Vec3, 4> super_;
    std::vector<Tet> tets_;
    std::vector<int> free_;
    int last_tet_ = -1;
    uint32_t epoch_ = 0;
};

inline DelaunayMesh delaunay3d(const std::vector<Vec3>& points) {
    if (points.size() < 5) {
        if (points.size() == 4) {
            Delaunay3 dt(points);
            return dt.extract();
        }
        throw std::invalid_argument("need at least 4 points");
    }
    Delaunay3 dt(points);
    return dt.extract();
}

inline DelaunayMesh delaunay3d(const SampleSet& sites) {
    std::vector<Vec3> pts;
    pts.reserve(sites.sites.size());
    for (const auto& s : sites.sites) pts.push_back(s.position);
    return delaunay3d(pts);
}

}  // namespace structmat
