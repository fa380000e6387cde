#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "structmat/lbfgs.hpp"
#include "structmat/rvd.hpp"

namespace structmat {

struct SphereState {
    Vec3 v = Vec3::Zero();
    double r = 0.0;

    Vec4 vec() const { return Vec4(v.x(), v.y(), v.z(), r); }
    static SphereState from_vec(const Vec4& x) { return {Vec3(x[0], x[1], x[2]), x[3]}; }
};

// Everything needed to evaluate the collapse energy of one candidate sphere:
// pre-aggregated quadrics of the regular cells, per-site terms of the
// invaginated cells, and the Laplacian neighborhood.
struct EnergyContext {
    Mat4 A_reg = Mat4::Zero();
    Vec4 b_reg = Vec4::Zero();
    double c_reg = 0.0;
    std::vector<std::pair<Vec3, double>> inv_terms;  // (site, cell area)
    std::vector<Vec3> neighbors;
    double lambda = 0.0;
};

inline constexpr double kDistanceClamp = 1e-8;

inline double eval_energy(const EnergyContext& ctx, const SphereState& x) {
    Vec4 xv = x.vec();
    double e = xv.dot(ctx.A_reg * xv) + ctx.b_reg.dot(xv) + ctx.c_reg;
    for (const auto& [s, w] : ctx.inv_terms) {
        double d = (x.v - s).norm() - x.r;
        e += w * d * d;
    }
    if (!ctx.neighbors.empty()) {
        double lap = 0.0;
        for (const auto& u : ctx.neighbors) lap += (x.v - u).squaredNorm();
        e += ctx.lambda * lap / static_cast<double>(ctx.neighbors.size());
    }
    return e;
}

inline Vec4 eval_gradient(const EnergyContext& ctx, const SphereState& x) {
    Vec4 xv = x.vec();
    Vec4 g = 2.0 * (ctx.A_reg * xv) + ctx.b_reg;
    for (const auto& [s, w] : ctx.inv_terms) {
        Vec3 diff = x.v - s;
        double dist = std::max(diff.norm(), kDistanceClamp);
        double f = 2.0 * w * (diff.norm() - x.r);
        g.head<3>() += f * (diff / dist);
        g[3] -= f;
    }
    if (!ctx.neighbors.empty()) {
        Vec3 sum = Vec3::Zero();
        for (const auto& u : ctx.neighbors) sum += x.v - u;
        g.head<3>() += ctx.lambda * 2.0 / static_cast<double>(ctx.neighbors.size()) * sum;
    }
    return g;
}

namespace detail {

// Total quadratic system including the Laplacian block (identity on the
// center coordinates, zero on the radius row).
inline void assemble_quadratic(const EnergyContext& ctx, Mat4& A, Vec4& b) {
    A = ctx.A_reg;
    b = ctx.b_reg;
    if (!ctx.neighbors.empty()) {
        double inv_n = 1.0 / static_cast<double>(ctx.neighbors.size());
        A.topLeftCorner<3, 3>() += ctx.lambda * Eigen::Matrix3d::Identity();
        Vec3 sum = Vec3::Zero();
        for (const auto& u : ctx.neighbors) sum += u;
        b.head<3>() += -2.0 * ctx.lambda * inv_n * sum;
    }
}

// Solves 2*A*x = -b with Tikhonov fallback when ill-conditioned, then a
// minimum-norm least-squares fallback when still singular.
template <int N>
Eigen::Matrix<double, N, 1> solve_regularized(Eigen::Matrix<double, N, N> A,
                                              const Eigen::Matrix<double, N, 1>& b) {
    using Mat = Eigen::Matrix<double, N, N>;
    using Vec = Eigen::Matrix<double, N, 1>;
    Eigen::SelfAdjointEigenSolver<Mat> eig(A);
    double lo = eig.eigenvalues().cwiseAbs().minCoeff();
    double hi = eig.eigenvalues().cwiseAbs().maxCoeff();
    if (lo <= 0.0 || hi / lo > 1e10) {
        double tik = 1e-12 * A.trace() / N;
        if (tik <= 0.0) tik = 1e-18;
        A += tik * Mat::Identity();
        eig.compute(A);
        lo = eig.eigenvalues().cwiseAbs().minCoeff();
        hi = eig.eigenvalues().cwiseAbs().maxCoeff();
        if (lo <= 0.0 || hi / lo > 1e14) {
            // Minimum-norm least squares on the original system.
            Eigen::CompleteOrthogonalDecomposition<Mat> cod(2.0 * A);
            return cod.solve(Vec(-b));
        }
    }
    return A.ldlt().solve(Vec(-0.5 * b));
}

}  // namespace detail

// Closed-form minimizer of the purely quadratic energy (no invaginated
// terms). Negative radii are clamped to zero after the solve; callers
// re-evaluate the energy at the returned state.
inline SphereState solve_closed_form(const EnergyContext& ctx) {
    Mat4 A;
    Vec4 b;
    detail::assemble_quadratic(ctx, A, b);
    Vec4 x = detail::solve_regularized<4>(A, b);
    SphereState out = SphereState::from_vec(x);
    if (out.r < 0.0) out.r = 0.0;
    return out;
}

struct LbfgsSolveStats {
    MinimizeStatus status = MinimizeStatus::converged;
    int iterations = 0;
};

inline SphereState solve_lbfgs(const EnergyContext& ctx, const SphereState& x0,
                               LbfgsSolveStats* stats = nullptr) {
    auto obj = [&ctx](const Eigen::VectorXd& x) {
        return eval_energy(ctx, SphereState::from_vec(Vec4(x)));
    };
    auto grad = [&ctx](const Eigen::VectorXd& x) {
        return Eigen::VectorXd(eval_gradient(ctx, SphereState::from_vec(Vec4(x))));
    };
    MinimizeResult res = minimize(obj, grad, Eigen::VectorXd(x0.vec()));
    if (stats) {
        stats->status = res.status;
        stats->iterations = res.iterations;
    }
    SphereState out = SphereState::from_vec(Vec4(res.x));
    if (eval_energy(ctx, out) > eval_energy(ctx, x0)) out = x0;  // never worse than the start
    return out;
}

}  // namespace structmat
