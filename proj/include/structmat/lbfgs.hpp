#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>

namespace structmat {

enum class MinimizeStatus { converged, max_iter, line_search_fail, nan_abort };

struct MinimizeOptions {
    int memory = 8;
    int max_iter = 100;
    double gtol = 1e-8;  // relative: ||g|| < gtol * (1 + |E|)
    double wolfe_c1 = 1e-4;
    double wolfe_c2 = 0.9;
};

struct MinimizeResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int iterations = 0;
    MinimizeStatus status = MinimizeStatus::converged;
};

namespace detail {

// Strong-Wolfe line search, bracket-and-zoom (Nocedal & Wright alg. 3.5/3.6).
// Returns the accepted step, or -1 on failure.
inline double wolfe_search(const std::function<double(double)>& phi,
                           const std::function<double(double)>& dphi, double phi0, double dphi0,
                           double c1, double c2) {
    auto zoom = [&](double lo, double hi, double phi_lo) -> double {
        for (int it = 0; it < 40; ++it) {
            double a = 0.5 * (lo + hi);
            double fa = phi(a);
            if (!std::isfinite(fa)) {
                hi = a;
                continue;
            }
            if (fa > phi0 + c1 * a * dphi0 || fa >= phi_lo) {
                hi = a;
            } else {
                double da = dphi(a);
                if (std::abs(da) <= -c2 * dphi0) return a;
                if (da * (hi - lo) >= 0.0) hi = lo;
                lo = a;
                phi_lo = fa;
            }
            if (std::abs(hi - lo) < 1e-16) break;
        }
        return lo > 0.0 ? lo : -1.0;
    };

    double prev_a = 0.0, prev_f = phi0;
    double a = 1.0;
    for (int it = 0; it < 20; ++it) {
        double fa = phi(a);
        if (!std::isfinite(fa)) {
            a *= 0.5;
            continue;
        }
        if (fa > phi0 + c1 * a * dphi0 || (it > 0 && fa >= prev_f)) return zoom(prev_a, a, prev_f);
        double da = dphi(a);
        if (std::abs(da) <= -c2 * dphi0) return a;
        if (da >= 0.0) return zoom(a, prev_a, fa);
        prev_a = a;
        prev_f = fa;
        a *= 2.0;
    }
    return -1.0;
}

}  // namespace detail

inline MinimizeResult minimize(const std::function<double(const Eigen::VectorXd&)>& objective,
                               const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& gradient,
                               const Eigen::VectorXd& x0, const MinimizeOptions& opts = {}) {
    using Eigen::VectorXd;
    MinimizeResult res;
    VectorXd x = x0;
    double f = objective(x);
    if (!std::isfinite(f)) {
        res.x = x;
        res.value = f;
        res.status = MinimizeStatus::nan_abort;
        return res;
    }
    VectorXd g = gradient(x);

    std::deque<VectorXd> s_hist, y_hist;
    std::deque<double> rho_hist;

    VectorXd best_x = x;
    double best_f = f;
    res.status = MinimizeStatus::max_iter;

    int it = 0;
    for (; it < opts.max_iter; ++it) {
        if (g.norm() < opts.gtol * (1.0 + std::abs(f))) {
            res.status = MinimizeStatus::converged;
            break;
        }

        // Two-loop recursion for the search direction.
        VectorXd q = g;
        std::vector<double> alpha(s_hist.size());
        for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
            alpha[i] = rho_hist[i] * s_hist[i].dot(q);
            q -= alpha[i] * y_hist[i];
        }
        if (!s_hist.empty()) {
            double gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
            q *= gamma;
        }
        for (size_t i = 0; i < s_hist.size(); ++i) {
            double beta = rho_hist[i] * y_hist[i].dot(q);
            q += (alpha[i] - beta) * s_hist[i];
        }
        VectorXd d = -q;
        double dg = d.dot(g);
        if (dg >= 0.0) {
            d = -g;  // fall back to steepest descent
            dg = d.dot(g);
            if (dg >= 0.0) {
                res.status = MinimizeStatus::line_search_fail;
                break;
            }
        }

        auto phi = [&](double a) { return objective(x + a * d); };
        auto dphi = [&](double a) { return gradient(x + a * d).dot(d); };
        double step = detail::wolfe_search(phi, dphi, f, dg, opts.wolfe_c1, opts.wolfe_c2);
        if (step <= 0.0) {
            res.status = MinimizeStatus::line_search_fail;
            break;
        }

        VectorXd x_new = x + step * d;
        double f_new = objective(x_new);
        if (!std::isfinite(f_new)) {
            res.status = MinimizeStatus::nan_abort;
            break;
        }
        VectorXd g_new = gradient(x_new);

        VectorXd s = x_new - x;
        VectorXd y = g_new - g;
        double sy = s.dot(y);
        if (sy > 1e-14 * s.norm() * y.norm()) {
            s_hist.push_back(s);
            y_hist.push_back(y);
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > opts.memory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }

        x = std::move(x_new);
        f = f_new;
        g = std::move(g_new);
        if (f < best_f) {
            best_f = f;
            best_x = x;
        }
    }
    if (f < best_f) {
        best_f = f;
        best_x = x;
    }
    res.x = std::move(best_x);
    res.value = best_f;
    res.iterations = it;
    return res;
}

}  // namespace structmat
