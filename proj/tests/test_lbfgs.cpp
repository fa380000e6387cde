#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "structmat/lbfgs.hpp"

using namespace structmat;
using Eigen::VectorXd;

TEST_CASE("minimize: 4D quadratic hits the analytic minimizer") {
    VectorXd b(4);
    b << 1.0, -2.0, 0.5, 3.0;
    auto obj = [&b](const VectorXd& x) { return 0.5 * x.squaredNorm() - b.dot(x); };
    auto grad = [&b](const VectorXd& x) { return VectorXd(x - b); };
    auto res = minimize(obj, grad, VectorXd::Zero(4));
    REQUIRE(res.status == MinimizeStatus::converged);
    REQUIRE((res.x - b).norm() < 1e-8);
}

TEST_CASE("minimize: Rosenbrock from (-1.2, 1)") {
    auto obj = [](const VectorXd& x) {
        double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
        return a * a + 100.0 * b * b;
    };
    auto grad = [](const VectorXd& x) {
        VectorXd g(2);
        double b = x[1] - x[0] * x[0];
        g[0] = -2.0 * (1.0 - x[0]) - 400.0 * x[0] * b;
        g[1] = 200.0 * b;
        return g;
    };
    VectorXd x0(2);
    x0 << -1.2, 1.0;
    MinimizeOptions opts;
    opts.max_iter = 200;
    auto res = minimize(obj, grad, x0, opts);
    REQUIRE(std::abs(res.x[0] - 1.0) < 1e-5);
    REQUIRE(std::abs(res.x[1] - 1.0) < 1e-5);
}

TEST_CASE("minimize: negated gradient fails the line search") {
    auto obj = [](const VectorXd& x) { return x.squaredNorm(); };
    auto grad = [](const VectorXd& x) { return VectorXd(-2.0 * x); };  // deliberately wrong sign
    VectorXd x0(3);
    x0 << 1.0, 2.0, 3.0;
    auto res = minimize(obj, grad, x0);
    REQUIRE(res.status == MinimizeStatus::line_search_fail);
    REQUIRE(res.value <= obj(x0));
}

TEST_CASE("minimize: accepted objective sequence never increases") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    // Random convex quartic-ish function; track objective at accepted iterates
    // by wrapping the objective and remembering the best seen.
    for (int rep = 0; rep < 5; ++rep) {
        VectorXd c(6);
        for (int i = 0; i < 6; ++i) c[i] = uni(rng);
        auto obj = [&c](const VectorXd& x) {
            return (x - c).squaredNorm() + 0.1 * std::pow((x - c).squaredNorm(), 2);
        };
        auto grad = [&c](const VectorXd& x) {
            return VectorXd((2.0 + 0.4 * (x - c).squaredNorm()) * (x - c));
        };
        VectorXd x0 = VectorXd::Ones(6) * 2.0;
        auto res = minimize(obj, grad, x0);
        REQUIRE(res.status == MinimizeStatus::converged);
        REQUIRE(res.value <= obj(x0));
        REQUIRE((res.x - c).norm() < 1e-6);
    }
}

TEST_CASE("minimize: NaN objective aborts cleanly") {
    auto obj = [](const VectorXd& x) {
        return x[0] > 0.5 ? std::numeric_limits<double>::quiet_NaN() : (x[0] - 2.0) * (x[0] - 2.0);
    };
    auto grad = [](const VectorXd& x) {
        VectorXd g(1);
        g[0] = 2.0 * (x[0] - 2.0);
        return g;
    };
    VectorXd x0(1);
    x0 << 0.0;
    auto res = minimize(obj, grad, x0);
    // Either it stops at the NaN wall or line-search rejects; never crashes
    // and never reports convergence at a non-stationary point with finite f.
    if (res.status == MinimizeStatus::converged) REQUIRE(std::abs(res.x[0] - 2.0) > 1.0);
    REQUIRE(std::isfinite(res.value));
}

TEST_CASE("minimize: memory-m recursion solves small quadratics exactly") {
    // On a quadratic with condition ~1, L-BFGS terminates in a few steps.
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(4, 4);
    A(1, 1) = 2.0;
    A(2, 2) = 3.0;
    VectorXd b(4);
    b << 1, 2, 3, 4;
    auto obj = [&](const VectorXd& x) { return 0.5 * x.dot(A * x) - b.dot(x); };
    auto grad = [&](const VectorXd& x) { return VectorXd(A * x - b); };
    auto res = minimize(obj, grad, VectorXd::Zero(4));
    REQUIRE(res.status == MinimizeStatus::converged);
    REQUIRE(res.iterations <= 12);
    VectorXd expect = A.ldlt().solve(b);
    REQUIRE((res.x - expect).norm() < 1e-7);
}
