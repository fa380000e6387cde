#include <catch2/catch_amalgamated.hpp>

#include <numbers>

#include "structmat/sampling.hpp"
#include "support/test_meshes.hpp"

using namespace structmat;

TEST_CASE("sample_surface: sphere spacing floor") {
    auto sphere = testsupport::make_icosphere({0.5, 0.5, 0.5}, 0.25, 3);
    auto set = sample_surface(sphere, 1000, 11);
    REQUIRE(set.sites.size() >= 900);
    REQUIRE(set.sites.size() <= 1100);

    double floor = 0.75 * set.poisson_radius;
    double min_d = std::numeric_limits<double>::max();
    for (size_t i = 0; i < set.sites.size(); ++i)
        for (size_t j = i + 1; j < set.sites.size(); ++j)
            min_d = std::min(min_d, (set.sites[i].position - set.sites[j].position).norm());
    REQUIRE(min_d >= floor - 1e-12);
    REQUIRE(min_d > 0.0);

    // Radius formula ties the floor to the analytic area.
    double area = sphere.total_area();
    REQUIRE(set.poisson_radius == Catch::Approx(std::sqrt(0.68 * area / 1000.0)));
}

TEST_CASE("sample_surface: sites lie on their source triangles") {
    auto cube = testsupport::make_unit_cube();
    auto set = sample_surface(cube, 500, 3);
    for (const auto& s : set.sites) {
        const auto& tr = cube.triangles[s.triangle];
        Vec3 cp = closest_point_triangle(s.position, cube.vertices[tr[0]], cube.vertices[tr[1]],
                                         cube.vertices[tr[2]]);
        REQUIRE((cp - s.position).norm() < 1e-12);
        REQUIRE((s.normal - cube.triangle_normal(s.triangle)).norm() < 1e-15);
    }
}

TEST_CASE("sample_surface: n=16 on a single large triangle") {
    SurfaceMesh tri;
    tri.vertices = {{0, 0, 0}, {10, 0, 0}, {0, 10, 0}};
    tri.triangles = {{0, 1, 2}};
    tri.finalize();
    auto set = sample_surface(tri, 16, 5);
    REQUIRE(set.sites.size() == 16);
    for (const auto& s : set.sites) {
        REQUIRE(s.position.z() == 0.0);
        REQUIRE(s.position.x() >= -1e-12);
        REQUIRE(s.position.y() >= -1e-12);
        REQUIRE(s.position.x() + s.position.y() <= 10.0 + 1e-9);
    }
}

TEST_CASE("sample_surface: deterministic per seed") {
    auto sphere = testsupport::make_icosphere({0.5, 0.5, 0.5}, 0.25, 2);
    auto a = sample_surface(sphere, 300, 99);
    auto b = sample_surface(sphere, 300, 99);
    REQUIRE(a.sites.size() == b.sites.size());
    for (size_t i = 0; i < a.sites.size(); ++i) {
        REQUIRE(a.sites[i].position == b.sites[i].position);
        REQUIRE(a.sites[i].triangle == b.sites[i].triangle);
    }
    auto c = sample_surface(sphere, 300, 100);
    bool same = a.sites.size() == c.sites.size();
    if (same)
        for (size_t i = 0; i < a.sites.size(); ++i)
            same = same && a.sites[i].position == c.sites[i].position;
    REQUIRE_FALSE(same);
}

TEST_CASE("sample_surface: preconditions") {
    auto cube = testsupport::make_unit_cube();
    REQUIRE_THROWS_AS(sample_surface(cube, 15, 1), std::invalid_argument);
}

TEST_CASE("sample_surface: density proportional to area within 30%") {
    // Two well-separated parallel squares, one 4x the area of the other.
    testsupport::MeshBuilder b;
    int a0 = b.vertex({0, 0, 0}), a1 = b.vertex({2, 0, 0}), a2 = b.vertex({2, 2, 0}),
        a3 = b.vertex({0, 2, 0});
    int c0 = b.vertex({0, 0, 5}), c1 = b.vertex({1, 0, 5}), c2 = b.vertex({1, 1, 5}),
        c3 = b.vertex({0, 1, 5});
    b.quad(a0, a1, a2, a3);
    b.quad(c0, c1, c2, c3);
    auto mesh = b.mesh;
    mesh.finalize();

    auto set = sample_surface(mesh, 1000, 17);
    int big = 0, small = 0;
    for (const auto& s : set.sites) (s.position.z() < 2.5 ? big : small)++;
    double frac = static_cast<double>(big) / set.sites.size();
    REQUIRE(frac == Catch::Approx(0.8).epsilon(0.3));
}
