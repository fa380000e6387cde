#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "structmat/ma_io.hpp"

using namespace structmat;

namespace {

MedialMa sample_ma() {
    MedialMa ma;
    ma.verts = {{0.1, 0.2, 0.3, 0.05}, {0.4, 0.5, 0.6, 0.0}, {0.7, 0.8, 0.9, 1.25e-3}};
    ma.edges = {{0, 1}, {1, 2}};
    ma.faces = {{0, 1, 2}};
    return ma;
}

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("ma: serialize/parse round trip is exact") {
    auto ma = sample_ma();
    std::string text = serialize_ma(ma);
    std::istringstream in(text);
    auto back = parse_ma(in);
    REQUIRE(back.verts.size() == 3);
    REQUIRE(back.edges.size() == 2);
    REQUIRE(back.faces.size() == 1);
    for (size_t i = 0; i < 3; ++i) {
        REQUIRE(back.verts[i].x == ma.verts[i].x);
        REQUIRE(back.verts[i].r == ma.verts[i].r);
    }
    REQUIRE(back.edges == ma.edges);
    REQUIRE(back.faces == ma.faces);
    // Second serialization is byte-identical (stable formatting).
    REQUIRE(serialize_ma(back) == text);
}

TEST_CASE("ma: header line and record layout") {
    auto text = serialize_ma(sample_ma());
    std::istringstream in(text);
    std::string first;
    std::getline(in, first);
    REQUIRE(first == "3 2 1");
    std::string second;
    std::getline(in, second);
    REQUIRE(second.substr(0, 2) == "v ");
}

TEST_CASE("ma: parse errors carry line numbers") {
    auto expect_error = [](const std::string& text, const std::string& needle) {
        std::istringstream in(text);
        try {
            parse_ma(in);
            FAIL("expected parse error");
        } catch (const std::runtime_error& e) {
            REQUIRE(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    expect_error("", "empty");
    expect_error("x y z\n", "header");
    expect_error("1 0 0\nv 0 0 0\n", "line 2");               // missing radius
    expect_error("1 0 0\nv 0 0 0 -0.5\n", "negative radius");
    expect_error("2 1 0\nv 0 0 0 1\nv 1 0 0 1\ne 0 5\n", "out of range");
    expect_error("2 0 0\nv 0 0 0 1\n", "header counts");
    expect_error("1 0 0\nq 1 2 3\n", "line 2");
}

TEST_CASE("ma: save/load through a file") {
    auto ma = sample_ma();
    auto path = temp_path("roundtrip.ma");
    save_ma(ma, path);
    auto back = load_ma(path);
    REQUIRE(serialize_ma(back) == serialize_ma(ma));
    std::remove(path.c_str());
}

TEST_CASE("ma: to_ma compacts dead simplices and clamps radii") {
    MedialComplex mc;
    int a = mc.add_vertex({0, 0, 0}, 0.1, {0});
    int b = mc.add_vertex({1, 0, 0}, -1e-12, {1});  // numerical dust
    int c = mc.add_vertex({0, 1, 0}, 0.2, {2});
    int d = mc.add_vertex({9, 9, 9}, 0.3, {3});
    mc.add_face(a, b, c);
    mc.add_edge(a, d);
    mc.verts[d].alive = false;
    for (auto& e : mc.edges)
        if (e.a == a && e.b == d) e.alive = false;

    std::vector<Atlas> atlases;
    auto ma = to_ma(mc, &atlases);
    REQUIRE(ma.verts.size() == 3);
    REQUIRE(ma.faces.size() == 1);
    REQUIRE(ma.edges.size() == 3);  // the face's own edges survive
    REQUIRE(ma.verts[1].r == 0.0);  // clamped
    REQUIRE(atlases == std::vector<Atlas>({{0}, {1}, {2}}));

    auto mc2 = from_ma(ma, &atlases);
    REQUIRE(mc2.alive_vertex_count() == 3);
    REQUIRE(mc2.alive_face_count() == 1);
    REQUIRE(mc2.verts[0].atlas == Atlas{0});
}

TEST_CASE("atlas sidecar: binary round trip") {
    std::vector<Atlas> atlases = {{0, 3, 7}, {}, {1}, {2, 4, 5, 6, 1000000}};
    auto path = temp_path("roundtrip.atlas");
    save_atlas_sidecar(atlases, path);
    auto back = load_atlas_sidecar(path);
    REQUIRE(back == atlases);
    // Fixed-width binary layout: 4 bytes per value, one count per atlas.
    size_t values = 0;
    for (const auto& a : atlases) values += a.size();
    REQUIRE(std::filesystem::file_size(path) == 4 * (1 + atlases.size() + values));
    std::remove(path.c_str());
}

TEST_CASE("atlas sidecar: truncated file is rejected") {
    auto path = temp_path("truncated.atlas");
    {
        std::ofstream out(path, std::ios::binary);
        uint32_t n = 5;
        out.write(reinterpret_cast<const char*>(&n), 4);
    }
    REQUIRE_THROWS(load_atlas_sidecar(path));
    std::remove(path.c_str());
}

TEST_CASE("export_obj: face and wire files") {
    auto ma = sample_ma();
    auto faces = temp_path("ma_faces.obj");
    auto wires = temp_path("ma_wires.obj");
    export_obj(ma, faces, wires);

    auto count_prefix = [](const std::string& path, const std::string& pre) {
        std::ifstream in(path);
        std::string line;
        int n = 0;
        while (std::getline(in, line))
            if (line.rfind(pre, 0) == 0) ++n;
        return n;
    };
    REQUIRE(count_prefix(faces, "v ") == 3);
    REQUIRE(count_prefix(faces, "f ") == 1);
    REQUIRE(count_prefix(faces, "# r ") == 3);  // radii preserved
    REQUIRE(count_prefix(wires, "v ") == 3);
    REQUIRE(count_prefix(wires, "l ") == 2);
    std::remove(faces.c_str());
    std::remove(wires.c_str());
}
