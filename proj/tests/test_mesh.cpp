// Copyright (c) the elastrec contributors.
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "elast/mesh.hpp"

using namespace elast;

namespace {

// Shoelace formula, written out independently of the library path.
double shoelace(const Mesh& mesh, int t) {
  const auto& e = mesh.elements[t];
  double sum = 0;
  for (int k = 0; k < 3; ++k) {
    const auto& p = mesh.nodes[e[k]];
    const auto& q = mesh.nodes[e[(k + 1) % 3]];
    sum += p[0] * q[1] - q[0] * p[1];
  }
  return 0.5 * sum;
}

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::path("test_tmp");
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("minimal rectangle is the two-triangle unit square") {
  const Mesh mesh = generate_mesh(1.0, 1.0, 4, 0.0, 12345);
  REQUIRE(mesh.node_count() == 4);
  REQUIRE(mesh.element_count() == 2);
  const std::set<std::pair<double, double>> expected = {
      {0, 0}, {1, 0}, {0, 1}, {1, 1}};
  std::set<std::pair<double, double>> got;
  for (const auto& p : mesh.nodes) got.insert({p[0], p[1]});
  CHECK(got == expected);
  CHECK(signed_area(mesh, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(signed_area(mesh, 1) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("unjittered 121-node mesh is the 11x11 grid of half squares") {
  const Mesh mesh = generate_mesh(1.0, 1.0, 121, 0.0, 0);
  CHECK(mesh.node_count() == 121);
  CHECK(mesh.element_count() == 200);  // 2 (n-1)^2
  for (int t = 0; t < mesh.element_count(); ++t)
    CHECK(signed_area(mesh, t) == doctest::Approx(0.005).epsilon(1e-12));
}

TEST_CASE("jittered mesh keeps positive areas and unmoved boundary nodes") {
  const Mesh jittered = generate_mesh(1.0, 1.0, 121, 0.2, 7);
  const Mesh reference = generate_mesh(1.0, 1.0, 121, 0.0, 7);
  REQUIRE(jittered.node_count() == reference.node_count());
  CHECK(jittered.element_count() == 200);
  for (int t = 0; t < jittered.element_count(); ++t) {
    CHECK(signed_area(jittered, t) > 0);
    CHECK(signed_area(jittered, t) ==
          doctest::Approx(shoelace(jittered, t)).epsilon(1e-14));
  }

  std::set<int> boundary;
  for (const auto* side : {&jittered.boundary.top, &jittered.boundary.bottom,
                           &jittered.boundary.left, &jittered.boundary.right})
    boundary.insert(side->begin(), side->end());
  for (int i : boundary) {
    CHECK(jittered.nodes[i][0] == reference.nodes[i][0]);
    CHECK(jittered.nodes[i][1] == reference.nodes[i][1]);
  }
  // Interior nodes did move.
  bool moved = false;
  for (int i = 0; i < jittered.node_count(); ++i)
    if (!boundary.count(i) && jittered.nodes[i] != reference.nodes[i]) moved = true;
  CHECK(moved);
}

TEST_CASE("element areas sum to the domain area for any jitter") {
  for (double jitter : {0.0, 0.1, 0.2, 0.35, 0.49}) {
    const Mesh mesh = generate_mesh(2.0, 1.0, 200, jitter, 42);
    double total = 0;
    for (int t = 0; t < mesh.element_count(); ++t) total += signed_area(mesh, t);
    CHECK(total == doctest::Approx(2.0).epsilon(1e-10));
  }
}

TEST_CASE("generation is reproducible for a fixed seed") {
  const Mesh a = generate_mesh(1.5, 1.0, 300, 0.25, 99);
  const Mesh b = generate_mesh(1.5, 1.0, 300, 0.25, 99);
  REQUIRE(a.node_count() == b.node_count());
  for (int i = 0; i < a.node_count(); ++i) {
    CHECK(a.nodes[i][0] == b.nodes[i][0]);
    CHECK(a.nodes[i][1] == b.nodes[i][1]);
  }
  CHECK(a.elements == b.elements);
}

TEST_CASE("node count lands near the target") {
  for (int target : {50, 121, 200, 400, 900}) {
    const Mesh mesh = generate_mesh(2.0, 1.0, target, 0.2, 3);
    CHECK(mesh.node_count() >= static_cast<int>(0.9 * target));
    CHECK(mesh.node_count() <= static_cast<int>(1.1 * target));
  }
}

TEST_CASE("interior edges have two owners, boundary edges one") {
  const Mesh mesh = generate_mesh(1.0, 1.0, 150, 0.2, 5);
  std::map<std::pair<int, int>, int> count;
  for (const auto& e : mesh.elements) {
    for (int k = 0; k < 3; ++k) {
      int a = e[k], b = e[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      count[{a, b}]++;
    }
  }
  auto on_boundary = [&](int i) {
    const auto& p = mesh.nodes[i];
    return p[0] == 0.0 || p[0] == 1.0 || p[1] == 0.0 || p[1] == 1.0;
  };
  for (const auto& [edge, owners] : count) {
    CHECK(owners >= 1);
    CHECK(owners <= 2);
    if (owners == 1) {
      CHECK(on_boundary(edge.first));
      CHECK(on_boundary(edge.second));
    }
  }
  CHECK(extract_edges(mesh).size() == count.size());
}

TEST_CASE("boundary sets are exactly the hull nodes, corners in two sets") {
  const Mesh mesh = generate_mesh(1.0, 1.0, 121, 0.2, 11);
  std::multiset<int> all;
  for (const auto* side : {&mesh.boundary.top, &mesh.boundary.bottom,
                           &mesh.boundary.left, &mesh.boundary.right})
    all.insert(side->begin(), side->end());
  for (int i = 0; i < mesh.node_count(); ++i) {
    const auto& p = mesh.nodes[i];
    const int sides = (p[0] == 0.0) + (p[0] == 1.0) + (p[1] == 0.0) + (p[1] == 1.0);
    CHECK(all.count(i) == static_cast<size_t>(sides));
  }
}

TEST_CASE("signed area matches hand values") {
  Mesh mesh;
  mesh.nodes = {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {0, 2}};
  mesh.elements = {{0, 1, 2}, {0, 3, 4}};
  CHECK(signed_area(mesh, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(signed_area(mesh, 1) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("mesh generation precondition checks") {
  CHECK_THROWS(generate_mesh(0.0, 1.0, 100, 0.2, 0));
  CHECK_THROWS(generate_mesh(1.0, 1.0, 3, 0.2, 0));
  CHECK_THROWS(generate_mesh(1.0, 1.0, 100, 0.5, 0));
  CHECK_THROWS(generate_mesh(1.0, 1.0, 100, -0.1, 0));
}

TEST_CASE("save/load round trip is the identity") {
  const Mesh mesh = generate_mesh(1.0, 1.0, 4, 0.0, 1);
  const auto path = temp_file("square.mesh");
  save_mesh(mesh, path);
  const Mesh loaded = load_mesh(path);
  REQUIRE(loaded.node_count() == mesh.node_count());
  for (int i = 0; i < mesh.node_count(); ++i) {
    CHECK(loaded.nodes[i][0] == mesh.nodes[i][0]);
    CHECK(loaded.nodes[i][1] == mesh.nodes[i][1]);
  }
  CHECK(loaded.elements == mesh.elements);
  CHECK(loaded.thickness == mesh.thickness);

  auto sorted = [](std::vector<int> v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  CHECK(sorted(loaded.boundary.top) == sorted(mesh.boundary.top));
  CHECK(sorted(loaded.boundary.bottom) == sorted(mesh.boundary.bottom));
  CHECK(sorted(loaded.boundary.left) == sorted(mesh.boundary.left));
  CHECK(sorted(loaded.boundary.right) == sorted(mesh.boundary.right));
}

TEST_CASE("round trip preserves jittered coordinates at 17 digits") {
  const Mesh mesh = generate_mesh(1.3, 0.9, 200, 0.3, 77);
  const auto path = temp_file("jittered.mesh");
  save_mesh(mesh, path);
  const Mesh loaded = load_mesh(path);
  for (int i = 0; i < mesh.node_count(); ++i) {
    CHECK(loaded.nodes[i][0] == mesh.nodes[i][0]);
    CHECK(loaded.nodes[i][1] == mesh.nodes[i][1]);
  }
}

TEST_CASE("loader reports out-of-range element with its index") {
  const auto path = temp_file("bad_index.mesh");
  {
    std::ofstream out(path);
    out << "# comment line\n";
    out << "nodes 4 elements 1 thickness 1\n";
    out << "0 0 corner:bottom+left\n1 0 corner:bottom+right\n";
    out << "0 1 corner:top+left\n1 1 corner:top+right\n";
    out << "0 1 99\n";
  }
  CHECK_THROWS_WITH_AS(load_mesh(path),
                       doctest::Contains("element 0 references node 99"),
                       std::runtime_error);
}

TEST_CASE("loader reorients clockwise elements and warns") {
  const auto path = temp_file("clockwise.mesh");
  {
    std::ofstream out(path);
    out << "nodes 3 elements 1 thickness 1\n";
    out << "0 0 corner:bottom+left\n1 0 corner:bottom+right\n0 1 corner:top+left\n";
    out << "0 2 1\n";  // clockwise
  }
  std::vector<std::string> warnings;
  const Mesh mesh = load_mesh(path, &warnings);
  CHECK(signed_area(mesh, 0) > 0);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("clockwise") != std::string::npos);
}

TEST_CASE("loader reports parse errors with line numbers") {
  const auto path = temp_file("parse_error.mesh");
  {
    std::ofstream out(path);
    out << "nodes 3 elements 1 thickness 1\n";
    out << "0 0 nonsense_tag\n";
  }
  CHECK_THROWS_WITH_AS(load_mesh(path), doctest::Contains(":2:"),
                       std::runtime_error);
}

TEST_CASE("validate_mesh rejects duplicate nodes") {
  Mesh mesh;
  mesh.nodes = {{0, 0}, {1, 0}, {0, 1}, {0, 0}};
  mesh.elements = {{0, 1, 2}, {1, 2, 3}};
  CHECK_THROWS_WITH_AS(validate_mesh(mesh), doctest::Contains("duplicate"),
                       std::runtime_error);
}
