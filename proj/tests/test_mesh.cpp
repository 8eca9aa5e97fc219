#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "feec/mesh.hpp"

using namespace feec;

TEST_CASE("unit square level 2 has 32 congruent cells and C_mesh = 4") {
  const auto mesh = generate_domain_mesh("unit_square", 2);
  CHECK(mesh.dim() == 2);
  CHECK(mesh.num_cells() == 32);
  CHECK(mesh.num_vertices() == 25);
  CHECK(mesh.total_volume() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(shape_constant(mesh) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(mesh.h_min() == doctest::Approx(mesh.h_max()));
  // Euler characteristic of a disc
  CHECK(mesh.num_vertices() - mesh.num_simplices(1) + mesh.num_cells() == 1);
  CHECK(mesh.boundary_facets().size() == 16);
}

TEST_CASE("uniform refinement preserves volume and multiplies cells by 2^n") {
  for (const char* d : {"unit_interval", "unit_square", "l_shape", "unit_cube", "crossed_bricks"}) {
    const auto a = generate_domain_mesh(d, 0);
    const auto b = refine_uniform(a);
    CHECK(b.num_cells() == a.num_cells() * (1 << a.dim()));
    CHECK(b.total_volume() == doctest::Approx(a.total_volume()).epsilon(1e-12));
    CHECK(b.h_max() < a.h_max());
  }
}

TEST_CASE("tetrahedral refinement keeps the shape constant bounded") {
  auto m = generate_domain_mesh("unit_cube", 0);
  const double c0 = shape_constant(refine_uniform(m));
  const double c1 = shape_constant(refine_uniform(refine_uniform(m)));
  CHECK(c1 <= c0 * (1.0 + 1e-9));
}

TEST_CASE("simplices, faces and stars") {
  const auto mesh = generate_domain_mesh("unit_square", 1);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto edges = mesh.faces(2, c, 1);
    CHECK(edges.size() == 3);
    for (int e : edges) {
      const auto& cells = mesh.cells_of(1, e);
      CHECK(std::find(cells.begin(), cells.end(), c) != cells.end());
    }
    const auto star = mesh.star_cells(2, c);
    CHECK(std::find(star.begin(), star.end(), c) != star.end());
  }
  CHECK(mesh.find({0, 1, 2, 3}) == -1);
}

TEST_CASE("point location and barycentric coordinates") {
  const auto mesh = generate_domain_mesh("unit_square", 2);
  const double x[2] = {0.31, 0.77};
  auto loc = mesh.locate(x, 1e-12);
  REQUIRE(loc.has_value());
  double sum = 0.0;
  for (double l : loc->bary) {
    CHECK(l >= -1e-12);
    sum += l;
  }
  CHECK(sum == doctest::Approx(1.0));
  const double out[2] = {1.5, 0.5};
  CHECK_FALSE(mesh.locate(out, 1e-12).has_value());
}

TEST_CASE("JSON round trip") {
  const auto mesh = generate_domain_mesh("crossed_bricks", 0);
  const auto back = mesh_from_json(mesh_to_json(mesh));
  CHECK(back.num_cells() == mesh.num_cells());
  CHECK(back.num_vertices() == mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) CHECK(back.vertex(v) == mesh.vertex(v));
}

TEST_CASE("invalid meshes are rejected") {
  CHECK_THROWS_AS(mesh_from_json("{"), MeshFormatError);
  CHECK_THROWS_AS(mesh_from_json(R"({"n": 2, "vertices": [[0,0],[1,0]], "cells": [[0,1]]})"), MeshFormatError);
  CHECK_THROWS_AS(build_triangulation(2, {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}}, {{0, 1, 2}}), DegenerateCell);
  // a hanging vertex on the diagonal
  CHECK_THROWS_AS(build_triangulation(2, {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {0.5, 0.5, 0}},
                                      {{0, 1, 2}, {1, 3, 4}, {3, 2, 4}}),
                  NonConformingMesh);
  CHECK_THROWS_AS(generate_domain_mesh("torus", 0), MeshFormatError);
}

TEST_CASE("neighbour count and chart constants") {
  const auto mesh = generate_domain_mesh("unit_square", 2);
  CHECK(neighbor_count_constant(mesh) == 31);
  auto [cM, CM] = chart_constants(mesh);
  CHECK(cM > 0.0);
  CHECK(CM >= 1.0);
}

TEST_CASE("distance between simplices") {
  const std::vector<Point> a{{0, 0, 0}, {1, 0, 0}}, b{{0, 1, 0}, {1, 2, 0}};
  CHECK(simplex_distance(a, b, 2) == doctest::Approx(1.0));
}
