// Copyright (c) the elastrec contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace elast {

/// Node index sets for each side of the rectangular domain.
/// Corner nodes appear in both adjacent sets; consumers de-duplicate.
struct BoundarySets {
  std::vector<int> top;
  std::vector<int> bottom;
  std::vector<int> left;
  std::vector<int> right;
};

/// Triangle mesh of a rectangular cross-section. Elements are stored
/// counter-clockwise so strain-displacement signs stay consistent.
struct Mesh {
  std::vector<std::array<double, 2>> nodes;  // coordinates in meters
  std::vector<std::array<int, 3>> elements;  // CCW node index triples
  BoundarySets boundary;
  double thickness = 1.0;  // uniform element thickness, meters

  int node_count() const { return static_cast<int>(nodes.size()); }
  int element_count() const { return static_cast<int>(elements.size()); }
  double width() const;
  double height() const;
};

/// Undirected mesh edge with Euclidean length; a < b.
struct Edge {
  int a;
  int b;
  double length;
};

/// Signed area of an element; positive for CCW node order.
double signed_area(const Mesh& mesh, int element_index);

/// Jittered-grid Delaunay mesh of a width x height rectangle.
///
/// Interior nodes of a near-square grid are perturbed by
/// jitter * (grid spacing); boundary nodes stay on the rectangle edges.
/// Node count lands within 10% of target_nodes. Deterministic per seed.
/// Retries with halved jitter (up to 5 times) if a degenerate element
/// appears, then throws.
Mesh generate_mesh(double width, double height, int target_nodes,
                   double jitter, std::uint64_t seed);

/// Unique element edges, each listed once.
std::vector<Edge> extract_edges(const Mesh& mesh);

/// Throws std::runtime_error describing the first violated mesh invariant.
void validate_mesh(const Mesh& mesh);

/// Text format: header `nodes N elements M thickness T`, then N node lines
/// `x y tag`, then M element lines `i j k`. `#` starts a comment.
void save_mesh(const Mesh& mesh, const std::filesystem::path& path);

/// Parses the text format. Clockwise elements are reoriented with a warning
/// appended to `warnings` (when given). Throws with a line number on parse
/// errors and with the offending element on invariant violations.
Mesh load_mesh(const std::filesystem::path& path,
               std::vector<std::string>* warnings = nullptr);

}  // namespace elast
