// Copyright (c) the elastrec contributors.
// SPDX-License-Identifier: Apache-2.0

#include "elast/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "elast/rng.hpp"

namespace elast {

namespace {

double triangle_area(const std::array<double, 2>& p1,
                     const std::array<double, 2>& p2,
                     const std::array<double, 2>& p3) {
  return 0.5 * ((p2[0] - p1[0]) * (p3[1] - p1[1]) -
                (p3[0] - p1[0]) * (p2[1] - p1[1]));
}

// Strict circumcircle containment for CCW triangle (a, b, c); cocircular
// ties count as outside so exact-grid meshes triangulate deterministically.
bool in_circumcircle(const std::array<double, 2>& a,
                     const std::array<double, 2>& b,
                     const std::array<double, 2>& c,
                     const std::array<double, 2>& d) {
  const double ax = a[0] - d[0], ay = a[1] - d[1];
  const double bx = b[0] - d[0], by = b[1] - d[1];
  const double cx = c[0] - d[0], cy = c[1] - d[1];
  const double qa = ax * ax + ay * ay;
  const double qb = bx * bx + by * by;
  const double qc = cx * cx + cy * cy;
  const double t1 = qa * (bx * cy - cx * by);
  const double t2 = qb * (ax * cy - cx * ay);
  const double t3 = qc * (ax * by - bx * ay);
  const double det = t1 - t2 + t3;
  const double eps = 1e-12 * (std::abs(t1) + std::abs(t2) + std::abs(t3) + 1e-300);
  return det > eps;
}

// Lawson edge flips: start from the grid triangulation and flip interior
// edges violating the Delaunay criterion until none remain.
void delaunayize(const std::vector<std::array<double, 2>>& nodes,
                 std::vector<std::array<int, 3>>& elements) {
  const int max_sweeps = 100;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    // Edge -> (element, local edge index) adjacency, rebuilt per sweep.
    std::map<std::pair<int, int>, std::vector<std::pair<int, int>>> adj;
    for (int t = 0; t < static_cast<int>(elements.size()); ++t) {
      for (int k = 0; k < 3; ++k) {
        int u = elements[t][k], v = elements[t][(k + 1) % 3];
        adj[{std::min(u, v), std::max(u, v)}].push_back({t, k});
      }
    }

    int flips = 0;
    std::vector<bool> touched(elements.size(), false);
    for (const auto& [edge, owners] : adj) {
      if (owners.size() != 2) continue;
      const auto [t1, k1] = owners[0];
      const auto [t2, k2] = owners[1];
      if (touched[t1] || touched[t2]) continue;

      const int u = elements[t1][k1];
      const int v = elements[t1][(k1 + 1) % 3];
      const int p = elements[t1][(k1 + 2) % 3];
      const int q = elements[t2][(k2 + 2) % 3];

      if (!in_circumcircle(nodes[u], nodes[v], nodes[p], nodes[q])) continue;
      // Flip only when the replacement triangles stay CCW (convex quad).
      if (triangle_area(nodes[u], nodes[q], nodes[p]) <= 0) continue;
      if (triangle_area(nodes[q], nodes[v], nodes[p]) <= 0) continue;

      elements[t1] = {u, q, p};
      elements[t2] = {q, v, p};
      touched[t1] = touched[t2] = true;
      ++flips;
    }
    if (flips == 0) return;
  }
}

}  // namespace

double Mesh::width() const {
  double lo = 0, hi = 0;
  if (!nodes.empty()) lo = hi = nodes[0][0];
  for (const auto& p : nodes) {
    lo = std::min(lo, p[0]);
    hi = std::max(hi, p[0]);
  }
  return hi - lo;
}

double Mesh::height() const {
  double lo = 0, hi = 0;
  if (!nodes.empty()) lo = hi = nodes[0][1];
  for (const auto& p : nodes) {
    lo = std::min(lo, p[1]);
    hi = std::max(hi, p[1]);
  }
  return hi - lo;
}

double signed_area(const Mesh& mesh, int element_index) {
  if (element_index < 0 || element_index >= mesh.element_count())
    throw std::out_of_range("element index out of range");
  const auto& e = mesh.elements[element_index];
  return triangle_area(mesh.nodes[e[0]], mesh.nodes[e[1]], mesh.nodes[e[2]]);
}

Mesh generate_mesh(double width, double height, int target_nodes,
                   double jitter, std::uint64_t seed) {
  if (width <= 0 || height <= 0)
    throw std::invalid_argument("mesh dimensions must be positive");
  if (target_nodes < 4)
    throw std::invalid_argument("target_nodes must be at least 4");
  if (jitter < 0 || jitter >= 0.5)
    throw std::invalid_argument("jitter must lie in [0, 0.5)");

  const int nx = std::max(
      2, static_cast<int>(std::lround(std::sqrt(target_nodes * width / height))));
  const int ny = std::max(
      2, static_cast<int>(std::lround(static_cast<double>(target_nodes) / nx)));
  const double hx = width / (nx - 1);
  const double hy = height / (ny - 1);

  double current_jitter = jitter;
  for (int attempt = 0; attempt < 5; ++attempt) {
    Rng rng(seed);
    Mesh mesh;
    mesh.nodes.reserve(static_cast<size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        double x = i * hx;
        double y = j * hy;
        const bool on_boundary = (i == 0 || i == nx - 1 || j == 0 || j == ny - 1);
        if (!on_boundary && current_jitter > 0) {
          x += rng.uniform(-1.0, 1.0) * current_jitter * hx;
          y += rng.uniform(-1.0, 1.0) * current_jitter * hy;
        }
        // Keep the extreme grid lines exactly on the rectangle edges.
        if (i == nx - 1) x = width;
        if (j == ny - 1) y = height;
        mesh.nodes.push_back({x, y});

        const int idx = j * nx + i;
        if (j == ny - 1) mesh.boundary.top.push_back(idx);
        if (j == 0) mesh.boundary.bottom.push_back(idx);
        if (i == 0) mesh.boundary.left.push_back(idx);
        if (i == nx - 1) mesh.boundary.right.push_back(idx);
      }
    }

    mesh.elements.reserve(2 * static_cast<size_t>(nx - 1) * (ny - 1));
    for (int j = 0; j + 1 < ny; ++j) {
      for (int i = 0; i + 1 < nx; ++i) {
        const int n00 = j * nx + i;
        const int n10 = j * nx + i + 1;
        const int n01 = (j + 1) * nx + i;
        const int n11 = (j + 1) * nx + i + 1;
        mesh.elements.push_back({n00, n10, n11});
        mesh.elements.push_back({n00, n11, n01});
      }
    }

    const double min_area = 1e-9 * hx * hy;
    bool degenerate = false;
    for (int t = 0; t < mesh.element_count() && !degenerate; ++t)
      degenerate = signed_area(mesh, t) < min_area;

    if (!degenerate) {
      delaunayize(mesh.nodes, mesh.elements);
      validate_mesh(mesh);
      return mesh;
    }
    current_jitter *= 0.5;
  }
  throw std::runtime_error(
      "mesh generation failed: degenerate triangulation after 5 retries");
}

std::vector<Edge> extract_edges(const Mesh& mesh) {
  std::set<std::pair<int, int>> seen;
  std::vector<Edge> edges;
  for (const auto& e : mesh.elements) {
    for (int k = 0; k < 3; ++k) {
      int a = e[k], b = e[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      if (!seen.insert({a, b}).second) continue;
      const double dx = mesh.nodes[a][0] - mesh.nodes[b][0];
      const double dy = mesh.nodes[a][1] - mesh.nodes[b][1];
      edges.push_back({a, b, std::hypot(dx, dy)});
    }
  }
  return edges;
}

void validate_mesh(const Mesh& mesh) {
  const int n = mesh.node_count();
  for (int t = 0; t < mesh.element_count(); ++t) {
    for (int k = 0; k < 3; ++k) {
      const int v = mesh.elements[t][k];
      if (v < 0 || v >= n) {
        std::ostringstream msg;
        msg << "element " << t << " references node " << v << " of " << n;
        throw std::runtime_error(msg.str());
      }
    }
    if (signed_area(mesh, t) <= 0) {
      std::ostringstream msg;
      msg << "element " << t << " has non-positive area";
      throw std::runtime_error(msg.str());
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (mesh.nodes[i] == mesh.nodes[j]) {
        std::ostringstream msg;
        msg << "duplicate nodes " << i << " and " << j;
        throw std::runtime_error(msg.str());
      }
    }
  }
}

namespace {

std::string node_tag(const Mesh& mesh, int idx) {
  auto contains = [idx](const std::vector<int>& v) {
    return std::find(v.begin(), v.end(), idx) != v.end();
  };
  std::vector<std::string> sides;
  if (contains(mesh.boundary.top)) sides.push_back("top");
  if (contains(mesh.boundary.bottom)) sides.push_back("bottom");
  if (contains(mesh.boundary.left)) sides.push_back("left");
  if (contains(mesh.boundary.right)) sides.push_back("right");
  if (sides.empty()) return "interior";
  if (sides.size() == 1) return sides[0];
  return "corner:" + sides[0] + "+" + sides[1];
}

[[noreturn]] void parse_fail(const std::filesystem::path& path, int line,
                             const std::string& what) {
  std::ostringstream msg;
  msg << path.string() << ":" << line << ": " << what;
  throw std::runtime_error(msg.str());
}

void apply_tag(Mesh& mesh, int idx, const std::string& tag,
               const std::filesystem::path& path, int line) {
  auto add_side = [&](const std::string& side) {
    if (side == "top") mesh.boundary.top.push_back(idx);
    else if (side == "bottom") mesh.boundary.bottom.push_back(idx);
    else if (side == "left") mesh.boundary.left.push_back(idx);
    else if (side == "right") mesh.boundary.right.push_back(idx);
    else parse_fail(path, line, "unknown boundary side '" + side + "'");
  };
  if (tag == "interior") return;
  if (tag.rfind("corner:", 0) == 0) {
    const std::string rest = tag.substr(7);
    const auto plus = rest.find('+');
    if (plus == std::string::npos)
      parse_fail(path, line, "malformed corner tag '" + tag + "'");
    add_side(rest.substr(0, plus));
    add_side(rest.substr(plus + 1));
    return;
  }
  add_side(tag);
}

}  // namespace

void save_mesh(const Mesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  char buf[128];
  out << "nodes " << mesh.node_count() << " elements " << mesh.element_count()
      << " thickness ";
  std::snprintf(buf, sizeof(buf), "%.17g\n", mesh.thickness);
  out << buf;
  for (int i = 0; i < mesh.node_count(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g ", mesh.nodes[i][0],
                  mesh.nodes[i][1]);
    out << buf << node_tag(mesh, i) << "\n";
  }
  for (const auto& e : mesh.elements)
    out << e[0] << " " << e[1] << " " << e[2] << "\n";
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Mesh load_mesh(const std::filesystem::path& path,
               std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());

  Mesh mesh;
  int line_no = 0;
  int n_nodes = -1, n_elements = -1;
  int nodes_read = 0, elements_read = 0;

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    if (n_nodes < 0) {
      std::string kw_nodes, kw_elements, kw_thickness;
      if (!(ss >> kw_nodes)) continue;  // blank line before the header
      if (!(ss >> n_nodes >> kw_elements >> n_elements >> kw_thickness >>
            mesh.thickness) ||
          kw_nodes != "nodes" || kw_elements != "elements" ||
          kw_thickness != "thickness")
        parse_fail(path, line_no,
                   "expected header 'nodes N elements M thickness T'");
      if (n_nodes < 3 || n_elements < 1)
        parse_fail(path, line_no, "degenerate mesh size in header");
      continue;
    }
    if (nodes_read < n_nodes) {
      double x, y;
      std::string tag;
      if (!(ss >> x)) continue;  // blank or comment-only line
      if (!(ss >> y >> tag)) parse_fail(path, line_no, "expected 'x y tag'");
      mesh.nodes.push_back({x, y});
      apply_tag(mesh, nodes_read, tag, path, line_no);
      ++nodes_read;
      continue;
    }
    if (elements_read < n_elements) {
      int i, j, k;
      if (!(ss >> i)) continue;
      if (!(ss >> j >> k)) parse_fail(path, line_no, "expected 'i j k'");
      mesh.elements.push_back({i, j, k});
      ++elements_read;
    }
  }
  if (n_nodes < 0) parse_fail(path, line_no, "missing header");
  if (nodes_read != n_nodes || elements_read != n_elements)
    parse_fail(path, line_no, "truncated file");

  for (int t = 0; t < mesh.element_count(); ++t) {
    auto& e = mesh.elements[t];
    for (int k = 0; k < 3; ++k) {
      if (e[k] < 0 || e[k] >= n_nodes) {
        std::ostringstream msg;
        msg << "element " << t << " references node " << e[k] << " of "
            << n_nodes;
        throw std::runtime_error(msg.str());
      }
    }
    if (signed_area(mesh, t) < 0) {
      std::swap(e[1], e[2]);
      if (warnings) {
        std::ostringstream msg;
        msg << "element " << t << " was clockwise; reoriented";
        warnings->push_back(msg.str());
      }
    }
  }
  validate_mesh(mesh);
  return mesh;
}

}  // namespace elast
