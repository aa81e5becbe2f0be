// Copyright (c) the elastrec contributors.
// SPDX-License-Identifier: Apache-2.0

#include "elast/raster.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace elast {

double colormap_coordinate(double value, double scale_min, double scale_max) {
  if (scale_max <= scale_min)
    throw std::invalid_argument("raster scale must have scale_max > scale_min");
  return std::clamp((value - scale_min) / (scale_max - scale_min), 0.0, 1.0);
}

namespace {

// Polynomial fit of the viridis colormap (degree 6, Matt Zucker's
// coefficients), accurate to about 1/256 per channel.
std::array<double, 3> viridis(double t) {
  static const double c[7][3] = {
      {0.2777273272234177, 0.005407344544966578, 0.3340998053353061},
      {0.1050930431085774, 1.404613529898575, 1.384590162594685},
      {-0.3308618287255563, 0.214847559468213, 0.09509516302823659},
      {-4.634230498983486, -5.799100973351585, -19.33244095627987},
      {6.228269936347081, 14.17993336680509, 56.69055260068105},
      {4.776384997670288, -13.74514537774601, -65.35303263337234},
      {-5.435455855934631, 4.645852612178535, 26.3124352495832}};
  std::array<double, 3> rgb;
  for (int ch = 0; ch < 3; ++ch) {
    double acc = c[6][ch];
    for (int k = 5; k >= 0; --k) acc = acc * t + c[k][ch];
    rgb[ch] = std::clamp(acc, 0.0, 1.0);
  }
  return rgb;
}

std::uint8_t to_byte(double channel) {
  return static_cast<std::uint8_t>(std::lround(channel * 255.0));
}

}  // namespace

std::array<std::uint8_t, 3> colormap_rgb(const std::string& name, double t) {
  t = std::clamp(t, 0.0, 1.0);
  if (name == "gray") {
    const std::uint8_t v = to_byte(t);
    return {v, v, v};
  }
  if (name == "viridis") {
    const auto rgb = viridis(t);
    return {to_byte(rgb[0]), to_byte(rgb[1]), to_byte(rgb[2])};
  }
  throw std::invalid_argument("unknown colormap '" + name + "'");
}

namespace {

struct BinGrid {
  int cells;
  double min_x, min_y, inv_dx, inv_dy;
  std::vector<std::vector<int>> elements;

  int cell_of(double x, double y) const {
    int cx = std::clamp(static_cast<int>((x - min_x) * inv_dx), 0, cells - 1);
    int cy = std::clamp(static_cast<int>((y - min_y) * inv_dy), 0, cells - 1);
    return cy * cells + cx;
  }
};

BinGrid build_bins(const Mesh& mesh, double min_x, double min_y, double max_x,
                   double max_y) {
  BinGrid grid;
  grid.cells = std::max(1, static_cast<int>(std::sqrt(mesh.element_count())));
  grid.min_x = min_x;
  grid.min_y = min_y;
  grid.inv_dx = grid.cells / std::max(max_x - min_x, 1e-300);
  grid.inv_dy = grid.cells / std::max(max_y - min_y, 1e-300);
  grid.elements.resize(static_cast<size_t>(grid.cells) * grid.cells);

  for (int t = 0; t < mesh.element_count(); ++t) {
    const auto& e = mesh.elements[t];
    double lo_x = mesh.nodes[e[0]][0], hi_x = lo_x;
    double lo_y = mesh.nodes[e[0]][1], hi_y = lo_y;
    for (int k = 1; k < 3; ++k) {
      lo_x = std::min(lo_x, mesh.nodes[e[k]][0]);
      hi_x = std::max(hi_x, mesh.nodes[e[k]][0]);
      lo_y = std::min(lo_y, mesh.nodes[e[k]][1]);
      hi_y = std::max(hi_y, mesh.nodes[e[k]][1]);
    }
    const int c0x = std::clamp(static_cast<int>((lo_x - min_x) * grid.inv_dx), 0,
                               grid.cells - 1);
    const int c1x = std::clamp(static_cast<int>((hi_x - min_x) * grid.inv_dx), 0,
                               grid.cells - 1);
    const int c0y = std::clamp(static_cast<int>((lo_y - min_y) * grid.inv_dy), 0,
                               grid.cells - 1);
    const int c1y = std::clamp(static_cast<int>((hi_y - min_y) * grid.inv_dy), 0,
                               grid.cells - 1);
    for (int cy = c0y; cy <= c1y; ++cy)
      for (int cx = c0x; cx <= c1x; ++cx)
        grid.elements[static_cast<size_t>(cy) * grid.cells + cx].push_back(t);
  }
  return grid;
}

// Barycentric coordinates of (x, y); negative entries mean outside.
bool barycentric(const Mesh& mesh, int element, double x, double y,
                 double tolerance, std::array<double, 3>& coords) {
  const auto& e = mesh.elements[element];
  const auto& p1 = mesh.nodes[e[0]];
  const auto& p2 = mesh.nodes[e[1]];
  const auto& p3 = mesh.nodes[e[2]];
  const double det = (p2[0] - p1[0]) * (p3[1] - p1[1]) -
                     (p3[0] - p1[0]) * (p2[1] - p1[1]);
  if (det == 0) return false;
  const double l2 =
      ((x - p1[0]) * (p3[1] - p1[1]) - (p3[0] - p1[0]) * (y - p1[1])) / det;
  const double l3 =
      ((p2[0] - p1[0]) * (y - p1[1]) - (x - p1[0]) * (p2[1] - p1[1])) / det;
  const double l1 = 1.0 - l2 - l3;
  if (l1 < -tolerance || l2 < -tolerance || l3 < -tolerance) return false;
  coords = {l1, l2, l3};
  return true;
}

}  // namespace

RasterImage rasterize_field(const Mesh& mesh, const Eigen::VectorXd& nodal_values,
                            const RasterOptions& options) {
  if (nodal_values.size() != mesh.node_count())
    throw std::invalid_argument("rasterize_field: field length mismatch");
  if (!nodal_values.array().isFinite().any())
    throw std::invalid_argument("rasterize_field: field has no finite value");

  double min_x = mesh.nodes[0][0], max_x = min_x;
  double min_y = mesh.nodes[0][1], max_y = min_y;
  for (const auto& p : mesh.nodes) {
    min_x = std::min(min_x, p[0]);
    max_x = std::max(max_x, p[0]);
    min_y = std::min(min_y, p[1]);
    max_y = std::max(max_y, p[1]);
  }
  const BinGrid bins = build_bins(mesh, min_x, min_y, max_x, max_y);

  RasterImage image;
  image.width = options.width;
  image.height = options.height;
  image.rgb.resize(static_cast<size_t>(options.width) * options.height * 3);

  for (int row = 0; row < options.height; ++row) {
    // Row 0 renders the top of the domain.
    const double y = max_y - (row + 0.5) * (max_y - min_y) / options.height;
    for (int col = 0; col < options.width; ++col) {
      const double x = min_x + (col + 0.5) * (max_x - min_x) / options.width;

      double value = 0;
      bool found = false;
      std::array<double, 3> l;
      for (double tolerance : {1e-12, 1e-9, 1e-6}) {
        for (int t : bins.elements[bins.cell_of(x, y)]) {
          if (!barycentric(mesh, t, x, y, tolerance, l)) continue;
          const auto& e = mesh.elements[t];
          // Anchored form is exact for constant fields.
          value = nodal_values[e[0]] +
                  l[1] * (nodal_values[e[1]] - nodal_values[e[0]]) +
                  l[2] * (nodal_values[e[2]] - nodal_values[e[0]]);
          found = true;
          break;
        }
        if (found) break;
      }
      if (!found) {
        // Pixel center escaped every element (convexity rounding); use the
        // nearest node.
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < mesh.node_count(); ++i) {
          const double d = std::hypot(mesh.nodes[i][0] - x, mesh.nodes[i][1] - y);
          if (d < best) {
            best = d;
            value = nodal_values[i];
          }
        }
      }

      const double t = colormap_coordinate(value, options.scale_min,
                                           options.scale_max);
      const auto rgb = colormap_rgb(options.colormap, t);
      const size_t base = (static_cast<size_t>(row) * options.width + col) * 3;
      image.rgb[base] = rgb[0];
      image.rgb[base + 1] = rgb[1];
      image.rgb[base + 2] = rgb[2];
    }
  }
  return image;
}

void write_ppm(const RasterImage& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.rgb.data()),
            static_cast<std::streamsize>(image.rgb.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace elast
