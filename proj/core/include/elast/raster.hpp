// Copyright (c) the elastrec contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "elast/fem.hpp"
#include "elast/mesh.hpp"

namespace elast {

struct RasterOptions {
  int width = 256;
  int height = 256;
  std::string colormap = "viridis";  // or "gray"
  double scale_min = 0.0;            // value mapped to colormap coordinate 0
  double scale_max = 100000.0;       // value mapped to coordinate 1 (1.0 x 100 kPa)
};

struct RasterImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, top row first
};

/// Clamped linear map of a value onto the [0, 1] colormap axis.
double colormap_coordinate(double value, double scale_min, double scale_max);

/// RGB for a coordinate in [0, 1] under the named colormap.
std::array<std::uint8_t, 3> colormap_rgb(const std::string& name, double t);

/// Barycentric interpolation of a nodal field onto a pixel grid spanning the
/// mesh bounding box; row 0 is the top of the domain. Deterministic bytes
/// for fixed inputs. Throws if the field has no finite value.
RasterImage rasterize_field(const Mesh& mesh, const Eigen::VectorXd& nodal_values,
                            const RasterOptions& options);

/// Binary PPM (P6), lossless and widely decodable.
void write_ppm(const RasterImage& image, const std::filesystem::path& path);

}  // namespace elast
