// Copyright (c) the elastrec contributors.
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "elast/config.hpp"
#include "elast/experiment.hpp"
#include "elast/raster.hpp"

using namespace elast;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::path("test_tmp_experiment") / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.target_nodes = 120;
  c.outer_iterations = 4;
  c.inner_iterations = 60;
  c.seeds = {1, 2};
  return c;
}

}  // namespace

TEST_CASE("ini parsing: sections, comments, types, lists") {
  const IniFile ini = IniFile::parse_string(
      "# comment\n"
      "[mesh]\n"
      "width = 2.5   ; trailing comment\n"
      "target_nodes = 80\n"
      "[noise]\n"
      "seeds = 3, 5, 8\n"
      "deltas = 0.1, 0.2\n");
  CHECK(ini.get_double("mesh", "width", 0) == 2.5);
  CHECK(ini.get_int("mesh", "target_nodes", 0) == 80);
  CHECK(ini.get_double("mesh", "absent", 7.0) == 7.0);
  CHECK(ini.get_u64_list("noise", "seeds", {}) ==
        std::vector<std::uint64_t>{3, 5, 8});
  CHECK(ini.get_double_list("noise", "deltas", {}) ==
        std::vector<double>{0.1, 0.2});
  CHECK(ini.unconsumed_keys().empty());
}

TEST_CASE("ini parsing rejects malformed input") {
  CHECK_THROWS(IniFile::parse_string("[mesh\nwidth = 1\n"));
  CHECK_THROWS(IniFile::parse_string("[mesh]\nwidth 1\n"));
  const IniFile bad_num = IniFile::parse_string("[mesh]\nwidth = abc\n");
  CHECK_THROWS(bad_num.get_double("mesh", "width", 0));
}

TEST_CASE("experiment config applies derived defaults and rejects typos") {
  const auto dir = temp_dir("config");
  {
    std::ofstream out(dir / "ok.ini");
    out << "[mesh]\nwidth = 2.0\nheight = 1.0\n";
  }
  const ExperimentConfig c = load_experiment_config(dir / "ok.ini");
  CHECK(c.width == 2.0);
  CHECK(c.center_x == 1.0);        // width / 2
  CHECK(c.center_y == 0.6);        // 0.6 * height
  CHECK(c.radius == 0.25);         // 0.25 * height
  CHECK(c.lambda_statistical == 3e-4);

  {
    std::ofstream out(dir / "typo.ini");
    out << "[mesh]\nwidht = 2.0\n";
  }
  CHECK_THROWS_WITH_AS(load_experiment_config(dir / "typo.ini"),
                       doctest::Contains("widht"), std::runtime_error);
  {
    std::ofstream out(dir / "solver.ini");
    out << "[solver]\nsolver = magic\n";
  }
  CHECK_THROWS(load_experiment_config(dir / "solver.ini"));
}

TEST_CASE("vector csv round trip") {
  const auto dir = temp_dir("csv");
  Eigen::VectorXd v(4);
  v << 1.0, -2.5, 3.14159265358979, 1e-300;
  write_vector_csv(dir / "v.csv", v);
  const Eigen::VectorXd back = read_vector_csv(dir / "v.csv");
  REQUIRE(back.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(back[i] == v[i]);
}

TEST_CASE("colormap coordinate pins the scale") {
  CHECK(colormap_coordinate(50000.0, 0.0, 100000.0) == 0.5);
  CHECK(colormap_coordinate(-10.0, 0.0, 100000.0) == 0.0);
  CHECK(colormap_coordinate(2e5, 0.0, 100000.0) == 1.0);
  CHECK(colormap_rgb("gray", 0.5)[0] == 128);
  CHECK(colormap_rgb("gray", 0.5)[1] == 128);
  CHECK_THROWS(colormap_rgb("sunset", 0.5));
}

TEST_CASE("constant fields rasterize to a constant color") {
  const Mesh mesh = generate_mesh(1.0, 1.0, 64, 0.2, 3);
  RasterOptions options;
  options.width = 32;
  options.height = 32;
  options.colormap = "gray";
  options.scale_min = 0;
  options.scale_max = 100000;
  const RasterImage img =
      rasterize_field(mesh, Eigen::VectorXd::Constant(mesh.node_count(), 50000.0),
                      options);
  for (size_t i = 0; i < img.rgb.size(); ++i) CHECK(img.rgb[i] == 128);
  CHECK_THROWS(rasterize_field(
      mesh, Eigen::VectorXd::Constant(mesh.node_count(), std::nan("")), options));
}

TEST_CASE("rendered inclusion occupies the right pixel area") {
  ExperimentConfig c;
  const Mesh mesh = generate_mesh(c.width, c.height, 800, 0.2, 5);
  const Phantom ph = make_phantom(mesh, 10000, 50000, {c.center_x, c.center_y},
                                  c.radius);
  RasterOptions options;
  options.width = 256;
  options.height = 256;
  options.colormap = "gray";
  const RasterImage img = rasterize_field(mesh, ph.modulus, options);
  int bright = 0;
  for (size_t px = 0; px < img.rgb.size(); px += 3)
    if (img.rgb[px] > 76) ++bright;  // midway between 10 kPa and 50 kPa levels
  const double expected =
      M_PI * c.radius * c.radius / (c.width * c.height) * 256 * 256;
  CHECK(bright > 0.95 * expected * (1 - 0.05));
  CHECK(bright < expected * 1.25);  // linear interpolation blurs the rim outward
}

TEST_CASE("run_single writes a reproducible artifact set") {
  ExperimentConfig c = small_config();
  c.delta_lat = 0;
  c.delta_ax = 0;
  c.force_noise_fraction = 0;
  // Zero-noise runs are judged essentially unregularized, as in the
  // noiseless well-posedness acceptance run.
  c.lambda_statistical = 0;
  c.outer_iterations = 10;
  c.inner_iterations = 300;

  const auto dir_a = temp_dir("single_a");
  const RunMetrics m = run_single(c, dir_a);
  CHECK(m.rms < 0.05);  // zero-noise manifest claim
  CHECK(m.delta_overall == 0.0);

  for (const char* name :
       {"mesh.txt", "e_true.csv", "u.csv", "u_m.csv", "f_true.csv", "f.csv",
        "e_hat.csv", "e_true.ppm", "e_hat.ppm", "trace.csv",
        "trace_summary.json", "manifest.json"})
    CHECK(std::filesystem::exists(dir_a / name));

  // Byte-identical rerun (CSV and raster artifacts).
  const auto dir_b = temp_dir("single_b");
  run_single(c, dir_b);
  for (const char* name : {"mesh.txt", "e_hat.csv", "u_m.csv", "trace.csv",
                           "e_hat.ppm", "e_true.ppm"})
    CHECK(slurp(dir_a / name) == slurp(dir_b / name));

  const std::string manifest = slurp(dir_a / "manifest.json");
  CHECK(manifest.find("\"metrics\"") != std::string::npos);
  CHECK(manifest.find("\"assumptions\"") != std::string::npos);
}

TEST_CASE("run_single creates missing output directories") {
  ExperimentConfig c = small_config();
  c.delta_lat = 0;
  c.delta_ax = 0;
  c.force_noise_fraction = 0;
  const auto dir = temp_dir("nested") / "a" / "b";
  run_single(c, dir);
  CHECK(std::filesystem::exists(dir / "manifest.json"));
}

TEST_CASE("noise sweep produces the full row grid and aggregates") {
  ExperimentConfig c = small_config();
  c.sweep_axis = "noise";
  c.noise_deltas = {0.01, 0.05};
  c.seeds = {1, 2, 3};
  c.workers = 3;
  const auto dir = temp_dir("sweep");
  const SweepResult result = run_sweep(c, dir);
  CHECK(result.rows.size() == 2 * 3 * 2);  // values x seeds x solvers
  for (const auto& row : result.rows) CHECK(!row.failed);

  const std::string csv = slurp(dir / "sweep.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 13);  // header + 12 rows
  CHECK(std::filesystem::exists(dir / "sweep_summary.csv"));
  CHECK(std::filesystem::exists(dir / "points"));

  // Realized overall deltas track the sweep value.
  for (const auto& row : result.rows) {
    CHECK(row.metrics.delta_overall ==
          doctest::Approx(row.value).epsilon(0.25));
  }

  // Worker count must not change the bytes.
  ExperimentConfig serial = c;
  serial.workers = 1;
  const auto dir_serial = temp_dir("sweep_serial");
  run_sweep(serial, dir_serial);
  CHECK(slurp(dir / "sweep.csv") == slurp(dir_serial / "sweep.csv"));
}

TEST_CASE("contrast sweep runs both inclusion settings at the target snr") {
  ExperimentConfig c = small_config();
  c.sweep_axis = "contrast";
  c.contrast_moduli_pa = {30000, 50000};
  c.contrast_snr_db = 30.0;
  c.seeds = {1};
  const auto dir = temp_dir("contrast");
  const SweepResult result = run_sweep(c, dir);
  CHECK(result.rows.size() == 4);
  for (const auto& row : result.rows) {
    CHECK(!row.failed);
    CHECK(row.metrics.snr_db == doctest::Approx(30.0).epsilon(0.05));
  }
}

TEST_CASE("render verb reproduces a field image from saved artifacts") {
  ExperimentConfig c = small_config();
  c.delta_lat = 0;
  c.delta_ax = 0;
  c.force_noise_fraction = 0;
  const auto dir = temp_dir("render");
  run_single(c, dir);

  RasterOptions options;
  options.width = c.raster_resolution;
  options.height = c.raster_resolution;
  options.colormap = c.colormap;
  options.scale_min = c.scale_min_pa;
  options.scale_max = c.scale_max_pa;
  render_field_file(dir / "mesh.txt", dir / "e_true.csv", dir / "rerender.ppm",
                    options);
  CHECK(slurp(dir / "rerender.ppm") == slurp(dir / "e_true.ppm"));
}
