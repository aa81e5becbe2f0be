// Copyright (c) the elastrec contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "elast/config.hpp"
#include "elast/fem.hpp"
#include "elast/inverse.hpp"
#include "elast/metrics.hpp"
#include "elast/mesh.hpp"
#include "elast/raster.hpp"
#include "elast/synth.hpp"

namespace elast {

/// Everything a run needs, with defaults for every field. The manifest of
/// each run echoes the resolved values so runs are reproducible from the
/// manifest alone.
struct ExperimentConfig {
  // [mesh]
  double width = 2.8;
  double height = 1.0;
  int target_nodes = 300;
  double mesh_jitter = 0.2;
  std::uint64_t mesh_seed = 1;

  // [phantom]
  double background_pa = 10000.0;
  double inclusion_pa = 50000.0;
  double center_x = 1.4;   // defaults to width/2 when absent from the file
  double center_y = 0.6;   // defaults to 0.6 * height when absent
  double radius = 0.25;    // defaults to 0.25 * height when absent

  // [loading]
  double traction_per_length = 0.0;  // 0 = calibrate from deflection_fraction
  double deflection_fraction = 0.01;
  double indenter_fraction = 1.0;
  double poisson_ratio = 0.495;

  // [noise]
  double delta_lat = 0.09;
  double delta_ax = 0.03;
  double force_noise_fraction = 0.01;  // sigma_f = fraction * max|f_true|
  std::uint64_t noise_seed = 7;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

  // [solver]
  double lambda_statistical = 3e-4;  // grid-searched on the default phantom
  double lambda_baseline = 1e-5;
  int outer_iterations = 10;
  int inner_iterations = 300;
  int tv_iterations = 300;
  double tolerance = 1e-6;
  double floor_pa = 1.0;
  std::string solver = "statistical";  // or "baseline"

  // [sweep]
  std::string sweep_axis = "noise";  // or "contrast"
  std::vector<double> noise_deltas = {0.001, 0.01, 0.03, 0.05, 0.10};
  std::vector<double> contrast_moduli_pa = {30000.0, 50000.0};
  double contrast_snr_db = 30.0;
  int workers = 4;

  // [output]
  std::string output_directory = "out";
  int raster_resolution = 256;
  std::string colormap = "viridis";
  double scale_min_pa = 0.0;
  double scale_max_pa = 100000.0;
};

/// Reads the INI file (every key optional) and applies derived defaults.
/// Rejects unknown keys.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Config with only built-in defaults.
ExperimentConfig default_experiment_config();

struct RunMetrics {
  double delta_lat = 0;
  double delta_ax = 0;
  double delta_overall = 0;
  double snr_db = 0;
  double cnr = 0;
  bool cnr_degenerate = false;
  double rms = 0;
  int inner_iterations = 0;
  bool aborted = false;
  double traction_per_length = 0;
  double wall_seconds = 0;
};

/// Phantom -> observations -> reconstruction -> metrics -> artifacts
/// (mesh.txt, field CSVs, rasters, trace.csv, manifest.json) in out_dir.
RunMetrics run_single(const ExperimentConfig& config,
                      const std::filesystem::path& out_dir);

/// Writes mesh.txt plus manifest.
void run_mesh_only(const ExperimentConfig& config,
                   const std::filesystem::path& out_dir);

/// Writes mesh.txt, e_true.csv, e_true.ppm plus manifest.
void run_phantom_only(const ExperimentConfig& config,
                      const std::filesystem::path& out_dir);

/// Writes mesh, phantom and the noisy observation dump plus manifest.
void run_forward_only(const ExperimentConfig& config,
                      const std::filesystem::path& out_dir);

struct SweepRow {
  std::string axis;
  double value = 0;
  std::uint64_t seed = 0;
  std::string solver;
  RunMetrics metrics;
  bool failed = false;
  std::string error;
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

/// One row per (sweep value, seed, solver in {statistical, baseline}).
/// Points run concurrently up to config.workers; each point writes only its
/// own subdirectory. Individual failures are recorded and the sweep
/// continues.
SweepResult run_sweep(const ExperimentConfig& config,
                      const std::filesystem::path& out_dir);

/// Renders a saved nodal field against a saved mesh.
void render_field_file(const std::filesystem::path& mesh_path,
                       const std::filesystem::path& field_csv,
                       const std::filesystem::path& out_ppm,
                       const RasterOptions& options);

void write_vector_csv(const std::filesystem::path& path,
                      const Eigen::VectorXd& values);
Eigen::VectorXd read_vector_csv(const std::filesystem::path& path);

}  // namespace elast
