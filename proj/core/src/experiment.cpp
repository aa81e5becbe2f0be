// Copyright (c) the elastrec contributors.
// SPDX-License-Identifier: Apache-2.0

#include "elast/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace elast {

using nlohmann::json;

namespace {

json finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : "-inf";
}

json config_json(const ExperimentConfig& c) {
  json j;
  j["mesh"] = {{"width", c.width},
               {"height", c.height},
               {"target_nodes", c.target_nodes},
               {"jitter", c.mesh_jitter},
               {"seed", c.mesh_seed}};
  j["phantom"] = {{"background_pa", c.background_pa},
                  {"inclusion_pa", c.inclusion_pa},
                  {"center_x", c.center_x},
                  {"center_y", c.center_y},
                  {"radius", c.radius}};
  j["loading"] = {{"traction_per_length", c.traction_per_length},
                  {"deflection_fraction", c.deflection_fraction},
                  {"indenter_fraction", c.indenter_fraction},
                  {"poisson_ratio", c.poisson_ratio}};
  j["noise"] = {{"delta_lat", c.delta_lat},
                {"delta_ax", c.delta_ax},
                {"force_noise_fraction", c.force_noise_fraction},
                {"seed", c.noise_seed},
                {"seeds", c.seeds}};
  j["solver"] = {{"lambda_statistical", c.lambda_statistical},
                 {"lambda_baseline", c.lambda_baseline},
                 {"outer_iterations", c.outer_iterations},
                 {"inner_iterations", c.inner_iterations},
                 {"tv_iterations", c.tv_iterations},
                 {"tolerance", c.tolerance},
                 {"floor_pa", c.floor_pa},
                 {"solver", c.solver}};
  j["sweep"] = {{"axis", c.sweep_axis},
                {"noise_deltas", c.noise_deltas},
                {"contrast_moduli_pa", c.contrast_moduli_pa},
                {"contrast_snr_db", c.contrast_snr_db},
                {"workers", c.workers}};
  j["output"] = {{"directory", c.output_directory},
                 {"raster_resolution", c.raster_resolution},
                 {"colormap", c.colormap},
                 {"scale_min_pa", c.scale_min_pa},
                 {"scale_max_pa", c.scale_max_pa}};
  j["assumptions"] = {
      "bottom boundary on rollers (axial displacement fixed to zero, lateral "
      "free) with one mid-width bottom node pinned laterally to remove "
      "rigid-body modes; top boundary carries the Neumann traction",
      "force vector assembled directly from the applied traction",
      "no noise on Dirichlet-constrained DOFs"};
  j["metric_definitions"] = {
      {"cnr", "2*(mean_inc-mean_bg)^2/(var_inc+var_bg), population variances"},
      {"rms", "||E_hat - E_true||_2 / ||E_true||_2"},
      {"snr_db", "10*log10(||u||^2/||u_m-u||^2)"},
      {"delta", "||u_m-u||/||u_m||, per direction over that direction's DOFs"}};
  return j;
}

struct Prepared {
  Mesh mesh;
  PsiTensor psi;
  TvGraph graph;
  Phantom phantom;
  RegionLabels labels;
  double traction = 0;
  FieldVector f_applied;
  ForwardResult forward;
  std::vector<std::string> warnings;
};

std::vector<int> deduplicated(std::vector<int> nodes) {
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  return nodes;
}

// Bottom rollers (axial fixed, lateral free) with the lateral DOF of the
// bottom node nearest mid-width pinned against rigid translation.
DirichletSet bottom_rollers(const Mesh& mesh, double width) {
  DirichletSet set;
  set.axial_only = deduplicated(mesh.boundary.bottom);
  int pin = set.axial_only.front();
  for (int i : set.axial_only)
    if (std::abs(mesh.nodes[i][0] - 0.5 * width) <
        std::abs(mesh.nodes[pin][0] - 0.5 * width))
      pin = i;
  set.lateral_only = {pin};
  return set;
}

Prepared prepare(const ExperimentConfig& config, double inclusion_pa) {
  Prepared p;
  p.mesh = generate_mesh(config.width, config.height, config.target_nodes,
                         config.mesh_jitter, config.mesh_seed);
  p.psi = assemble_psi(p.mesh, config.poisson_ratio,
                       bottom_rollers(p.mesh, config.width));
  p.graph = tv_graph(p.mesh);
  p.phantom = make_phantom(p.mesh, config.background_pa, inclusion_pa,
                           {config.center_x, config.center_y}, config.radius,
                           &p.warnings);
  p.labels = region_labels(p.mesh, p.phantom);
  p.traction = config.traction_per_length > 0
                   ? config.traction_per_length
                   : calibrate_traction(p.psi, p.phantom.modulus, p.mesh,
                                        config.deflection_fraction,
                                        config.indenter_fraction);
  p.f_applied = assemble_traction(p.mesh, p.traction, config.indenter_fraction);
  p.forward = forward_solve(p.psi, p.phantom.modulus, p.f_applied);
  return p;
}

NoiseModel base_noise(const Prepared& p, const ExperimentConfig& config,
                      std::uint64_t seed) {
  NoiseModel noise =
      calibrate_noise(p.forward.u, config.delta_lat, config.delta_ax, p.psi);
  noise.sigma_force =
      config.force_noise_fraction * p.forward.f_true.lpNorm<Eigen::Infinity>();
  noise.seed = seed;
  return noise;
}

// The weighting covariance must stay SPD even for noiseless data; an
// all-zero model degenerates to the identity weighting.
NoiseModel weighting_noise(const NoiseModel& noise) {
  if (noise.sigma_lat == 0 && noise.sigma_ax == 0 && noise.sigma_force == 0) {
    NoiseModel w = noise;
    w.sigma_force = 1.0;
    return w;
  }
  return noise;
}

SolverConfig make_solver_config(const ExperimentConfig& c, bool baseline) {
  SolverConfig sc;
  sc.lambda = baseline ? c.lambda_baseline : c.lambda_statistical;
  sc.outer_iterations = c.outer_iterations;
  sc.inner_iterations = c.inner_iterations;
  sc.tv_iterations = c.tv_iterations;
  sc.tolerance = c.tolerance;
  sc.floor = c.floor_pa;
  sc.weighting = baseline ? Weighting::identity : Weighting::statistical;
  return sc;
}

RunMetrics compute_metrics(const Prepared& p, const Observations& obs,
                           const ReconstructionResult& result) {
  RunMetrics m;
  m.delta_lat = noise_level_direction(obs.u_measured, p.forward.u, 0, p.psi);
  m.delta_ax = noise_level_direction(obs.u_measured, p.forward.u, 1, p.psi);
  m.delta_overall = noise_level(obs.u_measured, p.forward.u);
  m.snr_db = snr_db(p.forward.u, obs.u_measured);
  const CnrResult c = cnr(result.modulus, p.labels);
  m.cnr = c.value;
  m.cnr_degenerate = c.degenerate;
  m.rms = rms_error(result.modulus, p.phantom.modulus);
  m.inner_iterations = static_cast<int>(result.trace.inner.size());
  m.aborted = result.trace.aborted;
  m.traction_per_length = p.traction;
  return m;
}

json metrics_json(const RunMetrics& m) {
  return {{"delta_lat", m.delta_lat},
          {"delta_ax", m.delta_ax},
          {"delta_overall", m.delta_overall},
          {"snr_db", finite_or_string(m.snr_db)},
          {"cnr", finite_or_string(m.cnr)},
          {"cnr_degenerate", m.cnr_degenerate},
          {"rms", m.rms},
          {"inner_iterations", m.inner_iterations},
          {"aborted", m.aborted},
          {"traction_per_length", m.traction_per_length},
          {"wall_seconds", m.wall_seconds}};
}

json noise_json(const NoiseModel& noise) {
  return {{"sigma_lat", noise.sigma_lat},
          {"sigma_ax", noise.sigma_ax},
          {"sigma_force", noise.sigma_force},
          {"seed", noise.seed}};
}

void write_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << j.dump(2) << "\n";
}

void write_raster(const Prepared& p, const Eigen::VectorXd& field,
                  const ExperimentConfig& config,
                  const std::filesystem::path& path) {
  RasterOptions options;
  options.width = config.raster_resolution;
  options.height = config.raster_resolution;
  options.colormap = config.colormap;
  options.scale_min = config.scale_min_pa;
  options.scale_max = config.scale_max_pa;
  write_ppm(rasterize_field(p.mesh, field, options), path);
}

}  // namespace

ExperimentConfig default_experiment_config() { return ExperimentConfig{}; }

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  ExperimentConfig c;
  if (path.empty()) return c;
  const IniFile ini = IniFile::parse_file(path);

  c.width = ini.get_double("mesh", "width", c.width);
  c.height = ini.get_double("mesh", "height", c.height);
  c.target_nodes = ini.get_int("mesh", "target_nodes", c.target_nodes);
  c.mesh_jitter = ini.get_double("mesh", "jitter", c.mesh_jitter);
  c.mesh_seed = ini.get_u64("mesh", "seed", c.mesh_seed);

  c.background_pa = ini.get_double("phantom", "background_pa", c.background_pa);
  c.inclusion_pa = ini.get_double("phantom", "inclusion_pa", c.inclusion_pa);
  c.center_x = ini.get_double("phantom", "center_x", 0.5 * c.width);
  c.center_y = ini.get_double("phantom", "center_y", 0.6 * c.height);
  c.radius = ini.get_double("phantom", "radius", 0.25 * c.height);

  c.traction_per_length =
      ini.get_double("loading", "traction_per_length", c.traction_per_length);
  c.deflection_fraction =
      ini.get_double("loading", "deflection_fraction", c.deflection_fraction);
  c.indenter_fraction =
      ini.get_double("loading", "indenter_fraction", c.indenter_fraction);
  c.poisson_ratio = ini.get_double("loading", "poisson_ratio", c.poisson_ratio);

  c.delta_lat = ini.get_double("noise", "delta_lat", c.delta_lat);
  c.delta_ax = ini.get_double("noise", "delta_ax", c.delta_ax);
  c.force_noise_fraction =
      ini.get_double("noise", "force_noise_fraction", c.force_noise_fraction);
  c.noise_seed = ini.get_u64("noise", "seed", c.noise_seed);
  c.seeds = ini.get_u64_list("noise", "seeds", c.seeds);

  c.lambda_statistical =
      ini.get_double("solver", "lambda_statistical", c.lambda_statistical);
  c.lambda_baseline =
      ini.get_double("solver", "lambda_baseline", c.lambda_baseline);
  c.outer_iterations =
      ini.get_int("solver", "outer_iterations", c.outer_iterations);
  c.inner_iterations =
      ini.get_int("solver", "inner_iterations", c.inner_iterations);
  c.tv_iterations = ini.get_int("solver", "tv_iterations", c.tv_iterations);
  c.tolerance = ini.get_double("solver", "tolerance", c.tolerance);
  c.floor_pa = ini.get_double("solver", "floor_pa", c.floor_pa);
  c.solver = ini.get_string("solver", "solver", c.solver);

  c.sweep_axis = ini.get_string("sweep", "axis", c.sweep_axis);
  c.noise_deltas = ini.get_double_list("sweep", "noise_deltas", c.noise_deltas);
  c.contrast_moduli_pa =
      ini.get_double_list("sweep", "contrast_moduli_pa", c.contrast_moduli_pa);
  c.contrast_snr_db =
      ini.get_double("sweep", "snr_db", c.contrast_snr_db);
  c.workers = ini.get_int("sweep", "workers", c.workers);

  c.output_directory =
      ini.get_string("output", "directory", c.output_directory);
  c.raster_resolution =
      ini.get_int("output", "raster_resolution", c.raster_resolution);
  c.colormap = ini.get_string("output", "colormap", c.colormap);
  c.scale_min_pa = ini.get_double("output", "scale_min_pa", c.scale_min_pa);
  c.scale_max_pa = ini.get_double("output", "scale_max_pa", c.scale_max_pa);

  const auto unknown = ini.unconsumed_keys();
  if (!unknown.empty()) {
    std::ostringstream msg;
    msg << "unknown configuration keys:";
    for (const auto& k : unknown) msg << " " << k;
    throw std::runtime_error(msg.str());
  }
  if (c.solver != "statistical" && c.solver != "baseline")
    throw std::runtime_error("solver must be 'statistical' or 'baseline'");
  if (c.sweep_axis != "noise" && c.sweep_axis != "contrast")
    throw std::runtime_error("sweep axis must be 'noise' or 'contrast'");
  return c;
}

void write_vector_csv(const std::filesystem::path& path,
                      const Eigen::VectorXd& values) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  char buf[64];
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g\n", values[i]);
    out << buf;
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Eigen::VectorXd read_vector_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<double> values;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    double v;
    if (!(ss >> v)) continue;
    values.push_back(v);
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(values.size()));
  for (size_t i = 0; i < values.size(); ++i) out[static_cast<Eigen::Index>(i)] = values[i];
  return out;
}

void run_mesh_only(const ExperimentConfig& config,
                   const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const Mesh mesh = generate_mesh(config.width, config.height,
                                  config.target_nodes, config.mesh_jitter,
                                  config.mesh_seed);
  save_mesh(mesh, out_dir / "mesh.txt");
  json manifest = config_json(config);
  manifest["command"] = "mesh";
  manifest["artifacts"] = {"mesh.txt"};
  manifest["mesh_nodes"] = mesh.node_count();
  manifest["mesh_elements"] = mesh.element_count();
  write_json(manifest, out_dir / "manifest.json");
}

void run_phantom_only(const ExperimentConfig& config,
                      const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const Mesh mesh = generate_mesh(config.width, config.height,
                                  config.target_nodes, config.mesh_jitter,
                                  config.mesh_seed);
  std::vector<std::string> warnings;
  const Phantom phantom =
      make_phantom(mesh, config.background_pa, config.inclusion_pa,
                   {config.center_x, config.center_y}, config.radius, &warnings);
  save_mesh(mesh, out_dir / "mesh.txt");
  write_vector_csv(out_dir / "e_true.csv", phantom.modulus);

  RasterOptions options;
  options.width = config.raster_resolution;
  options.height = config.raster_resolution;
  options.colormap = config.colormap;
  options.scale_min = config.scale_min_pa;
  options.scale_max = config.scale_max_pa;
  write_ppm(rasterize_field(mesh, phantom.modulus, options),
            out_dir / "e_true.ppm");

  json manifest = config_json(config);
  manifest["command"] = "phantom";
  manifest["artifacts"] = {"mesh.txt", "e_true.csv", "e_true.ppm"};
  manifest["warnings"] = warnings;
  write_json(manifest, out_dir / "manifest.json");
}

void run_forward_only(const ExperimentConfig& config,
                      const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const Prepared p = prepare(config, config.inclusion_pa);
  const NoiseModel noise = base_noise(p, config, config.noise_seed);
  const Observations obs =
      synthesize_observations(p.forward.u, p.forward.f_true, noise, p.psi);

  save_mesh(p.mesh, out_dir / "mesh.txt");
  write_vector_csv(out_dir / "e_true.csv", p.phantom.modulus);
  write_vector_csv(out_dir / "u.csv", p.forward.u);
  write_vector_csv(out_dir / "u_m.csv", obs.u_measured);
  write_vector_csv(out_dir / "f_true.csv", p.forward.f_true);
  write_vector_csv(out_dir / "f.csv", obs.f_measured);

  json manifest = config_json(config);
  manifest["command"] = "forward";
  manifest["noise_model"] = noise_json(noise);
  manifest["forward_residual"] = p.forward.residual;
  manifest["traction_per_length"] = p.traction;
  manifest["realized"] = {
      {"delta_lat", noise_level_direction(obs.u_measured, p.forward.u, 0, p.psi)},
      {"delta_ax", noise_level_direction(obs.u_measured, p.forward.u, 1, p.psi)},
      {"delta_overall", noise_level(obs.u_measured, p.forward.u)},
      {"snr_db", finite_or_string(snr_db(p.forward.u, obs.u_measured))}};
  manifest["artifacts"] = {"mesh.txt", "e_true.csv", "u.csv",
                           "u_m.csv",  "f_true.csv", "f.csv"};
  manifest["warnings"] = p.warnings;
  write_json(manifest, out_dir / "manifest.json");
}

RunMetrics run_single(const ExperimentConfig& config,
                      const std::filesystem::path& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(out_dir);

  const Prepared p = prepare(config, config.inclusion_pa);
  const NoiseModel noise = base_noise(p, config, config.noise_seed);
  const Observations obs =
      synthesize_observations(p.forward.u, p.forward.f_true, noise, p.psi);

  const bool baseline = config.solver == "baseline";
  const SolverConfig sc = make_solver_config(config, baseline);
  const ReconstructionResult result =
      reconstruct(p.psi, obs.f_measured, obs.u_measured, weighting_noise(noise),
                  p.graph, sc);

  RunMetrics metrics = compute_metrics(p, obs, result);
  metrics.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  save_mesh(p.mesh, out_dir / "mesh.txt");
  write_vector_csv(out_dir / "e_true.csv", p.phantom.modulus);
  write_vector_csv(out_dir / "u.csv", p.forward.u);
  write_vector_csv(out_dir / "u_m.csv", obs.u_measured);
  write_vector_csv(out_dir / "f_true.csv", p.forward.f_true);
  write_vector_csv(out_dir / "f.csv", obs.f_measured);
  write_vector_csv(out_dir / "e_hat.csv", result.modulus);
  write_raster(p, p.phantom.modulus, config, out_dir / "e_true.ppm");
  write_raster(p, result.modulus, config, out_dir / "e_hat.ppm");
  write_trace_csv(result.trace, out_dir / "trace.csv");
  write_trace_summary_json(result.trace, out_dir / "trace_summary.json");

  json manifest = config_json(config);
  manifest["command"] = "reconstruct";
  manifest["solver_used"] = baseline ? "baseline" : "statistical";
  manifest["lambda_used"] = sc.lambda;
  manifest["noise_model"] = noise_json(noise);
  manifest["forward_residual"] = p.forward.residual;
  manifest["traction_per_length"] = p.traction;
  manifest["metrics"] = metrics_json(metrics);
  manifest["mesh_nodes"] = p.mesh.node_count();
  manifest["mesh_elements"] = p.mesh.element_count();
  manifest["artifacts"] = {"mesh.txt",  "e_true.csv", "u.csv",
                           "u_m.csv",   "f_true.csv", "f.csv",
                           "e_hat.csv", "e_true.ppm", "e_hat.ppm",
                           "trace.csv", "trace_summary.json"};
  manifest["warnings"] = p.warnings;
  write_json(manifest, out_dir / "manifest.json");
  return metrics;
}

namespace {

struct SweepPoint {
  int value_index;
  double value;
  std::uint64_t seed;
  bool baseline;
};

std::string point_dir_name(const SweepPoint& pt) {
  std::ostringstream name;
  name << "p" << pt.value_index << "_s" << pt.seed << "_"
       << (pt.baseline ? "baseline" : "statistical");
  return name.str();
}

std::string csv_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

SweepResult run_sweep(const ExperimentConfig& config,
                      const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir / "points");
  const bool contrast_axis = config.sweep_axis == "contrast";
  const std::vector<double>& values =
      contrast_axis ? config.contrast_moduli_pa : config.noise_deltas;
  if (values.empty()) throw std::runtime_error("sweep axis has no values");
  if (config.seeds.empty()) throw std::runtime_error("sweep needs seeds");

  // Mesh, phantom and forward solution per sweep value (shared across
  // seeds/solvers; contrast changes the phantom, noise does not).
  std::vector<std::shared_ptr<const Prepared>> prepared;
  prepared.reserve(values.size());
  for (size_t vi = 0; vi < values.size(); ++vi) {
    if (!contrast_axis && vi > 0) {
      prepared.push_back(prepared.front());
      continue;
    }
    prepared.push_back(std::make_shared<const Prepared>(
        prepare(config, contrast_axis ? values[vi] : config.inclusion_pa)));
  }

  std::vector<SweepPoint> points;
  for (int vi = 0; vi < static_cast<int>(values.size()); ++vi)
    for (const std::uint64_t seed : config.seeds)
      for (const bool baseline : {false, true})
        points.push_back({vi, values[static_cast<size_t>(vi)], seed, baseline});

  SweepResult result;
  result.rows.resize(points.size());

  auto run_point = [&](size_t index) {
    const SweepPoint& pt = points[index];
    SweepRow& row = result.rows[index];
    row.axis = config.sweep_axis;
    row.value = pt.value;
    row.seed = pt.seed;
    row.solver = pt.baseline ? "baseline" : "statistical";
    try {
      const Prepared& p = *prepared[static_cast<size_t>(pt.value_index)];
      NoiseModel noise = base_noise(p, config, pt.seed);
      noise = contrast_axis
                  ? scale_noise_to_snr(p.forward.u, noise,
                                       config.contrast_snr_db, p.psi)
                  : scale_noise_to_overall_delta(p.forward.u, noise, pt.value,
                                                 p.psi);
      const Observations obs =
          synthesize_observations(p.forward.u, p.forward.f_true, noise, p.psi);

      const auto t0 = std::chrono::steady_clock::now();
      const SolverConfig sc = make_solver_config(config, pt.baseline);
      const ReconstructionResult rec =
          reconstruct(p.psi, obs.f_measured, obs.u_measured,
                      weighting_noise(noise), p.graph, sc);
      row.metrics = compute_metrics(p, obs, rec);
      row.metrics.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();

      const auto point_dir = out_dir / "points" / point_dir_name(pt);
      std::filesystem::create_directories(point_dir);
      write_vector_csv(point_dir / "e_hat.csv", rec.modulus);
      json pj;
      pj["axis"] = row.axis;
      pj["value"] = row.value;
      pj["seed"] = row.seed;
      pj["solver"] = row.solver;
      pj["noise_model"] = noise_json(noise);
      pj["metrics"] = metrics_json(row.metrics);
      write_json(pj, point_dir / "point.json");
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
    }
  };

  const int worker_count =
      std::clamp(config.workers, 1, static_cast<int>(points.size()));
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const size_t index = next.fetch_add(1);
      if (index >= points.size()) return;
      run_point(index);
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(static_cast<size_t>(worker_count) - 1);
  for (int w = 1; w < worker_count; ++w) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();

  // Row CSV in deterministic order.
  {
    std::ofstream out(out_dir / "sweep.csv");
    if (!out) throw std::runtime_error("cannot open sweep.csv");
    out << "axis,value,seed,solver,delta_lat,delta_ax,delta_overall,snr_db,"
           "cnr,rms,iterations,failed\n";
    for (const auto& row : result.rows) {
      out << row.axis << "," << csv_number(row.value) << "," << row.seed << ","
          << row.solver << "," << csv_number(row.metrics.delta_lat) << ","
          << csv_number(row.metrics.delta_ax) << ","
          << csv_number(row.metrics.delta_overall) << ","
          << csv_number(row.metrics.snr_db) << ","
          << csv_number(row.metrics.cnr) << "," << csv_number(row.metrics.rms)
          << "," << row.metrics.inner_iterations << ","
          << (row.failed ? 1 : 0) << "\n";
    }
  }

  // Aggregated mean/std per (value, solver).
  {
    std::ofstream out(out_dir / "sweep_summary.csv");
    if (!out) throw std::runtime_error("cannot open sweep_summary.csv");
    out << "axis,value,solver,n,rms_mean,rms_std,cnr_mean,cnr_std,"
           "snr_db_mean,delta_overall_mean\n";
    for (int vi = 0; vi < static_cast<int>(values.size()); ++vi) {
      for (const bool baseline : {false, true}) {
        std::vector<const SweepRow*> group;
        for (size_t i = 0; i < points.size(); ++i)
          if (points[i].value_index == vi && points[i].baseline == baseline &&
              !result.rows[i].failed)
            group.push_back(&result.rows[i]);
        if (group.empty()) continue;
        auto mean_of = [&](auto pick) {
          double sum = 0;
          for (const auto* r : group) sum += pick(*r);
          return sum / static_cast<double>(group.size());
        };
        auto std_of = [&](auto pick, double mean) {
          double sq = 0;
          for (const auto* r : group) {
            const double d = pick(*r) - mean;
            sq += d * d;
          }
          return std::sqrt(sq / static_cast<double>(group.size()));
        };
        const double rms_mean = mean_of([](const SweepRow& r) { return r.metrics.rms; });
        const double rms_std =
            std_of([](const SweepRow& r) { return r.metrics.rms; }, rms_mean);
        const double cnr_mean = mean_of([](const SweepRow& r) { return r.metrics.cnr; });
        const double cnr_std =
            std_of([](const SweepRow& r) { return r.metrics.cnr; }, cnr_mean);
        const double snr_mean =
            mean_of([](const SweepRow& r) { return r.metrics.snr_db; });
        const double delta_mean =
            mean_of([](const SweepRow& r) { return r.metrics.delta_overall; });
        out << config.sweep_axis << "," << csv_number(values[vi]) << ","
            << (baseline ? "baseline" : "statistical") << "," << group.size()
            << "," << csv_number(rms_mean) << "," << csv_number(rms_std) << ","
            << csv_number(cnr_mean) << "," << csv_number(cnr_std) << ","
            << csv_number(snr_mean) << "," << csv_number(delta_mean) << "\n";
      }
    }
  }

  json manifest = config_json(config);
  manifest["command"] = "sweep";
  manifest["points"] = points.size();
  int failures = 0;
  for (const auto& row : result.rows) failures += row.failed ? 1 : 0;
  manifest["failed_points"] = failures;
  manifest["artifacts"] = {"sweep.csv", "sweep_summary.csv", "points/"};
  write_json(manifest, out_dir / "manifest.json");
  return result;
}

void render_field_file(const std::filesystem::path& mesh_path,
                       const std::filesystem::path& field_csv,
                       const std::filesystem::path& out_ppm,
                       const RasterOptions& options) {
  const Mesh mesh = load_mesh(mesh_path);
  const Eigen::VectorXd field = read_vector_csv(field_csv);
  if (field.size() != mesh.node_count())
    throw std::runtime_error("field length does not match mesh node count");
  write_ppm(rasterize_field(mesh, field, options), out_ppm);
}

}  // namespace elast
