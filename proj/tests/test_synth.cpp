// Copyright (c) the elastrec contributors.
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "elast/metrics.hpp"
#include "elast/synth.hpp"

using namespace elast;

namespace {

struct Setup {
  Mesh mesh;
  PsiTensor psi;
  Phantom phantom;
  FieldVector f_applied;
  ForwardResult forward;
};

Setup default_setup(int target_nodes = 200, double jitter = 0.2) {
  Setup s;
  const double width = 2.8;
  s.mesh = generate_mesh(width, 1.0, target_nodes, jitter, 1);
  DirichletSet set;
  set.axial_only = s.mesh.boundary.bottom;
  int pin = set.axial_only.front();
  for (int i : set.axial_only)
    if (std::abs(s.mesh.nodes[i][0] - width / 2) <
        std::abs(s.mesh.nodes[pin][0] - width / 2))
      pin = i;
  set.lateral_only = {pin};
  s.psi = assemble_psi(s.mesh, 0.495, set);
  s.phantom = make_phantom(s.mesh, 10000, 50000, {width / 2, 0.6}, 0.25);
  const double q = calibrate_traction(s.psi, s.phantom.modulus, s.mesh, 0.01, 1.0);
  s.f_applied = assemble_traction(s.mesh, q, 1.0);
  s.forward = forward_solve(s.psi, s.phantom.modulus, s.f_applied);
  return s;
}

}  // namespace

TEST_CASE("phantom assigns the two moduli by the circle indicator") {
  const Mesh mesh = generate_mesh(1.0, 1.0, 121, 0.0, 0);
  const Phantom ph = make_phantom(mesh, 10000, 50000, {0.5, 0.5}, 0.2);
  int inside = 0;
  for (int i = 0; i < mesh.node_count(); ++i) {
    const double d = std::hypot(mesh.nodes[i][0] - 0.5, mesh.nodes[i][1] - 0.5);
    const double expected = d <= 0.2 ? 50000.0 : 10000.0;
    CHECK(ph.modulus[i] == expected);
    inside += d <= 0.2 ? 1 : 0;
  }
  CHECK(inside > 0);
}

TEST_CASE("degenerate inclusion radii give uniform fields") {
  const Mesh mesh = generate_mesh(1.0, 1.0, 49, 0.0, 0);
  std::vector<std::string> warnings;
  const Phantom tiny =
      make_phantom(mesh, 10000, 50000, {0.515, 0.515}, 1e-9, &warnings);
  CHECK(tiny.modulus.minCoeff() == 10000.0);
  CHECK(tiny.modulus.maxCoeff() == 10000.0);
  CHECK(warnings.size() == 1);

  const Phantom all = make_phantom(mesh, 10000, 50000, {0.5, 0.5}, 10.0);
  CHECK(all.modulus.minCoeff() == 50000.0);
  CHECK_THROWS(make_phantom(mesh, 10000, 50000, {0.5, 0.5}, 0.0));
  CHECK_THROWS(make_phantom(mesh, -1.0, 50000, {0.5, 0.5}, 0.1));
}

TEST_CASE("traction assembly sums to the applied load") {
  const Mesh mesh = generate_mesh(2.0, 1.0, 121, 0.2, 3);
  const double q = 50.0;
  for (double fraction : {1.0, 0.5, 0.3}) {
    const FieldVector f = assemble_traction(mesh, q, fraction);
    double total = 0;
    for (int i = 0; i < mesh.node_count(); ++i) {
      CHECK(f[lateral_dof(i)] == 0.0);
      total += f[axial_dof(i)];
    }
    CHECK(total == doctest::Approx(-q * 2.0 * fraction).epsilon(1e-12));
  }
  CHECK_THROWS(assemble_traction(mesh, q, 0.0));
}

TEST_CASE("zero traction leaves the body at rest") {
  Setup s = default_setup(100);
  const ForwardResult rest =
      forward_solve(s.psi, s.phantom.modulus, FieldVector::Zero(s.psi.dof_count()));
  CHECK(rest.u.norm() == 0.0);
}

TEST_CASE("forward solve is linear in the traction") {
  Setup s = default_setup(150);
  const ForwardResult twice =
      forward_solve(s.psi, s.phantom.modulus, FieldVector(2.0 * s.f_applied));
  CHECK((twice.u - 2.0 * s.forward.u).norm() <= 1e-10 * twice.u.norm());
  CHECK(s.forward.residual < 1e-10);
  CHECK_THROWS(forward_solve(s.psi, ModulusField::Zero(s.psi.node_count()),
                             s.f_applied));
}

TEST_CASE("uniform compression settles monotonically from top to bottom") {
  // Structured mesh, homogeneous modulus: |axial displacement| shrinks on the
  // way down a grid column.
  Mesh mesh = generate_mesh(1.0, 1.0, 121, 0.0, 0);
  DirichletSet set;
  set.axial_only = mesh.boundary.bottom;
  set.lateral_only = {mesh.boundary.bottom[mesh.boundary.bottom.size() / 2]};
  PsiTensor psi = assemble_psi(mesh, 0.495, set);
  const ModulusField uniform = ModulusField::Constant(mesh.node_count(), 10000.0);
  const FieldVector f = assemble_traction(mesh, 100.0, 1.0);
  const ForwardResult fwd = forward_solve(psi, uniform, f);

  std::vector<std::pair<double, double>> column;  // (y, |u_ax|) at x = 0.5
  for (int i = 0; i < mesh.node_count(); ++i)
    if (mesh.nodes[i][0] == 0.5)
      column.push_back({mesh.nodes[i][1], std::abs(fwd.u[axial_dof(i)])});
  std::sort(column.begin(), column.end());
  REQUIRE(column.size() == 11);
  for (size_t k = 0; k + 1 < column.size(); ++k)
    CHECK(column[k].second < column[k + 1].second);
}

TEST_CASE("calibrated traction hits the requested peak deflection") {
  Setup s = default_setup(150);
  double peak = 0;
  for (int i = 0; i < s.mesh.node_count(); ++i)
    peak = std::max(peak, std::abs(s.forward.u[axial_dof(i)]));
  CHECK(peak == doctest::Approx(0.01 * s.mesh.height()).epsilon(1e-10));
}

TEST_CASE("zero-sigma noise is the identity") {
  Setup s = default_setup(100);
  NoiseModel noise;
  noise.seed = 5;
  const FieldVector u_m = add_noise(s.forward.u, noise, s.psi);
  CHECK((u_m - s.forward.u).norm() == 0.0);
  const FieldVector f_m = add_force_noise(s.forward.f_true, noise, s.psi);
  CHECK((f_m - s.forward.f_true).norm() == 0.0);
}

TEST_CASE("noise is deterministic per seed and seed-sensitive") {
  Setup s = default_setup(100);
  NoiseModel noise;
  noise.sigma_lat = 1e-5;
  noise.sigma_ax = 1e-5;
  noise.sigma_force = 1e-3;
  noise.seed = 42;
  const FieldVector a = add_noise(s.forward.u, noise, s.psi);
  const FieldVector b = add_noise(s.forward.u, noise, s.psi);
  CHECK((a - b).norm() == 0.0);
  noise.seed = 43;
  const FieldVector c = add_noise(s.forward.u, noise, s.psi);
  CHECK((a - c).norm() > 0.0);
}

TEST_CASE("constrained DOFs never receive noise") {
  Setup s = default_setup(100);
  NoiseModel noise;
  noise.sigma_lat = 1e-4;
  noise.sigma_ax = 1e-4;
  noise.sigma_force = 1.0;
  noise.seed = 9;
  const FieldVector u_m = add_noise(s.forward.u, noise, s.psi);
  const FieldVector f_m = add_force_noise(s.forward.f_true, noise, s.psi);
  for (int d = 0; d < s.psi.dof_count(); ++d) {
    if (!s.psi.is_constrained(d)) continue;
    CHECK(u_m[d] == s.forward.u[d]);
    CHECK(f_m[d] == s.forward.f_true[d]);
  }
}

TEST_CASE("empirical noise std matches sigma within 2 percent") {
  Setup s = default_setup(200);
  NoiseModel noise;
  noise.sigma_lat = 3e-6;
  noise.sigma_ax = 1e-6;
  double sq_lat = 0, sq_ax = 0;
  long n_lat = 0, n_ax = 0;
  long draws = 0;
  for (int seed = 0; draws < 100000; ++seed) {
    noise.seed = seed;
    const FieldVector n = add_noise(s.forward.u, noise, s.psi) - s.forward.u;
    for (int d = 0; d < s.psi.dof_count(); ++d) {
      if (s.psi.is_constrained(d)) continue;
      if (d % 2 == 0) {
        sq_lat += n[d] * n[d];
        ++n_lat;
      } else {
        sq_ax += n[d] * n[d];
        ++n_ax;
      }
      ++draws;
    }
  }
  CHECK(std::sqrt(sq_lat / n_lat) == doctest::Approx(3e-6).epsilon(0.02));
  CHECK(std::sqrt(sq_ax / n_ax) == doctest::Approx(1e-6).epsilon(0.02));
}

TEST_CASE("noise_level quotient of norms") {
  FieldVector u(2), u_m(2);
  u << 0, 0;
  u_m << 3, 4;
  CHECK(noise_level(u_m, u) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(noise_level(u_m, u_m) == 0.0);
  CHECK_THROWS(noise_level(u, u));
}

TEST_CASE("calibrated per-direction noise hits its targets") {
  Setup s = default_setup(300);
  const NoiseModel zero = calibrate_noise(s.forward.u, 0.0, 0.0, s.psi);
  CHECK(zero.sigma_lat == 0.0);
  CHECK(zero.sigma_ax == 0.0);
  CHECK_THROWS(calibrate_noise(s.forward.u, 1.0, 0.03, s.psi));

  NoiseModel noise = calibrate_noise(s.forward.u, 0.09, 0.03, s.psi);
  double lat_sum = 0, ax_sum = 0;
  double lat_min = 1, lat_max = 0;
  const int n_seeds = 50;
  for (int seed = 1; seed <= n_seeds; ++seed) {
    noise.seed = seed;
    const FieldVector u_m = add_noise(s.forward.u, noise, s.psi);
    const double dl = noise_level_direction(u_m, s.forward.u, 0, s.psi);
    const double da = noise_level_direction(u_m, s.forward.u, 1, s.psi);
    lat_sum += dl;
    ax_sum += da;
    lat_min = std::min(lat_min, dl);
    lat_max = std::max(lat_max, dl);
  }
  CHECK(lat_sum / n_seeds == doctest::Approx(0.09).epsilon(0.01));
  CHECK(ax_sum / n_seeds == doctest::Approx(0.03).epsilon(0.01));
  CHECK(lat_min >= 0.08);
  CHECK(lat_max <= 0.10);
}

TEST_CASE("the 9/3 percent protocol lands near 25 dB overall") {
  Setup s = default_setup(300);
  NoiseModel noise = calibrate_noise(s.forward.u, 0.09, 0.03, s.psi);
  double snr_sum = 0;
  const int n_seeds = 20;
  for (int seed = 1; seed <= n_seeds; ++seed) {
    noise.seed = seed;
    const FieldVector u_m = add_noise(s.forward.u, noise, s.psi);
    const double snr = snr_db(s.forward.u, u_m);
    CHECK(snr == doctest::Approx(25.0).epsilon(0.06));  // 25 +- 1.5 dB
    snr_sum += snr;
  }
  CHECK(snr_sum / n_seeds == doctest::Approx(25.0).epsilon(0.04));
}

TEST_CASE("overall-delta and snr rescaling hit their targets in expectation") {
  Setup s = default_setup(200);
  const NoiseModel base = calibrate_noise(s.forward.u, 0.09, 0.03, s.psi);

  NoiseModel at3 = scale_noise_to_overall_delta(s.forward.u, base, 0.03, s.psi);
  double delta_sum = 0;
  for (int seed = 1; seed <= 30; ++seed) {
    at3.seed = seed;
    delta_sum += noise_level(add_noise(s.forward.u, at3, s.psi), s.forward.u);
  }
  CHECK(delta_sum / 30 == doctest::Approx(0.03).epsilon(0.02));

  NoiseModel at30db = scale_noise_to_snr(s.forward.u, base, 30.0, s.psi);
  double snr_sum = 0;
  for (int seed = 1; seed <= 30; ++seed) {
    at30db.seed = seed;
    snr_sum += snr_db(s.forward.u, add_noise(s.forward.u, at30db, s.psi));
  }
  CHECK(snr_sum / 30 == doctest::Approx(30.0).epsilon(0.01));

  // Scaling preserves the lateral/axial sigma ratio.
  CHECK(at30db.sigma_lat / at30db.sigma_ax ==
        doctest::Approx(base.sigma_lat / base.sigma_ax).epsilon(1e-12));
}

TEST_CASE("observation bookkeeping satisfies the residual decomposition") {
  // f - D(u_m) E_true = -K(E_true) n + w on free DOFs.
  Setup s = default_setup(150);
  NoiseModel noise = calibrate_noise(s.forward.u, 0.09, 0.03, s.psi);
  noise.sigma_force = 0.01 * s.forward.f_true.lpNorm<Eigen::Infinity>();
  noise.seed = 3;
  const Observations obs =
      synthesize_observations(s.forward.u, s.forward.f_true, noise, s.psi);

  const FieldVector lhs =
      obs.f_measured - apply_design(s.psi, obs.u_measured, s.phantom.modulus);
  const FieldVector rhs =
      obs.force_noise -
      apply_stiffness(s.psi, s.phantom.modulus, obs.displacement_noise);
  double err = 0;
  for (int d : s.psi.free_dofs()) err = std::max(err, std::abs(lhs[d] - rhs[d]));
  CHECK(err <= 1e-10 * obs.f_measured.norm());
}
